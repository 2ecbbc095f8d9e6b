//! Lipschitz functions on a finite metric space: McShane extension from a
//! set of anchors, verification, random cone families and the indicator of
//! a subset of a separated set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, SeparatedSet};
use crate::scalar::Scalar;

/// An `M`-Lipschitz function known only on `anchors`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchoredFunction<S> {
    pub anchors: Vec<usize>,
    pub values: Vec<S>,
    #[serde(rename = "M")]
    pub m: S,
}

impl<S: Scalar> AnchoredFunction<S> {
    /// Checks `|values[a] - values[b]| <= M d(a, b) + tol` on every anchor pair.
    pub fn new(
        space: &FiniteMetricSpace<S>,
        anchors: Vec<usize>,
        values: Vec<S>,
        m: S,
        tol: &S,
    ) -> Result<Self> {
        if anchors.len() != values.len() {
            return Err(Error::structural(format!(
                "{} anchors but {} values",
                anchors.len(),
                values.len()
            )));
        }
        space.check_indices(&anchors)?;
        if m < S::zero() {
            return Err(Error::domain("Lipschitz constant must be nonnegative"));
        }
        for a in 0..anchors.len() {
            for b in (a + 1)..anchors.len() {
                let lhs = (values[a].clone() - values[b].clone()).abs();
                let rhs = m.clone() * space.dist(anchors[a], anchors[b]).clone() + tol.clone();
                if lhs > rhs {
                    return Err(Error::invariant(
                        "lipschitz",
                        format!(
                            "anchors {} and {} differ by {lhs} at distance {}",
                            anchors[a],
                            anchors[b],
                            space.dist(anchors[a], anchors[b])
                        ),
                    ));
                }
            }
        }
        Ok(AnchoredFunction { anchors, values, m })
    }

    /// The extension evaluated on every point of `space`.
    pub fn extend(&self, space: &FiniteMetricSpace<S>) -> Result<Vec<S>> {
        mcshane_values(space, &self.anchors, &self.values, &self.m)
    }
}

/// `min_e (values[e] + M d(x, e))`.
pub fn mcshane_extend<S: Scalar>(
    f: &AnchoredFunction<S>,
    space: &FiniteMetricSpace<S>,
    x: usize,
) -> Result<S> {
    if f.anchors.is_empty() {
        return Err(Error::domain("McShane extension needs at least one anchor"));
    }
    space.check_indices(&[x])?;
    if let Some(k) = f.anchors.iter().position(|&e| e == x) {
        return Ok(f.values[k].clone());
    }
    Ok(mcshane_at(space, &f.anchors, &f.values, &f.m, x))
}

fn mcshane_at<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    anchors: &[usize],
    values: &[S],
    m: &S,
    x: usize,
) -> S {
    anchors
        .iter()
        .zip(values)
        .map(|(&e, v)| v.clone() + m.clone() * space.dist(x, e).clone())
        .reduce(S::min_of)
        .expect("anchors are nonempty")
}

/// McShane extension on every point. Anchors keep their own values even
/// when another anchor would give a smaller bound through round-off.
pub(crate) fn mcshane_values<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    anchors: &[usize],
    values: &[S],
    m: &S,
) -> Result<Vec<S>> {
    if anchors.is_empty() {
        return Err(Error::domain("McShane extension needs at least one anchor"));
    }
    space.check_indices(anchors)?;
    let mut out: Vec<S> = (0..space.len())
        .map(|x| mcshane_at(space, anchors, values, m, x))
        .collect();
    for (&e, v) in anchors.iter().zip(values) {
        out[e] = v.clone();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzCheck<S> {
    pub ok: bool,
    /// Pair with the largest `|g_i - g_j| / d_ij`, when any pair violates.
    pub worst_pair: Option<(usize, usize)>,
    pub worst_excess: S,
}

/// Is `g` `M`-Lipschitz within `tol`?
pub fn verify_lipschitz<S: Scalar>(
    g: &[S],
    space: &FiniteMetricSpace<S>,
    m: &S,
    tol: &S,
) -> Result<LipschitzCheck<S>> {
    if g.len() != space.len() {
        return Err(Error::structural(format!(
            "function has {} values on a space of {} points",
            g.len(),
            space.len()
        )));
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut worst_excess = S::zero();
    for i in 0..g.len() {
        for j in (i + 1)..g.len() {
            let lhs = (g[i].clone() - g[j].clone()).abs();
            let d = space.dist(i, j).clone();
            let excess = lhs.clone() - m.clone() * d.clone();
            if excess > *tol {
                let ratio = if d.is_zero() {
                    f64::INFINITY
                } else {
                    (lhs / d).to_real()
                };
                if worst.is_none_or(|(_, _, r)| ratio > r) {
                    worst = Some((i, j, ratio));
                }
                worst_excess = S::max_of(worst_excess, excess);
            }
        }
    }
    Ok(LipschitzCheck {
        ok: worst.is_none(),
        worst_pair: worst.map(|(i, j, _)| (i, j)),
        worst_excess,
    })
}

/// `count` reproducible functions `x ↦ min_j (a_j + d(x, p_j))` with one to
/// three apexes `p_j` and offsets `a_j` uniform in `[-bound, bound]`.
pub fn cone_family<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<S>>> {
    if count == 0 {
        return Err(Error::domain("cone family needs count >= 1"));
    }
    if space.is_empty() {
        return Err(Error::domain("cone family on an empty space"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = space.bound().to_real();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let apexes = rng.gen_range(1..=3usize);
        let anchors: Vec<usize> = (0..apexes).map(|_| rng.gen_range(0..space.len())).collect();
        let offsets: Vec<S> = (0..apexes)
            .map(|_| S::from_real(if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 }))
            .collect();
        let f: Vec<S> = (0..space.len())
            .map(|x| mcshane_at(space, &anchors, &offsets, &S::one(), x))
            .collect();
        out.push(f);
    }
    Ok(out)
}

/// Indicator of `b` on the separated set `y`, with Lipschitz constant
/// `1 / y.eps`.
pub fn separated_indicator<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    y: &SeparatedSet<S>,
    b: &[usize],
) -> Result<AnchoredFunction<S>> {
    if let Some(x) = b.iter().find(|x| !y.indices.contains(x)) {
        return Err(Error::domain(format!("point {x} is not in the separated set")));
    }
    if y.eps <= S::zero() {
        return Err(Error::domain("separation radius must be positive"));
    }
    let values = y
        .indices
        .iter()
        .map(|i| if b.contains(i) { S::one() } else { S::zero() })
        .collect();
    AnchoredFunction::new(
        space,
        y.indices.clone(),
        values,
        S::one() / y.eps.clone(),
        &S::zero(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn line(xs: &[f64]) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace::on_line(xs).unwrap()
    }

    #[test]
    fn midpoint_extension() {
        let s = line(&[0.0, 0.5, 1.0]);
        let f = AnchoredFunction::new(&s, vec![0, 2], vec![0.0, 1.0], 1.0, &1e-12).unwrap();
        assert_eq!(mcshane_extend(&f, &s, 1).unwrap(), 0.5);
        assert_eq!(mcshane_extend(&f, &s, 2).unwrap(), 1.0);
        let empty = AnchoredFunction {
            anchors: vec![],
            values: vec![],
            m: 1.0,
        };
        assert!(mcshane_extend(&empty, &s, 0).is_err());
    }

    #[test]
    fn constant_extends_to_constant() {
        let s = line(&[0.0, 0.3, 0.9, 2.0]);
        let f = AnchoredFunction::new(&s, vec![1, 3], vec![0.7, 0.7], 2.0, &0.0).unwrap();
        let g = f.extend(&s).unwrap();
        assert_eq!((g[1], g[3]), (0.7, 0.7));
        // off the anchors the value is c + M d(x, E)
        assert!((g[0] - 1.3).abs() < 1e-12);
        assert!((g[2] - 1.9).abs() < 1e-12);
        let flat = AnchoredFunction::new(&s, vec![1, 3], vec![0.7, 0.7], 0.0, &0.0).unwrap();
        assert!(flat.extend(&s).unwrap().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn rejects_steep_anchors() {
        let s = line(&[0.0, 1.0]);
        assert!(AnchoredFunction::new(&s, vec![0, 1], vec![0.0, 2.0], 1.0, &1e-12).is_err());
    }

    #[test]
    fn verification() {
        let s = line(&[0.0, 1.0, 2.0]);
        let steep = verify_lipschitz(&[0.0, 2.0, 4.0], &s, &1.0, &1e-12).unwrap();
        assert!(!steep.ok);
        assert!(steep.worst_pair.is_some());
        assert!(verify_lipschitz(&[0.0; 3], &s, &0.0, &0.0).unwrap().ok);
        assert!(verify_lipschitz(&[0.0; 2], &s, &1.0, &0.0).is_err());
    }

    #[test]
    fn cones() {
        let s = line(&[0.0, 0.2, 0.5, 0.7, 1.0]);
        let a = cone_family(&s, 20, 7).unwrap();
        let b = cone_family(&s, 20, 7).unwrap();
        assert_eq!(a, b);
        for f in &a {
            assert!(verify_lipschitz(f, &s, &1.0, &1e-12).unwrap().ok);
            assert!(f.iter().all(|v| v.abs() <= 2.0 * s.bound()));
        }
        assert!(cone_family(&s, 0, 7).is_err());
    }

    #[test]
    fn indicator_example() {
        let q = |a, b| Rational::from_ratio(a, b);
        let s = FiniteMetricSpace::on_line(&[q(0, 1), q(1, 2), q(1, 1)]).unwrap();
        let y = SeparatedSet::new(&s, vec![0, 2], q(9, 10)).unwrap();
        let f = separated_indicator(&s, &y, &[2]).unwrap();
        assert_eq!(f.m, q(10, 9));
        // min(0 + (10/9)(1/2), 1 + (10/9)(1/2)) = 5/9
        assert_eq!(mcshane_extend(&f, &s, 1).unwrap(), q(5, 9));
        assert!(separated_indicator(&s, &y, &[1]).is_err());
        let none = separated_indicator(&s, &y, &[]).unwrap();
        assert!(none.values.iter().all(|v| *v == q(0, 1)));
    }
}
