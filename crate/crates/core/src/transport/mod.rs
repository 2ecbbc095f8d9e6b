//! Exact Wasserstein-1 distances between discrete measures on a finite
//! metric space, by two independent routes:
//!
//! * the primal transport program, solved with a transportation simplex;
//! * the 1-Lipschitz dual, `sup_f Σ f_i (μ_i - ν_i)` over `|f_i - f_j| <= d_ij`,
//!   solved as a general LP.
//!
//! Strong duality makes the two values agree; [`duality_gap`] measures it.
//! Total variation lives here as well since the two distances are compared
//! throughout the push-down audits.

mod lp;
mod network;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lipschitz::{mcshane_values, verify_lipschitz};
use crate::measures::{common_space, DiscreteMeasure, LocatedMeasure};
use crate::metric::{CoordMetric, FiniteMetricSpace};
use crate::scalar::Scalar;

/// Solver tolerances; zero for exact scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportTol<S> {
    pub lp: S,
    pub mass: S,
}

impl<S: Scalar> Default for TransportTol<S> {
    fn default() -> Self {
        TransportTol {
            lp: S::tol(1e-9),
            mass: S::tol(1e-9),
        }
    }
}

/// Optimal coupling; rows index the source space, columns the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan<S> {
    pub coupling: Vec<Vec<S>>,
    pub cost: S,
}

/// 1-Lipschitz function attaining the dual optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPotential<S> {
    pub f: Vec<S>,
}

fn check_pair<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    space: &FiniteMetricSpace<S>,
) -> Result<()> {
    if mu.len() != space.len() || nu.len() != space.len() {
        return Err(Error::structural(format!(
            "measures of sizes {} and {} on a space of {} points",
            mu.len(),
            nu.len(),
            space.len()
        )));
    }
    Ok(())
}

/// Minimum-cost coupling of `mu` and `nu`.
pub fn w1_primal<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    space: &FiniteMetricSpace<S>,
    tol: &TransportTol<S>,
) -> Result<TransportPlan<S>> {
    check_pair(mu, nu, space)?;
    let src = mu.support();
    let dst = nu.support();
    let supply: Vec<S> = src.iter().map(|&i| mu.weights()[i].clone()).collect();
    let demand: Vec<S> = dst.iter().map(|&j| nu.weights()[j].clone()).collect();
    let cost: Vec<Vec<S>> = src
        .iter()
        .map(|&i| dst.iter().map(|&j| space.dist(i, j).clone()).collect())
        .collect();
    let sol = network::solve(&supply, &demand, &cost, &tol.lp, &tol.mass)?;
    let mut coupling = vec![vec![S::zero(); space.len()]; space.len()];
    for (a, &i) in src.iter().enumerate() {
        for (b, &j) in dst.iter().enumerate() {
            coupling[i][j] = sol.flow[a][b].clone();
        }
    }
    Ok(TransportPlan {
        coupling,
        cost: sol.cost,
    })
}

/// Optimal value of the Lipschitz dual, with a witness defined on every
/// point of the space.
///
/// The LP runs over the joint support of `mu` and `nu`; the optimal
/// potential is then extended to the rest of the space by the McShane
/// formula, which keeps it 1-Lipschitz without changing the objective.
pub fn w1_dual<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    space: &FiniteMetricSpace<S>,
    tol: &TransportTol<S>,
) -> Result<(S, DualPotential<S>)> {
    check_pair(mu, nu, space)?;
    let pts: Vec<usize> = (0..space.len())
        .filter(|&i| mu.weights()[i] > S::zero() || nu.weights()[i] > S::zero())
        .collect();
    if pts.is_empty() {
        return Err(Error::domain("measures have empty support"));
    }
    let k = pts.len();
    let diff: Vec<S> = pts
        .iter()
        .map(|&i| mu.weights()[i].clone() - nu.weights()[i].clone())
        .collect();
    let d = |a: usize, b: usize| space.dist(pts[a], pts[b]).clone();

    // Pin f(p_0) = 0 and shift g_a = f_a + d(a, 0) >= 0 so the origin is
    // feasible; the right-hand sides are nonnegative by the triangle inequality.
    let slack = S::tol(1e-9) * S::max_of(S::one(), space.bound().clone());
    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut rhs: Vec<S> = Vec::new();
    let vars = k - 1;
    let mut push = |row: Vec<S>, b: S| -> Result<()> {
        if b < -slack.clone() {
            return Err(Error::invariant(
                "metric",
                format!("triangle inequality fails by {}", -b),
            ));
        }
        rows.push(row);
        rhs.push(S::max_of(S::zero(), b));
        Ok(())
    };
    for a in 1..k {
        // f_a - f_0 <= d(a, 0)  <=>  g_a <= 2 d(a, 0)
        let mut row = vec![S::zero(); vars];
        row[a - 1] = S::one();
        push(row, d(a, 0) + d(a, 0))?;
        for b in 1..k {
            if a == b {
                continue;
            }
            // f_a - f_b <= d(a, b)
            let mut row = vec![S::zero(); vars];
            row[a - 1] = S::one();
            row[b - 1] = -S::one();
            push(row, d(a, b) + d(a, 0) - d(b, 0))?;
        }
    }
    let c: Vec<S> = diff[1..].to_vec();
    let (g, value) = if vars == 0 {
        (Vec::new(), S::zero())
    } else {
        let sol = lp::maximize(&rows, &rhs, &c, &tol.lp)?;
        (sol.x, sol.value)
    };
    let mut f_support = vec![S::zero(); k];
    for a in 1..k {
        f_support[a] = g[a - 1].clone() - d(a, 0);
    }
    // objective in terms of f: Σ c_a g_a - Σ c_a d(a, 0)
    let offset = (1..k).fold(S::zero(), |acc, a| acc + diff[a].clone() * d(a, 0));
    let value = value - offset;
    let f = mcshane_values(space, &pts, &f_support, &S::one())?;
    Ok((S::max_of(S::zero(), value), DualPotential { f }))
}

/// `|primal - dual|`.
pub fn duality_gap<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    space: &FiniteMetricSpace<S>,
    tol: &TransportTol<S>,
) -> Result<S> {
    let primal = w1_primal(mu, nu, space, tol)?.cost;
    let (dual, _) = w1_dual(mu, nu, space, tol)?;
    Ok((primal - dual).abs())
}

/// Half the ℓ₁ distance between weight vectors.
pub fn tv_distance<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<S> {
    if mu.len() != nu.len() {
        return Err(Error::structural("measures live on different spaces"));
    }
    let l1 = mu
        .weights()
        .iter()
        .zip(nu.weights())
        .fold(S::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs());
    Ok(l1 * crate::scalar::half())
}

/// Largest integral gap over a given family of 1-Lipschitz functions, a lower
/// bound for the W₁ distance.
pub fn lipschitz_sup_estimate<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    space: &FiniteMetricSpace<S>,
    family: &[Vec<S>],
    tol_lp: &S,
) -> Result<S> {
    check_pair(mu, nu, space)?;
    let mut best = S::zero();
    for (k, f) in family.iter().enumerate() {
        let check = verify_lipschitz(f, space, &S::one(), tol_lp)?;
        if !check.ok {
            return Err(Error::domain(format!(
                "family member {k} is not 1-Lipschitz (worst pair {:?})",
                check.worst_pair
            )));
        }
        let gap = (mu.integrate(f)? - nu.integrate(f)?).abs();
        best = S::max_of(best, gap);
    }
    Ok(best)
}

/// W₁ and TV between two located measures on their joint support.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedDistances<S> {
    pub w1: S,
    pub tv: S,
}

/// Exact W₁ (primal route) and TV between located measures under `metric`.
pub fn located_distances<S: Scalar, M: CoordMetric<S>>(
    mu: &LocatedMeasure<S>,
    nu: &LocatedMeasure<S>,
    metric: &M,
    tol: &TransportTol<S>,
) -> Result<LocatedDistances<S>> {
    let (space, w) = common_space(&[mu, nu], metric)?;
    let a = DiscreteMeasure::from_weights(w[0].clone(), &tol.mass)?;
    let b = DiscreteMeasure::from_weights(w[1].clone(), &tol.mass)?;
    Ok(LocatedDistances {
        w1: w1_primal(&a, &b, &space, tol)?.cost,
        tv: tv_distance(&a, &b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn line(xs: &[f64]) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace::on_line(xs).unwrap()
    }

    fn m(w: &[f64]) -> DiscreteMeasure<f64> {
        DiscreteMeasure::from_weights(w.to_vec(), &1e-9).unwrap()
    }

    #[test]
    fn identical_measures() {
        let s = line(&[0.0, 1.0, 3.0]);
        let a = m(&[0.2, 0.3, 0.5]);
        let tol = TransportTol::default();
        let plan = w1_primal(&a, &a, &s, &tol).unwrap();
        assert!(plan.cost.abs() < 1e-12);
        let (v, _) = w1_dual(&a, &a, &s, &tol).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(duality_gap(&a, &a, &s, &tol).unwrap() < 1e-12);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn point_masses() {
        let s = line(&[0.0, 0.3, 2.0]);
        let a = DiscreteMeasure::point_mass(3, 0).unwrap();
        let b = DiscreteMeasure::point_mass(3, 2).unwrap();
        let tol = TransportTol::default();
        let plan = w1_primal(&a, &b, &s, &tol).unwrap();
        assert_eq!(plan.cost, 2.0);
        assert_eq!(plan.coupling[0][2], 1.0);
        let (v, w) = w1_dual(&a, &b, &s, &tol).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(verify_lipschitz(&w.f, &s, &1.0, &1e-9).unwrap().ok);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn split_mass_to_midpoint() {
        let q = |a, b| Rational::from_ratio(a, b);
        let s = FiniteMetricSpace::on_line(&[q(0, 1), q(1, 2), q(1, 1)]).unwrap();
        let mu = DiscreteMeasure::from_weights(vec![q(1, 2), q(0, 1), q(1, 2)], &q(0, 1)).unwrap();
        let nu = DiscreteMeasure::point_mass(3, 1).unwrap();
        let tol = TransportTol::default();
        assert_eq!(w1_primal(&mu, &nu, &s, &tol).unwrap().cost, q(1, 2));
        assert_eq!(w1_dual(&mu, &nu, &s, &tol).unwrap().0, q(1, 2));
    }

    #[test]
    fn total_variation() {
        assert_eq!(tv_distance(&m(&[0.5, 0.5]), &m(&[0.75, 0.25])).unwrap(), 0.25);
    }

    #[test]
    fn sup_estimate() {
        let s = line(&[0.0, 1.0, 2.0]);
        let a = m(&[1.0, 0.0, 0.0]);
        let b = m(&[0.0, 0.0, 1.0]);
        let tol = TransportTol::default();
        assert_eq!(
            lipschitz_sup_estimate(&a, &b, &s, &[vec![0.0; 3]], &1e-9).unwrap(),
            0.0
        );
        let (v, w) = w1_dual(&a, &b, &s, &tol).unwrap();
        let est = lipschitz_sup_estimate(&a, &b, &s, &[vec![0.0; 3], w.f.clone()], &1e-9).unwrap();
        assert!((est - v).abs() < 1e-12);
        assert!(lipschitz_sup_estimate(&a, &b, &s, &[vec![0.0, 2.0, 4.0]], &1e-9).is_err());
    }

    #[test]
    fn located_pair() {
        let a = LocatedMeasure::point_mass(vec![0.25]);
        let b = LocatedMeasure::point_mass(vec![0.0]);
        let d = located_distances(&a, &b, &crate::metric::Manhattan, &TransportTol::default())
            .unwrap();
        assert_eq!(d.w1, 0.25);
        assert_eq!(d.tv, 1.0);
    }
}
