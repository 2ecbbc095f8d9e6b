//! Measures on a coordinate ambient space and resolution-indexed families
//! of them.
//!
//! A [`MeasureFamily`] is the finite stand-in for an internal probability
//! measure: resolution `N` yields a finitely supported measure whose atoms
//! may move with `N`.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::discrete::{check_weights, normalize, TOL_MASS};
use crate::error::{Error, Result};
use crate::metric::{CoordMetric, FiniteMetricSpace};
use crate::scalar::{sum, Scalar};

/// Finitely supported probability measure with explicit atom locations.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedMeasure<S> {
    points: Vec<Vec<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> LocatedMeasure<S> {
    pub fn new(points: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        Self::with_tol(points, weights, &S::tol(TOL_MASS))
    }

    pub fn with_tol(points: Vec<Vec<S>>, weights: Vec<S>, tol: &S) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::structural(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::domain("measure with no atoms"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::structural("atoms have differing dimensions"));
        }
        check_weights(&weights, tol)?;
        Ok(LocatedMeasure { points, weights })
    }

    pub fn normalized(points: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        let weights = normalize(weights)?;
        Self::new(points, weights)
    }

    pub fn point_mass(point: Vec<S>) -> Self {
        LocatedMeasure {
            points: vec![point],
            weights: vec![S::one()],
        }
    }

    /// Uniform measure on the given points (duplicates keep their share).
    pub fn uniform(points: Vec<Vec<S>>) -> Result<Self> {
        let w = S::one() / S::from_int(points.len().max(1) as i64);
        let n = points.len();
        Self::new(points, vec![w; n])
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass_where(&self, mut pred: impl FnMut(&[S]) -> bool) -> S {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| pred(p))
            .fold(S::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// `∫ f dμ` over atoms with positive mass.
    pub fn integrate(&self, mut f: impl FnMut(&[S]) -> S) -> Result<S> {
        let mut total = S::zero();
        for (p, w) in self.points.iter().zip(&self.weights) {
            if *w > S::zero() {
                let v = f(p);
                if !v.is_finite_value() {
                    return Err(Error::Numeric(format!("non-finite integrand value {v}")));
                }
                total = total + w.clone() * v;
            }
        }
        Ok(total)
    }

    /// Same measure with coincident atoms merged and zero atoms dropped,
    /// in first-occurrence order.
    pub fn merged(&self) -> Self {
        let mut points: Vec<Vec<S>> = Vec::new();
        let mut weights: Vec<S> = Vec::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            if *w <= S::zero() {
                continue;
            }
            match points.iter().position(|q| q == p) {
                Some(k) => weights[k] = weights[k].clone() + w.clone(),
                None => {
                    points.push(p.clone());
                    weights.push(w.clone());
                }
            }
        }
        LocatedMeasure { points, weights }
    }

    pub fn total_mass(&self) -> S {
        sum(&self.weights)
    }
}

/// Union of the atom locations of several measures, without duplicates, as
/// a finite metric space; also returns, per measure, the weight vector on
/// that space.
pub fn common_space<S: Scalar, M: CoordMetric<S>>(
    measures: &[&LocatedMeasure<S>],
    metric: &M,
) -> Result<(FiniteMetricSpace<S>, Vec<Vec<S>>)> {
    let mut points: Vec<Vec<S>> = Vec::new();
    let mut owners: Vec<Vec<usize>> = Vec::with_capacity(measures.len());
    for m in measures {
        let mut idx = Vec::with_capacity(m.len());
        for p in m.points() {
            match points.iter().position(|q| q == p) {
                Some(k) => idx.push(k),
                None => {
                    points.push(p.clone());
                    idx.push(points.len() - 1);
                }
            }
        }
        owners.push(idx);
    }
    let n = points.len();
    let space = FiniteMetricSpace::from_coords(points, metric)?;
    let weights = measures
        .iter()
        .zip(&owners)
        .map(|(m, idx)| {
            let mut w = vec![S::zero(); n];
            for (k, wt) in idx.iter().zip(m.weights()) {
                w[*k] = w[*k].clone() + wt.clone();
            }
            w
        })
        .collect();
    Ok((space, weights))
}

/// Resolution-indexed family of located measures.
pub trait MeasureFamily<S: Scalar>: Send + Sync {
    fn at(&self, n: usize) -> Result<LocatedMeasure<S>>;

    /// Measures at every resolution of `schedule`, in order.
    fn sample(&self, resolutions: &[usize]) -> Result<Vec<LocatedMeasure<S>>> {
        use rayon::prelude::*;
        resolutions.par_iter().map(|&n| self.at(n)).collect()
    }
}

impl<S: Scalar, T: MeasureFamily<S> + ?Sized> MeasureFamily<S> for Arc<T> {
    fn at(&self, n: usize) -> Result<LocatedMeasure<S>> {
        (**self).at(n)
    }
}

impl<S: Scalar, T: MeasureFamily<S> + ?Sized> MeasureFamily<S> for &T {
    fn at(&self, n: usize) -> Result<LocatedMeasure<S>> {
        (**self).at(n)
    }
}

/// Family given by a closure.
pub struct FnFamily<F>(pub F);

impl<S: Scalar, F> MeasureFamily<S> for FnFamily<F>
where
    F: Fn(usize) -> Result<LocatedMeasure<S>> + Send + Sync,
{
    fn at(&self, n: usize) -> Result<LocatedMeasure<S>> {
        (self.0)(n)
    }
}

/// Location that depends on the resolution: a sum of terms `a/b` and
/// `a/(b·N)`. Text form: `"1/(2N)"`, `"1-1/N"`, `"0.5"`, `"3/(4N)+0.25"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocExpr {
    terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Term {
    num: i64,
    den: i64,
    per_n: bool,
}

fn parse_decimal(s: &str) -> Option<(i64, i64)> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 12 {
        return None;
    }
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let int_part: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_part: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some((int_part.checked_mul(den)?.checked_add(frac_part)?, den))
}

fn parse_term(t: &str) -> Option<Term> {
    if let Some((a, b)) = t.split_once('/') {
        let (num, nden) = parse_decimal(a)?;
        let b = b.strip_prefix('(').and_then(|b| b.strip_suffix(')')).unwrap_or(b);
        let (coef, per_n) = match b.strip_suffix('N') {
            Some(c) => (if c.is_empty() { "1" } else { c }, true),
            None => (b, false),
        };
        let (cnum, cden) = parse_decimal(coef)?;
        if cnum == 0 {
            return None;
        }
        // num/nden / (cnum/cden) = num·cden / (nden·cnum)
        Some(Term {
            num: num.checked_mul(cden)?,
            den: nden.checked_mul(cnum)?,
            per_n,
        })
    } else if t == "N" {
        None
    } else {
        let (num, den) = parse_decimal(t)?;
        Some(Term {
            num,
            den,
            per_n: false,
        })
    }
}

impl FromStr for LocExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("cannot parse location expression `{s}`"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut terms = Vec::new();
        let mut sign = 1i64;
        let mut start = 0usize;
        let bytes = compact.as_bytes();
        let mut depth = 0i32;
        let mut i = 0usize;
        let mut first = true;
        if bytes[0] == b'-' || bytes[0] == b'+' {
            sign = if bytes[0] == b'-' { -1 } else { 1 };
            start = 1;
            i = 1;
        }
        while i <= bytes.len() {
            let at_end = i == bytes.len();
            let c = if at_end { b'+' } else { bytes[i] };
            match c {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 && (i > start || at_end) => {
                    let mut term = parse_term(&compact[start..i]).ok_or_else(bad)?;
                    term.num *= sign;
                    terms.push(term);
                    sign = if c == b'-' { -1 } else { 1 };
                    start = i + 1;
                    first = false;
                }
                _ => {}
            }
            i += 1;
        }
        if first || depth != 0 {
            return Err(bad());
        }
        Ok(LocExpr { terms })
    }
}

impl LocExpr {
    pub fn eval<S: Scalar>(&self, n: usize) -> S {
        let nn = S::from_int(n as i64);
        self.terms.iter().fold(S::zero(), |acc, t| {
            let v = S::from_ratio(t.num, t.den);
            acc + if t.per_n { v / nn.clone() } else { v }
        })
    }
}

/// Built-in families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family<S> {
    /// The same measure at every resolution.
    Constant(LocatedMeasure<S>),
    /// Unit mass at a resolution-dependent point of the line.
    PointAt(LocExpr),
    /// Uniform on the `N` cell midpoints `lo + (i + 1/2)(hi - lo)/N`.
    UniformGrid { lo: S, hi: S },
    /// Unit mass at `points[(N - 1) mod len]`.
    Cycle(Vec<Vec<S>>),
}

impl<S: Scalar> MeasureFamily<S> for Family<S> {
    fn at(&self, n: usize) -> Result<LocatedMeasure<S>> {
        if n == 0 {
            return Err(Error::domain("resolutions start at 1"));
        }
        match self {
            Family::Constant(m) => Ok(m.clone()),
            Family::PointAt(e) => Ok(LocatedMeasure::point_mass(vec![e.eval(n)])),
            Family::UniformGrid { lo, hi } => {
                let nn = S::from_int(n as i64);
                let width = (hi.clone() - lo.clone()) / nn;
                let points = (0..n)
                    .map(|i| {
                        vec![lo.clone() + width.clone() * S::from_ratio(2 * i as i64 + 1, 2)]
                    })
                    .collect();
                LocatedMeasure::uniform(points)
            }
            Family::Cycle(points) => {
                if points.is_empty() {
                    return Err(Error::domain("cycle family with no points"));
                }
                Ok(LocatedMeasure::point_mass(points[(n - 1) % points.len()].clone()))
            }
        }
    }
}

/// Coordinates in JSON: a bare number means a 1-D point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coord {
    pub fn to_point<S: Scalar>(&self) -> Vec<S> {
        match self {
            Coord::Scalar(x) => vec![S::from_real(*x)],
            Coord::Vector(v) => v.iter().map(|x| S::from_real(*x)).collect(),
        }
    }
}

/// JSON descriptor of a built-in family, e.g.
/// `{"kind": "point_at", "loc": "1/(2N)"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Constant { points: Vec<Coord>, weights: Vec<f64> },
    PointAt { loc: String },
    UniformGrid {
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    Cycle { points: Vec<Coord> },
}

fn one() -> f64 {
    1.0
}

impl FamilySpec {
    pub fn build<S: Scalar>(&self) -> Result<Family<S>> {
        Ok(match self {
            FamilySpec::Constant { points, weights } => Family::Constant(LocatedMeasure::new(
                points.iter().map(Coord::to_point).collect(),
                weights.iter().map(|w| S::from_real(*w)).collect(),
            )?),
            FamilySpec::PointAt { loc } => Family::PointAt(loc.parse()?),
            FamilySpec::UniformGrid { lo, hi } => {
                if hi <= lo {
                    return Err(Error::domain("uniform grid needs lo < hi"));
                }
                Family::UniformGrid {
                    lo: S::from_real(*lo),
                    hi: S::from_real(*hi),
                }
            }
            FamilySpec::Cycle { points } => {
                if points.is_empty() {
                    return Err(Error::domain("cycle family with no points"));
                }
                Family::Cycle(points.iter().map(Coord::to_point).collect())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Manhattan;
    use crate::scalar::Rational;

    #[test]
    fn loc_expressions() {
        let e: LocExpr = "1/(2N)".parse().unwrap();
        assert_eq!(e.eval::<Rational>(4), Rational::from_ratio(1, 8));
        let e: LocExpr = "1-1/N".parse().unwrap();
        assert_eq!(e.eval::<Rational>(4), Rational::from_ratio(3, 4));
        let e: LocExpr = " 0.5 ".parse().unwrap();
        assert_eq!(e.eval::<f64>(7), 0.5);
        let e: LocExpr = "3/(4N)+0.25".parse().unwrap();
        assert_eq!(e.eval::<f64>(3), 0.5);
        let e: LocExpr = "-1/N".parse().unwrap();
        assert_eq!(e.eval::<f64>(2), -0.5);
        let e: LocExpr = "1/N".parse().unwrap();
        assert_eq!(e.eval::<f64>(8), 0.125);
        for bad in ["", "N", "1/(0N)", "x", "1/(2N", "1//N"] {
            assert!(bad.parse::<LocExpr>().is_err(), "{bad}");
        }
    }

    #[test]
    fn families() {
        let f: Family<f64> = FamilySpec::PointAt { loc: "1/(2N)".into() }.build().unwrap();
        assert_eq!(f.at(2).unwrap().points(), &[vec![0.25]]);
        let g: Family<Rational> = Family::UniformGrid {
            lo: Rational::from_int(0),
            hi: Rational::from_int(1),
        };
        let m = g.at(4).unwrap();
        assert_eq!(m.points()[0][0], Rational::from_ratio(1, 8));
        assert_eq!(m.total_mass(), Rational::from_int(1));
        let c: Family<f64> = Family::Cycle(vec![vec![0.0], vec![1.0]]);
        assert_eq!(c.at(1).unwrap().points(), &[vec![0.0]]);
        assert_eq!(c.at(4).unwrap().points(), &[vec![1.0]]);
        assert!(c.at(0).is_err());
        let json = r#"{"kind":"constant","points":[0,[1]],"weights":[0.25,0.75]}"#;
        let spec: FamilySpec = serde_json::from_str(json).unwrap();
        let fam: Family<f64> = spec.build().unwrap();
        assert_eq!(fam.at(9).unwrap().weights(), &[0.25, 0.75]);
    }

    #[test]
    fn merging_and_common_space() {
        let m = LocatedMeasure::new(
            vec![vec![0.0], vec![1.0], vec![0.0]],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap();
        let mm = m.merged();
        assert_eq!(mm.points(), &[vec![0.0], vec![1.0]]);
        assert_eq!(mm.weights(), &[0.5, 0.5]);
        let d = LocatedMeasure::point_mass(vec![2.0]);
        let (space, w) = common_space(&[&m, &d], &Manhattan).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(w[0], vec![0.5, 0.5, 0.0]);
        assert_eq!(w[1], vec![0.0, 0.0, 1.0]);
        assert!(LocatedMeasure::new(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(LocatedMeasure::<f64>::new(vec![], vec![]).is_err());
    }
}
