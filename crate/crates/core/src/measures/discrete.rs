use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::scalar::{sum, Scalar};

/// Default slack on total mass for floating scalars.
pub const TOL_MASS: f64 = 1e-9;

/// Probability weights on the points of a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S> {
    weights: Vec<S>,
}

pub(crate) fn check_weights<S: Scalar>(weights: &[S], tol: &S) -> Result<()> {
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite_value())
    {
        return Err(Error::invariant(
            "weight",
            format!("weight {i} is not finite ({w})"),
        ));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| **w < S::zero()) {
        return Err(Error::invariant("weight", format!("weight {i} is negative ({w})")));
    }
    let total: S = sum(weights);
    if (total.clone() - S::one()).abs() > *tol {
        return Err(Error::invariant(
            "mass",
            format!("weights sum to {total}, not 1"),
        ));
    }
    Ok(())
}

pub(crate) fn normalize<S: Scalar>(weights: Vec<S>) -> Result<Vec<S>> {
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| **w < S::zero()) {
        return Err(Error::invariant("weight", format!("weight {i} is negative ({w})")));
    }
    let total: S = sum(&weights);
    if total <= S::zero() || !total.is_finite_value() {
        return Err(Error::domain("cannot normalize weights with zero total"));
    }
    Ok(weights.into_iter().map(|w| w / total.clone()).collect())
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Validated measure on `space`.
    pub fn new(space: &FiniteMetricSpace<S>, weights: Vec<S>) -> Result<Self> {
        Self::with_tol(space, weights, &S::tol(TOL_MASS))
    }

    pub fn with_tol(space: &FiniteMetricSpace<S>, weights: Vec<S>, tol: &S) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::structural(format!(
                "{} weights for a space of {} points",
                weights.len(),
                space.len()
            )));
        }
        Self::from_weights(weights, tol)
    }

    /// Rescale positive-total weights to total mass 1.
    pub fn normalized(space: &FiniteMetricSpace<S>, weights: Vec<S>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::structural(format!(
                "{} weights for a space of {} points",
                weights.len(),
                space.len()
            )));
        }
        Ok(DiscreteMeasure {
            weights: normalize(weights)?,
        })
    }

    /// Validated measure not tied to a particular space value.
    pub fn from_weights(weights: Vec<S>, tol: &S) -> Result<Self> {
        check_weights(&weights, tol)?;
        Ok(DiscreteMeasure { weights })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::structural(format!("point {at} out of range for {n} points")));
        }
        let mut weights = vec![S::zero(); n];
        weights[at] = S::one();
        Ok(DiscreteMeasure { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("uniform measure on an empty space"));
        }
        let w = S::one() / S::from_int(n as i64);
        Ok(DiscreteMeasure {
            weights: vec![w; n],
        })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.weights[i] > S::zero())
            .collect()
    }

    pub fn measure_of(&self, subset: &[usize]) -> Result<S> {
        let mut total = S::zero();
        for &i in subset {
            let w = self.weights.get(i).ok_or_else(|| {
                Error::structural(format!("point {i} out of range for {} points", self.len()))
            })?;
            total = total + w.clone();
        }
        Ok(total)
    }

    /// `Σ w_i f_i`; values off the support are ignored.
    pub fn integrate(&self, f: &[S]) -> Result<S> {
        if f.len() != self.len() {
            return Err(Error::structural(format!(
                "function has {} values for {} points",
                f.len(),
                self.len()
            )));
        }
        let mut total = S::zero();
        for (w, v) in self.weights.iter().zip(f) {
            if *w > S::zero() {
                if !v.is_finite_value() {
                    return Err(Error::Numeric(format!("non-finite integrand value {v}")));
                }
                total = total + w.clone() * v.clone();
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn line(n: usize) -> FiniteMetricSpace<f64> {
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        FiniteMetricSpace::on_line(&xs).unwrap()
    }

    #[test]
    fn construction() {
        let s = line(3);
        let m = DiscreteMeasure::new(&s, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.support(), vec![0]);
        let s2 = line(2);
        assert!(DiscreteMeasure::new(&s2, vec![0.5, 0.5]).is_ok());
        let n = DiscreteMeasure::normalized(&s2, vec![2.0, 2.0]).unwrap();
        assert_eq!(n.weights(), &[0.5, 0.5]);
        let err = DiscreteMeasure::new(&s2, vec![-0.5, 1.5]).unwrap_err();
        assert!(err.to_string().contains("weight invariant"));
        assert!(matches!(
            DiscreteMeasure::normalized(&s2, vec![0.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(DiscreteMeasure::new(&s2, vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(&s, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn sets_and_integrals() {
        let m = DiscreteMeasure::<f64>::uniform(4).unwrap();
        assert_eq!(m.measure_of(&[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(m.measure_of(&[]).unwrap(), 0.0);
        assert_eq!(m.measure_of(&[0, 1, 2]).unwrap(), 0.75);
        assert!(m.measure_of(&[7]).is_err());
        assert_eq!(m.integrate(&[2.0; 4]).unwrap(), 2.0);
        let d = DiscreteMeasure::<f64>::point_mass(3, 1).unwrap();
        assert_eq!(d.integrate(&[5.0, 7.0, f64::NAN]).unwrap(), 7.0);
        assert!(matches!(
            d.integrate(&[5.0, f64::INFINITY, 0.0]),
            Err(Error::Numeric(_))
        ));
        let u = DiscreteMeasure::<f64>::uniform(2).unwrap();
        assert_eq!(u.integrate(&[0.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn exact_uniform() {
        let m = DiscreteMeasure::<Rational>::uniform(3).unwrap();
        assert_eq!(
            m.measure_of(&[0, 1, 2]).unwrap(),
            Rational::from_int(1)
        );
    }
}
