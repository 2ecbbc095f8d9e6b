//! Tolerances, resolution schedules and the finite limit-detection rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Every numeric tolerance used by the crate, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Optimality / feasibility slack of the LP solvers.
    pub lp: f64,
    /// Allowed |primal - dual| gap.
    pub gap: f64,
    /// Total-mass and additivity slack.
    pub mass: f64,
    /// Slack for symmetry and triangle checks on distance matrices.
    pub metric: f64,
    /// Window-rule tolerance for detecting limits.
    pub limit: f64,
    /// Distance under which a point counts as lying on a set boundary.
    pub boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lp: 1e-9,
            gap: 1e-7,
            mass: 1e-9,
            metric: 1e-9,
            limit: 1e-3,
            boundary: 1e-6,
        }
    }
}

/// Decides whether a finite sequence has "converged".
///
/// A sequence converges to its last value when, over the last `window`
/// entries, every entry is within `tol` of that last value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRule {
    pub window: usize,
    pub tol: f64,
}

impl Default for LimitRule {
    fn default() -> Self {
        LimitRule {
            window: 8,
            tol: 1e-3,
        }
    }
}

/// Outcome of applying a [`LimitRule`] to a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Limit<S> {
    /// Last value of the sequence; the detected limit when `converged`.
    pub value: S,
    pub converged: bool,
    /// max - min over the window.
    pub gap: S,
}

impl LimitRule {
    pub fn window_of<'a, S>(&self, series: &'a [S]) -> &'a [S] {
        let w = self.window.max(1).min(series.len());
        &series[series.len() - w..]
    }

    /// Detect the limit of `series` (must be nonempty).
    pub fn detect<S: Scalar>(&self, series: &[S]) -> Result<Limit<S>> {
        let last = series
            .last()
            .ok_or_else(|| Error::domain("limit detection on an empty series"))?
            .clone();
        let window = self.window_of(series);
        let tol = S::from_real(self.tol);
        let mut lo = last.clone();
        let mut hi = last.clone();
        let mut converged = true;
        for a in window {
            if (a.clone() - last.clone()).abs() > tol {
                converged = false;
            }
            lo = S::min_of(lo, a.clone());
            hi = S::max_of(hi, a.clone());
        }
        Ok(Limit {
            value: last,
            converged,
            gap: hi - lo,
        })
    }

    /// Whether the window of `series` stays within `tol` of `target`.
    pub fn converges_to<S: Scalar>(&self, series: &[S], target: &S) -> bool {
        let tol = S::from_real(self.tol);
        !series.is_empty()
            && self
                .window_of(series)
                .iter()
                .all(|a| (a.clone() - target.clone()).abs() <= tol)
    }
}

/// Strictly increasing list of resolutions `N`.
///
/// Text form is `start:end:xF` (geometric, factor F) or `start:end:+S`
/// (arithmetic, step S); `end` is included when the progression hits it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule(Vec<usize>);

impl Schedule {
    pub fn new(resolutions: Vec<usize>) -> Result<Self> {
        if resolutions.is_empty() {
            return Err(Error::domain("schedule is empty"));
        }
        if resolutions[0] == 0 {
            return Err(Error::domain("resolutions must be positive"));
        }
        if resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invariant(
                "schedule",
                "resolutions must be strictly increasing",
            ));
        }
        Ok(Schedule(resolutions))
    }

    pub fn geometric(start: usize, end: usize, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::domain("geometric factor must be at least 2"));
        }
        if start == 0 || end < start {
            return Err(Error::domain("need 0 < start <= end"));
        }
        let mut out = Vec::new();
        let mut n = start;
        while n <= end {
            out.push(n);
            n = match n.checked_mul(factor) {
                Some(m) => m,
                None => break,
            };
        }
        Schedule::new(out)
    }

    pub fn arithmetic(start: usize, end: usize, step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::domain("arithmetic step must be positive"));
        }
        if start == 0 || end < start {
            return Err(Error::domain("need 0 < start <= end"));
        }
        Schedule::new((start..=end).step_by(step).collect())
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("schedule is nonempty")
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::geometric(1, 256, 2).expect("valid default")
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::domain(format!(
                "schedule `{s}` is not of the form start:end:xF or start:end:+S"
            )));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::domain(format!("bad schedule component `{p}`")))
        };
        let start = num(parts[0])?;
        let end = num(parts[1])?;
        let step = parts[2].trim();
        if let Some(f) = step.strip_prefix('x') {
            Schedule::geometric(start, end, num(f)?)
        } else if let Some(d) = step.strip_prefix('+') {
            Schedule::arithmetic(start, end, num(d)?)
        } else {
            Err(Error::domain(format!("schedule step `{step}` needs x or + prefix")))
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strs: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", strs.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_schedules() {
        let s: Schedule = "1:256:x2".parse().unwrap();
        assert_eq!(s.resolutions(), &[1, 2, 4, 8, 16, 32, 64, 128, 256]);
        let s: Schedule = "1:10:+3".parse().unwrap();
        assert_eq!(s.resolutions(), &[1, 4, 7, 10]);
        assert_eq!(Schedule::default().last(), 256);
        assert!("1:10".parse::<Schedule>().is_err());
        assert!("0:10:x2".parse::<Schedule>().is_err());
        assert!("1:10:2".parse::<Schedule>().is_err());
        assert!(Schedule::new(vec![2, 2]).is_err());
    }

    #[test]
    fn window_rule() {
        let rule = LimitRule::default();
        let conv: Vec<f64> = (0..20).map(|k| if k < 5 { 1.0 } else { 0.5 }).collect();
        let lim = rule.detect(&conv).unwrap();
        assert!(lim.converged);
        assert_eq!(lim.value, 0.5);
        assert_eq!(lim.gap, 0.0);

        let osc: Vec<f64> = (0..20).map(|k| (k % 2) as f64).collect();
        let lim = rule.detect(&osc).unwrap();
        assert!(!lim.converged);
        assert_eq!(lim.gap, 1.0);

        // windows longer than the series use everything
        let short = [0.2, 0.2005];
        assert!(rule.detect(&short).unwrap().converged);
        assert!(rule.detect::<f64>(&[]).is_err());
        assert!(!rule.converges_to(&[0.5, 0.0, 0.0005], &0.0));
        assert!(LimitRule { window: 2, tol: 1e-3 }.converges_to(&[0.5, 0.0, 0.0005], &0.0));
    }
}
