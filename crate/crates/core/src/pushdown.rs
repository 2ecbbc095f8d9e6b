//! External and internal push-downs of a resolution-indexed family.
//!
//! The external push-down rounds every atom of `ν_N` to its nearest anchor
//! and takes per-anchor limits. The internal push-down takes per-set limits
//! of `ν_N(A)`. The audits compare both with the family, in W₁ and in TV.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LimitRule, Schedule, Tolerances};
use crate::error::{Error, Result};
use crate::measures::{
    charge_from_limits, ChargeTable, DiscreteMeasure, LocatedMeasure, Member, MeasureFamily,
    SetAlgebra, SetRealizer,
};
use crate::metric::{CoordMetric, FiniteMetricSpace};
use crate::scalar::Scalar;
use crate::transport::{located_distances, TransportTol};

/// Nearest-anchor rounding, lowest anchor index on ties.
#[derive(Debug, Clone)]
pub struct RoundingMap<S, M> {
    anchors: Vec<Vec<S>>,
    metric: M,
    escape_radius: Option<S>,
}

/// Pushforward of one measure through a [`RoundingMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rounded<S> {
    /// Mass landing on each anchor.
    pub weights: Vec<S>,
    /// Largest displacement of a positive-mass atom.
    pub scale: S,
    /// Mass of atoms farther than the escape radius from every anchor.
    pub escaping: S,
}

impl<S: Scalar, M: CoordMetric<S>> RoundingMap<S, M> {
    /// The escape radius defaults to half the largest nearest-anchor spacing
    /// (none with a single anchor).
    pub fn new(anchors: Vec<Vec<S>>, metric: M) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::domain("rounding needs at least one anchor"));
        }
        if anchors.iter().any(|a| a.len() != anchors[0].len()) {
            return Err(Error::structural("anchors have differing dimensions"));
        }
        let mut spacing: Option<S> = None;
        for (i, a) in anchors.iter().enumerate() {
            let nearest = anchors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| metric.distance(a, b))
                .reduce(S::min_of);
            if let Some(d) = nearest {
                spacing = Some(match spacing {
                    Some(s) => S::max_of(s, d),
                    None => d,
                });
            }
        }
        let escape_radius = spacing.map(|s| s * crate::scalar::half());
        Ok(RoundingMap {
            anchors,
            metric,
            escape_radius,
        })
    }

    pub fn with_escape_radius(mut self, radius: Option<S>) -> Self {
        self.escape_radius = radius;
        self
    }

    pub fn anchors(&self) -> &[Vec<S>] {
        &self.anchors
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn escape_radius(&self) -> Option<&S> {
        self.escape_radius.as_ref()
    }

    /// Anchor index and displacement.
    pub fn round(&self, point: &[S]) -> (usize, S) {
        let mut best = 0;
        let mut best_d = self.metric.distance(point, &self.anchors[0]);
        for (k, a) in self.anchors.iter().enumerate().skip(1) {
            let d = self.metric.distance(point, a);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        (best, best_d)
    }

    pub fn push_forward(&self, measure: &LocatedMeasure<S>) -> Rounded<S> {
        let mut weights = vec![S::zero(); self.anchors.len()];
        let mut scale = S::zero();
        let mut escaping = S::zero();
        for (p, w) in measure.points().iter().zip(measure.weights()) {
            if w.is_zero() {
                continue;
            }
            let (k, d) = self.round(p);
            weights[k] = weights[k].clone() + w.clone();
            if self.escape_radius.as_ref().is_some_and(|r| d > *r) {
                escaping = escaping + w.clone();
            }
            scale = S::max_of(scale, d);
        }
        Rounded {
            weights,
            scale,
            escaping,
        }
    }

    /// The anchors as a finite metric space.
    pub fn anchor_space(&self) -> Result<FiniteMetricSpace<S>>
    where
        M: Clone,
    {
        FiniteMetricSpace::from_coords(self.anchors.clone(), &self.metric)
    }
}

/// Limit of the rounded family.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalPushdown<S> {
    pub anchors: Vec<Vec<S>>,
    /// Detected limit weights; these are the last pushforward, so they
    /// always form a probability vector.
    pub measure: DiscreteMeasure<S>,
    /// Anchors whose mass sequence did not settle.
    pub flagged: Vec<usize>,
    pub resolutions: Vec<usize>,
    /// Per-resolution pushforwards.
    pub rounded: Vec<Rounded<S>>,
}

impl<S: Scalar> ExternalPushdown<S> {
    pub fn converged(&self) -> bool {
        self.flagged.is_empty()
    }

    /// The limit as a located measure on the anchors.
    pub fn located(&self) -> Result<LocatedMeasure<S>> {
        LocatedMeasure::with_tol(
            self.anchors.clone(),
            self.measure.weights().to_vec(),
            &S::tol(1e-9),
        )
    }

    /// Limit mass of the anchors for which `inside` holds.
    pub fn mass_where(&self, mut inside: impl FnMut(&[S]) -> bool) -> S {
        self.anchors
            .iter()
            .zip(self.measure.weights())
            .filter(|(a, _)| inside(a))
            .fold(S::zero(), |acc, (_, w)| acc + w.clone())
    }
}

/// Push every `ν_N` forward to the anchors and detect per-anchor limits.
pub fn external_pushdown<S: Scalar, M: CoordMetric<S>>(
    family: &dyn MeasureFamily<S>,
    rounding: &RoundingMap<S, M>,
    schedule: &Schedule,
    rule: &LimitRule,
    tol: &Tolerances,
) -> Result<ExternalPushdown<S>> {
    let res = schedule.resolutions().to_vec();
    let measures = family.sample(&res)?;
    let rounded: Vec<Rounded<S>> = measures
        .par_iter()
        .map(|m| rounding.push_forward(m))
        .collect();
    let mut flagged = Vec::new();
    for k in 0..rounding.anchors.len() {
        let series: Vec<S> = rounded.iter().map(|r| r.weights[k].clone()).collect();
        if !rule.detect(&series)?.converged {
            flagged.push(k);
        }
    }
    let last = rounded.last().expect("schedules are nonempty").weights.clone();
    let measure = DiscreteMeasure::from_weights(last, &S::tol(tol.mass))?;
    Ok(ExternalPushdown {
        anchors: rounding.anchors.clone(),
        measure,
        flagged,
        resolutions: res,
        rounded,
    })
}

/// Per-member limits of `ν_N(A)`; the result is a charge on `algebra`.
pub fn internal_pushdown<S: Scalar>(
    family: &dyn MeasureFamily<S>,
    algebra: &SetAlgebra,
    realizer: &dyn SetRealizer<S>,
    schedule: &Schedule,
    rule: &LimitRule,
    tol: &Tolerances,
) -> Result<ChargeTable<S>> {
    charge_from_limits(family, algebra, realizer, schedule, rule, &S::tol(tol.mass))
}

/// W₁ and TV between the family and its external push-down.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushdownAudit<S> {
    pub resolutions: Vec<usize>,
    pub w1_series: Vec<S>,
    pub tv_series: Vec<S>,
    /// Largest rounding displacement per resolution.
    pub scale_series: Vec<S>,
    pub escaping_series: Vec<S>,
    /// Fitted constant in `w1 ≈ C · scale` over the window.
    pub fitted_c: f64,
    /// W₁ decays like the rounding scale, which itself decays.
    pub infinitesimal: bool,
    /// Escaping mass is within the limit tolerance of 0 over the window.
    pub escaping_vanishes: bool,
    pub pushdown_converged: bool,
}

/// Compare `ν_N` with the external push-down at every resolution.
///
/// The verdict `infinitesimal` holds when either every W₁ in the window is
/// at solver precision, or the rounding scale at least halves across the
/// window and every W₁ in it is at most `2 C scale(N)`, where `C` is the
/// log-scale least-squares fit of `w1 = C scale` over the window.
pub fn pd_wasserstein_audit<S: Scalar, M: CoordMetric<S>>(
    family: &dyn MeasureFamily<S>,
    rounding: &RoundingMap<S, M>,
    schedule: &Schedule,
    rule: &LimitRule,
    tol: &Tolerances,
) -> Result<PushdownAudit<S>> {
    let pd = external_pushdown(family, rounding, schedule, rule, tol)?;
    let target = pd.located()?;
    let measures = family.sample(&pd.resolutions)?;
    let ttol = TransportTol {
        lp: S::tol(tol.lp),
        mass: S::tol(tol.mass),
    };
    let dists = measures
        .par_iter()
        .map(|m| located_distances(m, &target, &rounding.metric, &ttol))
        .collect::<Result<Vec<_>>>()?;
    let w1_series: Vec<S> = dists.iter().map(|d| d.w1.clone()).collect();
    let tv_series: Vec<S> = dists.into_iter().map(|d| d.tv).collect();
    let scale_series: Vec<S> = pd.rounded.iter().map(|r| r.scale.clone()).collect();
    let escaping_series: Vec<S> = pd.rounded.iter().map(|r| r.escaping.clone()).collect();

    let w1_win = rule.window_of(&w1_series);
    let sc_win = rule.window_of(&scale_series);
    let ratios: Vec<f64> = w1_win
        .iter()
        .zip(sc_win)
        .filter(|(w, s)| w.to_real() > tol.lp && s.to_real() > 0.0)
        .map(|(w, s)| (w.to_real() / s.to_real()).ln())
        .collect();
    let fitted_c = if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().sum::<f64>() / ratios.len() as f64).exp()
    };
    let negligible = w1_win.iter().all(|w| w.to_real() <= tol.lp);
    let decays = sc_win.last().expect("nonempty").to_real() * 2.0 <= sc_win[0].to_real();
    let dominated = w1_win
        .iter()
        .zip(sc_win)
        .all(|(w, s)| w.to_real() <= 2.0 * fitted_c * s.to_real() + tol.lp);
    let escaping_vanishes = rule.converges_to(&escaping_series, &S::zero());
    Ok(PushdownAudit {
        resolutions: pd.resolutions.clone(),
        w1_series,
        tv_series,
        scale_series,
        escaping_series,
        fitted_c,
        infinitesimal: negligible || (decays && dominated),
        escaping_vanishes,
        pushdown_converged: pd.converged(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberComparison<S> {
    pub member: Member,
    pub ipd: S,
    pub pd: S,
}

/// Internal versus external push-down on the admitted members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpdPdReport<S> {
    pub admitted: Vec<MemberComparison<S>>,
    /// Members with an anchor or a final-resolution atom on the boundary,
    /// or with no known boundary.
    pub non_continuity: Vec<Member>,
    /// Members with a non-convergent mass sequence or touching a flagged anchor.
    pub flagged: Vec<Member>,
    pub max_discrepancy: f64,
    pub pass: bool,
}

/// Compare `ipd(A)` with `pd(A)` on every member `A` whose realized
/// boundary stays `tol.boundary` away from the anchors and from the atoms of
/// the finest `ν_N`.
#[allow(clippy::too_many_arguments)]
pub fn ipd_vs_pd_audit<S: Scalar, M: CoordMetric<S>>(
    family: &dyn MeasureFamily<S>,
    rounding: &RoundingMap<S, M>,
    algebra: &SetAlgebra,
    realizer: &dyn SetRealizer<S>,
    schedule: &Schedule,
    rule: &LimitRule,
    tol: &Tolerances,
) -> Result<IpdPdReport<S>> {
    let ipd = internal_pushdown(family, algebra, realizer, schedule, rule, tol)?;
    let pd = external_pushdown(family, rounding, schedule, rule, tol)?;
    let last_n = schedule.last();
    let finest = family.at(last_n)?;
    let near = S::from_real(tol.boundary);
    let on_boundary = |boundary: &[Vec<S>], x: &[S]| {
        boundary
            .iter()
            .any(|b| rounding.metric.distance(b, x) <= near)
    };

    let mut report = IpdPdReport {
        admitted: Vec::new(),
        non_continuity: Vec::new(),
        flagged: Vec::new(),
        max_discrepancy: 0.0,
        pass: true,
    };
    for (i, member) in algebra.members().iter().enumerate() {
        let touches_flagged = pd
            .flagged
            .iter()
            .any(|&k| realizer.contains(member, last_n, &pd.anchors[k]));
        if ipd.is_flagged(member) || touches_flagged {
            report.flagged.push(member.clone());
            continue;
        }
        let admitted = match realizer.boundary(member) {
            None => false,
            Some(bd) => {
                !pd.anchors.iter().any(|a| on_boundary(&bd, a))
                    && !finest
                        .points()
                        .iter()
                        .zip(finest.weights())
                        .any(|(p, w)| !w.is_zero() && on_boundary(&bd, p))
            }
        };
        if !admitted {
            report.non_continuity.push(member.clone());
            continue;
        }
        let pd_mass = pd.mass_where(|a| realizer.contains(member, last_n, a));
        let ipd_val = ipd.values()[i].clone();
        let gap = (ipd_val.clone() - pd_mass.clone()).abs().to_real();
        report.max_discrepancy = report.max_discrepancy.max(gap);
        report.admitted.push(MemberComparison {
            member: member.clone(),
            ipd: ipd_val,
            pd: pd_mass,
        });
    }
    report.pass = report.max_discrepancy <= tol.limit;
    Ok(report)
}

/// One level-set check in [`integral_consistency_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetCheck {
    pub eps: f64,
    /// `∫ f dν_N` at the finest resolution.
    pub integral: f64,
    /// `Σ f(x_i) ipd(F_i)` over the level sets `F_i = f⁻¹[lo + iε, lo + (i+1)ε)`.
    pub simple_sum: f64,
    pub gap: f64,
    pub bound: f64,
    /// Level sets whose mass sequence did not settle.
    pub flagged_levels: usize,
    pub pass: bool,
}

/// Compare `∫ f dν_N` at the finest resolution with the integral of the
/// level-set simple function against the internal push-down, for each `ε`.
pub fn integral_consistency_check<S: Scalar>(
    family: &dyn MeasureFamily<S>,
    f: &(dyn Fn(&[S]) -> S + Sync),
    epsilons: &[f64],
    schedule: &Schedule,
    rule: &LimitRule,
    tol: &Tolerances,
) -> Result<Vec<LevelSetCheck>> {
    let res = schedule.resolutions();
    let measures = family.sample(res)?;
    let values: Vec<Vec<f64>> = measures
        .iter()
        .map(|m| m.points().iter().map(|p| f(p).to_real()).collect())
        .collect();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("integrand is unbounded on the sampled support"));
    }
    let lo = values.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let finest = measures.last().expect("schedules are nonempty");
    let integral = finest.integrate(f)?.to_real();

    let mut out = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::domain("level width must be positive"));
        }
        let level = |v: f64| ((v - lo) / eps).floor() as i64;
        let mut levels: Vec<i64> = values.iter().flatten().map(|&v| level(v)).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut simple_sum = 0.0;
        let mut flagged_levels = 0;
        for &l in &levels {
            let series: Vec<S> = measures
                .iter()
                .zip(&values)
                .map(|(m, vs)| {
                    m.weights()
                        .iter()
                        .zip(vs)
                        .filter(|(_, &v)| level(v) == l)
                        .fold(S::zero(), |acc, (w, _)| acc + w.clone())
                })
                .collect();
            let lim = rule.detect(&series)?;
            if !lim.converged {
                flagged_levels += 1;
            }
            // representative: an atom of the level set, finest resolution first
            let rep = values
                .iter()
                .rev()
                .flat_map(|vs| vs.iter())
                .find(|&&v| level(v) == l)
                .copied()
                .expect("level comes from a sampled value");
            simple_sum += rep * lim.value.to_real();
        }
        let gap = (integral - simple_sum).abs();
        let bound = 2.0 * eps + tol.limit;
        out.push(LevelSetCheck {
            eps,
            integral,
            simple_sum,
            gap,
            bound,
            flagged_levels,
            pass: gap <= bound,
        });
    }
    Ok(out)
}
