//! Built-in experiments. Every number is recomputed through the core
//! operations.

use charges_core::config::{LimitRule, Schedule, Tolerances};
use charges_core::convergence::{
    oscillation_extract, portmanteau_check, union_set_verdict, verify_witness,
    weak_convergence_test, OscillationConfig, OscillationOutcome, Rejection, TestFunction,
    TestSet, UnionVerdict,
};
use charges_core::measures::{Family, LocatedMeasure};
use charges_core::metric::Manhattan;
use charges_core::pushdown::{pd_wasserstein_audit, RoundingMap};
use charges_core::{Rational, Result, Scalar};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::io::{num, Table};

fn exact(r: &Rational) -> String {
    r.to_string()
}

fn ser_exact<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&exact(r))
}

fn ser_exact_vec<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(exact))
}

pub const YES: &str = "infinitesimal-analog: yes";
pub const NO: &str = "infinitesimal-analog: no";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinitesimalRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(serialize_with = "ser_exact")]
    pub w1: Rational,
    #[serde(serialize_with = "ser_exact")]
    pub tv: Rational,
    /// Largest rounding displacement at this resolution.
    #[serde(serialize_with = "ser_exact")]
    pub scale: Rational,
    /// `w1 <= scale`.
    pub infinitesimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinitesimalDemo {
    pub rows: Vec<InfinitesimalRow>,
}

impl InfinitesimalDemo {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["N", "w1", "tv", "verdict"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                num(r.w1.to_real()),
                num(r.tv.to_real()),
                (if r.infinitesimal { YES } else { NO }).to_string(),
            ]);
        }
        t
    }

    pub fn summary(&self) -> String {
        let all = self.rows.iter().all(|r| r.infinitesimal);
        format!(
            "{} resolutions, {}",
            self.rows.len(),
            if all { YES } else { NO }
        )
    }
}

/// Unit mass at `1/(2N)` pushed down to the anchors `{0, 1}`, in exact arithmetic.
pub fn infinitesimal(
    schedule: &Schedule,
    rule: &LimitRule,
    tol: &Tolerances,
) -> Result<InfinitesimalDemo> {
    let family: Family<Rational> = Family::PointAt("1/(2N)".parse()?);
    let anchors = vec![vec![Rational::zero()], vec![Rational::one()]];
    let rounding = RoundingMap::new(anchors, Manhattan)?;
    let audit = pd_wasserstein_audit(&family, &rounding, schedule, rule, tol)?;
    let rows = audit
        .resolutions
        .iter()
        .zip(audit.w1_series)
        .zip(audit.tv_series)
        .zip(audit.scale_series)
        .map(|(((&n, w1), tv), scale)| InfinitesimalRow {
            n,
            infinitesimal: w1 <= scale,
            w1,
            tv,
            scale,
        })
        .collect();
    Ok(InfinitesimalDemo { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EzRow {
    pub n: usize,
    /// `∫ dist(·, 0) dP_n`.
    #[serde(serialize_with = "ser_exact")]
    pub integral: Rational,
    /// `∫ sin(1/x) dP_n`.
    pub sine: f64,
    /// `P_n(A)` for `A = {1/(2k)}`.
    #[serde(serialize_with = "ser_exact")]
    pub p_a: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EzUnion {
    pub indices: Vec<usize>,
    #[serde(serialize_with = "ser_exact_vec")]
    pub series: Vec<Rational>,
    #[serde(serialize_with = "ser_exact")]
    pub gap: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EzCounter {
    pub rows: Vec<EzRow>,
    pub accepted: Vec<String>,
    pub rejected: Vec<Rejection>,
    /// Whether `A` is a continuity set of `δ_0`.
    pub continuity: bool,
    /// Window verdict for `P_n(A) → δ_0(A)`.
    pub p_a_converges: Option<bool>,
    pub witness_rounds: usize,
    pub witness_valid: bool,
    pub union: Option<EzUnion>,
}

impl EzCounter {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["n", "integral_dist0", "sin_inv_x", "p_a"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                num(r.integral.to_real()),
                num(r.sine),
                exact(&r.p_a),
            ]);
        }
        t
    }

    pub fn sine_rejected(&self) -> bool {
        self.rejected.iter().any(|r| r.name == SINE)
    }

    pub fn summary(&self) -> String {
        let gap = self
            .union
            .as_ref()
            .map_or_else(|| "none".to_string(), |u| exact(&u.gap));
        format!(
            "{SINE} {} at the Lipschitz gate; P_n(A) converges: {}; oscillation gap {gap} over {} rounds",
            if self.sine_rejected() { "rejected" } else { "accepted" },
            match self.p_a_converges {
                Some(true) => "yes",
                Some(false) => "no",
                None => "not a continuity set",
            },
            self.witness_rounds,
        )
    }
}

const SINE: &str = "sin(1/x)";

/// `1/x` when it is a positive integer.
fn reciprocal_index(x: &Rational) -> Option<usize> {
    if *x <= Rational::zero() {
        return None;
    }
    let r = x.recip();
    if r.is_integer() {
        r.to_integer().to_usize()
    } else {
        None
    }
}

/// `P_n = δ_{1/n}` against `δ_0`: a Lipschitz integral, the sampled
/// `sin(1/x)`, the mass of `A = {1/(2k)}` and an oscillation witness.
pub fn ezcounter(schedule: &Schedule, rule: &LimitRule, rounds: usize) -> Result<EzCounter> {
    let family: Family<Rational> = Family::PointAt("1/N".parse()?);
    let origin = vec![Rational::zero()];
    let target = LocatedMeasure::point_mass(origin.clone());

    let dist = TestFunction::distance_to(origin, Manhattan);
    let sine = TestFunction::new(SINE, Rational::one(), |x: &[Rational]| {
        if x[0].is_zero() {
            Rational::zero()
        } else {
            Rational::from_real((1.0 / x[0].to_real()).sin())
        }
    });
    let functions = vec![dist, sine.clone()];
    let report = weak_convergence_test(
        &family,
        &target,
        &functions,
        schedule,
        rule,
        &Manhattan,
        &Rational::zero(),
    )?;
    let dist_row = report
        .accepted
        .iter()
        .position(|&k| k == 0)
        .map(|i| report.series[i].clone())
        .ok_or_else(|| charges_core::Error::Domain("distance function was rejected".into()))?;

    let last = schedule.last();
    let boundary: Vec<Vec<Rational>> = (1..=last / 2)
        .map(|k| vec![Rational::from_ratio(1, 2 * k as i64)])
        .collect();
    let a = TestSet::new(
        "A",
        |_, x: &[Rational]| reciprocal_index(&x[0]).is_some_and(|m| m % 2 == 0),
        Some(boundary),
    );
    let pm = portmanteau_check(
        &family,
        &target,
        std::slice::from_ref(&a),
        schedule,
        rule,
        &Manhattan,
        &Rational::zero(),
    )?;
    let verdict = &pm.sets[0];

    let rows = schedule
        .resolutions()
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let m = charges_core::convergence::Integrator::integrate(
                &LocatedMeasure::point_mass(vec![Rational::from_ratio(1, n as i64)]),
                &sine,
            )?;
            Ok(EzRow {
                n,
                integral: dist_row[i].clone(),
                sine: m.to_real(),
                p_a: verdict.series[i].clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let locate = |p: &[Rational]| reciprocal_index(&p[0]);
    let outcome: OscillationOutcome<Rational> =
        oscillation_extract(&family, &locate, &OscillationConfig::new(rounds))?;
    let witness_valid = verify_witness(&outcome.witness, &family, &locate)?;
    let union = if outcome.witness.rounds() >= 4 {
        let u: UnionVerdict<Rational> = union_set_verdict(&outcome.witness, &family, &locate)?;
        Some(EzUnion {
            indices: outcome.witness.indices.clone(),
            series: u.series,
            gap: u.gap,
        })
    } else {
        None
    };

    Ok(EzCounter {
        rows,
        accepted: report
            .accepted
            .iter()
            .map(|&k| functions[k].name.clone())
            .collect(),
        rejected: report.rejected,
        continuity: verdict.continuity,
        p_a_converges: verdict.converges,
        witness_rounds: outcome.witness.rounds(),
        witness_valid,
        union,
    })
}
