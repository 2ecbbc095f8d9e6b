use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{Member, MeasureFamily};
use crate::scalar::Scalar;

/// Subsequence `n_i` and disjoint finite sets `B_i` with
/// `P_{n_i}(B_i) > hi` and `P_{n_i}(B_1 ∪ … ∪ B_{i-1}) < lo`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationWitness<S> {
    pub indices: Vec<usize>,
    pub sets: Vec<Member>,
    /// `P_{n_i}(B_i)`.
    pub masses: Vec<S>,
    /// `P_{n_i}(B_1 ∪ … ∪ B_{i-1})`, zero for `i = 1`.
    pub prior_masses: Vec<S>,
    pub hi: S,
    pub lo: S,
}

impl<S> OscillationWitness<S> {
    pub fn rounds(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionReason {
    /// No index up to the budget puts less than `lo` on the earlier sets.
    NoEscape,
    /// Escaping indices exist but none leaves more than `hi` off the earlier sets.
    NoFreshMass,
    /// The earlier sets do not have charge zero, so no escape is expected.
    NotChargeZero,
}

/// Where the extraction loop stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exhaustion {
    /// 1-based round that could not be completed.
    pub step: usize,
    /// Largest sequence index examined.
    pub searched_up_to: usize,
    pub reason: ExhaustionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationOutcome<S> {
    /// Rounds completed so far; a full witness when `exhausted` is `None`.
    pub witness: OscillationWitness<S>,
    pub exhausted: Option<Exhaustion>,
}

impl<S> OscillationOutcome<S> {
    pub fn complete(&self) -> bool {
        self.exhausted.is_none()
    }
}

pub struct OscillationConfig<'a, S> {
    pub rounds: usize,
    /// Largest sequence index searched; defaults to `10 * rounds`.
    pub budget: Option<usize>,
    pub hi: S,
    pub lo: S,
    /// Whether the limiting charge vanishes on a finite set; when given,
    /// the loop stops as soon as the union so far is not charge-zero.
    pub charge_zero: Option<&'a dyn Fn(&Member) -> bool>,
}

impl<S: Scalar> OscillationConfig<'_, S> {
    pub fn new(rounds: usize) -> Self {
        OscillationConfig {
            rounds,
            budget: None,
            hi: S::from_ratio(3, 4),
            lo: S::from_ratio(1, 4),
            charge_zero: None,
        }
    }
}

/// Masses of `P_n` on the points of `Y`.
fn masses_on_y<S: Scalar>(
    seq: &dyn MeasureFamily<S>,
    locate: &dyn Fn(&[S]) -> Option<usize>,
    n: usize,
) -> Result<BTreeMap<usize, S>> {
    let m = seq.at(n)?;
    let mut out: BTreeMap<usize, S> = BTreeMap::new();
    for (p, w) in m.points().iter().zip(m.weights()) {
        if w.is_zero() {
            continue;
        }
        let y = locate(p).ok_or_else(|| {
            Error::domain(format!("P_{n} puts mass {w} outside the countable support"))
        })?;
        let e = out.entry(y).or_insert_with(S::zero);
        *e = e.clone() + w.clone();
    }
    Ok(out)
}

fn mass_of<S: Scalar>(masses: &BTreeMap<usize, S>, set: &Member) -> S {
    set.iter()
        .filter_map(|y| masses.get(y))
        .fold(S::zero(), |acc, w| acc + w.clone())
}

/// Smallest finite set disjoint from `used` with mass above `hi`: points by
/// decreasing mass, lowest index on ties.
fn fresh_set<S: Scalar>(masses: &BTreeMap<usize, S>, used: &Member, hi: &S) -> Option<(Member, S)> {
    let mut cand: Vec<(usize, &S)> = masses
        .iter()
        .filter(|(y, w)| !used.contains(y) && !w.is_zero())
        .map(|(y, w)| (*y, w))
        .collect();
    cand.sort_by(|a, b| b.1.partial_cmp(a.1).expect("ordered").then(a.0.cmp(&b.0)));
    let mut set = Member::new();
    let mut total = S::zero();
    for (y, w) in cand {
        set.insert(y);
        total = total + w.clone();
        if total > *hi {
            return Some((set, total));
        }
    }
    None
}

/// Extract an oscillating subsequence of `seq`, whose members live on a
/// countable set `Y` indexed through `locate`.
///
/// Round 1 takes `n_1 = 1`. Round `i` searches `n > n_{i-1}` up to the budget
/// for an index with `P_n(B_1 ∪ … ∪ B_{i-1}) < lo` and a fresh finite set of
/// mass above `hi`.
pub fn oscillation_extract<S: Scalar>(
    seq: &dyn MeasureFamily<S>,
    locate: &dyn Fn(&[S]) -> Option<usize>,
    cfg: &OscillationConfig<'_, S>,
) -> Result<OscillationOutcome<S>> {
    if cfg.rounds == 0 {
        return Err(Error::domain("oscillation extraction needs at least one round"));
    }
    if !(S::zero() <= cfg.lo && cfg.lo < cfg.hi && cfg.hi < S::one()) {
        return Err(Error::domain("thresholds must satisfy 0 <= lo < hi < 1"));
    }
    let budget = cfg.budget.unwrap_or(10 * cfg.rounds);
    let mut w = OscillationWitness {
        indices: Vec::new(),
        sets: Vec::new(),
        masses: Vec::new(),
        prior_masses: Vec::new(),
        hi: cfg.hi.clone(),
        lo: cfg.lo.clone(),
    };
    let mut used = Member::new();
    let mut n = 0usize;
    for step in 1..=cfg.rounds {
        if step > 1 {
            if let Some(pred) = cfg.charge_zero {
                if !pred(&used) {
                    return Ok(OscillationOutcome {
                        witness: w,
                        exhausted: Some(Exhaustion {
                            step,
                            searched_up_to: n,
                            reason: ExhaustionReason::NotChargeZero,
                        }),
                    });
                }
            }
        }
        let mut escaped = false;
        let mut found = None;
        while n < budget {
            n += 1;
            let masses = masses_on_y(seq, locate, n)?;
            let prior = mass_of(&masses, &used);
            if step > 1 && prior >= cfg.lo {
                continue;
            }
            escaped = true;
            if let Some((set, mass)) = fresh_set(&masses, &used, &cfg.hi) {
                found = Some((set, mass, prior));
                break;
            }
        }
        match found {
            Some((set, mass, prior)) => {
                used.extend(set.iter().copied());
                w.indices.push(n);
                w.sets.push(set);
                w.masses.push(mass);
                w.prior_masses.push(prior);
            }
            None => {
                return Ok(OscillationOutcome {
                    witness: w,
                    exhausted: Some(Exhaustion {
                        step,
                        searched_up_to: n,
                        reason: if escaped {
                            ExhaustionReason::NoFreshMass
                        } else {
                            ExhaustionReason::NoEscape
                        },
                    }),
                });
            }
        }
    }
    Ok(OscillationOutcome {
        witness: w,
        exhausted: None,
    })
}

/// Recheck every witness condition against `seq` from scratch.
pub fn verify_witness<S: Scalar>(
    w: &OscillationWitness<S>,
    seq: &dyn MeasureFamily<S>,
    locate: &dyn Fn(&[S]) -> Option<usize>,
) -> Result<bool> {
    if w.indices.len() != w.sets.len() || w.indices.windows(2).any(|p| p[1] <= p[0]) {
        return Ok(false);
    }
    let mut prior = Member::new();
    for (i, (&n, b)) in w.indices.iter().zip(&w.sets).enumerate() {
        let masses = masses_on_y(seq, locate, n)?;
        if !b.is_disjoint(&prior) || mass_of(&masses, b) <= w.hi {
            return Ok(false);
        }
        if i > 0 && mass_of(&masses, &prior) >= w.lo {
            return Ok(false);
        }
        prior.extend(b.iter().copied());
    }
    Ok(true)
}

/// `P_{n_i}(A)` for `A` the union of the even-numbered `B_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionVerdict<S> {
    pub set: Member,
    pub series: Vec<S>,
    /// Smallest value at even `i`.
    pub even_min: S,
    /// Largest value at odd `i`.
    pub odd_max: S,
    /// `even_min - odd_max`.
    pub gap: S,
}

/// Evaluate the union of the even-numbered witness sets along the
/// subsequence; requires at least four rounds.
pub fn union_set_verdict<S: Scalar>(
    w: &OscillationWitness<S>,
    seq: &dyn MeasureFamily<S>,
    locate: &dyn Fn(&[S]) -> Option<usize>,
) -> Result<UnionVerdict<S>> {
    if w.rounds() < 4 {
        return Err(Error::domain(format!(
            "union verdict needs a witness with at least 4 rounds, got {}",
            w.rounds()
        )));
    }
    let set: Member = w
        .sets
        .iter()
        .skip(1)
        .step_by(2)
        .flat_map(|b| b.iter().copied())
        .collect();
    let series = w
        .indices
        .iter()
        .map(|&n| Ok(mass_of(&masses_on_y(seq, locate, n)?, &set)))
        .collect::<Result<Vec<S>>>()?;
    let even_min = series
        .iter()
        .skip(1)
        .step_by(2)
        .cloned()
        .reduce(S::min_of)
        .expect("at least two even rounds");
    let odd_max = series
        .iter()
        .step_by(2)
        .cloned()
        .reduce(S::max_of)
        .expect("at least two odd rounds");
    Ok(UnionVerdict {
        set,
        gap: even_min.clone() - odd_max.clone(),
        series,
        even_min,
        odd_max,
    })
}
