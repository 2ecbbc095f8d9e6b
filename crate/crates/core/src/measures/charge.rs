//! Finitely additive set functions on finite algebras, and their
//! construction as per-set limits of a measure family.

use rayon::prelude::*;
use serde::Serialize;

use super::algebra::{Member, SetAlgebra};
use super::located::{LocatedMeasure, MeasureFamily};
use crate::config::{LimitRule, Schedule};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-member outcome of limit detection.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MemberStatus<S> {
    Converged,
    Oscillating { gap: S },
}

/// Values of a charge on every member of a finite algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTable<S> {
    algebra: SetAlgebra,
    values: Vec<S>,
    status: Vec<MemberStatus<S>>,
}

/// Realizes algebra members as sets of the ambient space at each resolution.
pub trait SetRealizer<S>: Send + Sync {
    /// Whether `point` lies in the realization of `member` at resolution `n`.
    fn contains(&self, member: &Member, n: usize, point: &[S]) -> bool;

    /// Topological boundary of the realized member, when known.
    fn boundary(&self, _member: &Member) -> Option<Vec<Vec<S>>> {
        None
    }

    /// Mass `ν(A)` of the realized member.
    fn mass(&self, member: &Member, n: usize, measure: &LocatedMeasure<S>) -> S
    where
        S: Scalar,
    {
        measure.mass_where(|p| self.contains(member, n, p))
    }
}

/// An interval of the real line with chosen endpoint inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<S: Scalar> Interval<S> {
    pub fn closed(lo: S, hi: S) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: S, hi: S) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// `(lo, hi]`
    pub fn left_open(lo: S, hi: S) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: true }
    }

    /// `[lo, hi)`
    pub fn right_open(lo: S, hi: S) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    pub fn point(x: S) -> Self {
        Self::closed(x.clone(), x)
    }

    pub fn contains(&self, x: &S) -> bool {
        let above = if self.lo_closed { *x >= self.lo } else { *x > self.lo };
        let below = if self.hi_closed { *x <= self.hi } else { *x < self.hi };
        above && below
    }

    /// Contains `(x - h, x)` for all small `h`.
    fn covers_left_of(&self, x: &S) -> bool {
        self.lo < *x && *x <= self.hi
    }

    /// Contains `(x, x + h)` for all small `h`.
    fn covers_right_of(&self, x: &S) -> bool {
        self.lo <= *x && *x < self.hi
    }
}

/// Universe elements are disjoint intervals of the line; a member is
/// realized as the union of its intervals at every resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCells<S> {
    cells: Vec<Interval<S>>,
}

impl<S: Scalar> IntervalCells<S> {
    pub fn new(cells: Vec<Interval<S>>) -> Result<Self> {
        for (i, a) in cells.iter().enumerate() {
            if a.lo > a.hi {
                return Err(Error::domain(format!("cell {i} has lo > hi")));
            }
            for (j, b) in cells.iter().enumerate().skip(i + 1) {
                if intervals_overlap(a, b) {
                    return Err(Error::invariant(
                        "cells",
                        format!("cells {i} and {j} overlap"),
                    ));
                }
            }
        }
        Ok(IntervalCells { cells })
    }

    pub fn cells(&self) -> &[Interval<S>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn intervals_overlap<S: Scalar>(a: &Interval<S>, b: &Interval<S>) -> bool {
    // the later-starting interval's first point decides
    let (first, second) = if a.lo <= b.lo { (a, b) } else { (b, a) };
    if second.lo < first.hi {
        return !(second.lo == second.hi && !second.lo_closed);
    }
    second.lo == first.hi && second.lo_closed && first.hi_closed
}

impl<S: Scalar> SetRealizer<S> for IntervalCells<S> {
    fn contains(&self, member: &Member, _n: usize, point: &[S]) -> bool {
        member
            .iter()
            .any(|&k| self.cells.get(k).is_some_and(|c| c.contains(&point[0])))
    }

    fn boundary(&self, member: &Member) -> Option<Vec<Vec<S>>> {
        let cells: Vec<&Interval<S>> = member.iter().filter_map(|&k| self.cells.get(k)).collect();
        let mut out: Vec<Vec<S>> = Vec::new();
        for e in cells.iter().flat_map(|c| [&c.lo, &c.hi]) {
            let inside = cells.iter().any(|c| c.contains(e));
            let left = cells.iter().any(|c| c.covers_left_of(e));
            let right = cells.iter().any(|c| c.covers_right_of(e));
            let p = vec![e.clone()];
            if !(inside && left && right) && !out.contains(&p) {
                out.push(p);
            }
        }
        Some(out)
    }
}

/// Realizer given by a closure `(member, n, point) -> bool`.
pub struct FnRealizer<F>(pub F);

impl<S, F> SetRealizer<S> for FnRealizer<F>
where
    F: Fn(&Member, usize, &[S]) -> bool + Send + Sync,
{
    fn contains(&self, member: &Member, n: usize, point: &[S]) -> bool {
        (self.0)(member, n, point)
    }
}

impl<S: Scalar> ChargeTable<S> {
    /// Validated table: `value(∅) = 0`, `value(universe) = 1`, values in
    /// `[0, 1]`, finitely additive within `tol`.
    pub fn new(algebra: SetAlgebra, values: Vec<S>, tol: &S) -> Result<Self> {
        let status = vec![MemberStatus::Converged; values.len()];
        Self::with_status(algebra, values, status, tol)
    }

    /// Like [`ChargeTable::new`]; checks skip members flagged oscillating.
    pub fn with_status(
        algebra: SetAlgebra,
        values: Vec<S>,
        status: Vec<MemberStatus<S>>,
        tol: &S,
    ) -> Result<Self> {
        if values.len() != algebra.len() || status.len() != algebra.len() {
            return Err(Error::structural(format!(
                "{} values and {} flags for an algebra of {} members",
                values.len(),
                status.len(),
                algebra.len()
            )));
        }
        let table = ChargeTable { algebra, values, status };
        let ok = |i: usize| matches!(table.status[i], MemberStatus::Converged);
        for (i, v) in table.values.iter().enumerate() {
            if ok(i) && (*v < -tol.clone() || *v > S::one() + tol.clone()) {
                return Err(Error::invariant(
                    "charge",
                    format!("value {v} of member {:?} is outside [0, 1]", table.algebra.members()[i]),
                ));
            }
        }
        let empty = table.algebra.index_of(&Member::new()).expect("∅ is a member");
        let full = table.algebra.index_of(&table.algebra.universe()).expect("universe is a member");
        if ok(empty) && table.values[empty].abs() > *tol {
            return Err(Error::invariant("charge", "value of ∅ is not 0"));
        }
        if ok(full) && (table.values[full].clone() - S::one()).abs() > *tol {
            return Err(Error::invariant(
                "charge",
                format!("value of the universe is {}, not 1", table.values[full]),
            ));
        }
        if let Some((a, b)) = table.additivity_violations(tol).into_iter().next() {
            return Err(Error::invariant(
                "charge",
                format!("not finitely additive on disjoint members {a:?} and {b:?}"),
            ));
        }
        Ok(table)
    }

    pub fn algebra(&self) -> &SetAlgebra {
        &self.algebra
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn status(&self) -> &[MemberStatus<S>] {
        &self.status
    }

    pub fn value(&self, member: &Member) -> Option<&S> {
        self.algebra.index_of(member).map(|i| &self.values[i])
    }

    pub fn is_flagged(&self, member: &Member) -> bool {
        self.algebra
            .index_of(member)
            .is_some_and(|i| !matches!(self.status[i], MemberStatus::Converged))
    }

    /// Members whose limit was not detected.
    pub fn flagged(&self) -> Vec<&Member> {
        self.algebra
            .members()
            .iter()
            .zip(&self.status)
            .filter(|(_, s)| !matches!(s, MemberStatus::Converged))
            .map(|(m, _)| m)
            .collect()
    }

    /// Disjoint unflagged pairs `(A, B)` with `|value(A ∪ B) - value(A) - value(B)| > tol`.
    pub fn additivity_violations(&self, tol: &S) -> Vec<(Member, Member)> {
        let members = self.algebra.members();
        let mut out = Vec::new();
        for (i, a) in members.iter().enumerate() {
            if self.is_flagged(a) {
                continue;
            }
            for (j, b) in members.iter().enumerate().skip(i + 1) {
                if self.is_flagged(b) || !a.is_disjoint(b) {
                    continue;
                }
                let u: Member = a.union(b).copied().collect();
                if self.is_flagged(&u) {
                    continue;
                }
                let vu = self.value(&u).expect("algebra is closed").clone();
                let diff = vu - self.values[i].clone() - self.values[j].clone();
                if diff.abs() > *tol {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }
}

/// Charge obtained as the per-member limit of `ν_N(A)` along `schedule`.
///
/// Members whose mass sequence fails `rule` are kept with their last value
/// and flagged [`MemberStatus::Oscillating`]; invariant checks skip them.
pub fn charge_from_limits<S: Scalar>(
    family: &dyn MeasureFamily<S>,
    algebra: &SetAlgebra,
    realizer: &dyn SetRealizer<S>,
    schedule: &Schedule,
    rule: &LimitRule,
    tol_mass: &S,
) -> Result<ChargeTable<S>> {
    let series = member_series(family, algebra, realizer, schedule)?;
    let mut values = Vec::with_capacity(series.len());
    let mut status = Vec::with_capacity(series.len());
    for s in &series {
        let lim = rule.detect(s)?;
        values.push(lim.value);
        status.push(if lim.converged {
            MemberStatus::Converged
        } else {
            MemberStatus::Oscillating { gap: lim.gap }
        });
    }
    ChargeTable::with_status(algebra.clone(), values, status, tol_mass)
}

/// `ν_N(A)` for every member `A` (outer index) and resolution (inner index).
pub fn member_series<S: Scalar>(
    family: &dyn MeasureFamily<S>,
    algebra: &SetAlgebra,
    realizer: &dyn SetRealizer<S>,
    schedule: &Schedule,
) -> Result<Vec<Vec<S>>> {
    let res = schedule.resolutions();
    let measures = family.sample(res)?;
    Ok(algebra
        .members()
        .par_iter()
        .map(|m| {
            res.iter()
                .zip(&measures)
                .map(|(&n, nu)| realizer.mass(m, n, nu))
                .collect()
        })
        .collect())
}

/// Evidence that a charge is not countably additive along a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport<S> {
    pub witness: bool,
    pub union_value: S,
    pub chain_sup: S,
    pub gap: S,
}

/// Compare the charge of `union` with the supremum over an increasing
/// `chain` of members whose union it stands for.
///
/// A countably additive measure is continuous from below, so a gap of at
/// least `threshold` certifies that the charge is not countably additive.
pub fn ca_failure_witness<S: Scalar>(
    charge: &ChargeTable<S>,
    chain: &[Member],
    union: &Member,
    threshold: &S,
) -> Result<WitnessReport<S>> {
    if chain.is_empty() {
        return Err(Error::domain("empty chain"));
    }
    for w in chain.windows(2) {
        if !w[0].is_subset(&w[1]) {
            return Err(Error::domain("chain is not increasing under inclusion"));
        }
    }
    if !chain.last().expect("nonempty").is_subset(union) {
        return Err(Error::domain("chain is not contained in the given union"));
    }
    let lookup = |m: &Member| -> Result<S> {
        if charge.is_flagged(m) {
            return Err(Error::domain(format!("member {m:?} is flagged oscillating")));
        }
        charge
            .value(m)
            .cloned()
            .ok_or_else(|| Error::domain(format!("{m:?} is not a member of the algebra")))
    };
    let mut chain_sup = S::zero();
    for m in chain {
        chain_sup = S::max_of(chain_sup, lookup(m)?);
    }
    let union_value = lookup(union)?;
    let gap = union_value.clone() - chain_sup.clone();
    Ok(WitnessReport {
        witness: gap >= *threshold,
        union_value,
        chain_sup,
        gap,
    })
}
