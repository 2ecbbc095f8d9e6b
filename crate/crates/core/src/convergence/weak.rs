use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{LimitRule, Schedule};
use crate::error::{Error, Result};
use crate::lipschitz::verify_lipschitz;
use crate::measures::{ChargeTable, LocatedMeasure, MeasureFamily};
use crate::metric::{CoordMetric, FiniteMetricSpace};
use crate::scalar::Scalar;

type Func<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
type Membership<S> = Arc<dyn Fn(usize, &[S]) -> bool + Send + Sync>;

/// A bounded test function with a declared Lipschitz constant.
#[derive(Clone)]
pub struct TestFunction<S> {
    pub name: String,
    pub lipschitz: S,
    f: Func<S>,
}

impl<S: Scalar> TestFunction<S> {
    pub fn new(
        name: impl Into<String>,
        lipschitz: S,
        f: impl Fn(&[S]) -> S + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            name: name.into(),
            lipschitz,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &[S]) -> S {
        (self.f)(x)
    }

    /// `x ↦ d(x, p)`.
    pub fn distance_to<M: CoordMetric<S> + 'static>(p: Vec<S>, metric: M) -> Self {
        TestFunction::new("distance", S::one(), move |x| metric.distance(x, &p))
    }
}

impl<S> std::fmt::Debug for TestFunction<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish()
    }
}

/// `count` reproducible 1-Lipschitz cones `x ↦ min_j (a_j + d(x, p_j))` with
/// apexes drawn from `pool` and offsets uniform in `[-bound, bound]`.
pub fn cone_functions<S: Scalar, M: CoordMetric<S> + Clone + 'static>(
    pool: &[Vec<S>],
    bound: f64,
    count: usize,
    seed: u64,
    metric: M,
) -> Result<Vec<TestFunction<S>>> {
    if count == 0 || pool.is_empty() {
        return Err(Error::domain("cone functions need count >= 1 and a nonempty apex pool"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let apexes = rng.gen_range(1..=3usize);
        let cone: Vec<(Vec<S>, S)> = (0..apexes)
            .map(|_| {
                let p = pool[rng.gen_range(0..pool.len())].clone();
                let a = if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 };
                (p, S::from_real(a))
            })
            .collect();
        let m = metric.clone();
        out.push(TestFunction::new(format!("cone{k}"), S::one(), move |x| {
            cone.iter()
                .map(|(p, a)| a.clone() + m.distance(x, p))
                .reduce(S::min_of)
                .expect("at least one apex")
        }));
    }
    Ok(out)
}

/// Something test functions can be integrated against.
pub trait Integrator<S: Scalar>: Sync {
    fn integrate(&self, f: &TestFunction<S>) -> Result<S>;

    /// Points where the integrator puts mass; included in the Lipschitz gate.
    fn support(&self) -> Vec<Vec<S>>;
}

impl<S: Scalar> Integrator<S> for LocatedMeasure<S> {
    fn integrate(&self, f: &TestFunction<S>) -> Result<S> {
        LocatedMeasure::integrate(self, |x| f.eval(x))
    }

    fn support(&self) -> Vec<Vec<S>> {
        self.points()
            .iter()
            .zip(self.weights())
            .filter(|(_, w)| !w.is_zero())
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// A charge integrated through its atoms: `∫ f dP = Σ f(x_k) P(atom_k)`
/// with one representative point `x_k` per atom.
pub struct ChargeIntegrator<'a, S> {
    pub charge: &'a ChargeTable<S>,
    pub representatives: Vec<Vec<S>>,
}

impl<S: Scalar> Integrator<S> for ChargeIntegrator<'_, S> {
    fn integrate(&self, f: &TestFunction<S>) -> Result<S> {
        let atoms = self.charge.algebra().atoms();
        if atoms.len() != self.representatives.len() {
            return Err(Error::structural(format!(
                "{} representatives for {} atoms",
                self.representatives.len(),
                atoms.len()
            )));
        }
        let mut total = S::zero();
        for (atom, x) in atoms.iter().zip(&self.representatives) {
            if self.charge.is_flagged(atom) {
                return Err(Error::domain(format!("atom {atom:?} has no detected limit")));
            }
            let p = self.charge.value(atom).expect("atoms are members").clone();
            total = total + f.eval(x) * p;
        }
        Ok(total)
    }

    fn support(&self) -> Vec<Vec<S>> {
        self.representatives.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub function: usize,
    pub name: String,
    pub worst_pair: Option<(usize, usize)>,
}

/// Integral-difference series of a family of test functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport<S> {
    pub resolutions: Vec<usize>,
    /// Indices (into the input family) of functions that passed the gate.
    pub accepted: Vec<usize>,
    pub rejected: Vec<Rejection>,
    /// `|∫ f dP_n - ∫ f dP|` per accepted function, per resolution.
    pub series: Vec<Vec<S>>,
    /// Entry `n` is the max over accepted functions at `n`.
    pub sup_series: Vec<S>,
    pub converges: bool,
    /// Function attaining the last sup entry.
    pub worst_function: Option<usize>,
}

/// Test whether `∫ f dP_n → ∫ f dP` for each function of `family`.
///
/// Every function is first checked to be bounded and Lipschitz with its
/// declared constant on the union of all sampled support points and the
/// target support; failures are rejected and reported, not tested.
pub fn weak_convergence_test<S: Scalar, M: CoordMetric<S>>(
    seq: &dyn MeasureFamily<S>,
    target: &dyn Integrator<S>,
    family: &[TestFunction<S>],
    schedule: &Schedule,
    rule: &LimitRule,
    metric: &M,
    tol_lip: &S,
) -> Result<ConvergenceReport<S>> {
    if family.is_empty() {
        return Err(Error::domain("empty test-function family"));
    }
    let res = schedule.resolutions().to_vec();
    let measures = seq.sample(&res)?;

    let mut gate_points: Vec<Vec<S>> = target.support();
    for m in &measures {
        for p in m.points() {
            if !gate_points.contains(p) {
                gate_points.push(p.clone());
            }
        }
    }
    let space = FiniteMetricSpace::from_coords(gate_points.clone(), metric)?;
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (k, f) in family.iter().enumerate() {
        let values: Vec<S> = gate_points.iter().map(|p| f.eval(p)).collect();
        let bounded = values.iter().all(|v| v.is_finite_value());
        let check = if bounded {
            Some(verify_lipschitz(&values, &space, &f.lipschitz, tol_lip)?)
        } else {
            None
        };
        match check {
            Some(c) if c.ok => accepted.push(k),
            c => rejected.push(Rejection {
                function: k,
                name: f.name.clone(),
                worst_pair: c.and_then(|c| c.worst_pair),
            }),
        }
    }
    if accepted.is_empty() {
        return Err(Error::domain("no test function passed the Lipschitz gate"));
    }

    let mut series = Vec::with_capacity(accepted.len());
    for &k in &accepted {
        let f = &family[k];
        let reference = target.integrate(f)?;
        let row = measures
            .iter()
            .map(|m| Ok((Integrator::integrate(m, f)? - reference.clone()).abs()))
            .collect::<Result<Vec<S>>>()?;
        series.push(row);
    }
    let mut sup_series = Vec::with_capacity(res.len());
    let mut worst_function = None;
    for n in 0..res.len() {
        let mut best = S::zero();
        let mut arg = accepted[0];
        for (row, &k) in series.iter().zip(&accepted) {
            if row[n] > best {
                best = row[n].clone();
                arg = k;
            }
        }
        sup_series.push(best);
        worst_function = Some(arg);
    }
    let converges = rule.converges_to(&sup_series, &S::zero());
    Ok(ConvergenceReport {
        resolutions: res,
        accepted,
        rejected,
        series,
        sup_series,
        converges,
        worst_function,
    })
}

/// A test set realized per resolution, with its boundary when known.
#[derive(Clone)]
pub struct TestSet<S> {
    pub name: String,
    contains: Membership<S>,
    pub boundary: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> TestSet<S> {
    pub fn new(
        name: impl Into<String>,
        contains: impl Fn(usize, &[S]) -> bool + Send + Sync + 'static,
        boundary: Option<Vec<Vec<S>>>,
    ) -> Self {
        TestSet {
            name: name.into(),
            contains: Arc::new(contains),
            boundary,
        }
    }

    pub fn contains(&self, n: usize, x: &[S]) -> bool {
        (self.contains)(n, x)
    }
}

impl<S> std::fmt::Debug for TestSet<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestSet").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetVerdict<S> {
    pub name: String,
    pub continuity: bool,
    pub target_mass: S,
    pub series: Vec<S>,
    /// `None` for non-continuity sets, which are not tested.
    pub converges: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortmanteauReport<S> {
    pub resolutions: Vec<usize>,
    pub sets: Vec<SetVerdict<S>>,
    /// Every continuity set converged.
    pub all_converge: bool,
}

/// `P_n(A) → P(A)` on each continuity set `A` of the target.
///
/// `A` is a continuity set when its boundary is known and no target atom
/// lies within `boundary_tol` of it.
#[allow(clippy::too_many_arguments)]
pub fn portmanteau_check<S: Scalar, M: CoordMetric<S>>(
    seq: &dyn MeasureFamily<S>,
    target: &LocatedMeasure<S>,
    test_sets: &[TestSet<S>],
    schedule: &Schedule,
    rule: &LimitRule,
    metric: &M,
    boundary_tol: &S,
) -> Result<PortmanteauReport<S>> {
    let res = schedule.resolutions().to_vec();
    let measures = seq.sample(&res)?;
    let last = *res.last().expect("schedules are nonempty");
    let mut sets = Vec::with_capacity(test_sets.len());
    let mut all_converge = true;
    for a in test_sets {
        let continuity = a.boundary.as_ref().is_some_and(|bd| {
            !target
                .points()
                .iter()
                .zip(target.weights())
                .any(|(p, w)| !w.is_zero() && bd.iter().any(|b| metric.distance(b, p) <= *boundary_tol))
        });
        let target_mass = target.mass_where(|x| a.contains(last, x));
        let series: Vec<S> = res
            .iter()
            .zip(&measures)
            .map(|(&n, m)| m.mass_where(|x| a.contains(n, x)))
            .collect();
        let converges = if continuity {
            let ok = rule.converges_to(&series, &target_mass);
            all_converge &= ok;
            Some(ok)
        } else {
            None
        };
        sets.push(SetVerdict {
            name: a.name.clone(),
            continuity,
            target_mass,
            series,
            converges,
        });
    }
    Ok(PortmanteauReport {
        resolutions: res,
        sets,
        all_converge,
    })
}
