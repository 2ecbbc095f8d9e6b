//! Argument parsing and subcommand dispatch.

use std::path::PathBuf;
use std::sync::Mutex;

use charges_core::config::{LimitRule, Schedule, Tolerances};
use charges_core::convergence::{
    cone_functions, oscillation_extract, quantization_schedule, union_set_verdict,
    verify_witness, weak_convergence_test, ConvergenceReport, OscillationConfig, TestFunction,
};
use charges_core::measures::{FamilySpec, MeasureFamily, Member};
use charges_core::metric::{CoverCertificate, CoordMetric, SeparatedSet};
use charges_core::pushdown::{external_pushdown, pd_wasserstein_audit, PushdownAudit, RoundingMap};
use charges_core::transport::{tv_distance, w1_dual, w1_primal, TransportTol};
use charges_core::{Rational, Scalar};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::demos;
use crate::io::{
    load_located, load_measure, load_space, num, read_json, to_json, write_atomic, Ambient,
    AnchorsFile, Format, Table,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "charges", version, about = "Wasserstein distances, quantization and push-down audits")]
pub struct Cli {
    /// LP optimality and feasibility slack.
    #[arg(long, global = true)]
    pub tol_lp: Option<f64>,
    /// Window tolerance for limit detection.
    #[arg(long, global = true)]
    pub tol_limit: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Resolutions as start:end:xF or start:end:+S.
    #[arg(long, global = true)]
    pub schedule: Option<String>,
    /// Derive distances from coordinates with this metric; also the
    /// ambient metric for families and anchors.
    #[arg(long, global = true, value_enum)]
    pub from_coords: Option<Ambient>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Primal,
    Dual,
    #[default]
    Both,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// W1 and TV between two measures on one space.
    W1 {
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Quantize a measure onto partitions of decreasing mesh.
    Quantize {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        /// Comma-separated, strictly decreasing.
        #[arg(long, default_value = "0.5,0.25,0.125")]
        deltas: String,
    },
    /// Weak-convergence test of a family against a target measure.
    Converge {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Comma-separated: cone:COUNT[:seedS] or dist:X[;Y...].
        #[arg(long, default_value = "cone:50")]
        functions: String,
    },
    /// W1/TV audit of a family against its nearest-anchor push-down.
    Pushdown {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        anchors: PathBuf,
    },
    /// Extract an oscillation witness in exact arithmetic.
    Oscillate {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 6)]
        rounds: usize,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Separated set, cover and partition of a space.
    Net {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Point mass at 1/(2N) against its push-down to {0, 1}.
    DemoInfinitesimal,
    /// Point mass at 1/n: Lipschitz integrals, sin(1/x) and an oscillating set.
    DemoEzcounter {
        #[arg(long, default_value_t = 6)]
        rounds: usize,
    },
}

/// A validated invocation.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub schedule: Option<Schedule>,
    pub tol: Tolerances,
    pub rule: LimitRule,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub from_coords: Option<Ambient>,
}

impl ExperimentConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let mut tol = Tolerances::default();
        for (name, v, slot) in [
            ("--tol-lp", cli.tol_lp, &mut tol.lp),
            ("--tol-limit", cli.tol_limit, &mut tol.limit),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Domain(format!("{name} must be positive")));
                }
                *slot = v;
            }
        }
        let rule = LimitRule {
            tol: tol.limit,
            ..LimitRule::default()
        };
        let schedule = cli.schedule.as_deref().map(str::parse).transpose()?;
        Ok(ExperimentConfig {
            command: cli.command,
            schedule,
            tol,
            rule,
            seed: cli.seed,
            out: cli.out,
            format: cli.format,
            from_coords: cli.from_coords,
        })
    }

    fn schedule_or(&self, default: &str) -> Result<Schedule, CliError> {
        match &self.schedule {
            Some(s) => Ok(s.clone()),
            None => Ok(default.parse()?),
        }
    }

    fn ambient(&self) -> Ambient {
        self.from_coords.unwrap_or_default()
    }

    fn transport_tol(&self) -> TransportTol<f64> {
        TransportTol {
            lp: self.tol.lp,
            mass: self.tol.mass,
        }
    }
}

enum Rendered {
    Csv(Table),
    Json(Vec<u8>),
}

/// Execute the command and write its output. Returns a one-line summary
/// for the demos.
pub fn run(cfg: &ExperimentConfig) -> Result<Option<String>, CliError> {
    let (rendered, summary) = dispatch(cfg)?;
    let bytes = match rendered {
        Rendered::Csv(t) => t.to_csv()?,
        Rendered::Json(b) => b,
    };
    write_atomic(cfg.out.as_deref(), &bytes)?;
    Ok(summary)
}

fn pick<T: Serialize>(
    cfg: &ExperimentConfig,
    default: Format,
    value: &T,
    table: impl FnOnce() -> Table,
) -> Result<Rendered, CliError> {
    Ok(match cfg.format.unwrap_or(default) {
        Format::Csv => Rendered::Csv(table()),
        Format::Json => Rendered::Json(to_json(value)?),
    })
}

fn dispatch(cfg: &ExperimentConfig) -> Result<(Rendered, Option<String>), CliError> {
    let out = match &cfg.command {
        Command::W1 {
            space,
            mu,
            nu,
            method,
        } => w1(cfg, space.as_deref(), mu, nu, *method)?,
        Command::Quantize {
            measure,
            space,
            deltas,
        } => quantize(cfg, measure, space.as_deref(), deltas)?,
        Command::Converge {
            family,
            target,
            functions,
        } => converge(cfg, family, target, functions)?,
        Command::Pushdown { family, anchors } => pushdown(cfg, family, anchors)?,
        Command::Oscillate {
            family,
            rounds,
            budget,
        } => oscillate(cfg, family, *rounds, *budget)?,
        Command::Net { space, eps, delta } => net(cfg, space, *eps, *delta)?,
        Command::DemoInfinitesimal => {
            let d = demos::infinitesimal(&cfg.schedule_or("1:256:+1")?, &cfg.rule, &cfg.tol)?;
            let summary = d.summary();
            return Ok((pick(cfg, Format::Csv, &d, || d.table())?, Some(summary)));
        }
        Command::DemoEzcounter { rounds } => {
            let d = demos::ezcounter(&cfg.schedule_or("1:64:+1")?, &cfg.rule, *rounds)?;
            let summary = d.summary();
            return Ok((pick(cfg, Format::Csv, &d, || d.table())?, Some(summary)));
        }
    };
    Ok((out, None))
}

#[derive(Debug, Serialize)]
struct W1Output {
    method: &'static str,
    w1: f64,
    primal: Option<f64>,
    dual: Option<f64>,
    gap: Option<f64>,
    tv: f64,
    plan: Option<Vec<Vec<f64>>>,
    potential: Option<Vec<f64>>,
}

fn w1(
    cfg: &ExperimentConfig,
    space: Option<&std::path::Path>,
    mu: &std::path::Path,
    nu: &std::path::Path,
    method: Method,
) -> Result<Rendered, CliError> {
    let given = space.map(|p| load_space(p, cfg.from_coords)).transpose()?;
    let (space, a) = load_measure(mu, given.as_ref(), cfg.from_coords)?;
    let (_, b) = load_measure(nu, Some(&space), cfg.from_coords)?;
    let tol = cfg.transport_tol();
    let primal = match method {
        Method::Dual => None,
        _ => Some(w1_primal(&a, &b, &space, &tol)?),
    };
    let dual = match method {
        Method::Primal => None,
        _ => Some(w1_dual(&a, &b, &space, &tol)?),
    };
    let p = primal.as_ref().map(|p| p.cost);
    let d = dual.as_ref().map(|d| d.0);
    let out = W1Output {
        method: match method {
            Method::Primal => "primal",
            Method::Dual => "dual",
            Method::Both => "both",
        },
        w1: p.or(d).expect("at least one route runs"),
        primal: p,
        dual: d,
        gap: p.zip(d).map(|(p, d)| (p - d).abs()),
        tv: tv_distance(&a, &b)?,
        plan: primal.map(|p| p.coupling),
        potential: dual.map(|d| d.1.f),
    };
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    pick(cfg, Format::Json, &out, || {
        let mut t = Table::new(&["method", "w1", "primal", "dual", "gap", "tv"]);
        t.push(vec![
            out.method.to_string(),
            num(out.w1),
            opt(out.primal),
            opt(out.dual),
            opt(out.gap),
            num(out.tv),
        ]);
        t
    })
}

#[derive(Debug, Serialize)]
struct QuantizeLevel {
    delta: f64,
    cells: Vec<Vec<usize>>,
    reps: Vec<usize>,
    mesh: f64,
    w1: f64,
    weights: Vec<f64>,
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Domain(format!("bad {what} `{p}`")))
        })
        .collect()
}

fn quantize(
    cfg: &ExperimentConfig,
    measure: &std::path::Path,
    space: Option<&std::path::Path>,
    deltas: &str,
) -> Result<Rendered, CliError> {
    let given = space.map(|p| load_space(p, cfg.from_coords)).transpose()?;
    let (space, p) = load_measure(measure, given.as_ref(), cfg.from_coords)?;
    let deltas = parse_list(deltas, "delta")?;
    let results = quantization_schedule(&p, &space, &deltas)?;
    let tol = cfg.transport_tol();
    let levels = deltas
        .iter()
        .zip(results)
        .map(|(&delta, q)| {
            Ok(QuantizeLevel {
                delta,
                w1: w1_primal(&p, &q.quantized, &space, &tol)?.cost,
                cells: q.partition.cells().to_vec(),
                reps: q.partition.reps().to_vec(),
                mesh: q.certified_bound,
                weights: q.quantized.weights().to_vec(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    pick(cfg, Format::Csv, &levels, || {
        let mut t = Table::new(&["delta", "cells", "mesh", "w1"]);
        for l in &levels {
            t.push(vec![
                num(l.delta),
                l.cells.len().to_string(),
                num(l.mesh),
                num(l.w1),
            ]);
        }
        t
    })
}

/// Parse `cone:COUNT[:seedS]` and `dist:X[;Y...]` items.
fn test_functions(
    spec: &str,
    pool: &[Vec<f64>],
    metric: Ambient,
    default_seed: u64,
) -> Result<Vec<TestFunction<f64>>, CliError> {
    let bad = |item: &str| CliError::Domain(format!("bad test-function spec `{item}`"));
    let mut bound: f64 = 0.0;
    for a in pool {
        for b in pool {
            bound = bound.max(metric.distance(a, b));
        }
    }
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            ["cone", count, rest @ ..] => {
                let count: usize = count.parse().map_err(|_| bad(item))?;
                let seed = match rest {
                    [] => default_seed,
                    [s] => s
                        .strip_prefix("seed")
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad(item))?,
                    _ => return Err(bad(item)),
                };
                out.extend(cone_functions(pool, bound, count, seed, metric)?);
            }
            ["dist", coords] => {
                let p = coords
                    .split(';')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad(item))?;
                let mut f = TestFunction::distance_to(p, metric);
                f.name = item.to_string();
                out.push(f);
            }
            _ => return Err(bad(item)),
        }
    }
    if out.is_empty() {
        return Err(CliError::Domain("no test functions".into()));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ConvergeOutput {
    functions: Vec<String>,
    #[serde(flatten)]
    report: ConvergenceReport<f64>,
}

fn converge(
    cfg: &ExperimentConfig,
    family: &std::path::Path,
    target: &std::path::Path,
    functions: &str,
) -> Result<Rendered, CliError> {
    let spec: FamilySpec = read_json(family)?;
    let fam = spec.build::<f64>()?;
    let target = load_located(target)?;
    let schedule = cfg.schedule_or("1:256:x2")?;
    let mut pool: Vec<Vec<f64>> = target.points().to_vec();
    for m in fam.sample(schedule.resolutions())? {
        for p in m.points() {
            if !pool.contains(p) {
                pool.push(p.clone());
            }
        }
    }
    let fs = test_functions(functions, &pool, cfg.ambient(), cfg.seed)?;
    let report = weak_convergence_test(
        &fam,
        &target,
        &fs,
        &schedule,
        &cfg.rule,
        &cfg.ambient(),
        &cfg.tol.lp,
    )?;
    let out = ConvergeOutput {
        functions: fs.iter().map(|f| f.name.clone()).collect(),
        report,
    };
    pick(cfg, Format::Json, &out, || {
        let mut t = Table::new(&["N", "sup_gap"]);
        for (n, s) in out.report.resolutions.iter().zip(&out.report.sup_series) {
            t.push(vec![n.to_string(), num(*s)]);
        }
        t
    })
}

#[derive(Debug, Serialize)]
struct PushdownOutput {
    anchors: Vec<Vec<f64>>,
    limit: Vec<f64>,
    flagged: Vec<usize>,
    #[serde(flatten)]
    audit: PushdownAudit<f64>,
}

fn pushdown(
    cfg: &ExperimentConfig,
    family: &std::path::Path,
    anchors: &std::path::Path,
) -> Result<Rendered, CliError> {
    let spec: FamilySpec = read_json(family)?;
    let fam = spec.build::<f64>()?;
    let (anchors, radius) = match read_json::<AnchorsFile>(anchors)? {
        AnchorsFile::List(a) => (a, None),
        AnchorsFile::Full {
            anchors,
            escape_radius,
        } => (anchors, escape_radius),
    };
    let anchors: Vec<Vec<f64>> = anchors.iter().map(|c| c.to_point()).collect();
    let mut rounding = RoundingMap::new(anchors, cfg.ambient())?;
    if radius.is_some() {
        rounding = rounding.with_escape_radius(radius);
    }
    let schedule = cfg.schedule_or("1:256:x2")?;
    let pd = external_pushdown(&fam, &rounding, &schedule, &cfg.rule, &cfg.tol)?;
    let audit = pd_wasserstein_audit(&fam, &rounding, &schedule, &cfg.rule, &cfg.tol)?;
    let out = PushdownOutput {
        anchors: pd.anchors.clone(),
        limit: pd.measure.weights().to_vec(),
        flagged: pd.flagged.clone(),
        audit,
    };
    pick(cfg, Format::Csv, &out, || {
        let a = &out.audit;
        let mut t = Table::new(&["N", "w1", "tv", "escaping_mass"]);
        for i in 0..a.resolutions.len() {
            t.push(vec![
                a.resolutions[i].to_string(),
                num(a.w1_series[i]),
                num(a.tv_series[i]),
                num(a.escaping_series[i]),
            ]);
        }
        t
    })
}

#[derive(Debug, Serialize)]
struct UnionOutput {
    set: Vec<String>,
    series: Vec<String>,
    even_min: String,
    odd_max: String,
    gap: String,
}

#[derive(Debug, Serialize)]
struct OscillateOutput {
    rounds: usize,
    budget: usize,
    complete: bool,
    verified: bool,
    indices: Vec<usize>,
    sets: Vec<Vec<String>>,
    masses: Vec<String>,
    prior_masses: Vec<String>,
    exhausted: Option<charges_core::convergence::Exhaustion>,
    union: Option<UnionOutput>,
}

fn show_point(p: &[Rational]) -> String {
    match p {
        [x] => x.to_string(),
        _ => format!(
            "({})",
            p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn oscillate(
    cfg: &ExperimentConfig,
    family: &std::path::Path,
    rounds: usize,
    budget: Option<usize>,
) -> Result<Rendered, CliError> {
    let spec: FamilySpec = read_json(family)?;
    let fam = spec.build::<Rational>()?;
    // Y is the set of atoms met so far, indexed in order of appearance
    let registry: Mutex<Vec<Vec<Rational>>> = Mutex::new(Vec::new());
    let locate = |p: &[Rational]| {
        let mut reg = registry.lock().expect("registry lock");
        Some(match reg.iter().position(|q| q.as_slice() == p) {
            Some(i) => i,
            None => {
                reg.push(p.to_vec());
                reg.len() - 1
            }
        })
    };
    let mut oc = OscillationConfig::new(rounds);
    oc.budget = budget;
    let outcome = oscillation_extract(&fam, &locate, &oc)?;
    let verified = verify_witness(&outcome.witness, &fam, &locate)?;
    let union = if outcome.witness.rounds() >= 4 {
        Some(union_set_verdict(&outcome.witness, &fam, &locate)?)
    } else {
        None
    };
    let reg = registry.lock().expect("registry lock");
    let names = |m: &Member| m.iter().map(|&y| show_point(&reg[y])).collect::<Vec<_>>();
    let strs = |v: &[Rational]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let w = &outcome.witness;
    let out = OscillateOutput {
        rounds,
        budget: budget.unwrap_or(10 * rounds),
        complete: outcome.complete(),
        verified,
        indices: w.indices.clone(),
        sets: w.sets.iter().map(names).collect(),
        masses: strs(&w.masses),
        prior_masses: strs(&w.prior_masses),
        exhausted: outcome.exhausted.clone(),
        union: union.map(|u| UnionOutput {
            set: names(&u.set),
            series: strs(&u.series),
            even_min: u.even_min.to_string(),
            odd_max: u.odd_max.to_string(),
            gap: u.gap.to_string(),
        }),
    };
    pick(cfg, Format::Json, &out, || {
        let mut t = Table::new(&["i", "n_i", "set", "mass", "prior_mass"]);
        for i in 0..out.indices.len() {
            t.push(vec![
                (i + 1).to_string(),
                out.indices[i].to_string(),
                out.sets[i].join(" "),
                num(w.masses[i].to_real()),
                num(w.prior_masses[i].to_real()),
            ]);
        }
        t
    })
}

#[derive(Debug, Serialize)]
struct PartitionOutput {
    delta: f64,
    cells: Vec<Vec<usize>>,
    reps: Vec<usize>,
    mesh: f64,
}

#[derive(Debug, Serialize)]
struct NetOutput {
    separated: SeparatedSet<f64>,
    cover: CoverCertificate<f64>,
    partition: Option<PartitionOutput>,
}

fn net(
    cfg: &ExperimentConfig,
    space: &std::path::Path,
    eps: f64,
    delta: Option<f64>,
) -> Result<Rendered, CliError> {
    let space = load_space(space, cfg.from_coords)?;
    let separated = space.greedy_separated_set(&eps, usize::MAX)?;
    let cover = space.covering_report(&eps)?;
    let partition = delta
        .map(|d| {
            space.build_partition(&d).map(|p| PartitionOutput {
                delta: d,
                cells: p.cells().to_vec(),
                reps: p.reps().to_vec(),
                mesh: *p.mesh(),
            })
        })
        .transpose()?;
    let out = NetOutput {
        separated,
        cover,
        partition,
    };
    pick(cfg, Format::Json, &out, || {
        let mut t = Table::new(&["kind", "index"]);
        for &i in &out.separated.indices {
            t.push(vec!["separated".into(), i.to_string()]);
        }
        for &i in &out.cover.centers {
            t.push(vec!["center".into(), i.to_string()]);
        }
        if let Some(p) = &out.partition {
            for &i in &p.reps {
                t.push(vec!["representative".into(), i.to_string()]);
            }
        }
        t
    })
}
