use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use shiftlab::cubeshift::{contraction_k_r, least_witness_n, nonuniformity_report, NonuniformityReport};
use shiftlab::graphshift::{base_point, build_z_i, product_agreement, product_metric, z_i_displacement};
use shiftlab::hyperspace::verify_theorem_a;
use shiftlab::rational::{self, Rational};
use shiftlab::shadowlab::{estimate_k_r, perturb_orbit, shadow_point, verify_shadowing, ShadowReport};
use shiftlab::{
    seq_metric, BiSeq, FiniteCompact, ProductPoint, ProductShift, PseudoOrbit, ShiftSystem, Side, ValueSpace,
};

use crate::config::{read_json, read_point, with_system, AnySystem, ExperimentConfig, SpaceSpec};
use crate::exit::{Failure, HORIZON, USAGE};
use crate::output::OutDir;

fn out_dir(cfg: &ExperimentConfig) -> Result<OutDir, Failure> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("shiftlab-out"));
    OutDir::create(&dir)
}

#[derive(Serialize)]
struct MetricReport {
    reference: String,
    distances: Vec<MetricEntry>,
}

#[derive(Serialize)]
struct MetricEntry {
    point: String,
    #[serde(with = "rational::serde_str")]
    distance: Rational,
}

enum AnyPoint {
    Seq(BiSeq),
    Product(ProductPoint),
}

fn read_any_point(path: &Path) -> Result<AnyPoint, Failure> {
    let value: Value = read_json(path)?;
    let bad = |e: String| Failure::usage(format!("{}: {e}", path.display()));
    if value.get("primes").is_some() {
        let raw: ProductPoint = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        let p = ProductPoint::new(raw.primes().to_vec(), raw.factors().to_vec()).map_err(|e| bad(e.to_string()))?;
        Ok(AnyPoint::Product(p))
    } else {
        Ok(AnyPoint::Seq(serde_json::from_value(value).map_err(|e| bad(e.to_string()))?))
    }
}

/// Exact distance from the first point to each of the others.
pub fn metric(cfg: &ExperimentConfig, out: bool, files: &[PathBuf]) -> Result<bool, Failure> {
    if files.len() < 2 {
        return Err(Failure::usage("metric needs at least two point files"));
    }
    let points = files.iter().map(|f| read_any_point(f)).collect::<Result<Vec<_>, _>>()?;
    let mut distances = Vec::new();
    for (file, p) in files.iter().zip(&points).skip(1) {
        let d = match (&points[0], p) {
            (AnyPoint::Seq(a), AnyPoint::Seq(b)) => seq_metric(a, b)?,
            (AnyPoint::Product(a), AnyPoint::Product(b)) => product_metric(a, b)?,
            _ => return Err(Failure::usage("cannot compare a sequence with a product point")),
        };
        println!("{}", rational::format(&d.value));
        distances.push(MetricEntry { point: file.display().to_string(), distance: d.value });
    }
    if out {
        out_dir(cfg)?.json("metric.json", &MetricReport { reference: files[0].display().to_string(), distances })?;
    }
    Ok(true)
}

fn read_set<S: ShiftSystem>(sys: &S, path: &Path) -> Result<FiniteCompact<S::Point>, Failure> {
    let points: Vec<S::Point> = read_json(path)?;
    FiniteCompact::new(sys, points).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Decay curves of the shadowing set against `A` forward and `B` backward.
pub fn hyper(cfg: &ExperimentConfig, a: &Path, b: &Path) -> Result<bool, Failure> {
    let eps = cfg.eps()?;
    let delta = cfg.rational("delta", &cfg.delta)?;
    let horizon = cfg.horizon.unwrap_or(64);
    let policy = cfg.policy.unwrap_or_default();
    let system = cfg.space()?.build()?;
    let out = out_dir(cfg)?;
    with_system!(&system, sys => {
        let set_a = read_set(sys, a)?;
        let set_b = read_set(sys, b)?;
        let report = verify_theorem_a(sys, &set_a, &set_b, &eps, &delta, horizon, policy)?;
        out.decay_csv("decay.csv", &report.rows)?;
        out.json("theorem_a.json", &report)?;
        println!(
            "pass: {} (|C| = {}, {} pairs, {} violations, {} rates)",
            report.pass,
            report.c_size,
            report.pairs.len(),
            report.violations.len(),
            report.rates.len()
        );
        Ok(report.pass)
    })
}

#[derive(Serialize)]
struct UniformityEntry {
    space: String,
    estimate: Option<u32>,
    closed_form: Option<u32>,
}

#[derive(Serialize)]
struct UniformityReport {
    #[serde(with = "rational::serde_str")]
    eps: Rational,
    #[serde(with = "rational::serde_str")]
    delta: Rational,
    #[serde(with = "rational::serde_str")]
    r: Rational,
    samples: u64,
    horizon: u32,
    seed: u64,
    results: Vec<UniformityEntry>,
    complete: bool,
}

/// Sampled contraction deadlines per space, with the cube closed form.
pub fn uniformity(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let eps = cfg.eps()?;
    let r = cfg.rational("r", &cfg.r)?;
    if r <= rational::int(0) || r >= eps {
        return Err(Failure::usage(format!("need 0 < r < eps, got r = {}", rational::format(&r))));
    }
    let delta = cfg.delta.clone().unwrap_or_else(|| &eps / rational::int(4));
    let samples = cfg.samples.unwrap_or(100);
    let horizon = cfg.horizon.unwrap_or(64);
    let seed = cfg.seed.unwrap_or(0);
    let budget = cfg.budget()?;
    let specs: Vec<SpaceSpec> = match (&cfg.spaces, &cfg.space) {
        (Some(list), _) => list.clone(),
        (None, Some(one)) => vec![one.clone()],
        (None, None) => return Err(Failure::usage("config needs \"space\" or \"spaces\"")),
    };
    let mut results = Vec::new();
    for spec in &specs {
        let system = spec.build()?;
        let estimate = with_system!(&system, sys => estimate_k_r(sys, &eps, &delta, &r, samples, horizon, seed, &budget)?);
        let closed_form = match system {
            AnySystem::Cube(_) => Some(contraction_k_r(&eps, &r)?),
            _ => None,
        };
        results.push(UniformityEntry { space: spec.label(), estimate, closed_form });
    }
    let complete = results.iter().all(|e| e.estimate.is_some());
    let report = UniformityReport { eps, delta, r, samples, horizon, seed, results, complete };
    out_dir(cfg)?.json("uniformity.json", &report)?;
    for e in &report.results {
        let show = |k: Option<u32>| k.map_or("none".to_string(), |k| k.to_string());
        println!("{}: estimate {} closed form {}", e.space, show(e.estimate), show(e.closed_form));
    }
    if !complete {
        return Err(Failure { code: HORIZON, message: format!("horizon {horizon} exhausted; partial report written") });
    }
    Ok(true)
}

#[derive(Serialize)]
struct CubeWitness {
    #[serde(flatten)]
    report: NonuniformityReport,
    witness: BiSeq,
}

#[derive(Serialize)]
struct CubeCounterexample {
    regime: &'static str,
    #[serde(with = "rational::serde_str")]
    eps: Rational,
    #[serde(with = "rational::serde_str")]
    delta: Rational,
    #[serde(with = "rational::serde_str")]
    r: Rational,
    x: BiSeq,
    y: BiSeq,
    witnesses: Vec<CubeWitness>,
    refutes: bool,
}

#[derive(Serialize)]
struct LoopSwitchRow {
    i: u64,
    valid_walk: bool,
    #[serde(with = "rational::serde_str")]
    displacement: Rational,
    #[serde(with = "rational::serde_str")]
    distance: Rational,
    forward_certificate: bool,
    backward_certificate: bool,
    witness: ProductPoint,
}

#[derive(Serialize)]
struct ProductCounterexample {
    regime: &'static str,
    primes: Vec<u32>,
    n_eps: usize,
    rows: Vec<LoopSwitchRow>,
    constant_displacement: bool,
    decreasing_distance: bool,
    refutes: bool,
}

/// Regime problems are usage errors for this command.
fn regime(e: shiftlab::Error) -> Failure {
    match Failure::from(e) {
        Failure { code: 3, message } => Failure { code: USAGE, message },
        other => other,
    }
}

pub fn counterexample(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    match cfg.regime.as_deref() {
        Some("cube") => cube_counterexample(cfg),
        Some("product") => product_counterexample(cfg),
        Some(other) => Err(Failure::usage(format!("unknown regime {other:?}; expected \"cube\" or \"product\""))),
        None => Err(Failure::usage("config needs \"regime\"")),
    }
}

fn cube_counterexample(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let eps = cfg.rational("eps", &cfg.eps)?;
    let delta = cfg.rational("delta", &cfg.delta)?;
    let r = cfg.rational("r", &cfg.r)?;
    if delta <= rational::int(0) {
        return Err(Failure::usage("delta must be positive"));
    }
    let cube = shiftlab::HilbertCube;
    let x = match &cfg.x {
        Some(p) => read_point(&cube, &cfg.resolve(p))?,
        None => BiSeq::constant(ValueSpace::UnitInterval, rational::ratio(1, 2)).map_err(regime)?,
    };
    let y = match &cfg.y {
        Some(p) => read_point(&cube, &cfg.resolve(p))?,
        None => {
            let moved = x.value_at(-1) + &delta / rational::int(4);
            x.with_values(-1, &[moved.min(rational::int(1))]).map_err(regime)?
        }
    };
    let m_values = cfg.m_values.clone().unwrap_or_else(|| vec![least_witness_n(&delta) as i64 + 1]);
    let witnesses = m_values
        .iter()
        .map(|&m| {
            let report = nonuniformity_report(&eps, &delta, &r, m, &x, &y).map_err(regime)?;
            Ok(CubeWitness { witness: report.witness.clone(), report })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let refutes = witnesses.iter().all(|w| w.report.refutes_uniformity);
    for w in &witnesses {
        println!(
            "m = {}: n = {}, displacement {} >= {}, refutes {}",
            w.report.m,
            w.report.n,
            rational::format(&w.report.displacement),
            rational::format(&w.report.lower_bound),
            w.report.refutes_uniformity
        );
    }
    let report = CubeCounterexample { regime: "cube", eps, delta, r, x, y, witnesses, refutes };
    out_dir(cfg)?.json("counterexample.json", &report)?;
    Ok(refutes)
}

fn product_counterexample(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let primes = cfg.primes.clone().ok_or_else(|| Failure::usage("config needs \"primes\""))?;
    let factors = cfg.factors.unwrap_or(primes.len().saturating_sub(1));
    let n_eps = cfg.n_eps.unwrap_or(1);
    let i_max = cfg.i_max.unwrap_or(10);
    let x = base_point(&primes, factors).map_err(regime)?;
    let sys = ProductShift::new(x.primes().to_vec(), 0).map_err(regime)?;
    let rows = (1..=i_max)
        .map(|i| {
            let z = build_z_i(&x, n_eps, i).map_err(regime)?;
            Ok(LoopSwitchRow {
                i,
                valid_walk: sys.validate(&z).is_ok(),
                displacement: z_i_displacement(&x, &z, n_eps, i)?.value,
                distance: product_metric(&x, &z)?.value,
                forward_certificate: product_agreement(&z, &x, Side::Forward)?.exists(),
                backward_certificate: product_agreement(&z, &x, Side::Backward)?.exists(),
                witness: z,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let constant_displacement = rows.windows(2).all(|w| w[0].displacement == w[1].displacement);
    let decreasing_distance = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let certified = rows.iter().all(|r| r.valid_walk && r.forward_certificate && r.backward_certificate);
    let refutes = constant_displacement && decreasing_distance && certified;
    if let Some(first) = rows.first() {
        println!(
            "displacement {} for i = 1..={i_max}; constant {constant_displacement}, distances decreasing {decreasing_distance}",
            rational::format(&first.displacement)
        );
    }
    let report = ProductCounterexample {
        regime: "product",
        primes: x.primes().to_vec(),
        n_eps,
        rows,
        constant_displacement,
        decreasing_distance,
        refutes,
    };
    out_dir(cfg)?.json("counterexample.json", &report)?;
    Ok(refutes)
}

#[derive(Serialize)]
struct ShadowOutput<P: Serialize> {
    orbit: PseudoOrbit<P>,
    #[serde(with = "rational::serde_str")]
    delta: Rational,
    #[serde(with = "rational::serde_str")]
    eps: Rational,
    report: ShadowReport<P>,
}

/// Pseudo-orbit from jumps, its readout shadow, and the exact check.
pub fn shadow(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let eps = cfg.eps()?;
    let spec = cfg.orbit.as_ref().ok_or_else(|| Failure::usage("config needs \"orbit\""))?;
    let system = cfg.space()?.build()?;
    let out = out_dir(cfg)?;
    with_system!(&system, sys => {
        let x = read_point(sys, &cfg.resolve(&spec.point))?;
        let orbit = perturb_orbit(sys, &x, spec.first_index, spec.length, &spec.jumps)?;
        let delta = orbit.delta(sys)?;
        let z = shadow_point(sys, &orbit, &eps)?;
        let report = verify_shadowing(sys, &orbit, &z, &eps)?;
        let pass = report.pass_eps && report.pass_limit;
        println!(
            "delta {}, sup distance {}, pass_eps {}, pass_limit {}",
            rational::format(&delta),
            report.sup_dist.as_ref().map_or("uncertified".into(), rational::format),
            report.pass_eps,
            report.pass_limit
        );
        out.json("shadow.json", &ShadowOutput { orbit, delta, eps, report })?;
        Ok(pass)
    })
}
