//! The `classify` and `verify` pipelines over a sample of points.

use hyperholonomy::catalog::ExpectedOutcome;
use hyperholonomy::curvature::{
    bianchi_residual, cluster_spectrum, codazzi_residual_at, curvature_endo, framed_point, gauss_residual, nabla_r_all,
    Cluster, FramedPoint, OUTER_STEP_FACTOR,
};
use hyperholonomy::holonomy::{
    default_tol_gen, generators_at, holonomy_algebra, loop_holonomy, name_group, DerivOrder, GroupVerdict, VerdictKind,
    CLOSURE_TOL, LOOP_SIGN,
};
use hyperholonomy::modelspace::ImmersionChart;
use hyperholonomy::theoremcheck::{check_case_a, check_case_b, flatness_check, Flatness, SplitCase, SplitReport, TOL_FACTOR};
use hyperholonomy::GeomError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig, MAX_GRID_POINTS};
use crate::error::CliError;

/// Schema version of the JSON report.
pub const SCHEMA_VERSION: u64 = 1;

/// Rectangle side and steps per edge of the loop-holonomy cross-check.
pub const LOOP_EPS: f64 = 1e-2;
pub const LOOP_STEPS: usize = 16;

/// Exit status for a definite result.
pub const EXIT_OK: i32 = 0;
/// Exit status for an `UNDETERMINED` consensus or failed identity checks.
pub const EXIT_UNDETERMINED: i32 = 2;
/// Exit status for errors.
pub const EXIT_ERROR: i32 = 1;

const SAMPLE_NOTE: &str = "statements are certified at the sampled points only";

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Value,
    pub exit_code: i32,
}

/// Runs the configured command.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let (chart, expected) = config.surface.build(config.smoke)?;
    let h = config.h.unwrap_or_else(|| chart.default_step());
    let points = sample_points(&chart, config, h)?;
    match config.command {
        Command::Classify => classify(config, &chart, expected.as_ref(), h, &points),
        Command::Verify => verify(config, &chart, h, &points),
    }
}

/// Distance kept from the domain boundary: the reach of every finite-difference
/// stencil in the pipeline, plus the loop rectangle for `verify`.
pub fn inset(command: Command, h: f64) -> f64 {
    let stencil = 2.0 * (OUTER_STEP_FACTOR + 2.0) * h;
    match command {
        Command::Classify => stencil,
        Command::Verify => stencil + 2.0 * LOOP_EPS,
    }
}

/// Grid cell centres of the inset domain (thinned evenly to at most
/// [`MAX_GRID_POINTS`]) or the explicit points, followed by any random points.
pub fn sample_points(chart: &ImmersionChart, config: &RunConfig, h: f64) -> Result<Vec<Vec<f64>>, CliError> {
    let n = chart.n();
    let margin = inset(config.command, h);
    let inner: Vec<(f64, f64)> = chart.domain().bounds.iter().map(|(lo, hi)| (lo + margin, hi - margin)).collect();
    if let Some(axis) = inner.iter().position(|(lo, hi)| lo >= hi) {
        return Err(CliError::Geom(GeomError::Domain { point: chart.domain().center(), axis }));
    }
    let sampling = &config.sampling;
    let mut points = match &sampling.points {
        Some(list) => list.clone(),
        None => {
            let g = sampling.grid;
            let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(g)).unwrap_or(usize::MAX);
            let picks: Vec<usize> = if total <= MAX_GRID_POINTS {
                (0..total).collect()
            } else {
                (0..MAX_GRID_POINTS).map(|j| ((j as u128 * total as u128) / MAX_GRID_POINTS as u128) as usize).collect()
            };
            picks
                .into_iter()
                .map(|mut idx| {
                    let mut p = vec![0.0; n];
                    for axis in (0..n).rev() {
                        let i = idx % g;
                        idx /= g;
                        let (lo, hi) = inner[axis];
                        p[axis] = lo + (i as f64 + 0.5) * (hi - lo) / g as f64;
                    }
                    p
                })
                .collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    for _ in 0..sampling.random {
        points.push(inner.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect());
    }
    Ok(points)
}

fn finite(x: f64, what: &str) -> Result<Value, CliError> {
    if x.is_finite() {
        Ok(json!(x))
    } else {
        Err(CliError::Geom(GeomError::Integration(format!("{what} is not finite"))))
    }
}

fn finite_vec(xs: &[f64], what: &str) -> Result<Value, CliError> {
    Ok(Value::Array(xs.iter().map(|x| finite(*x, what)).collect::<Result<_, _>>()?))
}

fn opt_finite(x: Option<f64>, what: &str) -> Result<Value, CliError> {
    x.map_or(Ok(Value::Null), |x| finite(x, what))
}

struct PointClass {
    u: Vec<f64>,
    fp: FramedPoint,
    clusters: Vec<Cluster>,
    generators: usize,
    dim: usize,
    blocks: Vec<Vec<usize>>,
    aligned: bool,
    verdict: GroupVerdict,
    flatness: Flatness,
    tol_gen: f64,
    tol_rel: f64,
}

fn classify_point(config: &RunConfig, chart: &ImmersionChart, h: f64, u: &[f64]) -> Result<PointClass, CliError> {
    let order = DerivOrder::from_u8(config.order)?;
    let fp = framed_point(chart, u, h)?;
    let tol = &config.tolerances;
    let tol_gen = tol.tol_gen.unwrap_or_else(|| default_tol_gen(&fp));
    let tol_rel = tol.tol_rel.unwrap_or(TOL_FACTOR * fp.curvature_scale());
    let gens = generators_at(chart, &fp, order, tol_gen)?;
    let n = fp.n();
    let alg = holonomy_algebra(&gens, n, order, CLOSURE_TOL)?;
    let clusters = cluster_spectrum(&fp.eigen.values, tol.eps_cluster);
    let verdict = if n < 3 {
        GroupVerdict::undetermined(alg.dim, &clusters, "n < 3: smoke run, no theorem applies")
    } else {
        name_group(&alg, &clusters, n, fp.nu, tol_rel)
    };
    let flatness = flatness_check(&fp, tol_rel);
    Ok(PointClass {
        u: u.to_vec(),
        clusters,
        generators: gens.len(),
        dim: alg.dim,
        blocks: alg.blocks.blocks.clone(),
        aligned: alg.blocks.coordinate_aligned,
        verdict,
        flatness,
        tol_gen,
        tol_rel,
        fp,
    })
}

fn verdict_json(v: &GroupVerdict) -> Value {
    json!({
        "kind": v.kind.as_str(),
        "k": v.k,
        "dim": v.dim,
        "expected_dim": v.expected_dim,
        "diagnostic": v.diagnostic,
    })
}

fn clusters_json(clusters: &[(f64, usize)]) -> Result<Value, CliError> {
    clusters
        .iter()
        .map(|(value, m)| Ok(json!({"value": finite(*value, "cluster value")?, "multiplicity": m})))
        .collect::<Result<Vec<_>, CliError>>()
        .map(Value::Array)
}

fn split_json(s: &SplitReport) -> Result<Value, CliError> {
    Ok(json!({
        "case": s.case.as_str(),
        "k": s.k,
        "lambda": finite(s.lambda, "Lambda")?,
        "theta": finite(s.theta, "Theta")?,
        "relation_residual": finite(s.relation_residual, "relation residual")?,
        "constancy_residual": finite(s.constancy_residual, "constancy residual")?,
        "factor_curvatures": finite_vec(&s.factor_curvatures, "factor curvature")?,
        "parallelism_residual": finite(s.parallelism_residual, "parallelism residual")?,
        "gamma_aan": opt_finite(s.gamma_aan, "Gamma_aan")?,
        "cross_curvature_residual": finite(s.cross_curvature_residual, "cross curvature")?,
        "tol": finite(s.tol, "tolerance")?,
        "sample_count": s.sample_count,
        "diagnostic": s.diagnostic,
    }))
}

/// Runs the case (a) or (b) check when every point has the same two-cluster profile.
fn split_check(config: &RunConfig, chart: &ImmersionChart, results: &[PointClass]) -> Result<Option<SplitReport>, CliError> {
    let n = chart.n();
    if n < 3 {
        return Ok(None);
    }
    let profile = |p: &PointClass| {
        let mut m: Vec<usize> = p.clusters.iter().map(Cluster::multiplicity).collect();
        m.sort_unstable();
        m
    };
    let first = profile(&results[0]);
    if first.len() != 2 || results.iter().any(|p| profile(p) != first) {
        return Ok(None);
    }
    let fps: Vec<FramedPoint> = results.iter().map(|p| p.fp.clone()).collect();
    let tol = config
        .tolerances
        .tol_rel
        .unwrap_or_else(|| hyperholonomy::theoremcheck::default_tol(&fps));
    let eps = config.tolerances.eps_cluster;
    let report = if first[0] == 1 { check_case_b(chart, &fps, tol, eps) } else { check_case_a(chart, &fps, tol, eps) };
    match report {
        Ok(r) => Ok(Some(r)),
        Err(GeomError::Structure(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn expected_json(e: &ExpectedOutcome, consensus: &Consensus) -> Result<Value, CliError> {
    Ok(json!({
        "verdict": e.verdict.as_str(),
        "k": e.k,
        "clusters": clusters_json(&e.clusters)?,
        "factor_curvatures": finite_vec(&e.factor_curvatures, "factor curvature")?,
        "notes": e.notes,
        "matches": consensus.kind == e.verdict && consensus.k == e.k,
    }))
}

struct Consensus {
    kind: VerdictKind,
    k: Option<usize>,
    diagnostic: Option<String>,
}

fn consensus_of(results: &[PointClass], split: Option<&SplitReport>) -> Consensus {
    let first = &results[0].verdict;
    if let Some(p) = results.iter().find(|p| (p.verdict.kind, p.verdict.k) != (first.kind, first.k)) {
        return Consensus {
            kind: VerdictKind::Undetermined,
            k: None,
            diagnostic: Some(format!(
                "per-point verdicts disagree: {} at {:?} vs {} at {:?}",
                first.kind, results[0].u, p.verdict.kind, p.u
            )),
        };
    }
    let undetermined = |why: String| Consensus { kind: VerdictKind::Undetermined, k: None, diagnostic: Some(why) };
    let needed = match first.kind {
        VerdictKind::ProductSoKSoNk => Some(SplitCase::A),
        VerdictKind::SoNMinus1 => Some(SplitCase::B),
        _ => None,
    };
    if let Some(case) = needed {
        match split {
            None => return undetermined("theorem check could not run on the sample".into()),
            Some(s) if s.case != case => {
                return undetermined(format!(
                    "theorem check gives case {} where case {} is needed: {}",
                    s.case,
                    case,
                    s.diagnostic.clone().unwrap_or_default()
                ))
            }
            _ => {}
        }
    }
    Consensus { kind: first.kind, k: first.k, diagnostic: first.diagnostic.clone() }
}

fn tool_version() -> String {
    format!("hyperholonomy {}", env!("CARGO_PKG_VERSION"))
}

fn config_json(config: &RunConfig) -> Result<Value, CliError> {
    serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))
}

fn classify(
    config: &RunConfig,
    chart: &ImmersionChart,
    expected: Option<&ExpectedOutcome>,
    h: f64,
    points: &[Vec<f64>],
) -> Result<RunOutcome, CliError> {
    let results: Vec<PointClass> = points
        .par_iter()
        .map(|u| classify_point(config, chart, h, u))
        .collect::<Result<_, _>>()?;
    let split = split_check(config, chart, &results)?;
    let consensus = consensus_of(&results, split.as_ref());

    let mut records = Vec::with_capacity(results.len());
    let mut flat_any = false;
    let mut impossible = Vec::new();
    for (index, p) in results.iter().enumerate() {
        flat_any |= p.flatness.flat;
        if let Some(d) = &p.flatness.diagnostic {
            impossible.push(d.clone());
        }
        let profile: Vec<(f64, usize)> = p.clusters.iter().map(|c| (c.value, c.multiplicity())).collect();
        records.push(json!({
            "index": index,
            "u": finite_vec(&p.u, "parameter")?,
            "eigenvalues": finite_vec(&p.fp.eigen.values, "principal curvature")?,
            "clusters": clusters_json(&profile)?,
            "generators": p.generators,
            "algebra_dim": p.dim,
            "blocks": p.blocks,
            "blocks_coordinate_aligned": p.aligned,
            "verdict": verdict_json(&p.verdict),
            "flatness": {
                "flat": p.flatness.flat,
                "max_residual": finite(p.flatness.max_residual, "flatness residual")?,
                "diagnostic": p.flatness.diagnostic,
            },
            "curvature_scale": finite(p.fp.curvature_scale(), "curvature scale")?,
            "tol_gen": finite(p.tol_gen, "tol_gen")?,
            "tol_rel": finite(p.tol_rel, "tol_rel")?,
        }));
    }
    let max_of = |f: &dyn Fn(&PointClass) -> f64| results.iter().map(f).fold(0.0_f64, f64::max);
    let aggregate = json!({
        "command": "classify",
        "chart": chart.label(),
        "consensus": {
            "kind": consensus.kind.as_str(),
            "k": consensus.k,
            "diagnostic": consensus.diagnostic,
        },
        "split": split.as_ref().map(split_json).transpose()?,
        "expected": expected.map(|e| expected_json(e, &consensus)).transpose()?,
        "flat_anywhere": flat_any,
        "flatness_contradictions": impossible,
        "residual_max": {
            "relation": opt_finite(split.as_ref().map(|s| s.relation_residual), "relation residual")?,
            "parallelism": opt_finite(split.as_ref().map(|s| s.parallelism_residual), "parallelism residual")?,
            "cross_curvature": opt_finite(split.as_ref().map(|s| s.cross_curvature_residual), "cross curvature")?,
            "flatness_min": finite(results.iter().map(|p| p.flatness.max_residual).fold(f64::INFINITY, f64::min), "flatness residual")?,
        },
        "tolerances": {
            "h": finite(h, "h")?,
            "eps_cluster": finite(config.tolerances.eps_cluster, "eps_cluster")?,
            "closure": CLOSURE_TOL,
            "tol_gen_max": finite(max_of(&|p| p.tol_gen), "tol_gen")?,
            "tol_rel_max": finite(max_of(&|p| p.tol_rel), "tol_rel")?,
        },
        "sample_count": results.len(),
        "sample_note": SAMPLE_NOTE,
        "tool_version": tool_version(),
    });
    let exit_code = if consensus.kind.is_definite() { EXIT_OK } else { EXIT_UNDETERMINED };
    Ok(RunOutcome { report: envelope(config, records, aggregate, exit_code)?, exit_code })
}

fn envelope(config: &RunConfig, records: Vec<Value>, mut aggregate: Value, exit_code: i32) -> Result<Value, CliError> {
    aggregate["exit_code"] = json!(exit_code);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "config": config_json(config)?,
        "points": records,
        "aggregate": aggregate,
    }))
}

struct PointCheck {
    codazzi: f64,
    codazzi_coarse: f64,
    codazzi_tol: f64,
    bianchi: f64,
    bianchi_coarse: f64,
    bianchi_tol: f64,
    gauss: f64,
    gauss_tol: f64,
    loop_gap: f64,
    loop_tol: f64,
}

impl PointCheck {
    fn passes(&self) -> bool {
        self.codazzi <= self.codazzi_tol
            && self.bianchi <= self.bianchi_tol
            && self.gauss <= self.gauss_tol
            && self.loop_gap <= self.loop_tol
    }
}

/// Tolerances of the identity checks at a point.
pub struct IdentityTolerances {
    pub codazzi: f64,
    pub bianchi: f64,
    pub gauss: f64,
    pub loop_gap: f64,
}

impl IdentityTolerances {
    pub fn at(fp: &FramedPoint) -> Self {
        let a2 = fp.shape_norm().powi(2);
        let scale = fp.curvature_scale();
        IdentityTolerances {
            codazzi: 1e-3 * (1.0 + a2),
            bianchi: 1e-2 * scale * fp.n() as f64,
            gauss: 1e-4 * (1.0 + scale),
            loop_gap: 5e-2 * (1.0 + scale),
        }
    }
}

/// `max_{i<j} ‖loop_holonomy(i, j) − s · R(e_i, e_j)‖`.
pub fn loop_gap(chart: &ImmersionChart, fp: &FramedPoint, eps: f64) -> Result<f64, GeomError> {
    let n = fp.n();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            let r = curvature_endo(fp, i, j)?.scale(LOOP_SIGN);
            let l = loop_holonomy(chart, fp, i, j, eps, LOOP_STEPS)?;
            worst = worst.max(l.sub(&r).norm());
        }
    }
    Ok(worst)
}

fn check_point(chart: &ImmersionChart, h: f64, u: &[f64]) -> Result<PointCheck, CliError> {
    let fp = framed_point(chart, u, h)?;
    let coarse = framed_point(chart, u, 2.0 * h)?;
    let tol = IdentityTolerances::at(&fp);
    Ok(PointCheck {
        codazzi: codazzi_residual_at(chart, &fp)?,
        codazzi_coarse: codazzi_residual_at(chart, &coarse)?,
        codazzi_tol: tol.codazzi,
        bianchi: bianchi_residual(&fp, &nabla_r_all(chart, &fp)?),
        bianchi_coarse: bianchi_residual(&coarse, &nabla_r_all(chart, &coarse)?),
        bianchi_tol: tol.bianchi,
        gauss: gauss_residual(chart, &fp)?,
        gauss_tol: tol.gauss,
        loop_gap: loop_gap(chart, &fp, LOOP_EPS)?,
        loop_tol: tol.loop_gap,
    })
}

fn verify(config: &RunConfig, chart: &ImmersionChart, h: f64, points: &[Vec<f64>]) -> Result<RunOutcome, CliError> {
    let checks: Vec<PointCheck> = points
        .par_iter()
        .map(|u| check_point(chart, h, u))
        .collect::<Result<_, _>>()?;
    let mut records = Vec::with_capacity(checks.len());
    for (index, (u, c)) in points.iter().zip(&checks).enumerate() {
        records.push(json!({
            "index": index,
            "u": finite_vec(u, "parameter")?,
            "codazzi": {"residual": finite(c.codazzi, "Codazzi residual")?, "residual_2h": finite(c.codazzi_coarse, "Codazzi residual")?, "tol": finite(c.codazzi_tol, "tolerance")?},
            "bianchi": {"residual": finite(c.bianchi, "Bianchi residual")?, "residual_2h": finite(c.bianchi_coarse, "Bianchi residual")?, "tol": finite(c.bianchi_tol, "tolerance")?},
            "gauss": {"residual": finite(c.gauss, "Gauss residual")?, "tol": finite(c.gauss_tol, "tolerance")?},
            "loop": {"gap": finite(c.loop_gap, "loop gap")?, "tol": finite(c.loop_tol, "tolerance")?},
            "pass": c.passes(),
        }));
    }
    let max_of = |f: &dyn Fn(&PointCheck) -> f64| checks.iter().map(f).fold(0.0_f64, f64::max);
    // observed order of the residuals under h -> 2h; noise dominates below h ~ 1e-3
    let order = |fine: f64, coarse: f64| -> Value {
        if fine > 0.0 && coarse > 0.0 {
            json!((coarse / fine).log2())
        } else {
            Value::Null
        }
    };
    let all_pass = checks.iter().all(PointCheck::passes);
    let (cz, czc) = (max_of(&|c| c.codazzi), max_of(&|c| c.codazzi_coarse));
    let (bi, bic) = (max_of(&|c| c.bianchi), max_of(&|c| c.bianchi_coarse));
    let aggregate = json!({
        "command": "verify",
        "chart": chart.label(),
        "all_pass": all_pass,
        "failing_points": checks.iter().enumerate().filter(|(_, c)| !c.passes()).map(|(i, _)| i).collect::<Vec<_>>(),
        "residual_max": {
            "codazzi": finite(cz, "Codazzi residual")?,
            "bianchi": finite(bi, "Bianchi residual")?,
            "gauss": finite(max_of(&|c| c.gauss), "Gauss residual")?,
            "loop": finite(max_of(&|c| c.loop_gap), "loop gap")?,
        },
        "h_doubling_order": {
            "codazzi": order(cz, czc),
            "bianchi": order(bi, bic),
        },
        "tolerances": {
            "h": finite(h, "h")?,
            "loop_eps": LOOP_EPS,
            "loop_steps": LOOP_STEPS,
            "loop_sign": LOOP_SIGN,
        },
        "sample_count": checks.len(),
        "sample_note": SAMPLE_NOTE,
        "tool_version": tool_version(),
    });
    let exit_code = if all_pass { EXIT_OK } else { EXIT_UNDETERMINED };
    Ok(RunOutcome { report: envelope(config, records, aggregate, exit_code)?, exit_code })
}
