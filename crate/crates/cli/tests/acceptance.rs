//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one `PASS`/`FAIL` line; the process fails if any criterion does.

use std::f64::consts::PI;
use std::time::Instant;

use hyperholonomy::catalog::{self, FamilySpec};
use hyperholonomy::curvature::{
    bianchi_residual, cluster_spectrum, codazzi_residual_at, curvature_endo, framed_point, intrinsic_sectional,
    nabla_r_all, FramedPoint, EPS_CLUSTER,
};
use hyperholonomy::holonomy::{
    default_tol_gen, generators_at, holonomy_algebra, loop_holonomy, name_group, DerivOrder, GroupVerdict,
    VerdictKind, CLOSURE_TOL,
};
use hyperholonomy::modelspace::{ImmersionChart, ParamBox};
use hyperholonomy::smallmat::{bracket, closure_under_brackets, rotation_exp, Mat, SkewEndo};
use hyperholonomy::theoremcheck::{
    check_case_a, check_case_b, flatness_check, flatness_from_spectrum, SplitCase, TOL_FACTOR,
};
use hyperholonomy_cli::invoke;
use hyperholonomy_cli::json::{parse, to_canonical_string};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type CliCase<'a> = (&'a [&'a str], i32, Option<(&'a str, Option<u64>)>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Classified {
    fp: FramedPoint,
    dim: usize,
    verdict: GroupVerdict,
}

fn classify_with(chart: &ImmersionChart, fp: FramedPoint, conjugate: Option<&Mat>) -> Result<Classified, String> {
    let n = fp.n();
    let order = DerivOrder::FirstDerivative;
    let mut gens = generators_at(chart, &fp, order, default_tol_gen(&fp)).map_err(fail)?;
    if let Some(q) = conjugate {
        gens = gens.iter().map(|g| g.conjugate(q)).collect();
    }
    let alg = holonomy_algebra(&gens, n, order, CLOSURE_TOL).map_err(fail)?;
    let clusters = cluster_spectrum(&fp.eigen.values, EPS_CLUSTER);
    let verdict = name_group(&alg, &clusters, n, fp.nu, TOL_FACTOR * fp.curvature_scale());
    Ok(Classified { dim: alg.dim, verdict, fp })
}

fn classify(chart: &ImmersionChart, u: &[f64]) -> Result<Classified, String> {
    let fp = framed_point(chart, u, chart.default_step()).map_err(fail)?;
    classify_with(chart, fp, None)
}

/// Centre of the domain and four points displaced by a third of the half-width.
fn sample(chart: &ImmersionChart) -> Vec<Vec<f64>> {
    let c = chart.domain().center();
    let half: Vec<f64> = chart.domain().bounds.iter().map(|(lo, hi)| (hi - lo) / 2.0).collect();
    let n = c.len();
    let mut pts = vec![c.clone()];
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let mut p = c.clone();
        p[0] += sx * half[0] / 3.0;
        p[n - 1] += sy * half[n - 1] / 3.0;
        p[n / 2] += 0.1 * sx * half[n / 2];
        pts.push(p);
    }
    pts
}

fn spectrum_gap(values: &[f64], want: &[f64]) -> f64 {
    values.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `(value, multiplicity)` expanded into a descending spectrum.
fn expand(clusters: &[(f64, usize)]) -> Vec<f64> {
    let mut v: Vec<f64> = clusters.iter().flat_map(|&(x, m)| std::iter::repeat_n(x, m)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Closed-form principal curvatures of `S^k(r) × S^{n-k}(s) ⊂ S^{n+1}(1)`, `r² + s² = 1`.
fn clifford_oracle(n: usize, k: usize, r: f64) -> Vec<f64> {
    let s = (1.0 - r * r).sqrt();
    expand(&[(s / r, k), (-r / s, n - k)])
}

fn clifford_case(k: usize) -> Result<(ImmersionChart, Vec<FramedPoint>, Vec<Classified>), String> {
    let (chart, _) = catalog::build(&FamilySpec::clifford(4, k, 0.6, 1.0)).map_err(fail)?;
    let want = clifford_oracle(4, k, 0.6);
    let mut fps = Vec::new();
    let mut out = Vec::new();
    for u in sample(&chart) {
        let c = classify(&chart, &u)?;
        let gap = spectrum_gap(&c.fp.eigen.values, &want);
        ensure(gap <= 1e-5, || format!("spectrum {:?} misses {want:?} by {gap:.2e} at {u:?}", c.fp.eigen.values))?;
        fps.push(c.fp.clone());
        out.push(c);
    }
    Ok((chart, fps, out))
}

fn criterion_1() -> Outcome {
    let (chart, fps, points) = clifford_case(2)?;
    for c in &points {
        ensure(c.dim == 2, || format!("algebra dim {} at {:?}", c.dim, c.fp.u))?;
        ensure(c.verdict.kind == VerdictKind::ProductSoKSoNk && c.verdict.k == Some(2), || format!("verdict {:?}", c.verdict))?;
        let clusters = cluster_spectrum(&c.fp.eigen.values, EPS_CLUSTER);
        ensure(clusters.iter().map(|c| c.multiplicity()).collect::<Vec<_>>() == [2, 2], || format!("clusters {clusters:?}"))?;
    }
    let report = check_case_a(&chart, &fps, 1e-6, EPS_CLUSTER).map_err(fail)?;
    ensure(report.case == SplitCase::A && report.k == 2, || format!("case {} k {}", report.case, report.k))?;
    let want = [25.0 / 9.0, 25.0 / 16.0];
    let gap = spectrum_gap(&report.factor_curvatures, &want);
    ensure(report.factor_curvatures.len() == 2 && gap <= 1e-4, || format!("factor curvatures {:?}", report.factor_curvatures))?;
    ensure(report.relation_residual <= 1e-6, || format!("|nu + Lambda Theta| = {:.2e}", report.relation_residual))?;
    Ok(format!(
        "5 points, dim 2, PRODUCT k=2, factor curvatures {:.6}/{:.6}, |nu+LT| {:.1e}",
        report.factor_curvatures[0], report.factor_curvatures[1], report.relation_residual
    ))
}

fn criterion_2() -> Outcome {
    let (chart, fps, points) = clifford_case(3)?;
    for c in &points {
        ensure(c.dim == 3, || format!("algebra dim {} at {:?}", c.dim, c.fp.u))?;
        ensure(c.verdict.kind == VerdictKind::SoNMinus1, || format!("verdict {:?}", c.verdict))?;
    }
    let report = check_case_b(&chart, &fps, TOL_FACTOR * fps[0].curvature_scale(), EPS_CLUSTER).map_err(fail)?;
    ensure(report.case == SplitCase::B, || format!("case {}: {:?}", report.case, report.diagnostic))?;
    let gamma = report.gamma_aan.ok_or("no Gamma_aan in case b")?;
    ensure(gamma <= 1e-4, || format!("|Gamma_aan| = {gamma:.2e}"))?;
    let k = report.factor_curvatures.first().copied().unwrap_or(f64::NAN);
    ensure((k - 25.0 / 9.0).abs() <= 1e-4, || format!("factor curvature {k}"))?;
    Ok(format!("dim 3, SO_N_MINUS_1, case b, |Gamma_aan| {gamma:.1e}, factor curvature {k:.6}"))
}

fn umbilic_case(spec: FamilySpec, lambda: f64, dim: usize, kind: VerdictKind) -> Result<(ImmersionChart, Vec<Classified>), String> {
    let (chart, _) = catalog::build(&spec).map_err(fail)?;
    let want = vec![lambda; spec.n];
    let mut out = Vec::new();
    for u in sample(&chart) {
        let c = classify(&chart, &u)?;
        let gap = spectrum_gap(&c.fp.eigen.values, &want);
        ensure(gap <= 1e-5, || format!("spectrum {:?} misses {lambda} by {gap:.2e}", c.fp.eigen.values))?;
        ensure(c.dim == dim, || format!("algebra dim {} at {:?}", c.dim, u))?;
        ensure(c.verdict.kind == kind, || format!("verdict {:?}", c.verdict))?;
        out.push(c);
    }
    Ok((chart, out))
}

fn criterion_3() -> Outcome {
    let lambda = 1.0 / (PI / 3.0).tan();
    umbilic_case(FamilySpec::geodesic_sphere_s(4, PI / 3.0, 1.0), lambda, 6, VerdictKind::FullSoN)?;
    Ok(format!("spectrum {lambda:.6} x4, dim 6, FULL_SO_N"))
}

fn criterion_4() -> Outcome {
    let (_, points) = umbilic_case(FamilySpec::horosphere(4, -1.0), 1.0, 0, VerdictKind::Trivial)?;
    let worst = points
        .iter()
        .map(|c| flatness_from_spectrum(&c.fp.eigen.values, -1.0, 1e-6))
        .map(|f| f.flat.then_some(f.max_residual).ok_or(f.max_residual))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|r| format!("max|nu + l_i l_j| = {r:.2e}"))?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(format!("spectrum 1 x4, max|nu+l_i l_j| {worst:.1e}, dim 0, TRIVIAL"))
}

fn criterion_5() -> Outcome {
    let t: f64 = 0.5;
    let (chart, points) = umbilic_case(FamilySpec::equidistant(4, t, -1.0), t.tanh(), 6, VerdictKind::FullSoN)?;
    let want = -1.0 / t.cosh().powi(2);
    let mut worst = 0.0_f64;
    for c in &points {
        let k = intrinsic_sectional(&chart, &c.fp).map_err(fail)?;
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    worst = worst.max((k[(a, b)] - want).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-4, || format!("intrinsic curvature misses {want} by {worst:.2e}"))?;
    Ok(format!("spectrum tanh(0.5) x4, FULL_SO_N, intrinsic curvature {want:.6} to {worst:.1e}"))
}

fn catalog_specs() -> Vec<FamilySpec> {
    vec![
        FamilySpec::clifford(4, 2, 0.6, 1.0),
        FamilySpec::clifford(4, 3, 0.6, 1.0),
        FamilySpec::clifford(4, 1, 0.7, 1.0),
        FamilySpec::geodesic_sphere_s(4, PI / 3.0, 1.0),
        FamilySpec::geodesic_sphere_h(4, 1.0, -1.0),
        FamilySpec::horosphere(4, -1.0),
        FamilySpec::equidistant(4, 0.5, -1.0),
        FamilySpec::totally_geodesic(4, 1.0),
        FamilySpec::totally_geodesic(4, -1.0),
        FamilySpec::graph_generic(4, 1.0, 0.3, 1.0),
        FamilySpec::graph_generic(4, 0.0, 0.3, 1.0),
        FamilySpec::graph_generic(4, -1.0, 0.3, 1.0),
    ]
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut closest = f64::INFINITY;
    for case in 0..10_000 {
        let n = 3 + case % 3;
        let values: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()
        } else {
            // one curvature against n-1 copies of its negative reciprocal: every pair but one is "flat"
            let a: f64 = rng.gen_range(0.05..20.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            std::iter::once(a).chain(std::iter::repeat_n(-1.0 / a, n - 1)).collect()
        };
        let f = flatness_from_spectrum(&values, 1.0, 1e-6);
        ensure(!f.flat, || format!("spectrum {values:?} reported flat"))?;
        closest = closest.min(f.max_residual);
    }
    let mut charts = 0;
    for spec in catalog_specs().into_iter().filter(|s| s.nu > 0.0) {
        let (chart, _) = catalog::build(&spec).map_err(fail)?;
        for u in sample(&chart) {
            let fp = framed_point(&chart, &u, chart.default_step()).map_err(fail)?;
            ensure(!flatness_check(&fp, TOL_FACTOR * fp.curvature_scale()).flat, || format!("{} flat at {u:?}", spec.family))?;
        }
        charts += 1;
    }
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..=5);
        let nu = rng.gen_range(0.2..2.0);
        let spec = FamilySpec::graph_generic(n, nu, rng.gen_range(-0.5..0.5), rng.gen_range(0.2..3.0));
        let (chart, _) = catalog::build(&spec).map_err(fail)?;
        let u: Vec<f64> = chart.domain().bounds.iter().map(|(lo, hi)| rng.gen_range(lo * 0.8..hi * 0.8)).collect();
        let fp = framed_point(&chart, &u, chart.default_step()).map_err(fail)?;
        ensure(!flatness_check(&fp, TOL_FACTOR * fp.curvature_scale()).flat, || format!("random chart {spec:?} flat"))?;
        charts += 1;
    }
    Ok(format!("10^4 spectra never flat (closest max residual {closest:.2e}); {charts} charts with nu > 0 never flat"))
}

fn outer_wedge(n: usize, i: usize, j: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    m[i * n + j] += 1.0;
    m[j * n + i] -= 1.0;
    m
}

fn criterion_7() -> Outcome {
    let mut count = 0;
    for n in 3..=6 {
        for a in 0..n {
            for b in 0..n {
                for u in 0..n {
                    if a == b || b == u || a == u {
                        continue;
                    }
                    let got = bracket(&SkewEndo::unit_wedge(n, b, a), &SkewEndo::unit_wedge(n, a, u)).map_err(fail)?;
                    let want = outer_wedge(n, b, u);
                    let err = got.mat().as_slice().iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    ensure(err <= 1e-12, || format!("n={n} (a,b,u)=({a},{b},{u}) off by {err:e}"))?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} triples over n = 3..6 exact to 1e-12"))
}

/// Rank of a family of vectors by modified Gram-Schmidt with column pivoting.
fn pivoted_rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    let mut rest: Vec<Vec<f64>> = vectors.to_vec();
    let mut rank = 0;
    loop {
        let norms: Vec<f64> = rest.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        let Some((p, &np)) = norms.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else { return rank };
        if np <= tol {
            return rank;
        }
        let q: Vec<f64> = rest.swap_remove(p).iter().map(|x| x / np).collect();
        for v in &mut rest {
            let c: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(&q).for_each(|(a, b)| *a -= c * b);
        }
        rank += 1;
    }
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    c
}

/// Dimension of the bracket closure by repeated augmentation with all pairwise brackets.
fn closure_oracle(n: usize, gens: &[Vec<f64>]) -> usize {
    let mut set = gens.to_vec();
    let mut rank = pivoted_rank(&set, 1e-9);
    loop {
        let mut next = set.clone();
        for a in &set {
            for b in &set {
                let ab = matmul(n, a, b);
                let ba = matmul(n, b, a);
                next.push(ab.iter().zip(&ba).map(|(x, y)| x - y).collect());
            }
        }
        let r = pivoted_rank(&next, 1e-9);
        if r == rank {
            return rank;
        }
        // keep a spanning subset small enough to square again
        set = reduce(&next, 1e-9);
        rank = r;
    }
}

fn reduce(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut trial = kept.clone();
        trial.push(v.clone());
        if pivoted_rank(&trial, tol) > kept.len() {
            kept.push(v.clone());
        }
    }
    kept
}

fn criterion_8() -> Outcome {
    let mut dims = std::collections::BTreeMap::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
        let n = rng.gen_range(2..=5);
        let count = rng.gen_range(1..=4);
        // generators live on random axis subsets so that closures of every size occur
        let support: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.85)).collect();
        let mut raw = Vec::new();
        for _ in 0..count {
            let mut m = vec![0.0; n * n];
            for _ in 0..rng.gen_range(1..=3) {
                if support.len() < 2 {
                    break;
                }
                let i = support[rng.gen_range(0..support.len())];
                let j = support[rng.gen_range(0..support.len())];
                if i != j {
                    let c = rng.gen_range(-2.0..2.0);
                    m[i * n + j] += c;
                    m[j * n + i] -= c;
                }
            }
            raw.push(m);
        }
        let gens: Vec<SkewEndo> = raw
            .iter()
            .map(|m| SkewEndo::new(Mat::from_fn(n, n, |i, j| m[i * n + j])))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let got = closure_under_brackets(&gens, 1e-9).map_err(fail)?.dim();
        let want = closure_oracle(n, &raw);
        ensure(got == want, || format!("seed {seed}: closure dim {got}, oracle {want}"))?;
        *dims.entry(want).or_insert(0) += 1;
    }
    Ok(format!("100 sets agree; dimension histogram {dims:?}"))
}

fn loop_gaps(chart: &ImmersionChart, fp: &FramedPoint, eps: f64, sign: f64) -> Result<(f64, f64), String> {
    // (max gap, max gap / (1 + ‖R‖)) over frame pairs
    let n = fp.n();
    let (mut gap, mut rel) = (0.0_f64, 0.0_f64);
    for i in 0..n {
        for j in i + 1..n {
            let r = curvature_endo(fp, i, j).map_err(fail)?;
            let l = loop_holonomy(chart, fp, i, j, eps, 16).map_err(fail)?;
            let g = l.sub(&r.scale(sign)).norm();
            gap = gap.max(g);
            rel = rel.max(g / (1.0 + r.norm()));
        }
    }
    Ok((gap, rel))
}

fn criterion_9() -> Outcome {
    let mut rel_by_sign = [0.0_f64; 2];
    let mut halvings = Vec::new();
    for spec in catalog_specs() {
        let (chart, _) = catalog::build(&spec).map_err(fail)?;
        let fp = framed_point(&chart, &chart.domain().center(), chart.default_step()).map_err(fail)?;
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            rel_by_sign[slot] = rel_by_sign[slot].max(loop_gaps(&chart, &fp, 1e-2, sign)?.1);
        }
        halvings.push((spec.family, loop_gaps(&chart, &fp, 1e-2, -1.0)?.0, loop_gaps(&chart, &fp, 5e-3, -1.0)?.0));
    }
    let (slot, rel) = if rel_by_sign[0] <= rel_by_sign[1] { (0, rel_by_sign[0]) } else { (1, rel_by_sign[1]) };
    let sign = [1.0, -1.0][slot];
    ensure(rel <= 5e-2, || format!("best global sign {sign} leaves relative gap {rel:.3e}"))?;
    ensure(sign == -1.0, || "the global sign is +1, halving was measured with -1".into())?;
    for (family, coarse, fine) in &halvings {
        // a flat chart has R = 0 and loops that close to rounding error
        ensure(fine < coarse || *coarse <= 1e-9, || format!("{family}: gap {coarse:.3e} -> {fine:.3e} after halving eps"))?;
    }
    let ratio = halvings.iter().filter(|h| h.1 > 1e-9).map(|h| h.1 / h.2).fold(f64::INFINITY, f64::min);
    Ok(format!("sign s = {sign}, max gap/(1+|R|) {rel:.2e}, halving eps shrinks every gap (min ratio {ratio:.2})"))
}

fn residuals(chart: &ImmersionChart, h: f64) -> Result<(f64, f64, FramedPoint), String> {
    let fp = framed_point(chart, &chart.domain().center(), h).map_err(fail)?;
    let cz = codazzi_residual_at(chart, &fp).map_err(fail)?;
    let bi = bianchi_residual(&fp, &nabla_r_all(chart, &fp).map_err(fail)?);
    Ok((cz, bi, fp))
}

/// Residuals below this are rounding noise; ratios of such values carry no order information.
const EXACT_FLOOR: f64 = 1e-9;

fn criterion_10() -> Outcome {
    let mut ratios = Vec::new();
    let mut exact = 0;
    for spec in catalog_specs() {
        let (chart, _) = catalog::build(&spec).map_err(fail)?;
        let (cz, bi, fp) = residuals(&chart, 1e-4)?;
        let a2 = fp.shape_norm().powi(2);
        let r_norm = fp.curvature_scale();
        let n = fp.n() as f64;
        ensure(cz <= 1e-3 * (1.0 + a2), || format!("{}: Codazzi {cz:.2e}", spec.family))?;
        ensure(bi <= 1e-2 * r_norm * n, || format!("{}: Bianchi {bi:.2e}", spec.family))?;
        // the truncation error is measured where it dominates rounding
        let (cz1, bi1, _) = residuals(&chart, 1e-2)?;
        let (cz2, bi2, _) = residuals(&chart, 5e-3)?;
        for (what, coarse, fine) in [("Codazzi", cz1, cz2), ("Bianchi", bi1, bi2)] {
            if coarse <= EXACT_FLOOR {
                exact += 1;
                continue;
            }
            let ratio = coarse / fine;
            ensure((3.0..=5.0).contains(&ratio), || format!("{} {what}: h-halving ratio {ratio:.3}", spec.family))?;
            ratios.push(ratio);
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!("tolerances met at h=1e-4; halving ratios in [{lo:.3}, {hi:.3}] ({} measured, {exact} exact)", ratios.len()))
}

fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> Result<Mat, String> {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x = rng.gen_range(-PI..PI);
            m[(i, j)] = x;
            m[(j, i)] = -x;
        }
    }
    Ok(rotation_exp(&SkewEndo::new(m).map_err(fail)?))
}

/// The chart precomposed with the rotation `u ↦ c + Q (u − c)` about the domain centre,
/// on a box small enough that the rotated points stay in the original domain.
fn reframed(chart: &ImmersionChart, q: &Mat) -> Result<ImmersionChart, String> {
    let c = chart.domain().center();
    let n = c.len();
    let half = chart.domain().bounds.iter().map(|(lo, hi)| (hi - lo) / 2.0).fold(f64::INFINITY, f64::min);
    let w = 0.95 * half / (n as f64).sqrt();
    let domain = ParamBox::new(c.iter().map(|x| (x - w, x + w)).collect()).map_err(fail)?;
    let inner = chart.clone();
    let (q, c0) = (q.clone(), c.clone());
    let dim = chart.model().embedding_dim();
    ImmersionChart::new(chart.label(), *chart.model(), domain, move |u| {
        let d: Vec<f64> = u.iter().zip(&c0).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = q.mat_vec(&d).iter().zip(&c0).map(|(a, b)| a + b).collect();
        inner.eval(&v).unwrap_or_else(|_| vec![f64::NAN; dim])
    })
    .map_err(fail)
}

fn verdict_key(c: &Classified) -> (VerdictKind, Option<usize>) {
    (c.verdict.kind, c.verdict.k)
}

fn criterion_11() -> Outcome {
    let mut checks = 0;
    for spec in catalog_specs() {
        let (chart, _) = catalog::build(&spec).map_err(fail)?;
        let flipped = chart.with_flipped_normal();
        let c = chart.domain().center();
        let half = chart.domain().bounds.iter().map(|(lo, hi)| (hi - lo) / 2.0).fold(f64::INFINITY, f64::min);
        let offsets: Vec<Vec<f64>> = vec![vec![0.0; c.len()], c.iter().enumerate().map(|(i, _)| 0.2 * half * if i % 2 == 0 { 1.0 } else { -0.5 }).collect()];
        for off in &offsets {
            let u: Vec<f64> = c.iter().zip(off).map(|(a, b)| a + b).collect();
            let base = classify(&chart, &u)?;
            let flip = classify(&flipped, &u)?;
            ensure(verdict_key(&base) == verdict_key(&flip), || format!("{}: flip changes {:?} to {:?}", spec.family, verdict_key(&base), verdict_key(&flip)))?;
            checks += 1;
            for seed in 0..10u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1100 + seed);
                let q = random_rotation(c.len(), &mut rng)?;
                // pull the point back through the rotation so both charts see the same surface point
                let back: Vec<f64> = q.transpose().mat_vec(off).iter().zip(&c).map(|(a, b)| a + b).collect();
                for (label, target) in [("reframed", reframed(&chart, &q)?), ("reframed+flipped", reframed(&flipped, &q)?)] {
                    let other = classify(&target, &back)?;
                    ensure(verdict_key(&base) == verdict_key(&other), || format!("{} seed {seed} {label}: {:?} vs {:?}", spec.family, verdict_key(&base), verdict_key(&other)))?;
                    checks += 1;
                }
                let conj = classify_with(&chart, base.fp.clone(), Some(&q))?;
                ensure(verdict_key(&base) == verdict_key(&conj), || format!("{} seed {seed} conjugated generators: {:?} vs {:?}", spec.family, verdict_key(&base), verdict_key(&conj)))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} comparisons over {} charts and 10 seeds, no verdict changed", catalog_specs().len()))
}

fn cli(args: &[&str]) -> hyperholonomy_cli::Invocation {
    invoke(std::iter::once("hyperholonomy").chain(args.iter().copied()))
}

fn round_trip(stdout: &str) -> Result<(), String> {
    let value = parse(stdout).map_err(fail)?;
    let again = to_canonical_string(&value).map_err(fail)?;
    ensure(again == stdout, || "JSON re-serialisation differs from the emitted report".into())
}

fn replay(stdout: &str) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(fail)?;
    let path = dir.path().join("report.json");
    std::fs::write(&path, stdout).map_err(fail)?;
    let command = parse(stdout).map_err(fail)?["config"]["command"].as_str().unwrap_or("classify").to_string();
    let again = cli(&[&command, "--config", path.to_str().ok_or("temp path")?, "--output", "json"]);
    ensure(again.stdout == stdout, || "replaying the echoed config changed the report".into())
}

fn criterion_12() -> Outcome {
    let cases: [CliCase; 3] = [
        (&["classify", "--family", "clifford_product", "--n", "4", "--k", "2", "--r", "0.6", "--nu", "1", "--grid", "3"], 0, Some(("PRODUCT_SO_K_SO_NK", Some(2)))),
        (&["classify", "--family", "horosphere", "--n", "4", "--nu", "-1"], 0, Some(("TRIVIAL", None))),
        (&["classify", "--family", "clifford_product", "--n", "4", "--k", "2", "--r", "2", "--nu", "1"], 1, None),
    ];
    let mut runs = 0;
    for (args, code, consensus) in cases {
        let text = cli(args);
        ensure(text.exit_code == code, || format!("{args:?}: exit {} (want {code}); {}", text.exit_code, text.stderr))?;
        let mut json_args = args.to_vec();
        json_args.extend(["--output", "json"]);
        let out = cli(&json_args);
        ensure(out.exit_code == code, || format!("{json_args:?}: exit {}", out.exit_code))?;
        if let Some((kind, k)) = consensus {
            let report = parse(&out.stdout).map_err(fail)?;
            let got = &report["aggregate"]["consensus"];
            ensure(got["kind"] == kind && got["k"].as_u64() == k, || format!("{args:?}: consensus {got}"))?;
            round_trip(&out.stdout)?;
            replay(&out.stdout)?;
            runs += 1;
        } else {
            ensure(out.stderr.starts_with("error[E_VALIDATION]"), || format!("{args:?}: stderr {:?}", out.stderr))?;
        }
    }
    // the remaining acceptance charts through the CLI as well
    for args in [
        &["classify", "--family", "clifford_product", "--n", "4", "--k", "3", "--r", "0.6", "--nu", "1"][..],
        &["classify", "--family", "geodesic_sphere_S", "--n", "4", "--nu", "1"][..],
        &["classify", "--family", "equidistant", "--n", "4", "--t", "0.5", "--nu", "-1"][..],
        &["verify", "--family", "clifford_product", "--n", "4", "--k", "2", "--r", "0.6", "--nu", "1", "--grid", "2"][..],
        &["verify", "--family", "horosphere", "--n", "4", "--nu", "-1", "--grid", "2"][..],
    ] {
        let mut json_args = args.to_vec();
        json_args.extend(["--output", "json"]);
        let out = cli(&json_args);
        ensure(out.exit_code == 0, || format!("{args:?}: exit {}; {}", out.exit_code, out.stderr))?;
        round_trip(&out.stdout)?;
        replay(&out.stdout)?;
        runs += 1;
    }
    Ok(format!("exit codes 0/0/1 as stated; {runs} JSON reports round-trip and replay byte-identically"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("clifford product S2 x S2", criterion_1),
        ("clifford product S3 x S1", criterion_2),
        ("geodesic sphere in S5", criterion_3),
        ("horosphere in H5", criterion_4),
        ("equidistant hypersurface in H5", criterion_5),
        ("no flat hypersurface for nu > 0", criterion_6),
        ("bracket identity", criterion_7),
        ("closure oracle", criterion_8),
        ("loop holonomy vs curvature", criterion_9),
        ("Codazzi and Bianchi residuals", criterion_10),
        ("invariance under flip and reframing", criterion_11),
        ("CLI contract", criterion_12),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status}: {name}: {detail} [{:.2}s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 12 passed in {:.1}s", 12 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
