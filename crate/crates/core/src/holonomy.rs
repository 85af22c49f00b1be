//! Infinitesimal holonomy algebra at a point and the subgroup of `SO(n)` it names.
//!
//! The algebra is generated by the curvature endomorphisms `R(e_i, e_j)` and,
//! optionally, their first covariant derivatives. As an independent check,
//! [`loop_holonomy`] integrates parallel transport around a small coordinate
//! rectangle and recovers the curvature from the resulting rotation.

use std::fmt;

use crate::curvature::{christoffel_at, curvature_endo, metric_at, nabla_r_all, Cluster, FramedPoint};
use crate::error::{GeomError, Result};
use crate::modelspace::ImmersionChart;
use crate::smallmat::{closure_under_brackets, invariant_blocks, rotation_log, InvariantBlocks, Mat, SkewEndo, SpanBasis};

/// Default admission tolerance for bracket closure.
pub const CLOSURE_TOL: f64 = 1e-5;
/// Relative drop threshold for curvature generators.
pub const TOL_GEN_FACTOR: f64 = 1e-6;
/// Relative drop threshold for `∇R` generators, which carry finite-difference noise.
pub const TOL_GEN_DERIVATIVE_FACTOR: f64 = 1e-3;
/// Global sign `s` with `loop_holonomy ≈ s · R(e_i, e_j)`, calibrated once on
/// the round sphere (see the `loop_sign_calibration` test).
pub const LOOP_SIGN: f64 = -1.0;

/// Highest derivative order of curvature used as generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DerivOrder {
    /// `R(X, Y)` only.
    Curvature,
    /// `R(X, Y)` and `(∇_V R)(X, Y)`.
    FirstDerivative,
}

impl DerivOrder {
    pub fn as_u8(self) -> u8 {
        match self {
            DerivOrder::Curvature => 0,
            DerivOrder::FirstDerivative => 1,
        }
    }

    pub fn from_u8(order: u8) -> Result<Self> {
        match order {
            0 => Ok(DerivOrder::Curvature),
            1 => Ok(DerivOrder::FirstDerivative),
            other => Err(GeomError::Validation(format!("order: must be 0 or 1, got {other}"))),
        }
    }
}

/// Default generator drop threshold `1e-6 · (|ν| + ‖A‖²)`.
pub fn default_tol_gen(fp: &FramedPoint) -> f64 {
    TOL_GEN_FACTOR * fp.curvature_scale()
}

/// Curvature generators at a point, in the orthonormal eigenframe of `A`.
///
/// Generators of norm at most `tol_gen` are dropped; `∇R` generators use the
/// larger threshold `1e-3 · (|ν| + ‖A‖²)` when that exceeds `tol_gen`.
pub fn generators_at(chart: &ImmersionChart, fp: &FramedPoint, order: DerivOrder, tol_gen: f64) -> Result<Vec<SkewEndo>> {
    let n = fp.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r = curvature_endo(fp, i, j)?;
            if r.norm() > tol_gen {
                out.push(r);
            }
        }
    }
    if order == DerivOrder::FirstDerivative {
        let cut = tol_gen.max(TOL_GEN_DERIVATIVE_FACTOR * fp.curvature_scale());
        for per_direction in nabla_r_all(chart, fp)? {
            out.extend(per_direction.into_iter().map(|(_, e)| e).filter(|e| e.norm() > cut));
        }
    }
    Ok(out)
}

/// Bracket closure of the generators with its invariant-subspace structure.
#[derive(Clone, Debug)]
pub struct HolonomyAlgebra {
    pub basis: SpanBasis,
    pub dim: usize,
    pub blocks: InvariantBlocks,
    pub included_orders: DerivOrder,
}

impl HolonomyAlgebra {
    pub fn n(&self) -> usize {
        self.basis.n()
    }
}

pub fn holonomy_algebra(generators: &[SkewEndo], n: usize, order: DerivOrder, tol: f64) -> Result<HolonomyAlgebra> {
    let basis = if generators.is_empty() {
        SpanBasis::empty(n)
    } else {
        if generators[0].dim() != n {
            return Err(GeomError::Dimension(format!("generators act on R^{}, expected R^{n}", generators[0].dim())));
        }
        closure_under_brackets(generators, tol)?
    };
    let blocks = invariant_blocks(&basis, tol)?;
    Ok(HolonomyAlgebra { dim: basis.dim(), basis, blocks, included_orders: order })
}

/// Subgroups of `SO(n)` the classification can name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    FullSoN,
    ProductSoKSoNk,
    SoNMinus1,
    Trivial,
    Undetermined,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::FullSoN => "FULL_SO_N",
            VerdictKind::ProductSoKSoNk => "PRODUCT_SO_K_SO_NK",
            VerdictKind::SoNMinus1 => "SO_N_MINUS_1",
            VerdictKind::Trivial => "TRIVIAL",
            VerdictKind::Undetermined => "UNDETERMINED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            VerdictKind::FullSoN,
            VerdictKind::ProductSoKSoNk,
            VerdictKind::SoNMinus1,
            VerdictKind::Trivial,
            VerdictKind::Undetermined,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }

    pub fn is_definite(self) -> bool {
        self != VerdictKind::Undetermined
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named holonomy group at a point, with the evidence behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupVerdict {
    pub kind: VerdictKind,
    pub k: Option<usize>,
    pub dim: usize,
    /// Dimension the named group must have; `None` for `UNDETERMINED`.
    pub expected_dim: Option<usize>,
    /// `(value, multiplicity)` of the principal-curvature clusters.
    pub clusters: Vec<(f64, usize)>,
    pub diagnostic: Option<String>,
}

fn so_dim(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

impl GroupVerdict {
    fn new(kind: VerdictKind, k: Option<usize>, n: usize, dim: usize, clusters: &[Cluster], diagnostic: Option<String>) -> Self {
        let expected_dim = match (kind, k) {
            (VerdictKind::FullSoN, _) => Some(so_dim(n)),
            (VerdictKind::ProductSoKSoNk, Some(k)) => Some(so_dim(k) + so_dim(n - k)),
            (VerdictKind::SoNMinus1, _) => Some(so_dim(n - 1)),
            (VerdictKind::Trivial, _) => Some(0),
            _ => None,
        };
        if let Some(e) = expected_dim {
            assert_eq!(e, dim, "{kind} verdict with algebra dimension {dim}");
        }
        match kind {
            VerdictKind::ProductSoKSoNk => {
                let k = k.expect("product verdict carries k");
                assert!(1 < k && k < n - 1, "product verdict needs 1 < k < n-1");
            }
            VerdictKind::SoNMinus1 => assert_eq!(k, Some(n - 1)),
            _ => {}
        }
        GroupVerdict {
            kind,
            k,
            dim,
            expected_dim,
            clusters: clusters.iter().map(|c| (c.value, c.multiplicity())).collect(),
            diagnostic,
        }
    }

    pub fn undetermined(dim: usize, clusters: &[Cluster], why: impl Into<String>) -> Self {
        GroupVerdict {
            kind: VerdictKind::Undetermined,
            k: None,
            dim,
            expected_dim: None,
            clusters: clusters.iter().map(|c| (c.value, c.multiplicity())).collect(),
            diagnostic: Some(why.into()),
        }
    }
}

/// Names the holonomy group from the algebra and the principal-curvature clusters.
///
/// Anything that does not match one of the named cases exactly is reported
/// as `UNDETERMINED`.
pub fn name_group(alg: &HolonomyAlgebra, clusters: &[Cluster], n: usize, nu: f64, tol_rel: f64) -> GroupVerdict {
    let dim = alg.dim;
    if dim == so_dim(n) && n >= 2 {
        return GroupVerdict::new(VerdictKind::FullSoN, None, n, dim, clusters, None);
    }
    if dim == 0 {
        if nu < 0.0 {
            return GroupVerdict::new(VerdictKind::Trivial, None, n, dim, clusters, None);
        }
        let why = if nu > 0.0 {
            "algebra vanishes although nu > 0: a hypersurface of a positively curved space form cannot be flat"
        } else {
            "algebra vanishes in a flat ambient space, outside the classified cases"
        };
        return GroupVerdict::undetermined(dim, clusters, why);
    }
    let sizes = alg.blocks.sizes();
    if sizes.len() == 2 {
        let (big, small) = (sizes[0], sizes[1]);
        if small == 1 && big == n - 1 && dim == so_dim(n - 1) {
            return GroupVerdict::new(VerdictKind::SoNMinus1, Some(n - 1), n, dim, clusters, None);
        }
        if small > 1 && dim == so_dim(big) + so_dim(small) {
            if clusters.len() != 2 {
                return GroupVerdict::undetermined(dim, clusters, format!("two invariant blocks but {} curvature clusters", clusters.len()));
            }
            let mut mults = [clusters[0].multiplicity(), clusters[1].multiplicity()];
            mults.sort_unstable_by(|a, b| b.cmp(a));
            if mults != [big, small] {
                return GroupVerdict::undetermined(dim, clusters, "block sizes differ from curvature multiplicities");
            }
            let relation = (nu + clusters[0].value * clusters[1].value).abs();
            if relation > tol_rel {
                return GroupVerdict::undetermined(dim, clusters, format!("|nu + lambda*theta| = {relation:.3e} exceeds {tol_rel:.3e}"));
            }
            return GroupVerdict::new(VerdictKind::ProductSoKSoNk, Some(small), n, dim, clusters, None);
        }
    }
    GroupVerdict::undetermined(dim, clusters, format!("algebra of dimension {dim} with block sizes {sizes:?} matches no classified case"))
}

fn christoffel_contract(chart: &ImmersionChart, x: &[f64], dir: &[f64], y: &Mat, h: f64) -> Result<Mat> {
    // returns -Γ(dir, Y) column by column
    let n = x.len();
    let g = metric_at(chart, x, h)?;
    let gamma = christoffel_at(chart, x, &g, h)?;
    Ok(Mat::from_fn(n, y.cols(), |k, a| {
        let mut acc = 0.0;
        for (m, dm) in dir.iter().enumerate() {
            for l in 0..n {
                acc += gamma[k * n * n + m * n + l] * dm * y[(l, a)];
            }
        }
        -acc
    }))
}

fn transport_edge(chart: &ImmersionChart, start: &[f64], dir: &[f64], y: Mat, steps: usize, h: f64) -> Result<Mat> {
    let dt = 1.0 / steps as f64;
    let at = |s: f64| -> Vec<f64> { start.iter().zip(dir).map(|(a, d)| a + s * d).collect() };
    let mut y = y;
    for k in 0..steps {
        let s = k as f64 * dt;
        let k1 = christoffel_contract(chart, &at(s), dir, &y, h)?;
        let k2 = christoffel_contract(chart, &at(s + 0.5 * dt), dir, &(&y + &k1.scale(0.5 * dt)), h)?;
        let k3 = christoffel_contract(chart, &at(s + 0.5 * dt), dir, &(&y + &k2.scale(0.5 * dt)), h)?;
        let k4 = christoffel_contract(chart, &at(s + dt), dir, &(&y + &k3.scale(dt)), h)?;
        let incr = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
        y = &y + &incr.scale(dt / 6.0);
    }
    Ok(y)
}

/// Holonomy of the coordinate rectangle of side `eps` spanned by the principal
/// directions `i`, `j` and centred at the base point, as `log(hol) / eps²`.
///
/// The frame is transported with a classical fourth-order Runge-Kutta step,
/// `steps` per edge. The result approximates `LOOP_SIGN · R(e_i, e_j)` in the
/// eigenframe.
pub fn loop_holonomy(chart: &ImmersionChart, fp: &FramedPoint, i: usize, j: usize, eps: f64, steps: usize) -> Result<SkewEndo> {
    let n = fp.n();
    if i == j || i >= n || j >= n {
        return Err(GeomError::Contract(format!("loop_holonomy needs distinct directions below {n}")));
    }
    if steps < 8 {
        return Err(GeomError::Contract(format!("loop_holonomy needs at least 8 steps per edge, got {steps}")));
    }
    let vi: Vec<f64> = fp.principal_direction(i).iter().map(|x| x * eps).collect();
    let vj: Vec<f64> = fp.principal_direction(j).iter().map(|x| x * eps).collect();
    let corner: Vec<f64> = fp.u.iter().zip(vi.iter().zip(&vj)).map(|(u, (a, b))| u - 0.5 * (a + b)).collect();
    let h = fp.h;

    // eigenframe re-orthonormalised at the corner
    let g0 = metric_at(chart, &corner, h)?;
    let inner = |x: &[f64], y: &[f64]| -> f64 {
        let gy = g0.mat_vec(y);
        x.iter().zip(&gy).map(|(a, b)| a * b).sum()
    };
    let mut start: Vec<Vec<f64>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v = fp.principal_direction(a);
        for _ in 0..2 {
            for c in &start {
                let p = inner(&v, c);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= p * y);
            }
        }
        let len = inner(&v, &v).sqrt();
        start.push(v.into_iter().map(|x| x / len).collect());
    }
    let frame0 = Mat::from_cols(&start);

    let neg = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| -x).collect() };
    let mut y = frame0.clone();
    let mut p = corner.clone();
    for dir in [vi.clone(), vj.clone(), neg(&vi), neg(&vj)] {
        y = transport_edge(chart, &p, &dir, y, steps, h)?;
        p = p.iter().zip(&dir).map(|(a, d)| a + d).collect();
    }

    // coefficients of the transported vectors in the starting frame
    let hol = Mat::from_fn(n, n, |b, a| inner(&y.col(a), &start[b]));
    let defect = (&(&hol.transpose() * &hol) - &Mat::identity(n)).max_abs();
    if defect > 1e-5 {
        return Err(GeomError::Integration(format!("transported frame lost orthonormality ({defect:.3e})")));
    }
    let log = rotation_log(&hol)?;
    Ok(log.scale(1.0 / (eps * eps)))
}
