//! Induced metric, shape operator and curvature of a hypersurface chart.
//!
//! Everything here is recomputed from the chart on each call. Covariant
//! derivatives of tensors (`∇A`, `∇R`, the frame connection) are taken by
//! central differences of tensor components in a frame that is
//! parallel-propagated to first order along a straight parameter line; the
//! second-order error of the propagated frame cancels in the central
//! difference.

use crate::error::{GeomError, Result};
use crate::modelspace::{jet, tangent_normal_frame, ImmersionChart};
use crate::smallmat::{inv_sqrt_spd, sym_eigen, wedge_orthonormal, Mat, SkewEndo, SymEigen};

/// Default clustering tolerance for principal curvatures.
pub const EPS_CLUSTER: f64 = 1e-4;

/// Outer difference step for covariant derivatives, in units of the jet step.
pub const OUTER_STEP_FACTOR: f64 = 4.0;

/// Everything the pipeline needs about a single point of a hypersurface.
#[derive(Clone, Debug)]
pub struct FramedPoint {
    pub u: Vec<f64>,
    pub nu: f64,
    /// Metric components `g(∂_i, ∂_j)`.
    pub g: Mat,
    /// Second fundamental form components `g(σ(∂_i,∂_j), ξ)`.
    pub b: Mat,
    /// Christoffel symbols, `gamma[k*n*n + i*n + j] = Γ^k_ij`.
    pub gamma: Vec<f64>,
    /// Shape operator in the coordinate frame, `A^k_j` at `(k, j)`.
    pub a_coord: Mat,
    /// Orthonormal tangent frame (Gram-Schmidt of `∂_i`), coordinate components per column.
    pub frame: Mat,
    /// Shape operator in `frame`; symmetric.
    pub a_frame: Mat,
    /// Spectrum of `a_frame`, descending.
    pub eigen: SymEigen,
    /// Principal directions as coordinate vectors, ordered like `eigen.values`.
    pub eigenframe: Mat,
    /// Unit normal in embedding coordinates.
    pub normal: Vec<f64>,
    /// Jet step used.
    pub h: f64,
}

impl FramedPoint {
    pub fn n(&self) -> usize {
        self.g.rows()
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.gamma[k * n * n + i * n + j]
    }

    pub fn principal_curvatures(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Operator norm of the shape operator, `max |λ_i|`.
    pub fn shape_norm(&self) -> f64 {
        self.eigen.values.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
    }

    /// Magnitude scale `|ν| + ‖A‖²` of the terms in the Gauss equation.
    pub fn curvature_scale(&self) -> f64 {
        self.nu.abs() + self.shape_norm().powi(2)
    }

    /// Metric inner product of two coordinate vectors.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        bilinear(&self.g, x, y)
    }

    /// `i`-th principal direction as a coordinate vector.
    pub fn principal_direction(&self, i: usize) -> Vec<f64> {
        self.eigenframe.col(i)
    }
}

fn bilinear(m: &Mat, x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            acc += xi * m[(i, j)] * yj;
        }
    }
    acc
}

fn shifted(u: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    u.iter().zip(dir).map(|(a, d)| a + t * d).collect()
}

/// Metric components from central first differences only.
pub fn metric_at(chart: &ImmersionChart, u: &[f64], h: f64) -> Result<Mat> {
    let n = chart.n();
    let mut d1 = Vec::with_capacity(n);
    for i in 0..n {
        let mut up = u.to_vec();
        up[i] += h;
        let mut dn = u.to_vec();
        dn[i] -= h;
        let p = chart.eval(&up)?;
        let m = chart.eval(&dn)?;
        d1.push(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let model = chart.model();
    Ok(Mat::from_fn(n, n, |i, j| model.form(&d1[i], &d1[j])))
}

/// Christoffel symbols `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)` from
/// central differences of the metric with step `h`.
pub fn christoffel_at(chart: &ImmersionChart, u: &[f64], g: &Mat, h: f64) -> Result<Vec<f64>> {
    let n = chart.n();
    let g_inv = g.inverse()?;
    let mut dg: Vec<Mat> = Vec::with_capacity(n);
    for m in 0..n {
        let mut up = u.to_vec();
        up[m] += h;
        let mut dn = u.to_vec();
        dn[m] -= h;
        let gp = metric_at(chart, &up, h)?;
        let gm = metric_at(chart, &dn, h)?;
        dg.push((&gp - &gm).scale(1.0 / (2.0 * h)));
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[k * n * n + i * n + j] = 0.5 * acc;
                gamma[k * n * n + j * n + i] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Gram-Schmidt of the coordinate basis under `g`; columns are the frame vectors.
fn orthonormal_frame(g: &Mat) -> Result<Mat> {
    let n = g.rows();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let p = bilinear(g, &v, c);
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
        }
        let len2 = bilinear(g, &v, &v);
        if !(len2 > 0.0) {
            return Err(GeomError::InvalidChart("induced metric is not positive definite".into()));
        }
        let len = len2.sqrt();
        cols.push(v.into_iter().map(|x| x / len).collect());
    }
    Ok(Mat::from_cols(&cols))
}

/// Replaces the noise-determined eigenvectors inside each repeated cluster by
/// the closest orthonormal basis to the projected frame axes, so that the
/// eigenframe varies smoothly with `u` and `h`. Axes are picked greedily by
/// the size of their remaining projection.
fn canonical_cluster_bases(eigen: &mut SymEigen) -> Result<()> {
    let n = eigen.values.len();
    for cluster in cluster_spectrum(&eigen.values, EPS_CLUSTER) {
        let m = cluster.multiplicity();
        if m < 2 {
            continue;
        }
        let basis: Vec<Vec<f64>> = cluster.indices.iter().map(|&c| eigen.vectors.col(c)).collect();
        let project = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for w in &basis {
                let p: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
                out.iter_mut().zip(w).for_each(|(o, x)| *o += p * x);
            }
            out
        };
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                let mut e = vec![0.0; n];
                e[a] = 1.0;
                project(&e)
            })
            .collect();
        let mut picked: Vec<usize> = Vec::with_capacity(m);
        let mut residuals = axes.clone();
        for _ in 0..m {
            let best = (0..n)
                .filter(|a| !picked.contains(a))
                .max_by(|&a, &b| norm(&residuals[a]).total_cmp(&norm(&residuals[b])))
                .expect("enough axes");
            let len = norm(&residuals[best]);
            let dir: Vec<f64> = residuals[best].iter().map(|x| x / len).collect();
            for r in residuals.iter_mut() {
                let p: f64 = r.iter().zip(&dir).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(&dir).for_each(|(x, d)| *x -= p * d);
            }
            picked.push(best);
        }
        picked.sort_unstable();
        let chosen: Vec<&Vec<f64>> = picked.iter().map(|&a| &axes[a]).collect();
        let overlap = Mat::from_fn(m, m, |a, b| chosen[a].iter().zip(chosen[b]).map(|(x, y)| x * y).sum());
        let s = inv_sqrt_spd(&overlap)?;
        for (pos, &c) in cluster.indices.iter().enumerate() {
            for k in 0..n {
                eigen.vectors[(k, c)] = chosen.iter().enumerate().map(|(a, v)| v[k] * s[(a, pos)]).sum();
            }
        }
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Builds the [`FramedPoint`] of `chart` at `u` with jet step `h`.
pub fn framed_point(chart: &ImmersionChart, u: &[f64], h: f64) -> Result<FramedPoint> {
    let n = chart.n();
    let model = chart.model();
    let j = jet(chart, u, h)?;
    let (_, xi) = tangent_normal_frame(chart, &j)?;
    let g = Mat::from_fn(n, n, |a, b| model.form(&j.d1[a], &j.d1[b]));
    let b = Mat::from_fn(n, n, |a, c| model.form(j.d2(a, c), &xi));
    let frame = orthonormal_frame(&g)?;
    let gamma = christoffel_at(chart, u, &g, h)?;
    let a_coord = &g.inverse()? * &b;
    let a_frame = (&(&frame.transpose() * &b) * &frame).symmetrized();
    let mut eigen = sym_eigen(&a_frame)?;
    canonical_cluster_bases(&mut eigen)?;
    let eigenframe = &frame * &eigen.vectors;
    Ok(FramedPoint {
        u: u.to_vec(),
        nu: model.nu(),
        g,
        b,
        gamma,
        a_coord,
        frame,
        a_frame,
        eigen,
        eigenframe,
        normal: xi,
        h,
    })
}

/// Curvature operator `R(X,Y) = ν X∧Y + AX∧AY` for a shape operator given in
/// an orthonormal frame.
#[derive(Clone, Debug)]
pub struct CurvatureOp {
    pub nu: f64,
    pub a_frame: Mat,
}

impl CurvatureOp {
    pub fn new(nu: f64, a_frame: Mat) -> Result<Self> {
        if a_frame.asymmetry() > 1e-8 * a_frame.max_abs().max(1.0) {
            return Err(GeomError::Contract("shape operator must be symmetric".into()));
        }
        Ok(CurvatureOp { nu, a_frame })
    }

    /// `R(x, y)` for frame-component vectors `x`, `y`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<SkewEndo> {
        let ax = self.a_frame.mat_vec(x);
        let ay = self.a_frame.mat_vec(y);
        let base = wedge_orthonormal(x, y)?.scale(self.nu);
        Ok(base.add(&wedge_orthonormal(&ax, &ay)?))
    }
}

/// `R(e_i, e_j)` in the orthonormal eigenframe of the shape operator, which
/// reduces to `(ν + λ_i λ_j) e_i∧e_j`.
pub fn curvature_endo(fp: &FramedPoint, i: usize, j: usize) -> Result<SkewEndo> {
    let n = fp.n();
    if i == j || i >= n || j >= n {
        return Err(GeomError::Contract(format!("curvature_endo needs distinct indices below {n}, got ({i},{j})")));
    }
    let a_eig = (&(&fp.eigen.vectors.transpose() * &fp.a_frame) * &fp.eigen.vectors).symmetrized();
    let op = CurvatureOp::new(fp.nu, a_eig)?;
    let mut ei = vec![0.0; n];
    ei[i] = 1.0;
    let mut ej = vec![0.0; n];
    ej[j] = 1.0;
    op.apply(&ei, &ej)
}

/// Frame `E` moved from `fp` along the coordinate direction `v` by parameter
/// `t`, parallel to first order: `P = E − t Γ(v, E)`.
fn propagated_frame(fp: &FramedPoint, frame: &Mat, v: &[f64], t: f64) -> Mat {
    let n = fp.n();
    Mat::from_fn(n, n, |k, a| {
        let mut corr = 0.0;
        for (m, vm) in v.iter().enumerate() {
            if *vm == 0.0 {
                continue;
            }
            for l in 0..n {
                corr += fp.christoffel(k, m, l) * vm * frame[(l, a)];
            }
        }
        frame[(k, a)] - t * corr
    })
}

/// Framed points and propagated eigenframes at `u ± τ v` where `v = E_dir`.
struct DirectionalPair {
    step: f64,
    plus: FramedPoint,
    minus: FramedPoint,
    frame_plus: Mat,
    frame_minus: Mat,
}

fn directional_pair(chart: &ImmersionChart, fp: &FramedPoint, dir: usize) -> Result<DirectionalPair> {
    let tau = OUTER_STEP_FACTOR * fp.h;
    let v = fp.principal_direction(dir);
    let plus = framed_point(chart, &shifted(&fp.u, &v, tau), fp.h)?;
    let minus = framed_point(chart, &shifted(&fp.u, &v, -tau), fp.h)?;
    let frame_plus = propagated_frame(fp, &fp.eigenframe, &v, tau);
    let frame_minus = propagated_frame(fp, &fp.eigenframe, &v, -tau);
    Ok(DirectionalPair { step: tau, plus, minus, frame_plus, frame_minus })
}

/// `C[((i*n + j)*n + a)*n + b] = g(R(P_i,P_j) P_b, P_a)` for the Gauss-equation curvature.
fn riemann_components(fp: &FramedPoint, p: &Mat) -> Vec<f64> {
    let n = fp.n();
    let cols: Vec<Vec<f64>> = (0..n).map(|a| p.col(a)).collect();
    let gg = Mat::from_fn(n, n, |a, b| bilinear(&fp.g, &cols[a], &cols[b]));
    let bb = Mat::from_fn(n, n, |a, b| bilinear(&fp.b, &cols[a], &cols[b]));
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out[((i * n + j) * n + a) * n + b] = fp.nu
                        * (gg[(j, b)] * gg[(i, a)] - gg[(i, b)] * gg[(j, a)])
                        + bb[(j, b)] * bb[(i, a)]
                        - bb[(i, b)] * bb[(j, a)];
                }
            }
        }
    }
    out
}

/// `((i, j), (∇_{E_dir} R)(E_i, E_j))` for `i < j`.
pub type PairDerivatives = Vec<((usize, usize), SkewEndo)>;

/// `(∇_{E_dir} R)(E_i, E_j)` for all `i < j`, as endomorphisms in the eigenframe at `u`.
pub fn nabla_r(chart: &ImmersionChart, fp: &FramedPoint, dir: usize) -> Result<PairDerivatives> {
    let n = fp.n();
    let pair = directional_pair(chart, fp, dir)?;
    let cp = riemann_components(&pair.plus, &pair.frame_plus);
    let cm = riemann_components(&pair.minus, &pair.frame_minus);
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let m = Mat::from_fn(n, n, |a, b| {
                let idx = ((i * n + j) * n + a) * n + b;
                (cp[idx] - cm[idx]) / (2.0 * pair.step)
            });
            out.push(((i, j), SkewEndo::project(&m)));
        }
    }
    Ok(out)
}

/// `∇R` along every eigenframe direction: `result[v]` is [`nabla_r`] for `E_v`.
pub fn nabla_r_all(chart: &ImmersionChart, fp: &FramedPoint) -> Result<Vec<PairDerivatives>> {
    (0..fp.n()).map(|v| nabla_r(chart, fp, v)).collect()
}

/// Norm of the cyclic sum
/// `(∇_a R)(E_b,E_c) + (∇_b R)(E_c,E_a) + (∇_c R)(E_a,E_b)`, summed in square
/// over distinct triples so that it does not depend on the frame.
pub fn bianchi_residual(fp: &FramedPoint, nabla: &[PairDerivatives]) -> f64 {
    let n = fp.n();
    let lookup = |v: usize, i: usize, j: usize| -> SkewEndo {
        let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let entry = nabla[v].iter().find(|((a, b), _)| *a == lo && *b == hi).expect("pair present");
        entry.1.scale(sign)
    };
    let mut total = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let sum = lookup(a, b, c).add(&lookup(b, c, a)).add(&lookup(c, a, b));
                total += sum.norm().powi(2);
            }
        }
    }
    total.sqrt()
}

/// Norm of `(X, Y) ↦ (∇_X A)Y − (∇_Y A)X`, summed in square over eigenframe pairs.
pub fn codazzi_residual(chart: &ImmersionChart, u: &[f64], h: f64) -> Result<f64> {
    let fp = framed_point(chart, u, h)?;
    codazzi_residual_at(chart, &fp)
}

/// [`codazzi_residual`] for an already computed base point.
pub fn codazzi_residual_at(chart: &ImmersionChart, fp: &FramedPoint) -> Result<f64> {
    codazzi_with(chart, fp, |p| p.b.clone())
}

fn codazzi_with(chart: &ImmersionChart, fp: &FramedPoint, second_form: impl Fn(&FramedPoint) -> Mat) -> Result<f64> {
    let n = fp.n();
    // da[i][(j, a)] = g((∇_{E_i} A) E_j, E_a)
    let mut da: Vec<Mat> = Vec::with_capacity(n);
    for i in 0..n {
        let pair = directional_pair(chart, fp, i)?;
        let bp = second_form(&pair.plus);
        let bm = second_form(&pair.minus);
        let fpv = &pair.frame_plus;
        let fmv = &pair.frame_minus;
        da.push(Mat::from_fn(n, n, |j, a| {
            let plus = bilinear(&bp, &fpv.col(j), &fpv.col(a));
            let minus = bilinear(&bm, &fmv.col(j), &fmv.col(a));
            (plus - minus) / (2.0 * pair.step)
        }));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += (0..n).map(|a| (da[i][(j, a)] - da[j][(i, a)]).powi(2)).sum::<f64>();
        }
    }
    Ok(total.sqrt())
}

/// Codazzi residual with one second-fundamental-form entry perturbed by `delta`
/// at every evaluation point; used to check that corruption is detected.
#[doc(hidden)]
pub fn codazzi_residual_corrupted(chart: &ImmersionChart, u: &[f64], h: f64, delta: f64) -> Result<f64> {
    let fp = framed_point(chart, u, h)?;
    let bump = |p: &FramedPoint| -> Mat {
        let mut b = p.b.clone();
        // a position-dependent bump so that its derivative does not vanish
        let w = delta * (1.0 + 10.0 * (p.u[0] - fp.u[0]));
        b[(0, 0)] += w;
        b
    };
    codazzi_with(chart, &fp, bump)
}

/// Intrinsic sectional curvatures `K(E_a, E_b)` of the eigenframe planes,
/// computed from the Christoffel symbols alone.
pub fn intrinsic_sectional(chart: &ImmersionChart, fp: &FramedPoint) -> Result<Mat> {
    let n = fp.n();
    let h = fp.h;
    let tau = OUTER_STEP_FACTOR * h;
    // dgamma[m][k*n*n + i*n + j] = ∂_m Γ^k_ij
    let mut dgamma: Vec<Vec<f64>> = Vec::with_capacity(n);
    for m in 0..n {
        let mut up = fp.u.clone();
        up[m] += tau;
        let mut dn = fp.u.clone();
        dn[m] -= tau;
        let gp = christoffel_at(chart, &up, &metric_at(chart, &up, h)?, h)?;
        let gm = christoffel_at(chart, &dn, &metric_at(chart, &dn, h)?, h)?;
        dgamma.push(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * tau)).collect());
    }
    let idx = |k: usize, i: usize, j: usize| k * n * n + i * n + j;
    // riemann[l][k][i][j] = R^l_{kij}
    let mut riemann = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = dgamma[i][idx(l, j, k)] - dgamma[j][idx(l, i, k)];
                    for m in 0..n {
                        r += fp.gamma[idx(l, i, m)] * fp.gamma[idx(m, j, k)]
                            - fp.gamma[idx(l, j, m)] * fp.gamma[idx(m, i, k)];
                    }
                    riemann[((l * n + k) * n + i) * n + j] = r;
                }
            }
        }
    }
    let e: Vec<Vec<f64>> = (0..n).map(|a| fp.principal_direction(a)).collect();
    let mut out = Mat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            // g(R(E_a,E_b)E_b, E_a)
            let mut acc = 0.0;
            for l in 0..n {
                let mut rl = 0.0;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            rl += riemann[((l * n + k) * n + i) * n + j] * e[a][i] * e[b][j] * e[b][k];
                        }
                    }
                }
                let lowered: f64 = (0..n).map(|d| fp.g[(d, l)] * e[a][d]).sum();
                acc += rl * lowered;
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// `max_{a≠b} |K_intrinsic(E_a,E_b) − (ν + λ_a λ_b)|`.
pub fn gauss_residual(chart: &ImmersionChart, fp: &FramedPoint) -> Result<f64> {
    let k = intrinsic_sectional(chart, fp)?;
    let l = fp.principal_curvatures();
    let n = fp.n();
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                worst = worst.max((k[(a, b)] - (fp.nu + l[a] * l[b])).abs());
            }
        }
    }
    Ok(worst)
}

/// A group of principal curvatures within the clustering tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub value: f64,
    /// Eigenframe indices of the members.
    pub indices: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

/// Single-linkage clustering of a descending spectrum: neighbours join when
/// `|λ_i − λ_j| <= eps · (1 + max|λ|)`.
pub fn cluster_spectrum(values: &[f64], eps: f64) -> Vec<Cluster> {
    let scale = 1.0 + values.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if values[*g.last().unwrap()] - values[i] <= eps * scale => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|indices| {
            let value = indices.iter().map(|&i| values[i]).sum::<f64>() / indices.len() as f64;
            Cluster { value, indices }
        })
        .collect()
}

/// Levi-Civita connection coefficients of a smooth principal frame field.
#[derive(Clone, Debug)]
pub struct FrameConnection {
    pub n: usize,
    /// `coeffs[(i*n + j)*n + s] = g(∇_{E_i} E_j, E_s)`.
    pub coeffs: Vec<f64>,
    pub clusters: Vec<Cluster>,
    /// `cluster_derivs[i][c] = E_i(value of cluster c)`.
    pub cluster_derivs: Vec<Vec<f64>>,
}

impl FrameConnection {
    pub fn get(&self, i: usize, j: usize, s: usize) -> f64 {
        self.coeffs[(i * self.n + j) * self.n + s]
    }

    /// `max |Γ_{ijs}|` over all `i` with `j`, `s` in different clusters.
    pub fn cross_cluster_max(&self) -> f64 {
        let owner = self.owner();
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..self.n {
                for s in 0..self.n {
                    if owner[j] != owner[s] {
                        worst = worst.max(self.get(i, j, s).abs());
                    }
                }
            }
        }
        worst
    }

    fn owner(&self) -> Vec<usize> {
        let mut owner = vec![0; self.n];
        for (c, cl) in self.clusters.iter().enumerate() {
            for &i in &cl.indices {
                owner[i] = c;
            }
        }
        owner
    }
}

/// Aligns the neighbour's principal frame with the propagated reference frame:
/// each cluster's reference vectors are projected onto the matching eigenspace
/// and orthonormalised symmetrically (the closest orthonormal frame).
fn aligned_frame(neighbour: &FramedPoint, reference: &Mat, clusters: &[Cluster], eps: f64) -> Result<Mat> {
    let n = neighbour.n();
    let theirs = cluster_spectrum(&neighbour.eigen.values, eps);
    let shape = |cs: &[Cluster]| cs.iter().map(Cluster::multiplicity).collect::<Vec<_>>();
    if shape(&theirs) != shape(clusters) {
        return Err(GeomError::Structure(format!(
            "principal multiplicities change between neighbouring points ({:?} vs {:?})",
            shape(clusters),
            shape(&theirs)
        )));
    }
    let mut out = Mat::zeros(n, n);
    for (mine, other) in clusters.iter().zip(&theirs) {
        let basis: Vec<Vec<f64>> = other.indices.iter().map(|&i| neighbour.principal_direction(i)).collect();
        let projected: Vec<Vec<f64>> = mine
            .indices
            .iter()
            .map(|&c| {
                let r = reference.col(c);
                let mut v = vec![0.0; n];
                for w in &basis {
                    let p = neighbour.inner(w, &r);
                    v.iter_mut().zip(w).for_each(|(a, b)| *a += p * b);
                }
                v
            })
            .collect();
        let m = projected.len();
        let overlap = Mat::from_fn(m, m, |a, b| neighbour.inner(&projected[a], &projected[b]));
        let s = inv_sqrt_spd(&overlap)?;
        for (col_pos, &c) in mine.indices.iter().enumerate() {
            for k in 0..n {
                out[(k, c)] = (0..m).map(|a| projected[a][k] * s[(a, col_pos)]).sum();
            }
        }
    }
    Ok(out)
}

/// Connection coefficients `Γ_{ijs} = g(∇_{E_i}E_j, E_s)` of the principal
/// frame field, with frames aligned cluster by cluster between neighbours.
pub fn frame_connection(chart: &ImmersionChart, fp: &FramedPoint, eps: f64) -> Result<FrameConnection> {
    let n = fp.n();
    let clusters = cluster_spectrum(&fp.eigen.values, eps);
    let mut coeffs = vec![0.0; n * n * n];
    let mut cluster_derivs = Vec::with_capacity(n);
    for i in 0..n {
        let pair = directional_pair(chart, fp, i)?;
        let ep = aligned_frame(&pair.plus, &pair.frame_plus, &clusters, eps)?;
        let em = aligned_frame(&pair.minus, &pair.frame_minus, &clusters, eps)?;
        for j in 0..n {
            for s in 0..n {
                let plus = pair.plus.inner(&ep.col(j), &pair.frame_plus.col(s));
                let minus = pair.minus.inner(&em.col(j), &pair.frame_minus.col(s));
                coeffs[(i * n + j) * n + s] = (plus - minus) / (2.0 * pair.step);
            }
        }
        let vp = cluster_spectrum(&pair.plus.eigen.values, eps);
        let vm = cluster_spectrum(&pair.minus.eigen.values, eps);
        cluster_derivs.push(
            vp.iter().zip(&vm).map(|(a, b)| (a.value - b.value) / (2.0 * pair.step)).collect(),
        );
    }
    Ok(FrameConnection { n, coeffs, clusters, cluster_derivs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelspace::{AmbientModel, ParamBox};

    fn round_sphere(n: usize) -> ImmersionChart {
        // unit sphere S^n ⊂ E^{n+1} by iterated angles
        let model = AmbientModel::new(0.0, n).unwrap();
        ImmersionChart::new("round sphere", model, ParamBox::cube(n, -0.6, 0.6), move |u| {
            let mut x = vec![u[n - 1].cos(), u[n - 1].sin()];
            for k in (0..n - 1).rev() {
                let c = u[k].cos();
                x.iter_mut().for_each(|v| *v *= c);
                x.push(u[k].sin());
            }
            x
        })
        .unwrap()
    }

    #[test]
    fn round_sphere_is_umbilical() {
        let chart = round_sphere(3);
        let fp = framed_point(&chart, &[0.1, -0.2, 0.3], 1e-4).unwrap();
        for l in fp.principal_curvatures() {
            assert!((l.abs() - 1.0).abs() < 1e-6, "{l}");
        }
        assert!(fp.a_frame.asymmetry() <= 1e-8 * fp.a_frame.max_abs());
    }

    #[test]
    fn christoffel_symbols_are_symmetric() {
        let chart = round_sphere(3);
        let fp = framed_point(&chart, &[0.1, -0.2, 0.3], 1e-4).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(fp.christoffel(k, i, j), fp.christoffel(k, j, i));
                }
            }
        }
    }

    #[test]
    fn curvature_endo_umbilical_and_geodesic() {
        let n = 3;
        let lam: f64 = 0.7;
        let nu = 1.0;
        let op = CurvatureOp::new(nu, Mat::identity(n).scale(lam)).unwrap();
        let r = op.apply(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        let expected = SkewEndo::unit_wedge(n, 0, 2).scale(nu + lam * lam);
        assert!(r.sub(&expected).norm() < 1e-15);
        let flat = CurvatureOp::new(1.0, Mat::zeros(n, n)).unwrap();
        let r = flat.apply(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(r, SkewEndo::unit_wedge(n, 1, 2));
    }

    #[test]
    fn curvature_endo_rejects_diagonal_pair() {
        let chart = round_sphere(3);
        let fp = framed_point(&chart, &[0.0, 0.0, 0.0], 1e-4).unwrap();
        assert!(matches!(curvature_endo(&fp, 1, 1), Err(GeomError::Contract(_))));
    }

    #[test]
    fn clustering() {
        let c = cluster_spectrum(&[4.0 / 3.0, 4.0 / 3.0, -0.75, -0.75], EPS_CLUSTER);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].multiplicity(), c[1].multiplicity()), (2, 2));
        let c = cluster_spectrum(&[1.0, 1.00005, -1.0], 2e-4);
        assert_eq!(c.len(), 2);
        assert!((c[0].value - 1.000025).abs() < 1e-12);
        assert_eq!(c[1].indices, vec![2]);
    }
}
