//! Skew-symmetric endomorphisms, wedges and bracket closure in `so(n)`.
//!
//! Skew matrices are compared with the trace inner product
//! `<A, B> = -tr(AB) / 2`, under which every unit wedge `e_i ∧ e_j` has
//! norm one. All tolerances in this module are measured in that norm.

use std::collections::VecDeque;

use super::eigen::sym_eigen;
use super::mat::{dot, Mat};
use crate::error::{GeomError, Result};

const SKEW_TOL: f64 = 1e-12;

/// An element of `so(n)` written in a fixed orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewEndo(Mat);

impl SkewEndo {
    /// Wraps a matrix, checking `m + m^T = 0` to within `1e-12` absolute.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(GeomError::Dimension(format!(
                "skew endomorphism must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        for i in 0..n {
            for j in 0..=i {
                if (m[(i, j)] + m[(j, i)]).abs() > SKEW_TOL {
                    return Err(GeomError::Contract(format!(
                        "matrix is not skew-symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(SkewEndo(m))
    }

    /// Skew part `(m - m^T) / 2`; never fails.
    pub fn project(m: &Mat) -> Self {
        assert!(m.is_square());
        SkewEndo(Mat::from_fn(m.rows(), m.cols(), |i, j| 0.5 * (m[(i, j)] - m[(j, i)])))
    }

    pub fn zero(n: usize) -> Self {
        SkewEndo(Mat::zeros(n, n))
    }

    /// `e_i ∧ e_j` in an orthonormal frame: `e_j ↦ e_i`, `e_i ↦ -e_j`.
    pub fn unit_wedge(n: usize, i: usize, j: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        if i != j {
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
        }
        SkewEndo(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        SkewEndo(self.0.scale(s))
    }

    pub fn add(&self, other: &SkewEndo) -> Self {
        SkewEndo(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SkewEndo) -> Self {
        SkewEndo(&self.0 - &other.0)
    }

    /// Trace inner product `-tr(AB)/2`.
    pub fn inner(&self, other: &SkewEndo) -> f64 {
        0.5 * dot(self.0.as_slice(), other.0.as_slice())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `Q A Q^T` for an orthogonal change of frame `Q`.
    pub fn conjugate(&self, q: &Mat) -> Self {
        SkewEndo::project(&(&(q * &self.0) * &q.transpose()))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.0.mat_vec(v)
    }
}

/// The endomorphism `z ↦ g(y,z) x - g(x,z) y`.
///
/// Entries are returned in the frame of `x` and `y`; the result is
/// skew-symmetric with respect to `g` (and plainly skew when `g = I`).
pub fn wedge(x: &[f64], y: &[f64], g: &Mat) -> Result<Mat> {
    let n = x.len();
    if y.len() != n || g.rows() != n || g.cols() != n {
        return Err(GeomError::Dimension(format!(
            "wedge: |x|={}, |y|={}, g is {}x{}",
            n,
            y.len(),
            g.rows(),
            g.cols()
        )));
    }
    let gx = g.mat_vec(x);
    let gy = g.mat_vec(y);
    Ok(Mat::from_fn(n, n, |r, c| x[r] * gy[c] - y[r] * gx[c]))
}

/// Wedge in an orthonormal frame, returned as an element of `so(n)`.
pub fn wedge_orthonormal(x: &[f64], y: &[f64]) -> Result<SkewEndo> {
    let m = wedge(x, y, &Mat::identity(x.len()))?;
    Ok(SkewEndo::project(&m))
}

/// Commutator `ab - ba`.
pub fn bracket(a: &SkewEndo, b: &SkewEndo) -> Result<SkewEndo> {
    if a.dim() != b.dim() {
        return Err(GeomError::Dimension(format!(
            "bracket of {}x{} and {}x{} endomorphisms",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let ab = a.mat() * b.mat();
    let ba = b.mat() * a.mat();
    Ok(SkewEndo::project(&(&ab - &ba)))
}

/// Orthonormal basis (trace inner product) of a linear subspace of `so(n)`.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    n: usize,
    elements: Vec<SkewEndo>,
}

impl SpanBasis {
    pub fn empty(n: usize) -> Self {
        SpanBasis { n, elements: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[SkewEndo] {
        &self.elements
    }

    /// Component of `x` orthogonal to the span, by twice-iterated Gram-Schmidt.
    pub fn residual(&self, x: &SkewEndo) -> SkewEndo {
        let mut r = x.clone();
        for _ in 0..2 {
            for e in &self.elements {
                let c = r.inner(e);
                r = r.sub(&e.scale(c));
            }
        }
        r
    }

    /// Distance from `x` to the span.
    pub fn distance(&self, x: &SkewEndo) -> f64 {
        self.residual(x).norm()
    }

    /// Admits `x` when its orthogonal component exceeds `tol`; returns whether it did.
    pub fn try_admit(&mut self, x: &SkewEndo, tol: f64) -> bool {
        if self.elements.len() >= self.n * self.n.saturating_sub(1) / 2 {
            return false;
        }
        let r = self.residual(x);
        let nr = r.norm();
        if nr > tol {
            self.elements.push(r.scale(1.0 / nr));
            true
        } else {
            false
        }
    }
}

/// Smallest bracket-closed subspace containing the generators.
///
/// Generators are admitted in order, then pending brackets are processed
/// first-in first-out; each admitted element enqueues its brackets with every
/// earlier element. The result is deterministic for a given input order.
pub fn closure_under_brackets(generators: &[SkewEndo], tol: f64) -> Result<SpanBasis> {
    let n = match generators.first() {
        Some(g) => g.dim(),
        None => return Err(GeomError::Contract("closure needs at least one generator".into())),
    };
    if let Some(bad) = generators.iter().find(|g| g.dim() != n) {
        return Err(GeomError::Dimension(format!(
            "generator of dimension {} among dimension {}",
            bad.dim(),
            n
        )));
    }
    let mut span = SpanBasis::empty(n);
    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();
    for g in generators {
        if span.try_admit(g, tol) {
            let k = span.dim() - 1;
            pending.extend((0..k).map(|j| (j, k)));
        }
    }
    let full = n * (n - 1) / 2;
    while let Some((i, j)) = pending.pop_front() {
        if span.dim() == full {
            break;
        }
        let b = bracket(&span.elements[i], &span.elements[j])?;
        if span.try_admit(&b, tol) {
            let k = span.dim() - 1;
            pending.extend((0..k).map(|j| (j, k)));
        }
    }
    Ok(span)
}

/// Orthogonal decomposition of `R^n` into subspaces invariant under an algebra.
#[derive(Clone, Debug)]
pub struct InvariantBlocks {
    /// Adapted orthonormal frame, one basis vector per column.
    pub frame: Mat,
    /// Index sets into the columns of `frame`; they partition `0..n`.
    pub blocks: Vec<Vec<usize>>,
    /// True when every block is spanned by coordinate axes, in which case
    /// `frame` is the identity and the index sets refer to the input frame.
    pub coordinate_aligned: bool,
}

impl InvariantBlocks {
    /// Block sizes in descending order.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

/// Fixed pseudo-random weights so that the commutant probe is reproducible.
fn probe_weights(count: usize) -> Vec<f64> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    (0..count)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 + 0.5
        })
        .collect()
}

/// Finest orthogonal decomposition into subspaces invariant under every element
/// of `basis`, to within `tol`.
///
/// A generic symmetric element of the commutant of the algebra is diagonalised;
/// its eigenspaces are the invariant blocks.
pub fn invariant_blocks(basis: &SpanBasis, tol: f64) -> Result<InvariantBlocks> {
    let n = basis.n();
    // orthonormal basis of symmetric n x n matrices
    let mut sym_basis: Vec<Mat> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut m = Mat::zeros(n, n);
            if i == j {
                m[(i, i)] = 1.0;
            } else {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = r;
                m[(j, i)] = r;
            }
            sym_basis.push(m);
        }
    }
    let d = sym_basis.len();
    // Gram matrix of X ↦ ([B_k, X])_k restricted to symmetric X
    let images: Vec<Vec<f64>> = sym_basis
        .iter()
        .map(|x| {
            basis
                .elements()
                .iter()
                .flat_map(|b| {
                    let c = &(b.mat() * x) - &(x * b.mat());
                    c.as_slice().to_vec()
                })
                .collect()
        })
        .collect();
    let gram = Mat::from_fn(d, d, |i, j| dot(&images[i], &images[j]));
    let eig = sym_eigen(&gram.symmetrized())?;
    let null_cut = (tol * tol).max(1e-24);
    let null_vectors: Vec<Vec<f64>> = (0..d)
        .filter(|&i| eig.values[i] <= null_cut)
        .map(|i| eig.vector(i))
        .collect();

    let weights = probe_weights(null_vectors.len());
    let mut probe = Mat::zeros(n, n);
    for (w, v) in weights.iter().zip(&null_vectors) {
        for (c, s) in v.iter().zip(&sym_basis) {
            probe = &probe + &s.scale(w * c);
        }
    }

    // Common kernel of the algebra: any splitting of it is invariant, so it is
    // broken into lines, along coordinate axes when possible.
    let mut kernel_gram = Mat::zeros(n, n);
    for b in basis.elements() {
        kernel_gram = &kernel_gram + &(&b.mat().transpose() * b.mat());
    }
    let kernel_eig = sym_eigen(&kernel_gram.symmetrized())?;
    let kernel: Vec<Vec<f64>> = (0..n)
        .filter(|&i| kernel_eig.values[i] <= null_cut)
        .map(|i| kernel_eig.vector(i))
        .collect();
    let mut kernel_proj = Mat::zeros(n, n);
    for v in &kernel {
        kernel_proj = &kernel_proj + &Mat::from_fn(n, n, |r, c| v[r] * v[c]);
    }
    let complement = &Mat::identity(n) - &kernel_proj;
    let probe = &(&complement * &probe) * &complement;
    let spread = probe.max_abs().max(1.0) * n as f64;
    let marker = 10.0 * spread + 10.0;
    let probe = &probe + &kernel_proj.scale(marker);
    let probe_eig = sym_eigen(&probe.symmetrized())?;
    let cluster_gap = (100.0 * tol).max(1e-8) * spread;

    let mut kernel_cols: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if (probe_eig.values[i] - marker).abs() <= 0.5 * marker - spread {
            kernel_cols.push(i);
            continue;
        }
        match groups.last_mut() {
            Some(g) if probe_eig.values[g[g.len() - 1]] - probe_eig.values[i] <= cluster_gap => {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }

    // try to express each block as a set of coordinate axes
    let axis_weight = |axis: usize, cols: &[usize]| -> f64 {
        cols.iter().map(|&c| probe_eig.vectors[(axis, c)].powi(2)).sum()
    };
    let mut aligned = true;
    let mut axis_blocks: Vec<Vec<usize>> = Vec::new();
    let mut claimed = vec![false; n];
    let mut claim = |cols: &[usize], aligned: &mut bool| -> Vec<usize> {
        let mut axes = Vec::new();
        for (axis, taken) in claimed.iter_mut().enumerate() {
            let w = axis_weight(axis, cols);
            if w > 1.0 - 1e-6 {
                if *taken {
                    *aligned = false;
                }
                *taken = true;
                axes.push(axis);
            } else if w > 1e-6 {
                *aligned = false;
            }
        }
        if axes.len() != cols.len() {
            *aligned = false;
        }
        axes
    };
    for g in &groups {
        let axes = claim(g, &mut aligned);
        axis_blocks.push(axes);
    }
    let kernel_axes = claim(&kernel_cols, &mut aligned);
    axis_blocks.extend(kernel_axes.into_iter().map(|a| vec![a]));

    if aligned {
        axis_blocks.sort_by_key(|b| b[0]);
        Ok(InvariantBlocks { frame: Mat::identity(n), blocks: axis_blocks, coordinate_aligned: true })
    } else {
        groups.extend(kernel_cols.into_iter().map(|c| vec![c]));
        Ok(InvariantBlocks { frame: probe_eig.vectors.clone(), blocks: groups, coordinate_aligned: false })
    }
}
