use super::mat::Mat;
use crate::error::{GeomError, Result};

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, ordered like `values`.
    pub vectors: Mat,
}

impl SymEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.col(i)
    }

    /// `V diag(values) V^T`
    pub fn reconstruct(&self) -> Mat {
        let d = Mat::diag(&self.values);
        &(&self.vectors * &d) * &self.vectors.transpose()
    }
}

const MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come back in descending order. Inside a degenerate cluster the
/// returned vectors are an arbitrary orthonormal basis of the eigenspace.
pub fn sym_eigen(a: &Mat) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(GeomError::Dimension(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(GeomError::Contract("sym_eigen input has non-finite entries".into()));
    }
    let n = a.rows();
    let scale = a.max_abs();
    if a.asymmetry() > 1e-9 * scale {
        return Err(GeomError::Contract(format!(
            "sym_eigen input is not symmetric (asymmetry {:.3e}, scale {:.3e})",
            a.asymmetry(),
            scale
        )));
    }
    let mut m = a.symmetrized();
    let mut v = Mat::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(y, y)].total_cmp(&m[(x, x)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Inverse square root of a symmetric positive-definite matrix.
pub fn inv_sqrt_spd(a: &Mat) -> Result<Mat> {
    let eig = sym_eigen(a)?;
    if eig.values.iter().any(|&l| l <= 0.0) {
        return Err(GeomError::Contract("matrix is not positive definite".into()));
    }
    let d: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    Ok(&(&eig.vectors * &Mat::diag(&d)) * &eig.vectors.transpose())
}
