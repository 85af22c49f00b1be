use super::lie::SkewEndo;
use super::mat::Mat;
use crate::error::{GeomError, Result};

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &Mat) -> Mat {
    assert!(a.is_square());
    let n = a.rows();
    let norm = a.frobenius_norm();
    let mut squarings = 0;
    let mut scaled = a.clone();
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
        scaled = a.scale(0.5_f64.powi(squarings as i32));
    }
    let mut result = Mat::identity(n);
    let mut term = Mat::identity(n);
    for k in 1..=30 {
        term = (&term * &scaled).scale(1.0 / k as f64);
        result = &result + &term;
        if term.max_abs() <= f64::EPSILON * 1e-3 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exponential of an element of `so(n)`; always a rotation.
pub fn rotation_exp(s: &SkewEndo) -> Mat {
    expm(s.mat())
}

/// Principal square root of a rotation by the Denman-Beavers iteration.
fn sqrt_rotation(q: &Mat) -> Result<Mat> {
    let n = q.rows();
    let mut y = q.clone();
    let mut z = Mat::identity(n);
    for _ in 0..60 {
        let y_inv = y.inverse()?;
        let z_inv = z.inverse()?;
        let y_next = (&y + &z_inv).scale(0.5);
        let z_next = (&z + &y_inv).scale(0.5);
        let change = (&y_next - &y).max_abs();
        y = y_next;
        z = z_next;
        if change <= 1e-15 {
            return Ok(y);
        }
    }
    Err(GeomError::Contract("rotation square root did not converge (angle near π?)".into()))
}

/// Principal logarithm of a rotation whose angles are all below π.
///
/// Square roots are taken until the rotation is close to the identity, then
/// the Cayley series `log q = 2 atanh((q - I)(q + I)^-1)` is summed.
pub fn rotation_log(q: &Mat) -> Result<SkewEndo> {
    if !q.is_square() {
        return Err(GeomError::Dimension(format!("rotation_log of a {}x{} matrix", q.rows(), q.cols())));
    }
    let n = q.rows();
    let defect = (&(&q.transpose() * q) - &Mat::identity(n)).max_abs();
    if !q.is_finite() || defect > 1e-6 {
        return Err(GeomError::Contract(format!("matrix is not orthogonal (defect {defect:.3e})")));
    }
    if q.determinant() <= 0.0 {
        return Err(GeomError::Contract("rotation must have determinant +1".into()));
    }
    let ident = Mat::identity(n);
    let mut r = q.clone();
    let mut halvings = 0;
    while (&r - &ident).frobenius_norm() > 0.3 {
        r = sqrt_rotation(&r)?;
        halvings += 1;
        if halvings > 40 {
            return Err(GeomError::Contract("rotation logarithm did not converge".into()));
        }
    }
    let cayley = &(&r - &ident) * &(&r + &ident).inverse()?;
    let x2 = &cayley * &cayley;
    let mut power = cayley.clone();
    let mut sum = cayley.clone();
    for k in 1..200 {
        power = &power * &x2;
        let term = power.scale(1.0 / (2 * k + 1) as f64);
        sum = &sum + &term;
        if term.max_abs() <= 1e-18 {
            break;
        }
    }
    Ok(SkewEndo::project(&sum.scale(2.0 * 2f64.powi(halvings))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar(n: usize, i: usize, j: usize, angle: f64) -> Mat {
        let mut q = Mat::identity(n);
        q[(i, i)] = angle.cos();
        q[(j, j)] = angle.cos();
        q[(i, j)] = -angle.sin();
        q[(j, i)] = angle.sin();
        q
    }

    #[test]
    fn log_of_identity_is_zero() {
        assert_eq!(rotation_log(&Mat::identity(4)).unwrap().norm(), 0.0);
    }

    #[test]
    fn planar_rotation() {
        let s = rotation_log(&planar(3, 0, 1, 0.1)).unwrap();
        // exp(θ e2∧e1) rotates e1 towards e2
        let expected = SkewEndo::unit_wedge(3, 1, 0).scale(0.1);
        assert!(s.sub(&expected).norm() < 1e-15);
        assert!((s.norm() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn large_angle_round_trip() {
        let q = &planar(4, 0, 2, 2.9) * &planar(4, 1, 3, -1.7);
        let s = rotation_log(&q).unwrap();
        assert!((&rotation_exp(&s) - &q).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_reflections_and_non_orthogonal() {
        assert!(rotation_log(&Mat::diag(&[1.0, -1.0])).is_err());
        assert!(rotation_log(&Mat::diag(&[1.0, 1.1])).is_err());
    }
}
