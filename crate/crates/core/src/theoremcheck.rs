//! Consequence checks for the two non-generic cases of the classification.
//!
//! With two principal-curvature clusters `Λ` (multiplicity `k`) and `Θ`
//! (multiplicity `n − k`), the holonomy is a proper subgroup of `SO(n)` only
//! when `ν + ΛΘ = 0`. In case (a), `1 < k < n − 1`, the hypersurface is then a
//! local product of two space forms; in case (b), `k = n − 1`, this holds only
//! when the one-dimensional distribution is geodesic, which is measured by the
//! connection coefficient `Γ_{aan}`.
//!
//! All statements are certified on a finite sample of points only.

use std::fmt;

use crate::curvature::{cluster_spectrum, curvature_endo, frame_connection, Cluster, FramedPoint};
use crate::error::{GeomError, Result};
use crate::modelspace::ImmersionChart;

/// Relative factor of the default residual tolerance `1e-3 · (|ν| + ‖A‖²)`.
pub const TOL_FACTOR: f64 = 1e-3;

/// Default tolerance over a sample set: `1e-3 · max(|ν| + ‖A‖²)`.
pub fn default_tol(points: &[FramedPoint]) -> f64 {
    TOL_FACTOR * points.iter().fold(0.0_f64, |m, fp| m.max(fp.curvature_scale()))
}

/// `(value, multiplicity)` of the principal-curvature clusters, by descending value.
pub fn cluster_profile(fp: &FramedPoint, eps_cluster: f64) -> Vec<(f64, usize)> {
    cluster_spectrum(&fp.eigen.values, eps_cluster)
        .iter()
        .map(|c| (c.value, c.multiplicity()))
        .collect()
}

/// Indices `(Λ, Θ)` into a two-cluster profile.
///
/// `Λ` is the cluster of larger multiplicity, so that `k = n − 1` in case (b);
/// on equal multiplicities it is the cluster of larger value.
pub fn split_roles(clusters: &[(f64, usize)]) -> (usize, usize) {
    assert_eq!(clusters.len(), 2, "split_roles needs exactly two clusters");
    let (a, b) = (clusters[0], clusters[1]);
    let first = a.1 > b.1 || (a.1 == b.1 && a.0 >= b.0);
    if first {
        (0, 1)
    } else {
        (1, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitCase {
    A,
    B,
    None,
}

impl SplitCase {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitCase::A => "a",
            SplitCase::B => "b",
            SplitCase::None => "none",
        }
    }
}

impl fmt::Display for SplitCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of [`check_case_a`] or [`check_case_b`] over a sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitReport {
    pub case: SplitCase,
    /// `min(k, n − k)` in case (a), `n − 1` in case (b).
    pub k: usize,
    pub lambda: f64,
    pub theta: f64,
    /// `max |ν + ΛΘ|` over the samples.
    pub relation_residual: f64,
    /// Largest deviation of `Λ` or `Θ` from their values at the first sample.
    pub constancy_residual: f64,
    /// `ν + Λ²` and, in case (a), `ν + Θ²`.
    pub factor_curvatures: Vec<f64>,
    /// Largest connection coefficient coupling the two distributions.
    pub parallelism_residual: f64,
    /// `max |Γ_{aan}|` (case (b) only).
    pub gamma_aan: Option<f64>,
    /// `max ‖R(X, Z)‖` over unit `X` in one distribution and `Z` in the other.
    pub cross_curvature_residual: f64,
    pub tol: f64,
    pub sample_count: usize,
    pub diagnostic: Option<String>,
}

struct Roles {
    lambda: Cluster,
    theta: Cluster,
}

fn two_cluster_roles(fp: &FramedPoint, eps: f64) -> Option<Roles> {
    let clusters = cluster_spectrum(&fp.eigen.values, eps);
    if clusters.len() != 2 {
        return None;
    }
    let profile: Vec<(f64, usize)> = clusters.iter().map(|c| (c.value, c.multiplicity())).collect();
    let (l, t) = split_roles(&profile);
    Some(Roles { lambda: clusters[l].clone(), theta: clusters[t].clone() })
}

struct Common {
    n: usize,
    nu: f64,
    lambda: f64,
    theta: f64,
    k: usize,
    relation: f64,
    constancy: f64,
    cross: f64,
    per_point: Vec<Roles>,
}

fn common(points: &[FramedPoint], eps: f64, accept: impl Fn(usize, usize) -> bool, what: &str) -> Result<Common> {
    let first = points
        .first()
        .ok_or_else(|| GeomError::Contract("theorem checks need at least one sample point".into()))?;
    let n = first.n();
    let mut per_point = Vec::with_capacity(points.len());
    for (idx, fp) in points.iter().enumerate() {
        let profile = cluster_profile(fp, eps);
        let roles = two_cluster_roles(fp, eps).ok_or_else(|| {
            GeomError::Structure(format!("{what}: sample {idx} has cluster profile {profile:?}, expected two clusters"))
        })?;
        if !accept(roles.lambda.multiplicity(), n) {
            return Err(GeomError::Structure(format!("{what}: multiplicities {profile:?} at sample {idx} do not fit this case")));
        }
        if let Some(prev) = per_point.first().map(|r: &Roles| r.lambda.multiplicity()) {
            if prev != roles.lambda.multiplicity() {
                return Err(GeomError::Structure(format!("{what}: multiplicity changes from {prev} to {} across samples", roles.lambda.multiplicity())));
            }
        }
        per_point.push(roles);
    }
    let nu = first.nu;
    let (lambda, theta) = (per_point[0].lambda.value, per_point[0].theta.value);
    let mut relation = 0.0_f64;
    let mut constancy = 0.0_f64;
    let mut cross = 0.0_f64;
    for (fp, r) in points.iter().zip(&per_point) {
        relation = relation.max((nu + r.lambda.value * r.theta.value).abs());
        constancy = constancy.max((r.lambda.value - lambda).abs()).max((r.theta.value - theta).abs());
        for &x in &r.lambda.indices {
            for &z in &r.theta.indices {
                cross = cross.max(curvature_endo(fp, x, z)?.norm());
            }
        }
    }
    let k = per_point[0].lambda.multiplicity();
    Ok(Common { n, nu, lambda, theta, k, relation, constancy, cross, per_point })
}

fn first_failure(checks: &[(&str, f64, f64)]) -> Option<String> {
    checks
        .iter()
        .find(|(_, value, limit)| !(value <= limit))
        .map(|(name, value, limit)| format!("{name} = {value:.3e} exceeds {limit:.3e}"))
}

/// Case (a): two clusters of multiplicities `k`, `n − k` with `1 < k < n − 1`.
///
/// Verifies `ν + ΛΘ = 0`, constancy of `Λ` and `Θ`, vanishing cross
/// curvature and parallelism of both principal distributions.
pub fn check_case_a(chart: &ImmersionChart, points: &[FramedPoint], tol: f64, eps_cluster: f64) -> Result<SplitReport> {
    let c = common(points, eps_cluster, |k, n| 1 < k.min(n - k) && k.max(n - k) < n - 1, "case a")?;
    let mut parallel = 0.0_f64;
    for fp in points {
        parallel = parallel.max(frame_connection(chart, fp, eps_cluster)?.cross_cluster_max());
    }
    let separated = (c.lambda - c.theta).abs() > eps_cluster;
    let mut diagnostic = first_failure(&[
        ("|nu + Lambda*Theta|", c.relation, tol),
        ("constancy residual", c.constancy, tol),
        ("cross curvature", c.cross, tol),
        ("parallelism residual", parallel, tol),
    ]);
    if diagnostic.is_none() && !separated {
        diagnostic = Some("Lambda and Theta are not separated".into());
    }
    Ok(SplitReport {
        case: if diagnostic.is_none() { SplitCase::A } else { SplitCase::None },
        k: c.k.min(c.n - c.k),
        lambda: c.lambda,
        theta: c.theta,
        relation_residual: c.relation,
        constancy_residual: c.constancy,
        factor_curvatures: vec![c.nu + c.lambda * c.lambda, c.nu + c.theta * c.theta],
        parallelism_residual: parallel,
        gamma_aan: None,
        cross_curvature_residual: c.cross,
        tol,
        sample_count: points.len(),
        diagnostic,
    })
}

/// Case (b): clusters of multiplicities `n − 1` and `1`.
///
/// The split holds when `Γ_{aan}` vanishes; `E_a(Λ)` must vanish along the
/// large distribution in any case. A nonzero `Γ_{aan}` means the full group
/// `SO(n)` is expected instead.
pub fn check_case_b(chart: &ImmersionChart, points: &[FramedPoint], tol: f64, eps_cluster: f64) -> Result<SplitReport> {
    let c = common(points, eps_cluster, |k, n| k == n - 1 && n >= 3, "case b")?;
    let mut gamma_aan = 0.0_f64;
    let mut along = 0.0_f64;
    let mut parallel = 0.0_f64;
    for (fp, roles) in points.iter().zip(&c.per_point) {
        let conn = frame_connection(chart, fp, eps_cluster)?;
        let lambda_pos = conn
            .clusters
            .iter()
            .position(|cl| cl.indices == roles.lambda.indices)
            .ok_or_else(|| GeomError::Structure("case b: eigenframe clusters changed under alignment".into()))?;
        let normal_dir = roles.theta.indices[0];
        for &a in &roles.lambda.indices {
            gamma_aan = gamma_aan.max(conn.get(a, a, normal_dir).abs());
            along = along.max(conn.cluster_derivs[a][lambda_pos].abs());
        }
        parallel = parallel.max(conn.cross_cluster_max());
    }
    let diagnostic = if !(along <= tol) {
        Some(format!("E_a(Lambda) = {along:.3e} exceeds {tol:.3e} along the large distribution"))
    } else if !(gamma_aan <= tol) {
        Some(format!("|Gamma_aan| = {gamma_aan:.3e} exceeds {tol:.3e}: full SO(n) expected"))
    } else {
        first_failure(&[
            ("|nu + Lambda*Theta|", c.relation, tol),
            ("constancy residual", c.constancy, tol),
            ("cross curvature", c.cross, tol),
        ])
        .or_else(|| ((c.lambda - c.theta).abs() <= eps_cluster).then(|| "Lambda and Theta are not separated".into()))
    };
    Ok(SplitReport {
        case: if diagnostic.is_none() { SplitCase::B } else { SplitCase::None },
        k: c.n - 1,
        lambda: c.lambda,
        theta: c.theta,
        relation_residual: c.relation,
        constancy_residual: c.constancy,
        factor_curvatures: vec![c.nu + c.lambda * c.lambda],
        parallelism_residual: parallel,
        gamma_aan: Some(gamma_aan),
        cross_curvature_residual: c.cross,
        tol,
        sample_count: points.len(),
        diagnostic,
    })
}

/// Result of the pointwise flatness test `ν + λ_iλ_j = 0` for all `i ≠ j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flatness {
    pub flat: bool,
    pub max_residual: f64,
    /// Set when a flat point is found with `ν > 0`, which is impossible.
    pub diagnostic: Option<String>,
}

pub fn flatness_from_spectrum(values: &[f64], nu: f64, tol: f64) -> Flatness {
    let mut worst = 0.0_f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max((nu + a * b).abs());
        }
    }
    let flat = worst <= tol;
    let diagnostic = (flat && nu > 0.0).then(|| {
        format!("flat point with nu = {nu} > 0 is impossible; max |nu + lambda_i*lambda_j| = {worst:.3e}")
    });
    Flatness { flat, max_residual: worst, diagnostic }
}

pub fn flatness_check(fp: &FramedPoint, tol: f64) -> Flatness {
    flatness_from_spectrum(&fp.eigen.values, fp.nu, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_prefer_larger_multiplicity_then_larger_value() {
        assert_eq!(split_roles(&[(4.0 / 3.0, 2), (-0.75, 2)]), (0, 1));
        assert_eq!(split_roles(&[(2.0, 1), (-0.5, 3)]), (1, 0));
        assert_eq!(split_roles(&[(2.0, 3), (-0.5, 1)]), (0, 1));
    }

    #[test]
    fn flatness() {
        assert!(flatness_from_spectrum(&[1.0; 4], -1.0, 1e-9).flat);
        let f = flatness_from_spectrum(&[0.0; 4], 1.0, 1e-9);
        assert!(!f.flat && f.diagnostic.is_none());
        let f = flatness_from_spectrum(&[1.0, -1.0, 1.0], 1.0, 1e-9);
        assert!(!f.flat);
    }
}
