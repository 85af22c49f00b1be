//! Closed-form hypersurface charts with known principal curvatures and
//! holonomy.
//!
//! All spherical factors use the iterated-angle chart of the unit sphere and
//! all hyperbolic charts live on the upper sheet of the hyperboloid model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::curvature::framed_point;
use crate::error::{GeomError, Result};
use crate::holonomy::VerdictKind;
use crate::modelspace::{AmbientModel, ImmersionChart, ParamBox};
use crate::theoremcheck::split_roles;

/// Named chart families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    CliffordProduct,
    GeodesicSphereS,
    GeodesicSphereH,
    Horosphere,
    Equidistant,
    TotallyGeodesic,
    GraphGeneric,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::CliffordProduct,
        Family::GeodesicSphereS,
        Family::GeodesicSphereH,
        Family::Horosphere,
        Family::Equidistant,
        Family::TotallyGeodesic,
        Family::GraphGeneric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CliffordProduct => "clifford_product",
            Family::GeodesicSphereS => "geodesic_sphere_S",
            Family::GeodesicSphereH => "geodesic_sphere_H",
            Family::Horosphere => "horosphere",
            Family::Equidistant => "equidistant",
            Family::TotallyGeodesic => "totally_geodesic",
            Family::GraphGeneric => "graph_generic",
        }
    }

    /// Family-specific parameter keys accepted in addition to `n` and `nu`.
    pub fn param_keys(self) -> &'static [&'static str] {
        match self {
            Family::CliffordProduct => &["k", "r"],
            Family::GeodesicSphereS | Family::GeodesicSphereH => &["rho"],
            Family::Equidistant => &["t"],
            Family::Horosphere | Family::TotallyGeodesic => &[],
            Family::GraphGeneric => &["amplitude", "frequency"],
        }
    }

    pub fn default_nu(self) -> f64 {
        match self {
            Family::GeodesicSphereH | Family::Horosphere | Family::Equidistant => -1.0,
            _ => 1.0,
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Family::CliffordProduct => "S^k(r) x S^(n-k)(s) in S^(n+1)(nu), r^2 + s^2 = 1/nu",
            Family::GeodesicSphereS => "geodesic sphere of radius rho in S^(n+1)(nu)",
            Family::GeodesicSphereH => "geodesic sphere of radius rho in H^(n+1)(nu)",
            Family::Horosphere => "horosphere in H^(n+1)(nu), flat",
            Family::Equidistant => "hypersurface at distance t from a totally geodesic H^n in H^(n+1)(nu)",
            Family::TotallyGeodesic => "totally geodesic hypersurface (A = 0)",
            Family::GraphGeneric => "generic normal graph over a totally geodesic hypersurface",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| GeomError::Validation(format!("family: unknown family '{s}'")))
    }
}

/// A family plus its parameters. Unset parameters take family defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub n: usize,
    pub nu: f64,
    pub k: Option<usize>,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub t: Option<f64>,
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
}

impl FamilySpec {
    pub fn new(family: Family, n: usize, nu: f64) -> Self {
        FamilySpec { family, n, nu, k: None, r: None, rho: None, t: None, amplitude: None, frequency: None }
    }

    pub fn clifford(n: usize, k: usize, r: f64, nu: f64) -> Self {
        FamilySpec { k: Some(k), r: Some(r), ..FamilySpec::new(Family::CliffordProduct, n, nu) }
    }

    pub fn geodesic_sphere_s(n: usize, rho: f64, nu: f64) -> Self {
        FamilySpec { rho: Some(rho), ..FamilySpec::new(Family::GeodesicSphereS, n, nu) }
    }

    pub fn geodesic_sphere_h(n: usize, rho: f64, nu: f64) -> Self {
        FamilySpec { rho: Some(rho), ..FamilySpec::new(Family::GeodesicSphereH, n, nu) }
    }

    pub fn horosphere(n: usize, nu: f64) -> Self {
        FamilySpec::new(Family::Horosphere, n, nu)
    }

    pub fn equidistant(n: usize, t: f64, nu: f64) -> Self {
        FamilySpec { t: Some(t), ..FamilySpec::new(Family::Equidistant, n, nu) }
    }

    pub fn totally_geodesic(n: usize, nu: f64) -> Self {
        FamilySpec::new(Family::TotallyGeodesic, n, nu)
    }

    pub fn graph_generic(n: usize, nu: f64, amplitude: f64, frequency: f64) -> Self {
        FamilySpec {
            amplitude: Some(amplitude),
            frequency: Some(frequency),
            ..FamilySpec::new(Family::GraphGeneric, n, nu)
        }
    }

    pub fn k_or_default(&self) -> usize {
        self.k.unwrap_or(self.n / 2)
    }

    pub fn r_or_default(&self) -> f64 {
        self.r.unwrap_or(0.6 / self.nu.abs().sqrt())
    }

    pub fn rho_or_default(&self) -> f64 {
        match self.family {
            Family::GeodesicSphereS => self.rho.unwrap_or(PI / 3.0 / self.nu.abs().sqrt()),
            _ => self.rho.unwrap_or(1.0),
        }
    }

    pub fn t_or_default(&self) -> f64 {
        self.t.unwrap_or(0.5)
    }

    pub fn amplitude_or_default(&self) -> f64 {
        self.amplitude.unwrap_or(0.3)
    }

    pub fn frequency_or_default(&self) -> f64 {
        self.frequency.unwrap_or(1.0)
    }

    /// Checks the parameter ranges, with `n >= min_n`.
    fn check(&self, min_n: usize) -> Result<()> {
        let fam = self.family.name();
        if self.n < min_n {
            return Err(GeomError::Validation(format!("n: {fam} needs n >= {min_n}, got {}", self.n)));
        }
        if self.n > 16 {
            return Err(GeomError::Validation(format!("n: dimension {} exceeds the supported maximum 16", self.n)));
        }
        if !self.nu.is_finite() {
            return Err(GeomError::Validation(format!("nu: must be finite, got {}", self.nu)));
        }
        let need_sign = |positive: bool| -> Result<()> {
            if positive && self.nu <= 0.0 {
                return Err(GeomError::Validation(format!("nu: {fam} needs nu > 0, got {}", self.nu)));
            }
            if !positive && self.nu >= 0.0 {
                return Err(GeomError::Validation(format!("nu: {fam} needs nu < 0, got {}", self.nu)));
            }
            Ok(())
        };
        let stray = |key: &str, set: bool| -> Result<()> {
            if set && !self.family.param_keys().contains(&key) {
                return Err(GeomError::Validation(format!("{key}: not a parameter of {fam}")));
            }
            Ok(())
        };
        stray("k", self.k.is_some())?;
        stray("r", self.r.is_some())?;
        stray("rho", self.rho.is_some())?;
        stray("t", self.t.is_some())?;
        stray("amplitude", self.amplitude.is_some())?;
        stray("frequency", self.frequency.is_some())?;
        match self.family {
            Family::CliffordProduct => {
                need_sign(true)?;
                let k = self.k_or_default();
                if k < 1 || k >= self.n {
                    return Err(GeomError::Validation(format!("k: must satisfy 1 <= k <= n-1 = {}, got {k}", self.n - 1)));
                }
                let r = self.r_or_default();
                let rmax = 1.0 / self.nu.sqrt();
                if !(r > 0.0 && r < rmax) {
                    return Err(GeomError::Validation(format!("r: must lie in (0, {rmax}), got {r}")));
                }
            }
            Family::GeodesicSphereS => {
                need_sign(true)?;
                let rho = self.rho_or_default();
                let rmax = PI / self.nu.sqrt();
                if !(rho > 0.0 && rho < rmax) {
                    return Err(GeomError::Validation(format!("rho: must lie in (0, {rmax}), got {rho}")));
                }
            }
            Family::GeodesicSphereH => {
                need_sign(false)?;
                let rho = self.rho_or_default();
                if !(rho > 0.0 && rho.is_finite()) {
                    return Err(GeomError::Validation(format!("rho: must be positive, got {rho}")));
                }
            }
            Family::Horosphere => need_sign(false)?,
            Family::Equidistant => {
                need_sign(false)?;
                let t = self.t_or_default();
                if !(0.0..=10.0).contains(&t) {
                    return Err(GeomError::Validation(format!("t: must lie in [0, 10], got {t}")));
                }
            }
            Family::TotallyGeodesic => {
                if self.nu == 0.0 {
                    return Err(GeomError::Validation("nu: totally_geodesic needs nu != 0".into()));
                }
            }
            Family::GraphGeneric => {
                let a = self.amplitude_or_default();
                let w = self.frequency_or_default();
                if !(a.is_finite() && a.abs() <= 0.5) {
                    return Err(GeomError::Validation(format!("amplitude: must satisfy |amplitude| <= 0.5, got {a}")));
                }
                if !(w > 0.0 && w <= 3.0) {
                    return Err(GeomError::Validation(format!("frequency: must lie in (0, 3], got {w}")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check(3)
    }
}

/// Closed-form ground truth for a catalog chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedOutcome {
    pub verdict: VerdictKind,
    /// `k` of the verdict: the smaller factor dimension for products,
    /// `n - 1` for `SO(n-1)`.
    pub k: Option<usize>,
    /// `(value, multiplicity)` in descending order of value, with the sign
    /// produced by the normal orientation rule. Empty when not known in closed form.
    pub clusters: Vec<(f64, usize)>,
    /// Curvatures of the product factors, in the order reported by the theorem checks.
    pub factor_curvatures: Vec<f64>,
    pub notes: String,
}

fn sphere_point(u: &[f64]) -> Vec<f64> {
    // iterated-angle chart of the unit sphere S^m, m = u.len()
    let m = u.len();
    let mut x = vec![u[m - 1].cos(), u[m - 1].sin()];
    for k in (0..m - 1).rev() {
        let c = u[k].cos();
        x.iter_mut().for_each(|v| *v *= c);
        x.push(u[k].sin());
    }
    x
}

fn hyperboloid_point(u: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(u.len() + 1);
    x.push((1.0 + u.iter().map(|a| a * a).sum::<f64>()).sqrt());
    x.extend_from_slice(u);
    x
}

fn height(u: &[f64], amplitude: f64, frequency: f64) -> f64 {
    let mut f = 0.0;
    for (i, x) in u.iter().enumerate() {
        let w = 1.0 + 0.37 * i as f64;
        f += w * (frequency * x + 0.5 + 0.2 * i as f64).sin();
    }
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            f += 0.5 * (frequency * (u[i] - 0.3 * u[j]) + 0.1 * (i + j) as f64).cos();
        }
    }
    // normalised so that |height| <= 2 * amplitude <= 1 < pi/2
    let n = u.len() as f64;
    let total_weight = n + 0.37 * n * (n - 1.0) / 2.0 + 0.25 * n * (n - 1.0);
    2.0 * amplitude * f / total_weight
}

const ANGULAR_BOX: (f64, f64) = (-0.6, 0.6);

/// Picks the unit normal for which the spectrum at the domain centre matches
/// the closed-form principal curvatures, so that expected signs do not depend
/// on the orientation of the coordinate chart.
fn oriented(chart: ImmersionChart, clusters: &[(f64, usize)]) -> Result<ImmersionChart> {
    if clusters.is_empty() {
        return Ok(chart);
    }
    let expected: Vec<f64> = clusters.iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect();
    let fp = framed_point(&chart, &chart.domain().center(), chart.default_step())?;
    let got = &fp.eigen.values;
    let distance = |sign: f64| -> f64 {
        let mut flipped: Vec<f64> = got.iter().map(|x| sign * x).collect();
        flipped.sort_by(|a, b| b.total_cmp(a));
        flipped.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    Ok(if distance(-1.0) < distance(1.0) { chart.with_flipped_normal() } else { chart })
}

/// Builds the chart and its expected outcome.
pub fn build(spec: &FamilySpec) -> Result<(ImmersionChart, ExpectedOutcome)> {
    spec.validate()?;
    build_inner(spec)
}

/// Like [`build`] but also accepts `n = 2` for smoke tests; theorem verdicts
/// are meaningless there.
pub fn build_smoke(spec: &FamilySpec) -> Result<(ImmersionChart, ExpectedOutcome)> {
    spec.check(2)?;
    build_inner(spec)
}

fn build_inner(spec: &FamilySpec) -> Result<(ImmersionChart, ExpectedOutcome)> {
    let n = spec.n;
    let nu = spec.nu;
    let model = AmbientModel::new(nu, n)?;
    let label = spec.family.name();
    let angular = ParamBox::cube(n, ANGULAR_BOX.0, ANGULAR_BOX.1);
    let root = nu.abs().sqrt();
    let radius = model.radius().unwrap_or(1.0);

    let (chart, verdict, k, clusters, notes) = match spec.family {
        Family::CliffordProduct => {
            let k = spec.k_or_default();
            let r = spec.r_or_default();
            let s = (1.0 / nu - r * r).sqrt();
            let chart = ImmersionChart::new(label, model, angular, move |u| {
                let mut x: Vec<f64> = sphere_point(&u[..k]).into_iter().map(|c| r * c).collect();
                x.extend(sphere_point(&u[k..]).into_iter().map(|c| s * c));
                x
            })?;
            let lambda = root * s / r;
            let mu = -root * r / s;
            let (verdict, kv) = if k == 1 || k == n - 1 {
                (VerdictKind::SoNMinus1, n - 1)
            } else {
                (VerdictKind::ProductSoKSoNk, k.min(n - k))
            };
            let clusters = vec![(lambda, k), (mu, n - k)];
            (chart, verdict, Some(kv), clusters, format!("principal curvatures sqrt(nu)*s/r and -sqrt(nu)*r/s with s = {s}"))
        }
        Family::GeodesicSphereS => {
            let rho = spec.rho_or_default();
            let (c, sn) = ((root * rho).cos(), (root * rho).sin());
            let chart = ImmersionChart::new(label, model, angular, move |u| {
                let mut x = vec![radius * c];
                x.extend(sphere_point(u).into_iter().map(|p| radius * sn * p));
                x
            })?;
            let lambda = root * c / sn;
            (chart, VerdictKind::FullSoN, None, vec![(lambda, n)], "umbilical, lambda = sqrt(nu) cot(sqrt(nu) rho)".into())
        }
        Family::GeodesicSphereH => {
            let rho = spec.rho_or_default();
            let (c, sn) = ((root * rho).cosh(), (root * rho).sinh());
            let chart = ImmersionChart::new(label, model, angular, move |u| {
                let mut x = vec![radius * c];
                x.extend(sphere_point(u).into_iter().map(|p| radius * sn * p));
                x
            })?;
            let lambda = root * c / sn;
            (chart, VerdictKind::FullSoN, None, vec![(lambda, n)], "umbilical, lambda = sqrt|nu| coth(sqrt|nu| rho)".into())
        }
        Family::Horosphere => {
            let chart = ImmersionChart::new(label, model, ParamBox::cube(n, -1.0, 1.0), move |u| {
                let w: Vec<f64> = u.iter().map(|x| x / radius).collect();
                let q = 0.5 * w.iter().map(|x| x * x).sum::<f64>();
                let mut x = vec![radius * (1.0 + q)];
                x.extend(w.iter().map(|c| radius * c));
                x.push(radius * q);
                x
            })?;
            (chart, VerdictKind::Trivial, None, vec![(root, n)], "flat, A = sqrt|nu| I".into())
        }
        Family::Equidistant | Family::TotallyGeodesic if nu < 0.0 => {
            let t = if spec.family == Family::Equidistant { spec.t_or_default() } else { 0.0 };
            let (c, sn) = (t.cosh(), t.sinh());
            let chart = ImmersionChart::new(label, model, ParamBox::cube(n, -0.8, 0.8), move |u| {
                let mut x: Vec<f64> = hyperboloid_point(u).into_iter().map(|p| radius * c * p).collect();
                x.push(radius * sn);
                x
            })?;
            let lambda = root * t.tanh();
            (chart, VerdictKind::FullSoN, None, vec![(lambda, n)], "umbilical, lambda = sqrt|nu| tanh t, curvature nu + lambda^2 < 0".into())
        }
        Family::TotallyGeodesic => {
            let chart = if nu > 0.0 {
                ImmersionChart::new(label, model, angular, move |u| {
                    let mut x: Vec<f64> = sphere_point(u).into_iter().map(|p| radius * p).collect();
                    x.push(0.0);
                    x
                })?
            } else {
                ImmersionChart::new(label, model, ParamBox::cube(n, -1.0, 1.0), |u| {
                    let mut x = u.to_vec();
                    x.push(0.0);
                    x
                })?
            };
            (chart, VerdictKind::FullSoN, None, vec![(0.0, n)], "A = 0, constant curvature nu".into())
        }
        Family::Equidistant => unreachable!("validated nu < 0"),
        Family::GraphGeneric => {
            let a = spec.amplitude_or_default();
            let w = spec.frequency_or_default();
            let chart = if nu > 0.0 {
                ImmersionChart::new(label, model, angular, move |u| {
                    let f = height(u, a, w);
                    let mut x: Vec<f64> = sphere_point(u).into_iter().map(|p| radius * f.cos() * p).collect();
                    x.push(radius * f.sin());
                    x
                })?
            } else if nu < 0.0 {
                ImmersionChart::new(label, model, ParamBox::cube(n, -0.8, 0.8), move |u| {
                    let f = height(u, a, w);
                    let mut x: Vec<f64> = hyperboloid_point(u).into_iter().map(|p| radius * f.cosh() * p).collect();
                    x.push(radius * f.sinh());
                    x
                })?
            } else {
                ImmersionChart::new(label, model, ParamBox::cube(n, -1.0, 1.0), move |u| {
                    let mut x = u.to_vec();
                    x.push(height(u, a, w) + 0.5 * u.iter().map(|c| c * c).sum::<f64>());
                    x
                })?
            };
            (chart, VerdictKind::FullSoN, None, Vec::new(), "generic: distinct principal curvatures".into())
        }
    };

    let mut clusters = clusters;
    clusters.sort_by(|a, b| b.0.total_cmp(&a.0));
    let chart = oriented(chart, &clusters)?;
    let factor_curvatures = match verdict {
        VerdictKind::ProductSoKSoNk | VerdictKind::SoNMinus1 => {
            let (l, t) = split_roles(&clusters);
            let (lam, theta) = (clusters[l].0, clusters[t].0);
            if verdict == VerdictKind::ProductSoKSoNk {
                vec![nu + lam * lam, nu + theta * theta]
            } else {
                vec![nu + lam * lam]
            }
        }
        _ => Vec::new(),
    };
    Ok((chart, ExpectedOutcome { verdict, k, clusters, factor_curvatures, notes }))
}
