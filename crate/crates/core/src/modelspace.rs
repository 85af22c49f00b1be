//! Flat models of the space forms and finite-difference jets of charts.
//!
//! A space form of curvature `ν` is realised inside a flat embedding space:
//! the sphere `<x,x> = 1/ν` in `E^{n+2}` for `ν > 0`, the upper sheet of
//! `<x,x> = 1/ν` in Minkowski space `E^{n+2}_1` for `ν < 0` (signature
//! `(-,+,...,+)`), and `E^{n+1}` itself for `ν = 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::smallmat::{dot, Mat};

/// Model-constraint tolerance applied at every stencil point.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Smallest admissible Gram determinant of the chart's first derivatives.
pub const GRAM_DET_MIN: f64 = 1e-10;

/// Ambient space form `M^{n+1}(ν)` together with its flat embedding space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientModel {
    nu: f64,
    n: usize,
}

impl AmbientModel {
    /// Model for hypersurfaces of intrinsic dimension `n` in curvature `nu`.
    pub fn new(nu: f64, n: usize) -> Result<Self> {
        if !nu.is_finite() {
            return Err(GeomError::Validation(format!("nu must be finite, got {nu}")));
        }
        if n == 0 {
            return Err(GeomError::Validation("hypersurface dimension must be positive".into()));
        }
        Ok(AmbientModel { nu, n })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Intrinsic dimension of the hypersurface.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    pub fn embedding_dim(&self) -> usize {
        if self.nu == 0.0 {
            self.n + 1
        } else {
            self.n + 2
        }
    }

    pub fn signature(&self) -> Vec<f64> {
        let mut s = vec![1.0; self.embedding_dim()];
        if self.nu < 0.0 {
            s[0] = -1.0;
        }
        s
    }

    /// Bilinear form of the embedding space.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = dot(x, y);
        if self.nu < 0.0 {
            acc -= 2.0 * x[0] * y[0];
        }
        acc
    }

    /// Radius `1/sqrt|ν|` of the model, or `None` for the flat model.
    pub fn radius(&self) -> Option<f64> {
        (self.nu != 0.0).then(|| 1.0 / self.nu.abs().sqrt())
    }

    /// Deviation of `x` from the model hypersurface, scaled by the radius.
    ///
    /// Returns `Some(residual)` or `None` when `x` is on the wrong sheet of
    /// the hyperboloid.
    pub fn constraint_residual(&self, x: &[f64]) -> Option<f64> {
        if self.nu == 0.0 {
            return Some(0.0);
        }
        if self.nu < 0.0 && x[0] <= 0.0 {
            return None;
        }
        let target = 1.0 / self.nu;
        Some((self.form(x, x) - target).abs() / target.abs().max(1.0))
    }
}

/// Axis-aligned parameter box.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBox {
    pub bounds: Vec<(f64, f64)>,
}

impl ParamBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeomError::Validation(format!("domain axis {i} has empty interval [{lo}, {hi}]")));
            }
        }
        Ok(ParamBox { bounds })
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        ParamBox { bounds: vec![(lo, hi); n] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// First axis on which `u` leaves the box.
    pub fn violation(&self, u: &[f64]) -> Option<usize> {
        self.bounds.iter().zip(u).position(|((lo, hi), x)| !(x >= lo && x <= hi))
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim() && self.violation(u).is_none()
    }
}

type ChartFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Map from an `n`-dimensional parameter box into the embedding space of a model.
#[derive(Clone)]
pub struct ImmersionChart {
    model: AmbientModel,
    domain: ParamBox,
    eval: Arc<ChartFn>,
    label: String,
}

impl fmt::Debug for ImmersionChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("label", &self.label)
            .field("model", &self.model)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ImmersionChart {
    pub fn new(
        label: impl Into<String>,
        model: AmbientModel,
        domain: ParamBox,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if domain.dim() != model.n() {
            return Err(GeomError::Dimension(format!(
                "domain has {} axes but the model expects n = {}",
                domain.dim(),
                model.n()
            )));
        }
        Ok(ImmersionChart { model, domain, eval: Arc::new(eval), label: label.into() })
    }

    pub fn model(&self) -> &AmbientModel {
        &self.model
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Default finite-difference step, `1e-4` times the domain diameter.
    pub fn default_step(&self) -> f64 {
        1e-4 * self.domain.diameter()
    }

    /// Mirror image in the last embedding axis.
    ///
    /// The reflection is an isometry of the model that reverses orientation, so
    /// the orientation rule picks the opposite unit normal: every shape operator
    /// of the mirrored chart is the negative of the original one.
    pub fn with_flipped_normal(&self) -> ImmersionChart {
        let inner = Arc::clone(&self.eval);
        let last = self.model.embedding_dim() - 1;
        let mirrored = move |u: &[f64]| {
            let mut x = inner(u);
            x[last] = -x[last];
            x
        };
        ImmersionChart {
            model: self.model,
            domain: self.domain.clone(),
            eval: Arc::new(mirrored),
            label: self.label.clone(),
        }
    }

    /// Evaluates the chart, checking the domain and the model constraint.
    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n() {
            return Err(GeomError::Dimension(format!(
                "parameter point has {} coordinates, chart needs {}",
                u.len(),
                self.n()
            )));
        }
        if let Some(axis) = self.domain.violation(u) {
            return Err(GeomError::Domain { point: u.to_vec(), axis });
        }
        let x = (self.eval)(u);
        if x.len() != self.model.embedding_dim() {
            return Err(GeomError::InvalidChart(format!(
                "chart returned {} coordinates, embedding space has {}",
                x.len(),
                self.model.embedding_dim()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::InvalidChart(format!("non-finite chart value at {u:?}")));
        }
        match self.model.constraint_residual(&x) {
            Some(r) if r <= CONSTRAINT_TOL => Ok(x),
            Some(r) => Err(GeomError::InvalidChart(format!(
                "chart value at {u:?} misses the model constraint by {r:.3e}"
            ))),
            None => Err(GeomError::InvalidChart(format!(
                "chart value at {u:?} lies on the lower sheet of the hyperboloid"
            ))),
        }
    }
}

/// Value and first two derivatives of a chart at a parameter point.
#[derive(Clone, Debug)]
pub struct ChartJet {
    pub point: Vec<f64>,
    /// `∂_i f` for each parameter axis.
    pub d1: Vec<Vec<f64>>,
    /// `∂_i ∂_j f` packed for `i <= j`; use [`ChartJet::d2`].
    d2_packed: Vec<Vec<f64>>,
    pub step: f64,
}

fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl ChartJet {
    pub fn n(&self) -> usize {
        self.d1.len()
    }

    /// `∂_i ∂_j f`, symmetric in `i, j` by construction.
    pub fn d2(&self, i: usize, j: usize) -> &[f64] {
        &self.d2_packed[packed_index(self.n(), i, j)]
    }
}

fn shifted(u: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut v = u.to_vec();
    for &(axis, delta) in moves {
        v[axis] += delta;
    }
    v
}

/// Central-difference jet of `chart` at `u` with step `h`.
///
/// First derivatives use the two-point central stencil, second derivatives the
/// three-point diagonal and four-corner mixed stencils; all are `O(h²)`.
pub fn jet(chart: &ImmersionChart, u: &[f64], h: f64) -> Result<ChartJet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeomError::Contract(format!("finite-difference step must be positive, got {h}")));
    }
    let n = chart.n();
    let point = chart.eval(u)?;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for i in 0..n {
        plus.push(chart.eval(&shifted(u, &[(i, h)]))?);
        minus.push(chart.eval(&shifted(u, &[(i, -h)]))?);
    }
    let d1: Vec<Vec<f64>> = (0..n)
        .map(|i| plus[i].iter().zip(&minus[i]).map(|(p, m)| (p - m) / (2.0 * h)).collect())
        .collect();
    let mut d2_packed = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let d: Vec<f64> = if i == j {
                (0..point.len())
                    .map(|c| (plus[i][c] - 2.0 * point[c] + minus[i][c]) / (h * h))
                    .collect()
            } else {
                let pp = chart.eval(&shifted(u, &[(i, h), (j, h)]))?;
                let pm = chart.eval(&shifted(u, &[(i, h), (j, -h)]))?;
                let mp = chart.eval(&shifted(u, &[(i, -h), (j, h)]))?;
                let mm = chart.eval(&shifted(u, &[(i, -h), (j, -h)]))?;
                (0..point.len())
                    .map(|c| (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h))
                    .collect()
            };
            d2_packed.push(d);
        }
    }
    let gram = Mat::from_fn(n, n, |a, b| chart.model().form(&d1[a], &d1[b]));
    let det = gram.determinant();
    if !(det > GRAM_DET_MIN) {
        return Err(GeomError::InvalidChart(format!(
            "first derivatives are degenerate at {u:?} (Gram determinant {det:.3e})"
        )));
    }
    Ok(ChartJet { point, d1, d2_packed, step: h })
}

/// Coordinate tangent frame and unit normal at a jet.
///
/// The normal `ξ` is orthogonal (under the model form) to the position vector
/// when `ν ≠ 0` and to every `∂_i f`, has `<ξ,ξ> = 1`, and is oriented so that
/// `(position, ∂_1 f, ..., ∂_n f, ξ)` is a positively oriented basis of the
/// embedding space (the position is omitted when `ν = 0`).
pub fn tangent_normal_frame(chart: &ImmersionChart, jet: &ChartJet) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let model = chart.model();
    let dim = model.embedding_dim();
    let mut spanning: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    if model.nu() != 0.0 {
        spanning.push(jet.point.clone());
    }
    spanning.extend(jet.d1.iter().cloned());
    debug_assert_eq!(spanning.len(), dim - 1);

    // rows of the form-lowered spanning vectors; the normal is their common kernel
    let sig = model.signature();
    let lowered: Vec<Vec<f64>> =
        spanning.iter().map(|v| v.iter().zip(&sig).map(|(a, s)| a * s).collect()).collect();
    let mut w = vec![0.0; dim];
    for (i, wi) in w.iter_mut().enumerate() {
        let m = Mat::from_fn(dim, dim, |r, c| if r < dim - 1 { lowered[r][c] } else if c == i { 1.0 } else { 0.0 });
        *wi = m.determinant();
    }
    let len2 = model.form(&w, &w);
    if !(len2 > 0.0) || !len2.is_finite() {
        return Err(GeomError::InvalidChart("could not construct a spacelike unit normal".into()));
    }
    let mut xi: Vec<f64> = w.iter().map(|x| x / len2.sqrt()).collect();
    let mut oriented = spanning.clone();
    oriented.push(xi.clone());
    let orientation = Mat::from_cols(&oriented).determinant();
    if orientation == 0.0 {
        return Err(GeomError::InvalidChart("tangent frame and normal are degenerate".into()));
    }
    if orientation < 0.0 {
        xi.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((jet.d1.clone(), xi))
}
