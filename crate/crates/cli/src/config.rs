//! Run configuration. The same structure is echoed into every report and can
//! be fed back with `--config` to reproduce the run.

use std::sync::Arc;

use hyperholonomy::catalog::{self, ExpectedOutcome, Family, FamilySpec};
use hyperholonomy::curvature::EPS_CLUSTER;
use hyperholonomy::modelspace::{AmbientModel, ImmersionChart, ParamBox};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::{parse_expr, Expr};

/// Points per axis of the default sampling grid.
pub const DEFAULT_GRID: usize = 3;
/// Largest number of grid points sampled; larger grids are thinned evenly.
pub const MAX_GRID_POINTS: usize = 243;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySurface {
    pub family: String,
    pub n: usize,
    pub nu: f64,
    pub k: Option<usize>,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub t: Option<f64>,
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
}

impl FamilySurface {
    pub fn to_spec(&self) -> Result<FamilySpec, CliError> {
        let family: Family = self.family.parse()?;
        Ok(FamilySpec {
            family,
            n: self.n,
            nu: self.nu,
            k: self.k,
            r: self.r,
            rho: self.rho,
            t: self.t,
            amplitude: self.amplitude,
            frequency: self.frequency,
        })
    }
}

/// A chart given by one expression per embedding coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprSurface {
    pub n: usize,
    pub nu: f64,
    /// Source text of `f1, f2, …`.
    pub components: Vec<String>,
    /// `[lo, hi]` per parameter.
    pub domain: Vec<[f64; 2]>,
}

impl ExprSurface {
    /// Parses and checks the components against `n` and `nu`.
    pub fn compile(&self) -> Result<Vec<Expr>, CliError> {
        let model = AmbientModel::new(self.nu, self.n)?;
        let want = model.embedding_dim();
        if self.components.len() != want {
            return Err(CliError::semantic(
                "expr",
                format!("nu = {} and n = {} need {want} components f1..f{want}, got {}", self.nu, self.n, self.components.len()),
            ));
        }
        let exprs = self
            .components
            .iter()
            .map(|src| parse_expr(src, 1, 1))
            .collect::<Result<Vec<_>, _>>()?;
        check_variables(&exprs, self.n)?;
        if self.domain.len() != self.n {
            return Err(CliError::semantic("domain", format!("{} intervals given for n = {}", self.domain.len(), self.n)));
        }
        Ok(exprs)
    }
}

/// Requires the parameters used to be exactly `u1..un`.
pub(crate) fn check_variables(exprs: &[Expr], n: usize) -> Result<(), CliError> {
    let mut used = std::collections::BTreeSet::new();
    for e in exprs {
        used.extend(e.variables());
    }
    if let Some(&max) = used.iter().next_back() {
        if max >= n {
            return Err(CliError::semantic("n", format!("expressions use u{} but n = {n}", max + 1)));
        }
    }
    if let Some(missing) = (0..n).find(|i| !used.contains(i)) {
        return Err(CliError::semantic("n", format!("n = {n} but no expression uses u{}", missing + 1)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceConfig {
    Family(FamilySurface),
    Expr(ExprSurface),
}

impl SurfaceConfig {
    pub fn n(&self) -> usize {
        match self {
            SurfaceConfig::Family(f) => f.n,
            SurfaceConfig::Expr(e) => e.n,
        }
    }

    /// Builds the chart, with the closed-form expectation for catalog families.
    pub fn build(&self, smoke: bool) -> Result<(ImmersionChart, Option<ExpectedOutcome>), CliError> {
        match self {
            SurfaceConfig::Family(f) => {
                let spec = f.to_spec()?;
                let (chart, expected) = if smoke { catalog::build_smoke(&spec)? } else { catalog::build(&spec)? };
                Ok((chart, Some(expected)))
            }
            SurfaceConfig::Expr(e) => {
                let min_n = if smoke { 2 } else { 3 };
                if e.n < min_n {
                    return Err(CliError::semantic("n", format!("needs n >= {min_n}, got {}", e.n)));
                }
                let exprs = Arc::new(e.compile()?);
                let model = AmbientModel::new(e.nu, e.n)?;
                let domain = ParamBox::new(e.domain.iter().map(|[lo, hi]| (*lo, *hi)).collect())?;
                let chart = ImmersionChart::new("expression chart", model, domain, move |u| {
                    exprs.iter().map(|f| f.eval(u)).collect()
                })?;
                Ok((chart, None))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    /// Points per axis of a cell-centred grid; used when no points are listed.
    pub grid: usize,
    /// Explicit parameter points; they replace the grid when present.
    pub points: Option<Vec<Vec<f64>>>,
    /// Additional uniformly random points drawn with `seed`.
    pub random: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { grid: DEFAULT_GRID, points: None, random: 0, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub eps_cluster: f64,
    /// Relation and theorem-check tolerance; default `1e-3 · (|ν| + ‖A‖²)`.
    pub tol_rel: Option<f64>,
    /// Generator drop threshold; default `1e-6 · (|ν| + ‖A‖²)`.
    pub tol_gen: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_cluster: EPS_CLUSTER, tol_rel: None, tol_gen: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub surface: SurfaceConfig,
    pub sampling: Sampling,
    /// Jet step; default `1e-4` times the domain diameter.
    pub h: Option<f64>,
    pub order: u8,
    pub tolerances: Tolerances,
    pub output: OutputFormat,
    /// Allows `n < 3`; all verdicts are then `UNDETERMINED`.
    pub smoke: bool,
}

impl RunConfig {
    pub fn new(command: Command, surface: SurfaceConfig) -> Self {
        RunConfig {
            command,
            surface,
            sampling: Sampling::default(),
            h: None,
            order: 1,
            tolerances: Tolerances::default(),
            output: OutputFormat::Text,
            smoke: false,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.sampling.grid == 0 {
            return Err(CliError::semantic("grid", "needs at least one point per axis"));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h < 0.1) {
                return Err(CliError::semantic("h", format!("must lie in (0, 0.1), got {h}")));
            }
        }
        if self.order > 1 {
            return Err(CliError::semantic("order", format!("must be 0 or 1, got {}", self.order)));
        }
        let t = &self.tolerances;
        if !(t.eps_cluster > 0.0 && t.eps_cluster < 1.0) {
            return Err(CliError::semantic("eps-cluster", format!("must lie in (0, 1), got {}", t.eps_cluster)));
        }
        for (key, v) in [("tol", t.tol_rel), ("tol-gen", t.tol_gen)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::semantic(key, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(points) = &self.sampling.points {
            if points.is_empty() {
                return Err(CliError::semantic("points", "empty point list"));
            }
            let n = self.surface.n();
            if let Some(p) = points.iter().find(|p| p.len() != n) {
                return Err(CliError::semantic("points", format!("point {p:?} has {} coordinates, n = {n}", p.len())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_json_round_trip() {
        let s = SurfaceConfig::Expr(ExprSurface {
            n: 3,
            nu: 0.0,
            components: vec!["u1".into(), "u2".into(), "u3".into(), "u1^2+u2^2+u3^2".into()],
            domain: vec![[-1.0, 1.0]; 3],
        });
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"expr\""));
        let back: SurfaceConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = text.replace("\"nu\"", "\"mu\"");
        assert!(serde_json::from_str::<SurfaceConfig>(&bad).is_err());
    }

    #[test]
    fn expression_chart_checks_components() {
        let mut e = ExprSurface {
            n: 3,
            nu: 0.0,
            components: vec!["u1".into(), "u2".into(), "u3".into()],
            domain: vec![[-1.0, 1.0]; 3],
        };
        assert!(matches!(e.compile(), Err(CliError::Semantic { .. })));
        e.components.push("u1*u4".into());
        let err = e.compile().unwrap_err();
        assert!(err.to_string().starts_with("n:"), "{err}");
    }
}
