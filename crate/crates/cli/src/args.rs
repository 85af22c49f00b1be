//! Command-line arguments and their translation into a [`RunConfig`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperholonomy::catalog::Family;

use crate::config::{Command, FamilySurface, OutputFormat, RunConfig, SurfaceConfig};
use crate::error::CliError;
use crate::json::{parse, to_canonical_string};
use crate::run::{run, EXIT_ERROR, EXIT_OK};
use crate::schema::report_schema;
use crate::specfile::parse_surface_spec;
use crate::text::render;

#[derive(Debug, Parser)]
#[command(name = "hyperholonomy", version, about = "Restricted holonomy of hypersurfaces in space forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Name the holonomy group at sampled points and check the split theorems.
    Classify(RunArgs),
    /// Check the Codazzi, Bianchi and Gauss identities and the loop holonomy.
    Verify(RunArgs),
    /// List the catalog families and their parameters.
    ListFamilies,
    /// Print the JSON Schema of the report.
    Schema,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Catalog family (see list-families).
    #[arg(long)]
    pub family: Option<String>,
    /// Hypersurface dimension (n >= 3)
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension of the first sphere factor (clifford_product)
    #[arg(long)]
    pub k: Option<usize>,
    /// Radius of the first sphere factor (clifford_product)
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Geodesic radius (geodesic spheres)
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// Distance from the totally geodesic hypersurface (equidistant)
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Ambient curvature; defaults to the family's natural sign with |nu| = 1.
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// Height amplitude, |amplitude| <= 0.5 (graph_generic)
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Height frequency in (0, 3] (graph_generic)
    #[arg(long)]
    pub frequency: Option<f64>,
    /// Surface spec file (key=value format, optionally with an expr: block).
    #[arg(long, value_name = "PATH")]
    pub spec_file: Option<PathBuf>,
    /// Replay the config echoed in a JSON report (or a bare config object).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Explicit points, e.g. "0.1,0.2,0.3,0.4;0,0,0,0".
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Number of additional random points.
    #[arg(long)]
    pub random: Option<usize>,
    /// Seed for --random
    #[arg(long)]
    pub seed: Option<u64>,
    /// Finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    /// 0: curvature generators only; 1: also their covariant derivatives.
    #[arg(long)]
    pub order: Option<u8>,
    /// Relative gap below which principal curvatures are merged
    #[arg(long)]
    pub eps_cluster: Option<f64>,
    /// Tolerance for |nu + Lambda*Theta| and the theorem checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Drop threshold for generators.
    #[arg(long)]
    pub tol_gen: Option<f64>,
    #[arg(long, value_enum)]
    pub output: Option<Output>,
    /// Allow n < 3; all verdicts are then UNDETERMINED.
    #[arg(long)]
    pub smoke: bool,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_points(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::semantic("points", format!("'{}' is not a number", x.trim())))
                })
                .collect()
        })
        .collect()
}

/// Reads a config from a report or a bare config object.
pub fn load_config(text: &str) -> Result<RunConfig, CliError> {
    let value = parse(text)?;
    let config = if value.get("schema_version").is_some() { value["config"].clone() } else { value };
    serde_json::from_value(config).map_err(|e| CliError::Config(format!("config: {e}")))
}

impl RunArgs {
    fn surface_flags_given(&self) -> bool {
        self.family.is_some()
            || self.n.is_some()
            || self.k.is_some()
            || self.r.is_some()
            || self.rho.is_some()
            || self.t.is_some()
            || self.nu.is_some()
            || self.amplitude.is_some()
            || self.frequency.is_some()
    }

    fn run_flags_given(&self) -> bool {
        self.grid.is_some()
            || self.points.is_some()
            || self.random.is_some()
            || self.seed.is_some()
            || self.h.is_some()
            || self.order.is_some()
            || self.eps_cluster.is_some()
            || self.tol.is_some()
            || self.tol_gen.is_some()
            || self.smoke
    }

    fn surface(&self) -> Result<SurfaceConfig, CliError> {
        if let Some(path) = &self.spec_file {
            if self.surface_flags_given() {
                return Err(CliError::semantic("spec-file", "cannot be combined with surface flags"));
            }
            return parse_surface_spec(&read(path)?);
        }
        let name = self.family.as_deref().ok_or_else(|| CliError::semantic("family", "missing (or give --spec-file)"))?;
        let family: Family = name.parse()?;
        Ok(SurfaceConfig::Family(FamilySurface {
            family: family.name().to_string(),
            n: self.n.ok_or_else(|| CliError::semantic("n", "missing"))?,
            nu: self.nu.unwrap_or(family.default_nu()),
            k: self.k,
            r: self.r,
            rho: self.rho,
            t: self.t,
            amplitude: self.amplitude,
            frequency: self.frequency,
        }))
    }

    /// The run configuration for `command`.
    pub fn to_config(&self, command: Command) -> Result<RunConfig, CliError> {
        if let Some(path) = &self.config {
            if self.surface_flags_given() || self.spec_file.is_some() || self.run_flags_given() {
                return Err(CliError::semantic("config", "only --output may accompany --config"));
            }
            let mut config = load_config(&read(path)?)?;
            if config.command != command {
                return Err(CliError::semantic(
                    "config",
                    format!("records a {} run, not {}", config.command.as_str(), command.as_str()),
                ));
            }
            if let Some(o) = self.output {
                config.output = o.into();
            }
            return Ok(config);
        }
        let mut config = RunConfig::new(command, self.surface()?);
        if let Some(g) = self.grid {
            config.sampling.grid = g;
        }
        if let Some(p) = &self.points {
            config.sampling.points = Some(parse_points(p)?);
        }
        if let Some(r) = self.random {
            config.sampling.random = r;
        }
        if let Some(s) = self.seed {
            config.sampling.seed = s;
        }
        config.h = self.h;
        if let Some(o) = self.order {
            config.order = o;
        }
        if let Some(e) = self.eps_cluster {
            config.tolerances.eps_cluster = e;
        }
        config.tolerances.tol_rel = self.tol;
        config.tolerances.tol_gen = self.tol_gen;
        if let Some(o) = self.output {
            config.output = o.into();
        }
        config.smoke = self.smoke;
        config.validate()?;
        Ok(config)
    }
}

impl From<Output> for OutputFormat {
    fn from(o: Output) -> Self {
        match o {
            Output::Text => OutputFormat::Text,
            Output::Json => OutputFormat::Json,
        }
    }
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn list_families() -> String {
    let mut out = String::new();
    for f in Family::ALL {
        let keys = f.param_keys().join(", ");
        out.push_str(&format!(
            "{:<18} nu {:>2}  params [{}]  {}\n",
            f.name(),
            f.default_nu(),
            if keys.is_empty() { "-".to_string() } else { keys },
            f.summary()
        ));
    }
    out
}

fn execute_run(args: &RunArgs, command: Command) -> Result<(i32, String), CliError> {
    let config = args.to_config(command)?;
    let outcome = run(&config)?;
    let text = match config.output {
        OutputFormat::Json => to_canonical_string(&outcome.report)?,
        OutputFormat::Text => render(&outcome.report),
    };
    Ok((outcome.exit_code, text))
}

/// Runs the command line `args` (including the program name).
pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                Invocation { exit_code: code, stdout: String::new(), stderr: format!("error[E_USAGE]: {rendered}") }
            } else {
                Invocation { exit_code: code, stdout: rendered, stderr: String::new() }
            };
        }
    };
    let result = match &cli.command {
        Cmd::Classify(a) => execute_run(a, Command::Classify),
        Cmd::Verify(a) => execute_run(a, Command::Verify),
        Cmd::ListFamilies => Ok((EXIT_OK, list_families())),
        Cmd::Schema => to_canonical_string(&report_schema()).map(|s| (EXIT_OK, s)),
    };
    match result {
        Ok((exit_code, stdout)) => Invocation { exit_code, stdout, stderr: String::new() },
        Err(e) => Invocation {
            exit_code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error[{}]: {}\n", e.code(), e.to_string().lines().next().unwrap_or("")),
        },
    }
}
