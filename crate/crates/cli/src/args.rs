use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use subwalk_core::LegMode;

#[derive(Parser, Debug)]
#[command(
    name = "subwalk",
    version,
    about = "Sub-Laplacians, Hamiltonian flows and ε-scaled random walks on sub-Riemannian charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check compatibility, sphere moments, Christoffel symbols, energy
    /// conservation and the two sub-Laplacian formulas at sample points.
    Verify(VerifyArgs),
    /// Evaluate the sub-Laplacian of a field by the local formula and by the
    /// sphere average.
    Laplacian(LaplacianArgs),
    /// Integrate the Hamiltonian flow and write the trace.
    Flow(FlowArgs),
    /// Sample ε-scaled random walks and write their legs.
    Walk(WalkArgs),
    /// Estimate E[f(ξ^ε_{t/ε²})] over a list of ε values.
    Converge(ConvergeArgs),
    /// Euler-Maruyama reference moments for Heisenberg horizontal Brownian motion.
    Oracle(OracleArgs),
    /// Re-run the configuration embedded in an earlier output and compare payloads.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinModel {
    Heisenberg,
    Euclidean,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegModeArg {
    Exact,
    Rk4,
}

impl From<LegModeArg> for LegMode {
    fn from(m: LegModeArg) -> Self {
        match m {
            LegModeArg::Exact => LegMode::Exact,
            LegModeArg::Rk4 => LegMode::RungeKutta,
        }
    }
}

/// Comma-separated coordinates, e.g. `0.3,-1.2,7`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

impl FromStr for Coords {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|c| {
                let c = c.trim();
                c.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("not a finite number: {c:?}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Coords)
    }
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Built-in model.
    #[arg(long, value_enum, default_value_t = BuiltinModel::Heisenberg)]
    pub model: BuiltinModel,
    /// Model spec file; overrides --model.
    #[arg(long, value_name = "PATH", conflicts_with = "model")]
    pub model_file: Option<PathBuf>,
    /// Heisenberg metric parameter λ > 0.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Euclidean dimension.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
}

#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    /// Built-in test field: x, y, z, xsq, ysq, zsq, xy, normsq, quartic or xN.
    #[arg(long = "f", value_name = "NAME", default_value = "xsq")]
    pub f: String,
    /// Test field as an expression in x1..xd; overrides --f.
    #[arg(long, value_name = "EXPR", conflicts_with = "f")]
    pub f_expr: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Random check points for built-in models (spec files use their sample points).
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    /// Sphere samples per point for the moment and cross-formula checks.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct LaplacianArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    /// Evaluation point; repeat for several.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub point: Vec<Coords>,
    /// Sphere samples per point.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial position.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Coords,
    /// Initial momentum.
    #[arg(long, allow_hyphen_values = true)]
    pub momentum: Coords,
    /// Flow duration.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// RK4 step size.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Compare every trace point with the model's closed-form flow.
    #[arg(long)]
    pub compare_exact: bool,
    /// Largest accepted discrepancy for --compare-exact.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Start point; the origin when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<Coords>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Diffusion time; walks run for t/ε² on the walk clock.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Number of walks.
    #[arg(long, default_value_t = 1)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// RK4 step for legs without a closed-form flow.
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = LegModeArg::Exact)]
    pub leg_mode: LegModeArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    /// Start point; the origin when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<Coords>,
    /// Single ε; shorthand for a one-entry --eps-list.
    #[arg(long, conflicts_with = "eps_list")]
    pub epsilon: Option<f64>,
    /// Strictly decreasing ε values.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    pub eps_list: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = LegModeArg::Exact)]
    pub leg_mode: LegModeArg,
    /// Oracle report (from `subwalk oracle --format json`) supplying the reference.
    #[arg(long, value_name = "PATH", conflicts_with = "no_reference")]
    pub reference: Option<PathBuf>,
    /// Do not attach a reference value.
    #[arg(long)]
    pub no_reference: bool,
    /// Paths for an automatically run Heisenberg oracle.
    #[arg(long, default_value_t = 100_000)]
    pub oracle_paths: usize,
    /// Time step for an automatically run Heisenberg oracle.
    #[arg(long, default_value_t = 1e-3)]
    pub oracle_dt: f64,
    /// Where to write the JSON summary of a CSV run; defaults to the CSV path
    /// with a `.json` extension, or standard error.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n_paths: usize,
    /// Euler-Maruyama time step.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Frequency λ in the reported E[cos(λz)].
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Output file written by an earlier run.
    pub input: PathBuf,
    /// Also write the regenerated output here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}
