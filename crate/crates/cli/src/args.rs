//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kato_core::SCHEMA_VERSION;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "kato", version = SCHEMA_VERSION, about = "Heat kernels, control pairs and resolvent compactness checks on weighted graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every randomized check.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write the ledger rows as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tolerances: Vec<String>,
    /// Allow tolerance overrides looser than the documented defaults.
    #[arg(long = "unsafe", global = true)]
    pub allow_loosen: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph input checks.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Heat kernels and their axioms.
    #[command(subcommand)]
    Heat(HeatCommand),
    /// Control pairs `p(t,x,x) ≤ F1(x) F2(t)`.
    #[command(subcommand)]
    Control(ControlCommand),
    /// Resolvent compactness certificates.
    #[command(subcommand)]
    Compact(CompactCommand),
    /// Semigroup and resolvent domination.
    #[command(subcommand)]
    Dominate(DominateCommand),
    /// Bundled end-to-end examples.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Report every structural violation of a graph file.
    Validate(GraphArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum HeatCommand {
    /// Compute `p(t,x,y)` on a time grid and write it as a kernel file.
    Kernel(HeatKernelArgs),
    /// Check the heat-kernel axioms of a graph or of a kernel file.
    Verify(HeatVerifyArgs),
    /// Dirichlet kernels over an exhaustion and their monotone convergence.
    Minimal(HeatMinimalArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeatKernelArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated times; defaults to the built-in grid.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeatVerifyArgs {
    #[arg(long, required_unless_present = "kernel", conflicts_with = "kernel")]
    pub graph: Option<PathBuf>,
    /// Verify a stored kernel instead of computing one.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// `root=ID,radii=R1,R2,...`; also checks exhaustion monotonicity.
    #[arg(long, requires = "graph")]
    pub exhaustion: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeatMinimalArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// `root=ID,radii=R1,R2,...`; defaults to dyadic balls around the first vertex.
    #[arg(long)]
    pub exhaustion: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum ControlCommand {
    /// Integrability verdict for `∫ e^{-t} F2(t)^{1/(2q)} dt`.
    Check(ControlCheckArgs),
    /// Fit a control pair to a kernel file and certify it on every sample.
    Fit(ControlFitArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum F2Family {
    Power,
    Constant,
    Monomial,
    BakryEmery,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ControlCheckArgs {
    #[arg(long, value_enum)]
    pub family: F2Family,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Dimension parameter of the Bakry–Émery family.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFamily {
    Graph,
    Power,
    Constant,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ControlFitArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long, value_enum, default_value = "graph")]
    pub family: FitFamily,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
}

#[derive(Debug, Subcommand)]
pub enum CompactCommand {
    /// Verify every hypothesis and track singular values of `Ŵ(H^Φ + V + a)^{-1}`.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    /// Name of the potential `W` in the bundle file.
    #[arg(long, default_value = "W")]
    pub potential: String,
    /// Optional nonnegative potential `V` added to the operator.
    #[arg(long = "V")]
    pub v: Option<String>,
    /// `threshold:C`, `support:ID,ID,...`, `explicit:W1,W2` or `none`.
    #[arg(long, default_value = "threshold:0.1")]
    pub decomp: String,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Comma-separated resolvent parameters.
    #[arg(long = "a", value_delimiter = ',')]
    pub a_values: Option<Vec<f64>>,
    /// Root vertex id of the exhaustion; defaults to the first vertex.
    #[arg(long)]
    pub root: Option<String>,
    /// Ball radii; defaults to `[D/8, D/4, D/2, D]`.
    #[arg(long = "levels", value_delimiter = ',')]
    pub radii: Option<Vec<usize>>,
    #[arg(long = "topk", default_value_t = 5)]
    pub top_k: usize,
    /// Time grid for fitting the control pair.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum DominateCommand {
    /// Check `|e^{-tT} f| ≤ e^{-tS} |f|` and the resolvent analogue.
    Check(DominateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DominateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    /// Optional nonnegative potential added to the covariant operator.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long = "a", value_delimiter = ',')]
    pub a_values: Option<Vec<f64>>,
    /// Random sections per check, on top of the basis sections.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Debug, Subcommand)]
pub enum DemoCommand {
    /// Magnetic lattice with a decaying Coulomb-type potential.
    CoulombLattice(CoulombArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeArg {
    Path,
    Grid,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoulombArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.3)]
    pub theta: f64,
    #[arg(long, value_enum, default_value = "path")]
    pub lattice: LatticeArg,
    #[arg(long = "decay-power", default_value_t = 1.0)]
    pub decay_power: f64,
    /// `W1 = 1_{W > threshold} W`.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[arg(long = "a", value_delimiter = ',')]
    pub a_values: Option<Vec<f64>>,
    #[arg(long = "topk", default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}
