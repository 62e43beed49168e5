use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qgo", version, about = "Greedy y-field sign optimisation for quantum annealing")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Unset values come from `--config`,
/// then from built-in defaults.
#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// TOML config file, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// RK4 steps per unit time.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Tolerance of the adaptive integrator.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Integrator: rk4 or adaptive.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QGO_THREADS")]
    pub threads: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a problem instance.
    Gen(GenArgs),
    /// One optimisation or baseline run on an instance.
    Run(RunArgs),
    /// (b, c) calibration or a parameter-grid figure.
    Scan(ScanArgs),
    /// Benchmark suite for one figure.
    Bench(BenchArgs),
    /// Schedule coefficients or ground-space overlaps over time.
    Trace(TraceArgs),
    /// Mean-field trajectory, optionally under exact counterdiabatic driving.
    Meanfield(MeanfieldArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Sk,
    Ferro,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub n: usize,
    /// Coupling scale of the ferromagnet.
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the enumerated ground states next to the instance.
    #[arg(long)]
    pub cache_gs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sequential,
    SingleShot,
    Yfield,
    Qa,
    Sa,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Sequential)]
    pub mode: Mode,
    /// energy or fidelity.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Transverse amplitude; calibrated on the ferromagnet of the same size when unset.
    #[arg(long)]
    pub b: Option<f64>,
    /// y-field magnitude; calibrated like `--b` when unset.
    #[arg(long)]
    pub c: Option<f64>,
    /// Mean of forward slopes over three widths instead of one.
    #[arg(long)]
    pub average_gradient: bool,
    /// Per-iteration CSV of the greedy run.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Reuse or write `<instance>.gs.json`.
    #[arg(long)]
    pub cache_gs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Meanfield,
    Ferro,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("what").required(true).args(["family", "figure"])))]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// fig1, fig2ab, fig2cd or fig3.
    #[arg(long)]
    pub figure: Option<String>,
    /// Ferromagnet size for `--family ferro`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sizes for `--figure`, e.g. 4:20:2 or 8,12.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Points per grid axis.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub figure: String,
    /// e.g. 4:12:2 or 4,8,12.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Annealing times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Measure of the sequential greedy runs.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("what").required(true).args(["coeffs", "overlaps"])))]
pub struct TraceArgs {
    /// A(t), B(t), C(t) and the rotated-frame B'(t), C'(t).
    #[arg(long)]
    pub coeffs: bool,
    /// Ground-space overlaps of an anneal (n <= 12).
    #[arg(long)]
    pub overlaps: bool,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// y-field signs per site, e.g. ++-+; all + when unset.
    #[arg(long)]
    pub signs: Option<String>,
    /// Plain annealing (no y-field).
    #[arg(long)]
    pub qa: bool,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Samples over [0, tau] for --coeffs.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// CSV path; stdout when unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    /// Drive with the exact counterdiabatic y-field instead of the fixed profile.
    #[arg(long)]
    pub exact_cd: bool,
    /// Grid steps between samples.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
