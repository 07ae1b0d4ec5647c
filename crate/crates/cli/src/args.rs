use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use interplab::Variant;
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "interplab", version, about = "Interpolation experiments on finite metric-measure spaces")]
pub struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Build, inspect, or sample on a space.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Decreasing rearrangement `f*` (atoms CSV), or point values with `--t`.
    Rearrange(RearrangeArgs),
    /// Uncentered maximal function `Mf` (field CSV).
    Maximal(MaximalArgs),
    /// Whitney family of the level set `{M h^q > alpha^q}` (JSON).
    Whitney(WhitneyArgs),
    /// Calderón–Zygmund decomposition with its certificate (JSON).
    Czd(CzdArgs),
    /// K-functional sandwich curve (CSV), or one row with `--t` (JSON).
    Kfun(KfunArgs),
    /// Run a check suite on a field; exit 3 if any check fails.
    Verify(VerifyArgs),
    /// One JSON document with the measured constants of every module.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceCmd {
    /// Build a lattice (`--grid 64`, `--grid 16x16`) or a cone (`--cone 2,8,4`).
    Build(BuildArgs),
    /// Size, mass, diameter, neighbour radius, doubling constant.
    Info(InfoArgs),
    /// Write a built-in field (`@zero`, `@tent`, `@smooth`, ...) as CSV.
    Field(FieldArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BuildArgs {
    /// Lattice shape, `N` or `N1xN2x...`.
    #[arg(long, conflicts_with = "cone")]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    /// `uniform` or `power(beta)`.
    #[arg(long, default_value = "uniform")]
    pub weights: String,
    /// Two-sided cone `DIMENSION,LEVELS,POINTS_PER_RING`.
    #[arg(long)]
    pub cone: Option<String>,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpaceArg {
    /// Space JSON.
    #[arg(long)]
    pub space: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct InfoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArg,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

/// `--fn` is an `id,value` CSV or a built-in: `@zero`, `@tent`,
/// `@smooth`, `@uniform`, `@halves`, `@coord<k>` (`--seed` for the random ones).
#[derive(Debug, Args, Serialize)]
pub struct FieldArg {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArg,
    #[arg(long = "fn", value_name = "PATH|@NAME")]
    #[serde(rename = "fn")]
    pub field: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FieldArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RearrangeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    /// Evaluate `f*`, `f**`, and `int_0^t f*` at this `t` instead.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MaximalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

/// Threshold: `--alpha` directly, or `alpha(t)` from `--t`.
#[derive(Debug, Args, Serialize)]
pub struct Level {
    #[arg(long, conflicts_with = "t")]
    pub alpha: Option<f64>,
    /// Mass level, `alpha = (M h^q)^*(t)^{1/q}`.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct WhitneyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub level: Level,
    #[arg(long, value_enum, default_value_t = VariantArg::Global)]
    pub variant: VariantArg,
    /// Core shrink factor; `C2 = 4 C1`.
    #[arg(long, default_value_t = 2.0)]
    pub c1: f64,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CzdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub level: Level,
    #[arg(long, value_enum, default_value_t = VariantArg::Global)]
    pub variant: VariantArg,
    /// Unit-cover radius (local variant).
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KfunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Decomposition exponent of the witness (default: `q`).
    #[arg(long)]
    pub p: Option<f64>,
    /// Points of the log-spaced `t` grid.
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
    /// Single `t` instead of a curve.
    #[arg(long)]
    pub t: Option<f64>,
    /// Also report `||f||_{theta,q}` from the oracle curve.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = VariantArg::Global)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Rearrange,
    Maximal,
    Czd,
    Kfun,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArg,
    /// Field to check (default: `@zero`).
    #[arg(long = "fn", value_name = "PATH|@NAME", default_value = "@zero")]
    #[serde(rename = "fn")]
    pub field: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Threshold for the czd suite (default: `alpha(t)` at `t = mu(X)/4, mu(X)/2`).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Global)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: FieldArg,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 17)]
    pub grid: usize,
    /// Mass level of the reported decomposition (default `mu(X)/4`).
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Global,
    Local,
    Homogeneous,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Global => Variant::Global,
            VariantArg::Local => Variant::Local,
            VariantArg::Homogeneous => Variant::Homogeneous,
        }
    }
}
