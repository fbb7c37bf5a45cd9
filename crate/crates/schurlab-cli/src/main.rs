//! Experiment front end for the schurlab library.
//!
//! Every subcommand validates its inputs, runs one deterministic experiment,
//! prints a JSON summary to stdout, and writes CSV/JSON artifacts when
//! `--out` is given. The same experiments can be described by a JSON file
//! passed as `--config`; unknown or missing keys there are hard errors.
//!
//! Exit codes: 0 success, 2 validation failure (bad flags, bad config,
//! missing report input), 3 tolerance breach in a verify mode. Errors are
//! reported as one-line JSON records on stderr.
//!
//! `SCHURLAB_THREADS` caps the worker pool used by the library's parallel
//! searches; orchestration itself is single threaded.

mod artifacts;
mod report;
mod sweeps;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use schurlab::normsearch::{Construction, SymbolSpec};

use crate::artifacts::{error_record, CliError, Outcome, Rendered};

#[derive(Parser)]
#[command(name = "schurlab", version, about = "Divided-difference multiplier experiments")]
struct Cli {
    /// JSON experiment description run instead of a subcommand
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<TopCommand>,
}

#[derive(Subcommand)]
enum TopCommand {
    /// Check an identity family against direct evaluation
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Lower-bound a multiplier norm by block coordinate ascent
    Estimate(EstimateParams),
    /// Run a parameter sweep and fit the trend
    Sweep {
        #[command(subcommand)]
        target: SweepTarget,
    },
    /// Summarize stored experiment artifacts without recomputing them
    Report(ReportParams),
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Node insertion, merge, and zero-insertion expansions
    Reductions(ReductionsParams),
    /// Permutation invariance, confluent limits, and the Monte Carlo oracle
    Divdiff(DivdiffParams),
    /// Chart-localized rewriting of an order-n divided difference
    Decomposition(DecompParams),
    /// Dominance partitions of unity on the sphere and their pullbacks
    Partition(PartitionParams),
    /// Fourier-side separation of homogeneous symbols
    Fourier(FourierParams),
    /// Four-term closed form of the cubic singular divided difference
    Remark(RemarkParams),
}

#[derive(Subcommand)]
enum SweepTarget {
    /// Norm estimates across a Schatten exponent grid, with power-law fits
    Exponent(SweepExponentParams),
    /// Truncation-identity residuals across lattice depths
    Lowerbound(SweepLowerboundParams),
    /// Interpolation bound across an exponent grid, normalized by p* p^n
    BoundCurve(SweepBoundCurveParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionArg {
    First,
    Second,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::First => Construction::First,
            ConstructionArg::Second => Construction::Second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    /// indicator of row < column, linear only
    #[default]
    #[value(alias = "triangle")]
    UpperTriangular,
    /// divided difference of the singular power family on a uniform grid
    AbsPower,
    /// geometric-lattice symbol of the first or second construction
    Lattice,
    /// constant symbol
    Constant,
}

/// Symbol selection shared by estimate and the exponent sweep. Aux flags
/// apply to one family each and are rejected elsewhere, so a config cannot
/// silently carry dead parameters.
#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolFlags {
    /// symbol family
    #[arg(long = "symbol", value_enum, default_value_t = SymbolKind::UpperTriangular)]
    pub kind: SymbolKind,
    /// singular power order (abs-power)
    #[arg(long)]
    pub order: Option<u32>,
    /// lower grid endpoint (abs-power)
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    /// upper grid endpoint (abs-power)
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
    /// lattice construction (lattice)
    #[arg(long, value_enum)]
    pub variant: Option<ConstructionArg>,
    /// geometric ratio in (0, 1) (lattice)
    #[arg(long)]
    pub q: Option<f64>,
    /// outer exponent scale (lattice)
    #[arg(long)]
    pub k: Option<u32>,
    /// interior exponent scale (lattice)
    #[arg(long)]
    pub l: Option<u32>,
    /// constant value (constant)
    #[arg(long)]
    pub value: Option<f64>,
}

impl SymbolFlags {
    fn forbid(&self, kind_name: &str, offending: &[(&str, bool)]) -> Result<(), CliError> {
        for (name, present) in offending {
            if *present {
                return Err(CliError::validation(format!(
                    "--{name} does not apply to the {kind_name} symbol"
                )));
            }
        }
        Ok(())
    }

    /// Resolves the flags into a concrete spec, applying per-family defaults
    /// and rejecting flags of other families.
    pub fn resolve(&self, n: usize) -> Result<SymbolSpec, CliError> {
        let order_set = ("order", self.order.is_some());
        let lo_set = ("lo", self.lo.is_some());
        let hi_set = ("hi", self.hi.is_some());
        let variant_set = ("variant", self.variant.is_some());
        let q_set = ("q", self.q.is_some());
        let k_set = ("k", self.k.is_some());
        let l_set = ("l", self.l.is_some());
        let value_set = ("value", self.value.is_some());
        match self.kind {
            SymbolKind::UpperTriangular => {
                self.forbid(
                    "upper-triangular",
                    &[order_set, lo_set, hi_set, variant_set, q_set, k_set, l_set, value_set],
                )?;
                if n != 1 {
                    return Err(CliError::validation("the triangular indicator is linear; use --n 1"));
                }
                Ok(SymbolSpec::UpperTriangular)
            }
            SymbolKind::AbsPower => {
                self.forbid("abs-power", &[variant_set, q_set, k_set, l_set, value_set])?;
                let order = self.order.unwrap_or(2);
                let lo = self.lo.unwrap_or(-1.0);
                let hi = self.hi.unwrap_or(1.0);
                if (order as usize) < n.max(1) {
                    return Err(CliError::validation(format!(
                        "abs-power order {order} is below the arity {n}; repeated grid tuples would need unavailable derivatives"
                    )));
                }
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(CliError::validation("need finite --lo < --hi"));
                }
                Ok(SymbolSpec::AbsPowerGrid { order, lo, hi })
            }
            SymbolKind::Lattice => {
                self.forbid("lattice", &[order_set, lo_set, hi_set, value_set])?;
                let variant = self.variant.unwrap_or(ConstructionArg::First);
                if variant == ConstructionArg::Second && n < 2 {
                    return Err(CliError::validation("the second lattice construction needs --n >= 2"));
                }
                let q = self.q.unwrap_or(0.5);
                if !(q > 0.0 && q < 1.0) {
                    return Err(CliError::validation("need 0 < --q < 1"));
                }
                let k = self.k.unwrap_or(2);
                let l = self.l.unwrap_or(3);
                if k == 0 || l == 0 {
                    return Err(CliError::validation("lattice scales --k and --l must be positive"));
                }
                let variant_code = match variant {
                    ConstructionArg::First => 1,
                    ConstructionArg::Second => 2,
                };
                Ok(SymbolSpec::Lattice { variant: variant_code, q, k, l })
            }
            SymbolKind::Constant => {
                self.forbid("constant", &[order_set, lo_set, hi_set, variant_set, q_set, k_set, l_set])?;
                let value = self.value.unwrap_or(1.0);
                if !value.is_finite() {
                    return Err(CliError::validation("constant symbol value must be finite"));
                }
                Ok(SymbolSpec::Constant { value })
            }
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionsParams {
    /// divided difference order
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// random node configurations per identity
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// relative residual ceiling
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// directory for CSV/JSON artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivdiffParams {
    /// random configurations for the permutation and confluence checks
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Monte Carlo sample count for the simplex oracle
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 5)]
    pub seed: u64,
    /// relative ceiling for the permutation check
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompParams {
    /// divided difference order
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// random node tuples
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    /// relative residual ceiling
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionParams {
    /// sphere dimension (number of charts)
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// random evaluation points and index sets
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    /// absolute discrepancy ceiling
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierParams {
    /// symbol arity, 2 or 3
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// frequency samples per axis, a power of two (default 4096 for n=2, 512 for n=3)
    #[arg(long)]
    pub points: Option<usize>,
    /// half-width of the frequency box (default 26 for n=2, 12 for n=3)
    #[arg(long)]
    pub half_width: Option<f64>,
    /// random reconstruction points
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 23)]
    pub seed: u64,
    /// absolute reconstruction error ceiling
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemarkParams {
    /// random positive quadruples
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 29)]
    pub seed: u64,
    /// absolute residual ceiling
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateParams {
    /// multiplier arity
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// matrix dimension (symbol label count)
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// target Schatten exponent; slot exponents default to n*p each
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// explicit comma-separated slot exponents, overriding --p ("inf" allowed)
    #[arg(long)]
    pub p_slots: Option<String>,
    /// independent ascent starts
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// slot update cycles per start
    #[arg(long, default_value_t = 60)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(rename = "symbol")]
    pub symbol: SymbolFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepExponentParams {
    /// multiplier arity
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// matrix dimension
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// comma-separated Schatten exponents, strictly increasing
    #[arg(long, default_value = "2,4,8,16")]
    pub p_grid: String,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 40)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(rename = "symbol")]
    pub symbol: SymbolFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLowerboundParams {
    /// truncation identity to test
    #[arg(long, value_enum, default_value_t = ConstructionArg::First)]
    pub variant: ConstructionArg,
    /// multiplier arity
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// geometric ratio in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// comma-separated outer exponent scales
    #[arg(long, default_value = "20,30")]
    pub k_grid: String,
    /// comma-separated interior exponent scales
    #[arg(long, default_value = "40,80,160")]
    pub l_grid: String,
    /// label count (matrix dimension)
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBoundCurveParams {
    /// multiplier arity
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// comma-separated target exponents, each > 1
    #[arg(long, default_value = "1.01,1.1,2,8,32,64")]
    pub p_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportParams {
    /// directory of experiment artifacts to summarize
    #[arg(value_name = "DIR")]
    pub input: PathBuf,
    /// where .dat plot files go (default: the input directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

enum Runnable {
    Reductions(ReductionsParams),
    Divdiff(DivdiffParams),
    Decomposition(DecompParams),
    Partition(PartitionParams),
    Fourier(FourierParams),
    Remark(RemarkParams),
    Estimate(EstimateParams),
    SweepExponent(SweepExponentParams),
    SweepLowerbound(SweepLowerboundParams),
    SweepBoundCurve(SweepBoundCurveParams),
    Report(ReportParams),
}

/// Config files name the experiment and nest its parameters, mirroring the
/// subcommand tree: {"command": "verify-remark", "params": {...}}.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: String,
    params: serde_json::Value,
}

const KNOWN_COMMANDS: &[&str] = &[
    "verify-reductions",
    "verify-divdiff",
    "verify-decomposition",
    "verify-partition",
    "verify-fourier",
    "verify-remark",
    "estimate",
    "sweep-exponent",
    "sweep-lowerbound",
    "sweep-bound-curve",
    "report",
];

fn from_config(path: &PathBuf) -> Result<Runnable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| {
        CliError::validation(format!("config {} params: {e}", path.display()))
    };
    let p = file.params;
    match file.command.as_str() {
        "verify-reductions" => Ok(Runnable::Reductions(serde_json::from_value(p).map_err(bad)?)),
        "verify-divdiff" => Ok(Runnable::Divdiff(serde_json::from_value(p).map_err(bad)?)),
        "verify-decomposition" => Ok(Runnable::Decomposition(serde_json::from_value(p).map_err(bad)?)),
        "verify-partition" => Ok(Runnable::Partition(serde_json::from_value(p).map_err(bad)?)),
        "verify-fourier" => Ok(Runnable::Fourier(serde_json::from_value(p).map_err(bad)?)),
        "verify-remark" => Ok(Runnable::Remark(serde_json::from_value(p).map_err(bad)?)),
        "estimate" => Ok(Runnable::Estimate(serde_json::from_value(p).map_err(bad)?)),
        "sweep-exponent" => Ok(Runnable::SweepExponent(serde_json::from_value(p).map_err(bad)?)),
        "sweep-lowerbound" => Ok(Runnable::SweepLowerbound(serde_json::from_value(p).map_err(bad)?)),
        "sweep-bound-curve" => Ok(Runnable::SweepBoundCurve(serde_json::from_value(p).map_err(bad)?)),
        "report" => Ok(Runnable::Report(serde_json::from_value(p).map_err(bad)?)),
        other => Err(CliError::validation(format!(
            "unknown command {other:?} in config; known commands: {}",
            KNOWN_COMMANDS.join(", ")
        ))),
    }
}

fn from_cli(cmd: TopCommand) -> Runnable {
    match cmd {
        TopCommand::Verify { target } => match target {
            VerifyTarget::Reductions(p) => Runnable::Reductions(p),
            VerifyTarget::Divdiff(p) => Runnable::Divdiff(p),
            VerifyTarget::Decomposition(p) => Runnable::Decomposition(p),
            VerifyTarget::Partition(p) => Runnable::Partition(p),
            VerifyTarget::Fourier(p) => Runnable::Fourier(p),
            VerifyTarget::Remark(p) => Runnable::Remark(p),
        },
        TopCommand::Estimate(p) => Runnable::Estimate(p),
        TopCommand::Sweep { target } => match target {
            SweepTarget::Exponent(p) => Runnable::SweepExponent(p),
            SweepTarget::Lowerbound(p) => Runnable::SweepLowerbound(p),
            SweepTarget::BoundCurve(p) => Runnable::SweepBoundCurve(p),
        },
        TopCommand::Report(p) => Runnable::Report(p),
    }
}

fn execute(r: &Runnable) -> Result<Outcome, CliError> {
    match r {
        Runnable::Reductions(p) => verify::run_reductions(p),
        Runnable::Divdiff(p) => verify::run_divdiff(p),
        Runnable::Decomposition(p) => verify::run_decomposition(p),
        Runnable::Partition(p) => verify::run_partition(p),
        Runnable::Fourier(p) => verify::run_fourier(p),
        Runnable::Remark(p) => verify::run_remark(p),
        Runnable::Estimate(p) => sweeps::run_estimate(p),
        Runnable::SweepExponent(p) => sweeps::run_sweep_exponent(p),
        Runnable::SweepLowerbound(p) => sweeps::run_sweep_lowerbound(p),
        Runnable::SweepBoundCurve(p) => sweeps::run_sweep_bound_curve(p),
        Runnable::Report(p) => report::run_report(p),
    }
}

fn cap_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SCHURLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("SCHURLAB_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(CliError::validation("SCHURLAB_THREADS must be a positive integer"));
    }
    // before any parallel work, so the global pool build cannot have raced
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::validation(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    if let Err(e) = cap_threads() {
        error_record(e.kind(), &e.to_string());
        return ExitCode::from(2);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            error_record("validation", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    let runnable = match (cli.config, cli.command) {
        (Some(_), Some(_)) => {
            error_record("validation", "--config and a subcommand are mutually exclusive");
            return ExitCode::from(2);
        }
        (None, Some(cmd)) => from_cli(cmd),
        (Some(path), None) => match from_config(&path) {
            Ok(r) => r,
            Err(e) => {
                error_record(e.kind(), &e.to_string());
                return ExitCode::from(2);
            }
        },
        (None, None) => {
            error_record("validation", "nothing to do: pass a subcommand or --config (see --help)");
            return ExitCode::from(2);
        }
    };
    match execute(&runnable) {
        Ok(outcome) => {
            match &outcome.rendered {
                Rendered::Json(doc) => {
                    println!("{}", serde_json::to_string_pretty(doc).expect("summary serializes"));
                }
                Rendered::Text(text) => print!("{text}"),
            }
            if outcome.breached {
                error_record("tolerance", "a verify residual exceeded its tolerance; see the summary");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            error_record(e.kind(), &e.to_string());
            ExitCode::from(2)
        }
    }
}
