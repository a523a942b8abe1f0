//! Batch CLI for identifying socially disruptive policies from two-arm
//! network experiments.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neteffects::adjust::{adjusted_overlap_bounds, svt_denoise, SvtThreshold};
use neteffects::bounds::{dpo_bounds, dte_curve, DpoBoundRecord, GridPolicy};
use neteffects::error::ErrorKind;
use neteffects::netmat::{load_network, LoadOptions, NetworkFormat};
use neteffects::oracle;
use neteffects::pipeline::{run_report, AnalysisConfig};
use neteffects::ste::{dte_point_identified, ste_field, SteBasis};
use neteffects::{Arm, Error, Network};

#[derive(Parser)]
#[command(name = "neteffects", version, about = "Eigenvalue bounds and spectral treatment effects for two-arm network experiments")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "NETEFFECTS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds on the joint distribution of potential outcomes at (y1, y0)
    BoundsDpo(BoundsDpoArgs),
    /// Bounds on the distribution of treatment effects
    BoundsDte(BoundsDteArgs),
    /// Spectral treatment effects field, histogram, and disruption bound
    Ste(SteArgs),
    /// Exact sharp sets by permutation enumeration (small instances)
    Oracle(OracleArgs),
    /// Full report bundle from a TOML config
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatOpt {
    EdgeList,
    DenseCsv,
    Json,
}

impl From<FormatOpt> for NetworkFormat {
    fn from(f: FormatOpt) -> Self {
        match f {
            FormatOpt::EdgeList => NetworkFormat::EdgeList,
            FormatOpt::DenseCsv => NetworkFormat::DenseCsv,
            FormatOpt::Json => NetworkFormat::Json,
        }
    }
}

#[derive(Args)]
struct PairArgs {
    /// Treated-arm network file
    #[arg(long)]
    arm1: PathBuf,
    #[arg(long, value_enum, default_value = "dense-csv")]
    format1: FormatOpt,
    /// Label manifest for the treated arm (required for edge lists)
    #[arg(long)]
    labels1: Option<PathBuf>,
    /// Control-arm network file
    #[arg(long)]
    arm0: PathBuf,
    #[arg(long, value_enum, default_value = "dense-csv")]
    format0: FormatOpt,
    #[arg(long)]
    labels0: Option<PathBuf>,
    /// Denoising: `svt`, `svt:<tau>`, or `none`
    #[arg(long, default_value = "none")]
    denoise: String,
}

impl PairArgs {
    fn load(&self) -> Result<(Network, Network), Error> {
        let mut opts1 = LoadOptions::new(Arm::Treated);
        if let Some(l) = &self.labels1 {
            opts1 = opts1.with_labels(l.clone());
        }
        let mut opts0 = LoadOptions::new(Arm::Control);
        if let Some(l) = &self.labels0 {
            opts0 = opts0.with_labels(l.clone());
        }
        let mut net1 = load_network(&self.arm1, self.format1.into(), &opts1)?;
        let mut net0 = load_network(&self.arm0, self.format0.into(), &opts0)?;
        if let Some(threshold) = parse_denoise(&self.denoise)? {
            net1 = svt_denoise(&net1, threshold)?;
            net0 = svt_denoise(&net0, threshold)?;
        }
        Ok((net1, net0))
    }
}

fn parse_denoise(spec: &str) -> Result<Option<SvtThreshold>, Error> {
    match spec {
        "none" => Ok(None),
        "svt" => Ok(Some(SvtThreshold::Auto)),
        other => match other.strip_prefix("svt:") {
            Some(tau) => {
                let tau: f64 = tau
                    .parse()
                    .map_err(|_| Error::Config(format!("bad SVT threshold {tau:?}")))?;
                Ok(Some(SvtThreshold::Fixed(tau)))
            }
            None => Err(Error::Config(format!(
                "bad --denoise {other:?}: expected svt[:tau] or none"
            ))),
        },
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AdjustOpt {
    None,
    Reduction,
}

#[derive(Args)]
struct BoundsDpoArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    y1: f64,
    #[arg(long)]
    y0: f64,
    /// Tighten with the row-offset reduction
    #[arg(long, value_enum, default_value = "none")]
    adjust: AdjustOpt,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsDteArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Single treatment-effect level y
    #[arg(long, conflicts_with = "grid")]
    y: Option<f64>,
    /// Comma-separated sorted grid of y values
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisOpt {
    Stt,
    Stu,
}

#[derive(Args)]
struct SteArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, value_enum, default_value = "stt")]
    basis: BasisOpt,
    /// Write the dense field matrix CSV here
    #[arg(long)]
    field_out: Option<PathBuf>,
    /// Output file for the summary JSON (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Overlap thresholds; with --counts absent these define the sharp
    /// overlap set
    #[arg(long, requires = "y0")]
    y1: Option<f64>,
    #[arg(long, requires = "y1")]
    y0: Option<f64>,
    /// Sharp destroyed/created link counts for binary networks
    #[arg(long, conflicts_with_all = ["y1", "y0"])]
    counts: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// TOML analysis config
    #[arg(long)]
    config: PathBuf,
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match output {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text.as_bytes()).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::BoundsDpo(args) => {
            let (net1, net0) = args.pair.load()?;
            let interval = match args.adjust {
                AdjustOpt::None => dpo_bounds(&net1, &net0, args.y1, args.y0)?,
                AdjustOpt::Reduction => {
                    adjusted_overlap_bounds(&net1, &net0, args.y1, args.y0)?
                }
            };
            let record = DpoBoundRecord::new(args.y1, args.y0, interval);
            emit(
                &args.output,
                &serde_json::to_string_pretty(&record).expect("serializable"),
            )
        }
        Command::BoundsDte(args) => {
            let (net1, net0) = args.pair.load()?;
            let grid: Vec<f64> = match (&args.y, &args.grid) {
                (Some(y), None) => vec![*y],
                (None, Some(spec)) => {
                    let mut g = Vec::new();
                    for tok in spec.split(',') {
                        g.push(tok.trim().parse::<f64>().map_err(|_| {
                            Error::Config(format!("bad grid value {tok:?}"))
                        })?);
                    }
                    g
                }
                _ => {
                    return Err(Error::Config(
                        "bounds-dte needs exactly one of --y or --grid".into(),
                    ))
                }
            };
            if grid.len() == 1 {
                let point =
                    neteffects::bounds::dte_bounds(&net1, &net0, grid[0], &GridPolicy::Full)?;
                let json = serde_json::json!({
                    "y": point.y,
                    "lower": point.interval.lower,
                    "upper": point.interval.upper,
                    "lower_active": point.interval.lower_active,
                    "upper_active": point.interval.upper_active,
                    "lower_at": {"y1": point.lower_at.0, "y0": point.lower_at.1},
                    "upper_at": {"y1": point.upper_at.0, "y0": point.upper_at.1},
                });
                emit(
                    &args.output,
                    &serde_json::to_string_pretty(&json).expect("serializable"),
                )
            } else {
                let curve = dte_curve(&net1, &net0, &grid)?;
                let mut csv = String::from("y,lower,upper\n");
                for ((y, lo), hi) in curve.grid.iter().zip(&curve.lower).zip(&curve.upper) {
                    csv.push_str(&format!("{y},{lo},{hi}\n"));
                }
                emit(&args.output, &csv)
            }
        }
        Command::Ste(args) => {
            let (net1, net0) = args.pair.load()?;
            let basis = match args.basis {
                BasisOpt::Stt => SteBasis::Treated,
                BasisOpt::Stu => SteBasis::Untreated,
            };
            let field = ste_field(&net1, &net0, basis)?;
            if let Some(path) = &args.field_out {
                let n = field.values.nrows();
                let mut csv = String::new();
                for i in 0..n {
                    for j in 0..n {
                        if j > 0 {
                            csv.push(',');
                        }
                        csv.push_str(&format!("{:.14e}", field.values[(i, j)]));
                    }
                    csv.push('\n');
                }
                std::fs::write(path, csv).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
            }
            let basis_for_diag = match args.basis {
                BasisOpt::Stt => SteBasis::Treated,
                BasisOpt::Stu => SteBasis::Untreated,
            };
            let diag = dte_point_identified(&net1, &net0, basis_for_diag, &[0.0])?;
            let disruption = neteffects::ste::disruption_lower_bound(&net1, &net0)?;
            let json = serde_json::json!({
                "basis": field.basis,
                "disruption_lower_bound": disruption,
                "stt_stu_sup_distance": diag.stt_stu_sup_distance,
                "degenerate": field.degenerate,
                "truncated": field.truncated,
                "gap_sum_sq": field.gap_sum_sq(),
            });
            emit(
                &args.output,
                &serde_json::to_string_pretty(&json).expect("serializable"),
            )
        }
        Command::Oracle(args) => {
            let (net1, net0) = args.pair.load()?;
            let n = net1.n();
            let full_set = n <= 8;
            let json = if args.counts {
                let (destroyed, created) = oracle::sharp_destroyed_created(&net1, &net0)?;
                let render = |s: &oracle::SharpSet| {
                    if full_set {
                        serde_json::json!({
                            "values": s.values,
                            "argmin_perm": s.argmin_perm,
                            "argmax_perm": s.argmax_perm,
                        })
                    } else {
                        serde_json::json!({"min": s.min(), "max": s.max()})
                    }
                };
                serde_json::json!({
                    "destroyed": render(&destroyed),
                    "created": render(&created),
                })
            } else {
                let (y1, y0) = match (args.y1, args.y0) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(Error::Config(
                            "oracle needs --y1 and --y0, or --counts".into(),
                        ))
                    }
                };
                let set = oracle::sharp_overlap_set(&net1, &net0, y1, y0)?;
                if full_set {
                    serde_json::json!({
                        "y1": y1, "y0": y0,
                        "values": set.values,
                        "argmin_perm": set.argmin_perm,
                        "argmax_perm": set.argmax_perm,
                    })
                } else {
                    serde_json::json!({"y1": y1, "y0": y0, "min": set.min(), "max": set.max()})
                }
            };
            emit(
                &args.output,
                &serde_json::to_string_pretty(&json).expect("serializable"),
            )
        }
        Command::Report(args) => {
            let config = AnalysisConfig::load(&args.config)?;
            let bundle = run_report(&config)?;
            println!(
                "wrote {} files to {}",
                bundle.files.len(),
                bundle.directory.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(2),
                ErrorKind::Numerical => ExitCode::from(3),
            }
        }
    }
}
