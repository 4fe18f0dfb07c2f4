//! `ceg-kit`: command-line front end.
//!
//! Exit codes: 0 success, 1 data violations or data-dependent failures,
//! 2 usage errors (handled by clap). All results go to stdout,
//! diagnostics to stderr.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ceg_kit::ceg::{estimate_all, EstimateOptions, Method, DEFAULT_GAP_THETA};
use ceg_kit::compute::{
    chinchilla_tokens, cost_fraction, flop_from_hardware, flop_from_steps, flop_train, Quantity,
    Unit,
};
use ceg_kit::cost::profile_from_input;
use ceg_kit::registry::{ingest, ingest_lenient, RegistrySnapshot};
use ceg_kit::report::{emit_plot_data, run_report, ReportOptions, TableKind};
use ceg_kit::synth::{run_recovery, RecoveryOutcome, SyntheticFamily};

#[derive(Parser)]
#[command(
    name = "ceg-kit",
    version,
    about = "Compute-equivalent-gain analysis toolkit"
)]
struct Cli {
    /// Input JSON Lines files; reads stdin when omitted.
    #[arg(long = "input", global = true, value_name = "FILE")]
    input: Vec<PathBuf>,

    /// Delimiter for report tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Default seed for synthetic subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Tsv,
}

impl Format {
    fn delimiter(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest records strictly; report every violation with its line.
    Ingest,
    /// List invariant violations, one `ENTITY<TAB>RULE<TAB>MESSAGE` per line.
    Validate,
    /// Training-FLOP and token arithmetic.
    Flop {
        #[command(subcommand)]
        op: FlopOp,
    },
    /// CEG estimates for one (benchmark, enhancement).
    Ceg(CegArgs),
    /// Fit a log-linear scaling law to a family's baselines.
    Fit(FitArgs),
    /// Cost profile for one enhancement.
    Costs {
        #[arg(long)]
        enhancement: String,
    },
    /// Synthetic round trip: generate a family with a known CEG, recover it.
    Oracle(OracleArgs),
    /// Emit a named table from the ingested records.
    Report {
        #[arg(long, value_enum)]
        table: TableArg,
    },
    /// Emit point and fitted-line series for plotting.
    Plot {
        #[arg(long)]
        benchmark: String,
        #[arg(long)]
        family: String,
    },
}

#[derive(Subcommand)]
enum FlopOp {
    /// 6·N·D from parameter and token counts.
    Train {
        #[arg(long)]
        params: f64,
        #[arg(long)]
        tokens: f64,
    },
    /// steps·batch·seq_len·N·6.
    Steps {
        #[arg(long)]
        steps: f64,
        #[arg(long)]
        batch: f64,
        #[arg(long = "seq-len")]
        seq_len: f64,
        #[arg(long)]
        params: f64,
    },
    /// chips·hours·3600·peak·utilization.
    Hardware {
        #[arg(long)]
        chips: f64,
        #[arg(long)]
        hours: f64,
        #[arg(long = "peak-flops")]
        peak_flops: f64,
        #[arg(long)]
        utilization: f64,
    },
    /// Compute-optimal token estimate 2·sqrt(C).
    Chinchilla {
        #[arg(long)]
        flop: f64,
    },
    /// Same-unit cost fraction numerator/denominator.
    Fraction {
        #[arg(long)]
        numerator: f64,
        #[arg(long)]
        denominator: f64,
        #[arg(long, value_enum)]
        unit: UnitArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Flop,
    Tokens,
    ChipHours,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Unit {
        match u {
            UnitArg::Flop => Unit::Flop,
            UnitArg::Tokens => Unit::Tokens,
            UnitArg::ChipHours => Unit::ChipHours,
        }
    }
}

#[derive(Args)]
struct CegArgs {
    #[arg(long)]
    benchmark: String,
    #[arg(long)]
    enhancement: String,
    /// bound | rough | interp | fit; all routes when omitted.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Drop records that stack several enhancements.
    #[arg(long = "attribute-single")]
    attribute_single: bool,
    /// Rough-point gap threshold as a fraction of the scaling spread.
    #[arg(long, default_value_t = DEFAULT_GAP_THETA)]
    theta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bound,
    Rough,
    Interp,
    Fit,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Bound => Method::Bound,
            MethodArg::Rough => Method::Rough,
            MethodArg::Interp => Method::Interp,
            MethodArg::Fit => Method::Fit,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    benchmark: String,
    #[arg(long)]
    family: String,
    /// Emit point and line samples instead of fit parameters.
    #[arg(long = "emit-plot")]
    emit_plot: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// True slope, metric units per decade.
    #[arg(long, allow_negative_numbers = true)]
    slope: f64,
    /// True intercept, metric units.
    #[arg(long, allow_negative_numbers = true)]
    intercept: f64,
    /// True compute-equivalent gain to plant and recover.
    #[arg(long)]
    ceg: f64,
    /// Gaussian score noise, metric units.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Undertraining penalty on the largest model, metric units.
    #[arg(long, default_value_t = 0.0)]
    penalty: f64,
    /// Seed; falls back to the global --seed, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated training budgets, FLOP.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e20, 1e21, 1e22, 1e23, 1e24])]
    computes: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Main,
    Minerva,
    #[value(alias = "cot_appendix")]
    CotAppendix,
}

impl From<TableArg> for TableKind {
    fn from(t: TableArg) -> TableKind {
        match t {
            TableArg::Main => TableKind::Main,
            TableArg::Minerva => TableKind::Minerva,
            TableArg::CotAppendix => TableKind::CotAppendix,
        }
    }
}

type Sources = Vec<(String, Box<dyn BufRead>)>;

fn open_sources(paths: &[PathBuf]) -> Result<Sources, String> {
    if paths.is_empty() {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| format!("reading stdin: {e}"))?;
        return Ok(vec![(
            "<stdin>".to_string(),
            Box::new(std::io::Cursor::new(text)),
        )]);
    }
    let mut sources: Sources = Vec::new();
    for path in paths {
        let file = File::open(path).map_err(|e| format!("opening {}: {e}", path.display()))?;
        sources.push((path.display().to_string(), Box::new(BufReader::new(file))));
    }
    Ok(sources)
}

fn load_strict(paths: &[PathBuf]) -> Result<RegistrySnapshot, ExitCode> {
    let sources = open_sources(paths).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    ingest(sources).map_err(|err| {
        for issue in &err.issues {
            eprintln!("{issue}");
        }
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn data_err(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Ingest => {
            let snap = load_strict(&cli.input)?;
            println!(
                "ok: {} entities ({} families, {} models, {} benchmarks, {} enhancements, {} cost inputs, {} evaluations)",
                snap.entity_count(),
                snap.families().count(),
                snap.models().count(),
                snap.benchmarks().count(),
                snap.enhancements().count(),
                snap.cost_inputs().count(),
                snap.evaluations().len(),
            );
            Ok(())
        }
        Command::Validate => {
            let sources = open_sources(&cli.input).map_err(data_err)?;
            let (_, issues) = ingest_lenient(sources);
            for issue in &issues {
                println!("{}", issue.violation.tsv_line());
            }
            if issues.is_empty() {
                Ok(())
            } else {
                Err(ExitCode::from(1))
            }
        }
        Command::Flop { op } => {
            let value = match op {
                FlopOp::Train { params, tokens } => {
                    flop_train(params, tokens).map_err(data_err)?.value
                }
                FlopOp::Steps {
                    steps,
                    batch,
                    seq_len,
                    params,
                } => {
                    flop_from_steps(steps, batch, seq_len, params)
                        .map_err(data_err)?
                        .value
                }
                FlopOp::Hardware {
                    chips,
                    hours,
                    peak_flops,
                    utilization,
                } => {
                    flop_from_hardware(chips, hours, peak_flops, utilization)
                        .map_err(data_err)?
                        .value
                }
                FlopOp::Chinchilla { flop } => chinchilla_tokens(flop).map_err(data_err)?,
                FlopOp::Fraction {
                    numerator,
                    denominator,
                    unit,
                } => {
                    let unit = Unit::from(unit);
                    cost_fraction(
                        Quantity {
                            value: numerator,
                            unit,
                        },
                        Quantity {
                            value: denominator,
                            unit,
                        },
                    )
                    .map_err(data_err)?
                    .fraction
                }
            };
            println!("{value:.5e}");
            Ok(())
        }
        Command::Ceg(args) => {
            let snap = load_strict(&cli.input)?;
            let opts = EstimateOptions {
                theta: args.theta,
                method: args.method.map(Method::from).unwrap_or(Method::All),
            };
            let mut estimates =
                estimate_all(&snap, &args.benchmark, &args.enhancement, &opts).map_err(data_err)?;
            if args.attribute_single {
                estimates.retain(|est| {
                    est.provenance
                        .enhanced_eval()
                        .map(|i| snap.evaluations()[i].enhancements.len() == 1)
                        .unwrap_or(true)
                });
            }
            for est in &estimates {
                println!(
                    "{:.6}\t{}\t{}\t{}",
                    est.value,
                    est.kind,
                    est.caveat_string(),
                    est.provenance.describe_in(&snap)
                );
            }
            Ok(())
        }
        Command::Fit(args) => {
            let snap = load_strict(&cli.input)?;
            if args.emit_plot {
                let out = emit_plot_data(&snap, &args.benchmark, &args.family).map_err(data_err)?;
                print!("{out}");
                return Ok(());
            }
            let fit = ceg_kit::ceg::baseline_fit(&snap, &args.benchmark, &args.family)
                .map_err(data_err)?;
            println!(
                "{}\t{}\t{}\t{}",
                fit.slope,
                fit.intercept,
                fit.n_points(),
                fit.max_abs_residual()
            );
            Ok(())
        }
        Command::Costs { enhancement } => {
            let snap = load_strict(&cli.input)?;
            if snap.enhancement(&enhancement).is_none() {
                return Err(data_err(format!("unknown enhancement '{enhancement}'")));
            }
            let input = snap
                .cost_input(&enhancement)
                .ok_or_else(|| data_err(format!("no cost input for '{enhancement}'")))?;
            let profile = profile_from_input(input).map_err(data_err)?;
            println!(
                "{}\t{}\t{}\t{}\t{}",
                profile.one_time.value_str(),
                profile.one_time.cmp_str(),
                profile.inference.value_str(),
                profile.inference.cmp_str(),
                profile.describe_derivation()
            );
            Ok(())
        }
        Command::Oracle(args) => {
            let family = SyntheticFamily {
                slope: args.slope,
                intercept: args.intercept,
                computes: args.computes.clone(),
                noise_sd: args.noise,
                undertraining_penalty: args.penalty,
            };
            let seed = args.seed.or(cli.seed).unwrap_or(0);
            match run_recovery(&family, args.ceg, seed).map_err(data_err)? {
                RecoveryOutcome::Estimate { true_ceg, estimate } => {
                    println!(
                        "{}\t{:.6}\t{}\t{}",
                        true_ceg,
                        estimate.value,
                        estimate.kind,
                        estimate.caveat_string()
                    );
                }
                RecoveryOutcome::NotInvertible { true_ceg, slope } => {
                    println!("{true_ceg}\tNOT_INVERTIBLE\t-\tflat_scaling(slope={slope})");
                }
            }
            Ok(())
        }
        Command::Report { table } => {
            let snap = load_strict(&cli.input)?;
            let opts = ReportOptions {
                delimiter: cli.format.delimiter(),
                theta: DEFAULT_GAP_THETA,
            };
            print!("{}", run_report(&snap, table.into(), &opts));
            Ok(())
        }
        Command::Plot { benchmark, family } => {
            let snap = load_strict(&cli.input)?;
            let out = emit_plot_data(&snap, &benchmark, &family).map_err(data_err)?;
            print!("{out}");
            Ok(())
        }
    }
}
