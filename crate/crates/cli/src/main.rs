use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddkit::format::sig17;
use ddkit::orderfit::{fit_order, OrderFitResult, DEFAULT_CEILING, DEFAULT_FLOOR};
use ddkit::sequences::{filter_function, lambda_series};
use ddkit_cli::config::{FitMode, FitSpec};
use ddkit_cli::family::{Family, SequenceSpec};
use ddkit_cli::run::run_config;
use ddkit_cli::{CliError, THREADS_ENV};

#[derive(Parser, Debug)]
#[command(
    name = "ddkit",
    version,
    about = "Dynamical-decoupling sequences and decoherence sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a pulse sequence as CSV.
    Seq(SeqArgs),
    /// Print the Λ_p moments of a sequence.
    Lambda {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        max_p: u32,
    },
    /// Tabulate |f(ω)|² of a sequence on a uniform grid.
    Filter {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        omega_max: f64,
        #[arg(long, default_value_t = 257)]
        points: usize,
    },
    /// Run an experiment config.
    Run {
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the power-law order of one column of a CSV table against another.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long, default_value = "T")]
        x: String,
        #[arg(long, default_value_t = DEFAULT_FLOOR)]
        floor: f64,
        #[arg(long, default_value_t = DEFAULT_CEILING)]
        ceiling: f64,
        /// Exit 1 unless the slope matches this order.
        #[arg(long)]
        claimed_order: Option<f64>,
        #[arg(long, default_value_t = 0.3)]
        tolerance: f64,
    },
}

#[derive(Args, Debug)]
struct SeqArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    total_time: f64,
    #[arg(long)]
    axis: Option<String>,
}

impl SeqArgs {
    fn build(&self) -> Result<ddkit::PulseSequence, CliError> {
        let spec = SequenceSpec {
            axis: self.axis.clone(),
            ..SequenceSpec::new(self.family, self.n, self.m)
        };
        spec.build(self.total_time)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Pulls two named numeric columns out of a CSV table, skipping `#` lines.
fn read_columns(text: &str, x: &str, y: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let usage = |m: String| CliError::Usage(m);
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| usage("CSV has no header".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |c: &str| {
        names
            .iter()
            .position(|n| *n == c)
            .ok_or_else(|| usage(format!("column '{c}' not in header {names:?}")))
    };
    let (ix, iy) = (find(x)?, find(y)?);
    lines
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |i: usize| -> Result<f64, CliError> {
                fields
                    .get(i)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| usage(format!("line {}: bad value in column {}", k + 1, names[i])))
            };
            Ok((get(ix)?, get(iy)?))
        })
        .collect()
}

fn dispatch(command: Command) -> Result<bool, CliError> {
    let usage = |e: ddkit::Error| CliError::Usage(e.to_string());
    match command {
        Command::Seq(args) => {
            print!("{}", args.build()?.to_csv());
            Ok(true)
        }
        Command::Lambda { seq, max_p } => {
            let lambdas = lambda_series(&seq.build()?, max_p).map_err(usage)?;
            let mut out = String::from("p,lambda_p\n");
            for (p, l) in lambdas.iter().enumerate() {
                let _ = writeln!(out, "{},{}", p + 1, sig17(*l));
            }
            print!("{out}");
            Ok(true)
        }
        Command::Filter {
            seq,
            omega_max,
            points,
        } => {
            if !(omega_max.is_finite() && omega_max > 0.0) || points < 2 {
                return Err(CliError::Usage("need omega_max > 0 and at least 2 points".into()));
            }
            let s = seq.build()?;
            let mut out = String::from("omega,filter_re,filter_im,filter_abs2\n");
            for k in 0..points {
                let w = omega_max * k as f64 / (points - 1) as f64;
                let f = filter_function(&s, w).map_err(|e| CliError::Numeric(e.to_string()))?;
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    sig17(w),
                    sig17(f.re),
                    sig17(f.im),
                    sig17(f.norm_sqr())
                );
            }
            print!("{out}");
            Ok(true)
        }
        Command::Run { config, seed } => {
            let outcome = run_config(&config, seed)?;
            if let Some(r) = &outcome.report {
                eprintln!(
                    "{} {}: slope {:.4} (claimed {}), r² {:.6}, {}",
                    r.sequence,
                    r.metric,
                    r.slope,
                    r.claimed_order,
                    r.r_squared,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            Ok(outcome.pass())
        }
        Command::Fit {
            csv,
            metric,
            x,
            floor,
            ceiling,
            claimed_order,
            tolerance,
        } => {
            let text = std::fs::read_to_string(&csv)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", csv.display())))?;
            let pairs = read_columns(&text, &x, &metric)?;
            let r = fit_order(&pairs, floor, ceiling).map_err(usage)?;
            println!("{}", OrderFitResult::csv_header());
            println!("{}", r.csv_row());
            Ok(match claimed_order {
                None => r.valid,
                Some(c) => {
                    let spec = FitSpec {
                        metric,
                        claimed_order: c,
                        tolerance,
                        mode: FitMode::Band,
                        floor,
                        ceiling,
                    };
                    r.valid && spec.passes(r.slope)
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ddkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
