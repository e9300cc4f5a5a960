//! Command-line front end. Every command echoes its full parameter set
//! (seed included) and is deterministic given its flags.
//!
//! Exit codes: 0 success, 1 usage error, 2 capacity/convergence error,
//! 3 verification failure.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;

use maxload::constants::{self, CnrMethod};
use maxload::estimator::{self, Backend};
use maxload::gaussian_max::QuadratureConfig;
use maxload::montecarlo::{sample_batch, SimConfig};
use maxload::occupancy::ExactDistribution;
use maxload::{Error, Params};

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "MAXLOAD_WORKERS";

#[derive(Parser)]
#[command(name = "maxload", version, about = "Exact, simulated, and closed-form computation of the sqrt(T) growth coefficient of the maximum bin load")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct ParamArgs {
    /// Number of bins
    #[arg(short = 'n', long)]
    n: u32,
    /// Balls per round (r distinct bins each round)
    #[arg(short = 'r', long)]
    r: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Exact E[max occupancy] after T rounds (rational + decimal)
    Exact {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short = 'T', long)]
        rounds: u32,
        /// Also print the exact PMF of the maximum
        #[arg(long)]
        dist: bool,
        /// Cap on the number of occupancy classes the DP may track
        #[arg(long, default_value_t = maxload::occupancy::DEFAULT_MAX_CLASSES)]
        max_classes: usize,
    },
    /// Simulate normalized samples (U - rT/n)/sqrt(T)
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short = 'T', long)]
        rounds: u32,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        /// Worker threads (default: MAXLOAD_WORKERS or 1)
        #[arg(long)]
        workers: Option<usize>,
        /// Write the sample CSV here (metadata sidecar at PATH.meta)
        #[arg(long, value_name = "PATH")]
        emit_samples: Option<std::path::PathBuf>,
    },
    /// The sqrt(T) coefficient via the Gaussian-maximum identity
    Constant {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Recompute the reference tables and report agreement
    Verify,
    /// Fit c*sqrt(T) + b to A(T) data from a backend
    Estimate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
        backend: BackendArg,
        /// Comma-separated strictly increasing T grid
        #[arg(long, value_delimiter = ',', default_values_t = [25u32, 50, 100, 200, 400])]
        grid: Vec<u32>,
        /// Replicates per grid point (montecarlo backend)
        #[arg(long)]
        reps: Option<u64>,
        /// Seed (required for the montecarlo backend)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Quadrature coefficient grid for 2 <= n <= n_max, 1 <= r <= n-1
    Sweep {
        #[arg(long)]
        n_max: u32,
        /// Write the CSV here instead of stdout
        #[arg(long, value_name = "PATH")]
        csv: Option<std::path::PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Closed,
    Quad,
    Asym,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Exact,
    Mc,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Capacity { .. } | Error::Convergence { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

/// Decimal rendering fixed at 12 significant digits, trailing zeros
/// trimmed (always keeping one decimal place).
fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..=12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let mut out = format!("{x:.decimals$}");
        if out.contains('.') {
            while out.ends_with('0') {
                out.pop();
            }
            if out.ends_with('.') {
                out.push('0');
            }
        } else {
            out.push_str(".0");
        }
        out
    } else {
        format!("{mant}e{exp}")
    }
}

fn default_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let out = std::io::stdout();
    let mut out = out.lock();
    match &cli.command {
        Command::Exact {
            params,
            rounds,
            dist,
            max_classes,
        } => cmd_exact(&mut out, cli.format, params, *rounds, *dist, *max_classes),
        Command::Simulate {
            params,
            rounds,
            reps,
            seed,
            workers,
            emit_samples,
        } => cmd_simulate(
            &mut out,
            cli.format,
            params,
            *rounds,
            *reps,
            *seed,
            default_workers(*workers),
            emit_samples.as_deref(),
        ),
        Command::Constant { params, method } => cmd_constant(&mut out, cli.format, params, *method),
        Command::Verify => cmd_verify(&mut out, cli.format),
        Command::Estimate {
            params,
            backend,
            grid,
            reps,
            seed,
            workers,
        } => cmd_estimate(
            &mut out,
            cli.format,
            params,
            *backend,
            grid,
            *reps,
            *seed,
            default_workers(*workers),
        ),
        Command::Sweep { n_max, csv } => cmd_sweep(&mut out, cli.format, *n_max, csv.as_deref()),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidParams(format!("io error: {e}"))
}

fn cmd_exact(
    out: &mut impl Write,
    format: Format,
    args: &ParamArgs,
    rounds: u32,
    dist: bool,
    max_classes: usize,
) -> Result<ExitCode, Error> {
    let params = Params::new(args.n, args.r)?;
    let mut d = ExactDistribution::initial(params);
    for _ in 0..rounds {
        d = d.step_capped(max_classes)?;
    }
    let e_u = d.max_expectation();
    let a = d.centered_max_expectation();
    match format {
        Format::Text => {
            writeln!(out, "command: exact").map_err(io_err)?;
            writeln!(out, "n: {}  r: {}  T: {rounds}", args.n, args.r).map_err(io_err)?;
            writeln!(
                out,
                "E[U]: {}/{} ({})",
                e_u.numer(),
                e_u.denom(),
                fmt_sig(e_u.to_f64().unwrap())
            )
            .map_err(io_err)?;
            writeln!(
                out,
                "A:    {}/{} ({})",
                a.numer(),
                a.denom(),
                fmt_sig(a.to_f64().unwrap())
            )
            .map_err(io_err)?;
            if dist {
                writeln!(out, "max PMF:").map_err(io_err)?;
                for (k, w) in d.max_pmf() {
                    writeln!(
                        out,
                        "  {k}: {}/{} ({})",
                        w.numer(),
                        w.denom(),
                        fmt_sig(w.to_f64().unwrap())
                    )
                    .map_err(io_err)?;
                }
            }
        }
        Format::Csv => {
            writeln!(out, "n,r,T,e_u,e_u_decimal,a,a_decimal").map_err(io_err)?;
            writeln!(
                out,
                "{},{},{rounds},{}/{},{},{}/{},{}",
                args.n,
                args.r,
                e_u.numer(),
                e_u.denom(),
                fmt_sig(e_u.to_f64().unwrap()),
                a.numer(),
                a.denom(),
                fmt_sig(a.to_f64().unwrap())
            )
            .map_err(io_err)?;
            if dist {
                writeln!(out, "max,probability,decimal").map_err(io_err)?;
                for (k, w) in d.max_pmf() {
                    writeln!(
                        out,
                        "{k},{}/{},{}",
                        w.numer(),
                        w.denom(),
                        fmt_sig(w.to_f64().unwrap())
                    )
                    .map_err(io_err)?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    out: &mut impl Write,
    format: Format,
    args: &ParamArgs,
    rounds: u32,
    reps: u64,
    seed: u64,
    workers: usize,
    emit: Option<&std::path::Path>,
) -> Result<ExitCode, Error> {
    let params = Params::new(args.n, args.r)?;
    let cfg = SimConfig {
        params,
        rounds,
        replicates: reps,
        seed,
        workers,
    };
    let batch = sample_batch(&cfg)?;
    if let Some(path) = emit {
        let file = std::fs::File::create(path).map_err(io_err)?;
        batch
            .write_csv(std::io::BufWriter::new(file))
            .map_err(io_err)?;
        let meta_path = {
            let mut p = path.as_os_str().to_owned();
            p.push(".meta");
            std::path::PathBuf::from(p)
        };
        std::fs::write(meta_path, batch.metadata_text()).map_err(io_err)?;
    }
    match format {
        Format::Text => {
            writeln!(out, "command: simulate").map_err(io_err)?;
            writeln!(
                out,
                "n: {}  r: {}  T: {rounds}  reps: {reps}  seed: {seed}  workers: {workers}",
                args.n, args.r
            )
            .map_err(io_err)?;
            writeln!(out, "mean:      {}", fmt_sig(batch.mean())).map_err(io_err)?;
            writeln!(out, "std error: {}", fmt_sig(batch.std_error())).map_err(io_err)?;
        }
        Format::Csv => {
            writeln!(out, "n,r,T,replicates,seed,workers,mean,std_error").map_err(io_err)?;
            writeln!(
                out,
                "{},{},{rounds},{reps},{seed},{workers},{},{}",
                args.n,
                args.r,
                fmt_sig(batch.mean()),
                fmt_sig(batch.std_error())
            )
            .map_err(io_err)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_constant(
    out: &mut impl Write,
    format: Format,
    args: &ParamArgs,
    method: MethodArg,
) -> Result<ExitCode, Error> {
    let params = Params::new(args.n, args.r)?;
    let method = match method {
        MethodArg::Closed => CnrMethod::ClosedForm,
        MethodArg::Quad => CnrMethod::Quadrature,
        MethodArg::Asym => CnrMethod::Asymptotic,
        MethodArg::Auto => {
            if args.n <= 5 {
                CnrMethod::ClosedForm
            } else {
                CnrMethod::Quadrature
            }
        }
    };
    let value = constants::c_nr(params, method)?;
    match format {
        Format::Text => {
            writeln!(out, "command: constant").map_err(io_err)?;
            writeln!(out, "n: {}  r: {}  method: {}", args.n, args.r, value.method)
                .map_err(io_err)?;
            writeln!(out, "C({},{}) = {}", args.n, args.r, fmt_sig(value.value))
                .map_err(io_err)?;
            writeln!(out, "error bound: {}", fmt_sig(value.error_bound)).map_err(io_err)?;
        }
        Format::Csv => {
            writeln!(out, "n,r,method,value,error_bound").map_err(io_err)?;
            writeln!(
                out,
                "{},{},{},{},{}",
                args.n,
                args.r,
                value.method,
                fmt_sig(value.value),
                fmt_sig(value.error_bound)
            )
            .map_err(io_err)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(out: &mut impl Write, format: Format) -> Result<ExitCode, Error> {
    let report = constants::verify_tables()?;
    match format {
        Format::Text => {
            writeln!(out, "command: verify").map_err(io_err)?;
            writeln!(out, "tolerance: {}", report.tolerance).map_err(io_err)?;
            write!(out, "{}", report.render_text()).map_err(io_err)?;
        }
        Format::Csv => {
            write!(out, "{}", report.render_csv()).map_err(io_err)?;
        }
    }
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    out: &mut impl Write,
    format: Format,
    args: &ParamArgs,
    backend: BackendArg,
    grid: &[u32],
    reps: Option<u64>,
    seed: Option<u64>,
    workers: usize,
) -> Result<ExitCode, Error> {
    let params = Params::new(args.n, args.r)?;
    let (backend, sim) = match backend {
        BackendArg::Exact => (Backend::Exact, None),
        BackendArg::Mc => {
            let reps = reps.ok_or_else(|| {
                Error::InvalidParams("--reps is required with the montecarlo backend".into())
            })?;
            let seed = seed.ok_or_else(|| {
                Error::InvalidParams("--seed is required with the montecarlo backend".into())
            })?;
            (Backend::MonteCarlo, Some((reps, seed, workers)))
        }
    };
    let fit = estimator::estimate_cnr(params, grid, backend, sim)?;
    match format {
        Format::Text => {
            writeln!(out, "command: estimate").map_err(io_err)?;
            writeln!(
                out,
                "n: {}  r: {}  backend: {}  seed: {}",
                args.n,
                args.r,
                fit.backend,
                seed.map_or("none".into(), |s| s.to_string())
            )
            .map_err(io_err)?;
            write!(out, "{}", fit.render_text()).map_err(io_err)?;
        }
        Format::Csv => {
            write!(out, "{}", fit.render_csv()).map_err(io_err)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    out: &mut impl Write,
    format: Format,
    n_max: u32,
    csv_path: Option<&std::path::Path>,
) -> Result<ExitCode, Error> {
    if n_max < 2 {
        return Err(Error::InvalidParams("--n-max must be at least 2".into()));
    }
    let cfg = QuadratureConfig::default();
    let mut csv = String::from("n,r,c_nr,error_bound\n");
    for n in 2..=n_max {
        // M(n) is shared across r; compute once per n
        let m = maxload::gaussian_max::expected_max_quadrature(u64::from(n), &cfg)?;
        for r in 1..n {
            let params = Params::new(n, r)?;
            let factor = constants::cnr_prefactor(params);
            csv.push_str(&format!(
                "{n},{r},{},{}\n",
                fmt_sig(factor * m.value),
                fmt_sig(factor * m.error_bound)
            ));
        }
    }
    if let Some(path) = csv_path {
        std::fs::write(path, &csv).map_err(io_err)?;
        if format == Format::Text {
            writeln!(out, "command: sweep").map_err(io_err)?;
            writeln!(out, "n_max: {n_max}").map_err(io_err)?;
            writeln!(out, "wrote {} rows to {}", csv.lines().count() - 1, path.display())
                .map_err(io_err)?;
        }
    } else {
        write!(out, "{csv}").map_err(io_err)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.5), "1.5");
        assert_eq!(fmt_sig(10.0), "10.0");
        assert_eq!(fmt_sig(0.0), "0.0");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(0.39894228040143265), "0.398942280401");
        assert_eq!(fmt_sig(-2.25), "-2.25");
        assert_eq!(fmt_sig(1e-30), "1.00000000000e-30");
    }
}
