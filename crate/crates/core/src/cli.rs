//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numeric failure,
//! 3 validation breach (some |z| above the threshold).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cgf::{finite_time_cgf, LimitCgf, Which};
use crate::config::RunConfig;
use crate::error::Error;
use crate::format::fmt_f64;
use crate::mc::{validate, with_workers, Z_BREACH};
use crate::moments::limit_constants;
use crate::process::{simulate, ProcessParams};
use crate::rate::RateFunction;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_BREACH: i32 = 3;

/// Worker-count override for Monte Carlo commands.
pub const THREADS_ENV: &str = "HAWKES_LDP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hawkes-ldp",
    version,
    about = "Limit theorems and large deviations for the discrete-time marked Hawkes process"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Model configuration (`key = value` lines).
    config: PathBuf,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the parsed configuration in canonical form and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WhichArg {
    N,
    L,
}

impl From<WhichArg> for Which {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::N => Which::Count,
            WhichArg::L => Which::MarkSum,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// LLN means, CLT variances and the stability margin.
    Limits {
        #[command(flatten)]
        common: Common,
        /// Horizon at which to report the CLT tail statistic.
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
    },
    /// Limiting CGF on a theta grid.
    Cgf {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        theta_min: f64,
        /// Defaults to the critical point (or 1 when it is infinite).
        #[arg(long, allow_hyphen_values = true)]
        theta_max: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 41)]
        steps: usize,
        #[arg(long, value_enum, default_value = "n")]
        which: WhichArg,
        /// Also report the exact finite-horizon CGF at this horizon.
        #[arg(long)]
        finite_t: Option<usize>,
    },
    /// Rate function on an x grid.
    Rate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "n")]
        which: WhichArg,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x_min: f64,
        /// Defaults to three times the LLN mean.
        #[arg(long, allow_hyphen_values = true)]
        x_max: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 61)]
        steps: usize,
    },
    /// One simulated path.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Monte Carlo check of the analytic results.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated thetas for empirical CGF rows.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-0.5,-0.1"
        )]
        theta_grid: Vec<f64>,
        /// Comma-separated levels for tail-rate rows.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Vec<f64>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Limits { common, .. }
            | Command::Cgf { common, .. }
            | Command::Rate { common, .. }
            | Command::Simulate { common, .. }
            | Command::Validate { common, .. } => common,
        }
    }
}

enum Failure {
    Config(String),
    Numeric(String),
    Breach(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Io(_) => Failure::Config(e.to_string()),
            e => Failure::Numeric(e.to_string()),
        }
    }
}

fn usage(msg: String) -> Failure {
    Failure::Config(msg)
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let mut buf = Vec::new();
    let outcome = execute(&cli.command, &mut buf);
    // a breach still delivers its report
    if matches!(outcome, Ok(()) | Err(Failure::Breach(_))) {
        if let Err(e) = emit(cli.command.common(), &buf, stdout) {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    }
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Numeric(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_NUMERIC
        }
        Err(Failure::Breach(z)) => {
            let _ = writeln!(stderr, "validation breach: max |z| = {z} exceeds {Z_BREACH}");
            EXIT_BREACH
        }
    }
}

fn emit(common: &Common, buf: &[u8], stdout: &mut dyn Write) -> Result<(), Error> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, buf).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => Ok(stdout.write_all(buf)?),
    }
}

fn workers() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn grid(lo: f64, hi: f64, steps: usize, lo_flag: &str, hi_flag: &str) -> Result<Vec<f64>, Failure> {
    if steps == 0 {
        return Err(usage("--steps must be at least 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(usage(format!(
            "need finite {lo_flag} <= {hi_flag}, got {lo} and {hi}"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / last
            }
        })
        .collect())
}

fn execute(cmd: &Command, out: &mut Vec<u8>) -> Result<(), Failure> {
    let common = cmd.common();
    let cfg = RunConfig::load(&common.config)?;
    if common.dump_config {
        out.extend_from_slice(cfg.dump().as_bytes());
        return Ok(());
    }
    let p = cfg.params()?;
    match cmd {
        Command::Limits { horizon, .. } => limits(&p, *horizon, out),
        Command::Cgf {
            theta_min,
            theta_max,
            steps,
            which,
            finite_t,
            ..
        } => cgf_table(
            &p,
            (*which).into(),
            *theta_min,
            *theta_max,
            *steps,
            *finite_t,
            out,
        ),
        Command::Rate {
            which,
            x_min,
            x_max,
            steps,
            ..
        } => rate_table(&p, (*which).into(), *x_min, *x_max, *steps, out),
        Command::Simulate { horizon, seed, .. } => {
            if *horizon == 0 {
                return Err(usage("--horizon must be at least 1".into()));
            }
            simulate(&p, *horizon, *seed)?.write_csv(&mut *out)?;
            Ok(())
        }
        Command::Validate {
            paths,
            horizon,
            seed,
            theta_grid,
            levels,
            ..
        } => {
            if *paths < 2 {
                return Err(usage("--paths must be at least 2".into()));
            }
            if *horizon == 0 {
                return Err(usage("--horizon must be at least 1".into()));
            }
            let job = || validate(&p, *horizon, *paths, *seed, theta_grid, levels);
            let report = match workers()? {
                Some(n) => with_workers(n, job)??,
                None => job()?,
            };
            report.write_csv(&mut *out)?;
            if report.breached() {
                Err(Failure::Breach(report.max_abs_z()))
            } else {
                Ok(())
            }
        }
    }
}

fn limits(p: &ProcessParams, horizon: u64, out: &mut Vec<u8>) -> Result<(), Failure> {
    if horizon == 0 {
        return Err(usage("--horizon must be at least 1".into()));
    }
    let c = limit_constants(p, horizon)?;
    writeln!(out, "quantity,value").map_err(Error::from)?;
    for (name, v) in [
        ("lln_mean_n", c.lln_mean_n),
        ("lln_mean_l", c.lln_mean_l),
        ("clt_var_n", c.clt_var_n),
        ("clt_var_l", c.clt_var_l),
        ("stability_margin", c.stability_margin),
        ("clt_tail_statistic", c.clt_tail_statistic),
    ] {
        writeln!(out, "{name},{}", fmt_f64(v)).map_err(Error::from)?;
    }
    Ok(())
}

fn cgf_table(
    p: &ProcessParams,
    which: Which,
    theta_min: f64,
    theta_max: Option<f64>,
    steps: usize,
    finite_t: Option<usize>,
    out: &mut Vec<u8>,
) -> Result<(), Failure> {
    if finite_t == Some(0) {
        return Err(usage("--finite-t must be at least 1".into()));
    }
    let cgf = LimitCgf::new(p, which)?;
    let hi = theta_max.unwrap_or_else(|| {
        let m = cgf.theta_max();
        if m.is_finite() {
            m
        } else {
            1.0
        }
    });
    writeln!(out, "theta,gamma,gamma_prime,x_star,finite_t_value").map_err(Error::from)?;
    for theta in grid(theta_min, hi, steps, "--theta-min", "--theta-max")? {
        let (gamma, slope, x_star) = match cgf.solve(theta) {
            Ok(s) => (s.gamma, s.gamma_prime, s.x_star),
            Err(Error::ThetaAboveCritical { .. }) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
            Err(e) => return Err(Failure::Numeric(format!("theta = {theta}: {e}"))),
        };
        let finite = match finite_t {
            None => String::new(),
            Some(t) => match finite_time_cgf(p, which, theta, t) {
                Ok(v) => fmt_f64(v),
                Err(Error::TiltTooLarge { .. }) => "inf".into(),
                Err(e) => return Err(Failure::Numeric(format!("theta = {theta}: {e}"))),
            },
        };
        writeln!(
            out,
            "{},{},{},{},{finite}",
            fmt_f64(theta),
            fmt_f64(gamma),
            fmt_f64(slope),
            fmt_f64(x_star)
        )
        .map_err(Error::from)?;
    }
    Ok(())
}

fn rate_table(
    p: &ProcessParams,
    which: Which,
    x_min: f64,
    x_max: Option<f64>,
    steps: usize,
    out: &mut Vec<u8>,
) -> Result<(), Failure> {
    let rate = RateFunction::new(p, which)?;
    let hi = match x_max {
        Some(v) => v,
        None => 3.0 * rate.cgf().gamma_prime(0.0)?,
    };
    let xs = grid(x_min, hi, steps, "--x-min", "--x-max")?;
    let points = rate.curve(&xs)?;
    writeln!(out, "x,rate,argmax_theta").map_err(Error::from)?;
    for pt in points {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(pt.x),
            fmt_f64(pt.rate),
            pt.argmax_theta.map(fmt_f64).unwrap_or_default()
        )
        .map_err(Error::from)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(
            std::iter::once("hawkes-ldp").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    const UNMARKED: &str =
        "nu = 1\nkernel.kind = explicit\nkernel.weights = 0.5\nmark.kind = constant\nmark.c = 1\n";

    #[test]
    fn grid_endpoints_are_exact() {
        let g = grid(-1.0, 0.3, 7, "a", "b").ok().unwrap();
        assert_eq!((g[0], g[6], g.len()), (-1.0, 0.3, 7));
        assert!(grid(1.0, 0.0, 3, "a", "b").is_err());
        assert!(grid(0.0, 1.0, 0, "a", "b").is_err());
    }

    #[test]
    fn negative_theta_flags_parse() {
        let f = config(UNMARKED);
        let path = f.path().to_str().unwrap();
        let (code, out, err) = run_capture(&[
            "cgf",
            path,
            "--theta-min",
            "-1",
            "--theta-max",
            "-0.5",
            "--steps",
            "2",
        ]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(out.lines().count(), 3);
        assert!(out.lines().nth(1).unwrap().starts_with("-1,"));
    }

    #[test]
    fn cgf_marks_the_region_beyond_criticality() {
        let f = config(UNMARKED);
        let path = f.path().to_str().unwrap();
        let (code, out, _) = run_capture(&[
            "cgf",
            path,
            "--theta-min",
            "0",
            "--theta-max",
            "0.5",
            "--steps",
            "3",
            "--finite-t",
            "50",
        ]);
        assert_eq!(code, 0);
        let last = out.lines().last().unwrap();
        assert!(last.starts_with("0.5,inf,inf,inf,"), "{last}");
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_capture(&["frobnicate"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(!err.is_empty());
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("validate"));
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let (code, _, err) = run_capture(&["limits", "/nonexistent/model.cfg"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("/nonexistent/model.cfg"));
    }
}
