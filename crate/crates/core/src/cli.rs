//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for configuration errors (bad flags,
//! unwritable output), 3 for arguments outside a supported range, 4 when an
//! internal invariant or a `check` suite fails.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    format_sig12, mean_square_profile, round_sig12, scan_errors_threads, write_meansquare_csv,
    write_meansquare_json, write_scan_csv, write_scan_json, GridSpec,
};
use crate::constants::{ConstantBundle, DEFAULT_DIGITS, MAX_DIGITS, MIN_DIGITS};
use crate::divisor::{divisor_sum_hyperbola, divisor_sum_naive};
use crate::error::{Error, Result};
use crate::roots::isqrt;
use crate::sieve::{dirichlet_convolve, mu_star_mu_closed_form, sieve_mobius};
use crate::summatory::{
    brute_s_prefix, f_value, f_value_identity, fast_s_abs_mu_threads, fast_s_mu_threads, summatory, GKind,
    SumMethod, SummatoryResult, Tables, MAX_BRUTE,
};

pub const PRECISION_ENV: &str = "MUGCD_PRECISION";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GArg {
    Mu,
    Absmu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Fast,
    Brute,
    Identity,
}

#[derive(Parser, Debug)]
#[command(name = "mugcd", version, about = "Exact gcd-Möbius summatory functions and their error terms")]
struct Cli {
    /// Worker threads for the partitioned computations.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,

    /// Decimal digits for the analytic constants.
    #[arg(long, global = true, env = PRECISION_ENV, default_value_t = DEFAULT_DIGITS)]
    precision: u32,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Directory holding cached sieve tables.
    #[arg(long, global = true)]
    sieve_cache: Option<PathBuf>,

    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Subcommand, Debug)]
enum CommandArg {
    /// S(x) with its main term and error.
    Sum {
        #[arg(long, value_enum, default_value_t = GArg::Mu)]
        g: GArg,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Fast)]
        method: MethodArg,
    },
    /// E(x) on a logarithmic grid of half-integers.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 20)]
        per_decade: u32,
    },
    /// The integral of E(t)² from 1 to T, sampled on a logarithmic grid.
    Meansquare {
        #[arg(long = "T", allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 1e3, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 1)]
        per_decade: u32,
    },
    /// Exact oracle and identity suites up to the given x.
    Check {
        #[arg(long, default_value_t = 5000)]
        max_x: u64,
    },
    /// The constants bundle.
    Constants,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Sum {
        g: GKind,
        k: u32,
        x: f64,
        method: SumMethod,
    },
    Scan {
        grid: GridSpec,
    },
    MeanSquare {
        t_max: f64,
        t_min: f64,
        per_decade: u32,
    },
    Check {
        max_x: u64,
    },
    Constants,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub threads: usize,
    pub precision_digits: u32,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub sieve_cache: Option<PathBuf>,
}

impl RunConfig {
    /// Parses and validates a command line (program name first).
    pub fn parse_from<I, T>(args: I) -> std::result::Result<Self, ParseFailure>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(ParseFailure::Clap)?;
        Self::from_cli(cli).map_err(ParseFailure::Config)
    }

    fn from_cli(cli: Cli) -> Result<Self> {
        if !(MIN_DIGITS..=MAX_DIGITS).contains(&cli.precision) {
            return Err(Error::invalid(format!(
                "--precision must lie in {MIN_DIGITS}..={MAX_DIGITS}, got {}",
                cli.precision
            )));
        }
        let command = match cli.command {
            CommandArg::Sum { g, x, k, method } => {
                if k != 2 && k != 3 {
                    return Err(Error::invalid(format!("--k must be 2 or 3, got {k}")));
                }
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::invalid(format!("--x must be a positive real, got {x}")));
                }
                Command::Sum {
                    g: match g {
                        GArg::Mu => GKind::Mu,
                        GArg::Absmu => GKind::AbsMu,
                    },
                    k,
                    x,
                    method: match method {
                        MethodArg::Fast => SumMethod::FastRoute,
                        MethodArg::Brute => SumMethod::BruteForce,
                        MethodArg::Identity => SumMethod::IdentityRoute,
                    },
                }
            }
            CommandArg::Scan { from, to, per_decade } => Command::Scan {
                grid: GridSpec::new(from, to, per_decade)?,
            },
            CommandArg::Meansquare { t, from, per_decade } => {
                if !(from.is_finite() && t.is_finite() && from >= 2.0 && from <= t) {
                    return Err(Error::invalid(format!(
                        "need 2 <= --from <= --T, got --from {from} --T {t}"
                    )));
                }
                if per_decade == 0 {
                    return Err(Error::invalid("--per-decade must be at least 1"));
                }
                Command::MeanSquare {
                    t_max: t,
                    t_min: from,
                    per_decade,
                }
            }
            CommandArg::Check { max_x } => {
                if max_x == 0 {
                    return Err(Error::invalid("--max-x must be positive"));
                }
                Command::Check { max_x }
            }
            CommandArg::Constants => Command::Constants,
        };
        Ok(RunConfig {
            command,
            threads: cli.threads as usize,
            precision_digits: cli.precision,
            output_path: cli.out,
            format: cli.format,
            sieve_cache: cli.sieve_cache,
        })
    }
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::LimitMismatch { .. } | Error::Format(_) | Error::Io(_) => 2,
        Error::OutOfRange { .. }
        | Error::TableTooSmall { .. }
        | Error::Allocation { .. }
        | Error::EntryOverflow { .. } => 3,
        Error::Invariant(_) => 4,
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::parse_from(args) {
        Ok(c) => c,
        Err(ParseFailure::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(ParseFailure::Config(e)) => {
            eprintln!("mugcd: {e}");
            return exit_code(&e);
        }
    };
    let result = match &config.output_path {
        Some(path) => File::create(path)
            .map_err(Error::from)
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                run(&config, &mut w)?;
                w.flush()?;
                Ok(())
            }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run(&config, &mut lock).and_then(|()| lock.flush().map_err(Error::from))
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mugcd: {e}");
            exit_code(&e)
        }
    }
}

fn tables(config: &RunConfig, limit: usize, tau3: bool) -> Result<Tables> {
    let limit = limit.max(1);
    match &config.sieve_cache {
        Some(dir) => Tables::cached(limit, tau3, dir),
        None if tau3 => Tables::with_tau3(limit),
        None => Tables::new(limit),
    }
}

/// Executes `config`, writing its artifact to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let constants = || ConstantBundle::new(config.precision_digits);
    match &config.command {
        Command::Sum { g, k, x, method } => {
            let bundle = constants()?;
            let start = Instant::now();
            let r = match method {
                SumMethod::FastRoute if *k == 2 => {
                    let t = tables(config, isqrt(crate::floor_arg("x", *x, crate::summatory::MAX_FAST)?) as usize, false)?;
                    match g {
                        GKind::Mu => fast_s_mu_threads(*x, &t, &bundle, config.threads)?,
                        GKind::AbsMu => fast_s_abs_mu_threads(*x, &t, &bundle, config.threads)?,
                    }
                }
                SumMethod::IdentityRoute => {
                    let n = crate::floor_arg("x", *x, crate::sieve::MAX_TABLE as f64)?;
                    summatory(*g, *k, *x, *method, &tables(config, n as usize, *k == 3)?, &bundle)?
                }
                _ => summatory(*g, *k, *x, *method, &Tables::new(1)?, &bundle)?,
            };
            write_sum(&r, start.elapsed().as_secs_f64() * 1e3, config.format, out)
        }
        Command::Scan { grid } => {
            let bundle = constants()?;
            let t = tables(config, isqrt(grid.x_max.floor() as u64) as usize, false)?;
            let scan = scan_errors_threads(grid, &t, &bundle, config.threads)?;
            match config.format {
                Format::Csv => write_scan_csv(&scan, out),
                Format::Json => write_scan_json(&scan, out),
            }
        }
        Command::MeanSquare {
            t_max,
            t_min,
            per_decade,
        } => {
            let samples = GridSpec::new(*t_min, *t_max, *per_decade)?.raw_points();
            let limit = crate::floor_arg("T", *t_max, crate::analysis::MAX_MEAN_SQUARE_T)?;
            let bundle = constants()?;
            let t = tables(config, limit as usize, false)?;
            let rows = mean_square_profile(&samples, &t, &bundle, config.threads)?;
            match config.format {
                Format::Csv => write_meansquare_csv(&rows, out),
                Format::Json => write_meansquare_json(&rows, out),
            }
        }
        Command::Check { max_x } => {
            let bundle = constants()?;
            let reports = run_checks(*max_x, &bundle, config)?;
            write_checks(&reports, config.format, out)?;
            match reports.iter().find(|r| !r.passed) {
                Some(r) => Err(Error::Invariant(format!("check suite {} failed: {}", r.suite, r.detail))),
                None => Ok(()),
            }
        }
        Command::Constants => {
            let report = constants()?.report();
            match config.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut *out, &report).map_err(std::io::Error::from)?;
                    out.write_all(b"\n")?;
                }
                Format::Csv => {
                    let v = serde_json::to_value(&report).map_err(std::io::Error::from)?;
                    let fields = v.as_object().expect("report serializes to an object");
                    let names: Vec<&str> = fields.keys().map(String::as_str).collect();
                    let values: Vec<String> = fields
                        .values()
                        .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                        .collect();
                    writeln!(out, "{}", names.join(","))?;
                    writeln!(out, "{}", values.join(","))?;
                }
            }
            Ok(())
        }
    }
}

fn method_name(m: SumMethod) -> &'static str {
    match m {
        SumMethod::FastRoute => "fast",
        SumMethod::BruteForce => "brute",
        SumMethod::IdentityRoute => "identity",
    }
}

#[derive(Serialize)]
struct SumRow {
    x: f64,
    #[serde(rename = "S")]
    s: i64,
    #[serde(rename = "M")]
    m: Option<f64>,
    #[serde(rename = "E")]
    e: Option<f64>,
    method: &'static str,
    wall_ms: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then(|| round_sig12(v))
}

fn write_sum(r: &SummatoryResult, wall_ms: f64, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "x,S,M,E,method,wall_ms")?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                format_sig12(r.x),
                r.s_value,
                format_sig12(r.main_term),
                format_sig12(r.error),
                method_name(r.method),
                format_sig12(wall_ms)
            )?;
        }
        Format::Json => {
            let row = SumRow {
                x: round_sig12(r.x),
                s: r.s_value,
                m: finite(r.main_term),
                e: finite(r.error),
                method: method_name(r.method),
                wall_ms: round_sig12(wall_ms),
            };
            serde_json::to_writer_pretty(&mut *out, &row).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub detail: String,
    pub wall_ms: f64,
}

fn suite(name: &'static str, body: impl FnOnce() -> Result<std::result::Result<String, String>>) -> Result<SuiteReport> {
    let start = Instant::now();
    let outcome = body()?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Ok(SuiteReport {
        suite: name,
        passed,
        detail,
        wall_ms,
    })
}

/// Tuple enumeration for `k = 3` is cubic in the divisor count, so it runs
/// on a shorter prefix than the `k = 2` comparison.
const CHECK_IDENTITY_K2: u64 = 10_000;
const CHECK_IDENTITY_K3: u64 = 1_000;

/// The exact-equality suites behind `check`.
pub fn run_checks(max_x: u64, constants: &ConstantBundle, config: &RunConfig) -> Result<Vec<SuiteReport>> {
    if max_x as f64 > MAX_BRUTE {
        return Err(Error::out_of_range("max_x", max_x as f64, MAX_BRUTE));
    }
    let t = tables(config, max_x as usize, true)?;
    let threads = config.threads;
    let mut reports = Vec::new();

    for (name, g) in [("fast-vs-brute-mu", GKind::Mu), ("fast-vs-brute-absmu", GKind::AbsMu)] {
        reports.push(suite(name, || {
            let brute = brute_s_prefix(g, max_x)?;
            for x in 1..=max_x {
                let xf = x as f64;
                let fast = match g {
                    GKind::Mu => fast_s_mu_threads(xf, &t, constants, threads)?,
                    GKind::AbsMu => fast_s_abs_mu_threads(xf, &t, constants, threads)?,
                };
                if fast.s_value != brute[x as usize] {
                    return Ok(Err(format!("x = {x}: fast {} vs brute {}", fast.s_value, brute[x as usize])));
                }
            }
            Ok(Ok(format!("x <= {max_x}")))
        })?);
    }

    for (name, k, cap) in [("identity-k2", 2, CHECK_IDENTITY_K2), ("identity-k3", 3, CHECK_IDENTITY_K3)] {
        reports.push(suite(name, || {
            let top = max_x.min(cap);
            let gs: &[GKind] = if k == 2 { &[GKind::Mu, GKind::AbsMu] } else { &[GKind::Mu] };
            for &g in gs {
                for n in 1..=top {
                    let (a, b) = (f_value(g, k, n)?, f_value_identity(g, k, n, &t)?);
                    if a != b {
                        return Ok(Err(format!("{g:?} n = {n}: tuples {a} vs identity {b}")));
                    }
                }
            }
            Ok(Ok(format!("n <= {top}")))
        })?);
    }

    reports.push(suite("hyperbola", || {
        // Divisor counts spread over multiples, independent of both routes.
        let n = max_x as usize;
        let mut tau = vec![0u64; n + 1];
        for d in 1..=n {
            for m in (d..=n).step_by(d) {
                tau[m] += 1;
            }
        }
        let mut running = 0u64;
        for (x, t) in tau.iter().enumerate().skip(1) {
            running += t;
            let h = divisor_sum_hyperbola(x as f64)?;
            if h != running {
                return Ok(Err(format!("x = {x}: hyperbola {h} vs {running}")));
            }
        }
        let naive = divisor_sum_naive(max_x as f64)?;
        if naive != running {
            return Ok(Err(format!("x = {max_x}: naive {naive} vs {running}")));
        }
        Ok(Ok(format!("x <= {max_x}")))
    })?);

    reports.push(suite("mu-star-mu", || {
        let n = max_x as usize;
        let closed = mu_star_mu_closed_form(n)?;
        let mu = sieve_mobius(n)?;
        let conv = dirichlet_convolve(&mu, &mu)?;
        match (1..=n).find(|&i| closed.get(i) != conv.get(i)) {
            Some(i) => Ok(Err(format!("n = {i}: closed form {} vs convolution {}", closed.get(i), conv.get(i)))),
            None => Ok(Ok(format!("n <= {n}"))),
        }
    })?);

    Ok(reports)
}

fn write_checks(reports: &[SuiteReport], format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "suite,status,detail,wall_ms")?;
            for r in reports {
                let status = if r.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{},{},{},{}", r.suite, status, r.detail, format_sig12(r.wall_ms))?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                suite: &'a str,
                status: &'a str,
                detail: &'a str,
                wall_ms: f64,
            }
            let rows: Vec<Row> = reports
                .iter()
                .map(|r| Row {
                    suite: r.suite,
                    status: if r.passed { "PASS" } else { "FAIL" },
                    detail: &r.detail,
                    wall_ms: round_sig12(r.wall_ms),
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rows).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::parse_from(std::iter::once("mugcd").chain(args.iter().copied())).unwrap()
    }

    fn run_to_string(args: &[&str]) -> Result<String> {
        let mut out = Vec::new();
        run(&parse(args), &mut out)?;
        Ok(String::from_utf8(out).unwrap())
    }

    #[test]
    fn parses_sum_defaults() {
        let c = parse(&["sum", "--x", "10"]);
        assert_eq!(
            c.command,
            Command::Sum {
                g: GKind::Mu,
                k: 2,
                x: 10.0,
                method: SumMethod::FastRoute
            }
        );
        assert_eq!(c.threads, 1);
        assert_eq!(c.format, Format::Csv);
        let c = parse(&["--threads", "4", "sum", "--g", "absmu", "--x", "1e6", "--format", "json"]);
        assert_eq!(c.threads, 4);
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn config_errors() {
        let bad = |args: &[&str]| RunConfig::parse_from(std::iter::once("mugcd").chain(args.iter().copied()));
        assert!(matches!(bad(&["sum", "--x", "10", "--precision", "60"]), Err(ParseFailure::Config(_))));
        assert!(matches!(bad(&["sum", "--x", "10", "--k", "4"]), Err(ParseFailure::Config(_))));
        assert!(matches!(bad(&["sum", "--x", "-3"]), Err(ParseFailure::Config(_))));
        assert!(matches!(bad(&["scan", "--from", "100", "--to", "10"]), Err(ParseFailure::Config(_))));
        assert!(matches!(bad(&["--threads", "0", "constants"]), Err(ParseFailure::Clap(_))));
        assert!(matches!(bad(&["frobnicate"]), Err(ParseFailure::Clap(_))));
        assert!(matches!(
            bad(&["scan", "--from", "10", "--to", "1e13"]),
            Err(ParseFailure::Config(Error::OutOfRange { .. }))
        ));
    }

    #[test]
    fn sum_at_ten() {
        let text = run_to_string(&["sum", "--x", "10"]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,S,M,E,method,wall_ms"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..2], &["10", "19"]);
        let m: f64 = row[2].parse().unwrap();
        let e: f64 = row[3].parse().unwrap();
        assert!((19.0 - m - e).abs() < 1e-10);
        assert_eq!(row[4], "fast");
    }

    #[test]
    fn sum_k3_reports_no_main_term() {
        let text = run_to_string(&["sum", "--x", "100", "--k", "3", "--method", "identity", "--format", "json"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["M"].is_null() && v["E"].is_null());
        let brute = run_to_string(&["sum", "--x", "100", "--k", "3", "--method", "brute", "--format", "json"]).unwrap();
        let b: serde_json::Value = serde_json::from_str(&brute).unwrap();
        assert_eq!(v["S"], b["S"]);
    }

    #[test]
    fn range_error_codes() {
        let err = run(&parse(&["sum", "--x", "2e12"]), &mut Vec::new()).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        let err = run(&parse(&["sum", "--x", "2e6", "--method", "brute"]), &mut Vec::new()).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        let err = run(&parse(&["meansquare", "--T", "2e7"]), &mut Vec::new()).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        assert_eq!(exit_code(&Error::Invariant("x".into())), 4);
        assert_eq!(exit_code(&Error::invalid("x")), 2);
    }

    #[test]
    fn check_and_constants() {
        let text = run_to_string(&["check", "--max-x", "500"]).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("PASS")));
        let csv = run_to_string(&["constants"]).unwrap();
        let json = run_to_string(&["constants", "--format", "json"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let names: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        let values: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(names.len(), v.as_object().unwrap().len());
        for (n, val) in names.iter().zip(&values) {
            let j = &v[*n];
            assert_eq!(j.as_str().map_or_else(|| j.to_string(), str::to_string), *val);
        }
        assert!(v["gamma"].as_str().unwrap().starts_with("0.57721566490153286060651209"));
    }

    #[test]
    fn meansquare_rows() {
        let text = run_to_string(&["meansquare", "--T", "1e4", "--from", "10"]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "T,I,exponent_so_far");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("10,"));
        let slope: f64 = lines[4].split(',').nth(2).unwrap().parse().unwrap();
        assert!((1.0..=2.0).contains(&slope));
    }
}
