//! Error-term scans, the mean-square integral `I_μ(T) = ∫₁^T E_μ(t)² dt`,
//! growth-exponent fits and truncated Dirichlet series.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::accum::NeumaierSum;
use crate::constants::{compute_zeta, to_dd, ConstantBundle, HotConstants};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::summatory::{f_table, fast_s_mu_threads, GKind, Tables, MAX_FAST};
use crate::with_threads;

pub const MAX_PER_DECADE: u32 = 200;
pub const MAX_MEAN_SQUARE_T: f64 = 1e7;
pub const MAX_SERIES_TERMS: u64 = 1_000_000;
pub const MIN_SERIES_S: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points_per_decade: u32,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, points_per_decade: u32) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min >= 1.0 && x_min <= x_max) {
            return Err(Error::invalid(format!(
                "grid bounds must satisfy 1 <= from <= to, got {x_min}..{x_max}"
            )));
        }
        if points_per_decade == 0 {
            return Err(Error::invalid("points per decade must be at least 1"));
        }
        if points_per_decade > MAX_PER_DECADE {
            return Err(Error::out_of_range(
                "points_per_decade",
                points_per_decade as f64,
                MAX_PER_DECADE as f64,
            ));
        }
        if x_max > MAX_FAST {
            return Err(Error::out_of_range("x_max", x_max, MAX_FAST));
        }
        Ok(GridSpec {
            x_min,
            x_max,
            points_per_decade,
        })
    }

    /// `x_min·10^{i/p}` for `i = 0, 1, …` up to `x_max`, plus `x_max` itself
    /// when the progression misses it.
    pub fn raw_points(&self) -> Vec<f64> {
        let p = self.points_per_decade as f64;
        let steps = (p * (self.x_max / self.x_min).log10() + 1e-9).floor() as i64;
        let mut pts: Vec<f64> = (0..=steps)
            .map(|i| (self.x_min * 10f64.powf(i as f64 / p)).min(self.x_max))
            .collect();
        if *pts.last().unwrap() < self.x_max {
            pts.push(self.x_max);
        }
        pts
    }

    /// The raw points moved to `⌊x⌋ + 1/2`, strictly increasing.
    pub fn half_integer_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.raw_points().into_iter().map(|x| x.floor() + 0.5).collect();
        pts.dedup();
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub x: f64,
    pub e: f64,
    pub ratio_sqrt: f64,
    pub ratio_quarter: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorScan {
    pub grid: GridSpec,
    pub points: Vec<ScanPoint>,
}

impl ErrorScan {
    pub fn max_abs_ratio_sqrt(&self) -> f64 {
        self.points.iter().map(|p| p.ratio_sqrt.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_ratio_quarter(&self) -> f64 {
        self.points.iter().map(|p| p.ratio_quarter.abs()).fold(0.0, f64::max)
    }
}

fn scan_point(x: f64, e: f64) -> ScanPoint {
    let ln = x.ln();
    ScanPoint {
        x,
        e,
        ratio_sqrt: e / (x.sqrt() * ln * ln),
        ratio_quarter: e / x.powf(0.25),
    }
}

pub fn scan_errors(grid: &GridSpec, tables: &Tables, constants: &ConstantBundle) -> Result<ErrorScan> {
    scan_errors_threads(grid, tables, constants, 1)
}

/// Each point is an independent single-threaded `S_μ` evaluation, so the
/// output does not depend on `threads`.
pub fn scan_errors_threads(
    grid: &GridSpec,
    tables: &Tables,
    constants: &ConstantBundle,
    threads: usize,
) -> Result<ErrorScan> {
    let xs = grid.half_integer_points();
    let one = |x: f64| fast_s_mu_threads(x, tables, constants, 1).map(|r| scan_point(x, r.error));
    let points = if threads <= 1 {
        xs.into_iter().map(one).collect::<Result<Vec<_>>>()?
    } else {
        with_threads(threads, || xs.into_par_iter().map(one).collect::<Result<Vec<_>>>())??
    };
    Ok(ErrorScan { grid: *grid, points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSquareResult {
    pub t_value: f64,
    pub integral: f64,
    pub interval_count: u64,
    /// Slope of `ln I` against `ln T` over this and all earlier samples of
    /// a profile; `None` until three samples exist.
    pub fitted_exponent: Option<f64>,
}

/// `∫ₐᵇ (S - c·t(ln t + K))² dt` with `c = 1/ζ²(2)` and `K` the main-term
/// shift, for `1 <= a <= b`.
///
/// Expanded into `S²(b-a) - 2Sc(F₁ + K t²/2) + c²(F₃ + 2K F₂ + K² t³/3)`
/// with `F₁ = ∫t ln t`, `F₂ = ∫t² ln t`, `F₃ = ∫t² ln² t`.
pub fn interval_contribution(s: i64, a: f64, b: f64, hot: &HotConstants) -> Dd {
    let s = Dd::from_i64(s);
    primitive(s, Dd::from(b), hot) - primitive(s, Dd::from(a), hot)
}

fn primitive(s: Dd, t: Dd, hot: &HotConstants) -> Dd {
    let c = hot.inv_zeta2_sq;
    let k = hot.theorem1_shift;
    let l = t.ln();
    let t2 = t.square();
    let t3 = t2 * t;
    let third = t3 / Dd::from_u64(3);
    let f1 = t2.mul_f64(0.5) * l - t2.mul_f64(0.25);
    let f2 = third * l - t3 / Dd::from_u64(9);
    let f3 = third * l.square() - (t3 * l).mul_f64(2.0) / Dd::from_u64(9) + t3.mul_f64(2.0) / Dd::from_u64(27);
    let linear = f1 + k * t2.mul_f64(0.5);
    let quad = f3 + (k * f2).mul_f64(2.0) + k.square() * third;
    s.square() * t - (s * c * linear).mul_f64(2.0) + c.square() * quad
}

// Full intervals are summed in fixed blocks whose sums combine in index
// order, independent of how many workers run them.
const INTERVAL_BLOCK: u64 = 4096;

/// `Σ_{n=lo}^{hi-1} ∫ₙ^{n+1} E²` using `prefix[n] = S_μ(n)`.
fn full_intervals(lo: u64, hi: u64, prefix: &[i64], hot: &HotConstants, threads: usize) -> Result<Dd> {
    let block = |start: u64| -> Dd {
        let end = (start + INTERVAL_BLOCK).min(hi);
        let mut acc = Dd::ZERO;
        for n in start..end {
            acc += interval_contribution(prefix[n as usize], n as f64, (n + 1) as f64, hot);
        }
        acc
    };
    let starts: Vec<u64> = (lo..hi).step_by(INTERVAL_BLOCK as usize).collect();
    let sums: Vec<Dd> = if threads <= 1 {
        starts.into_iter().map(block).collect()
    } else {
        with_threads(threads, || starts.into_par_iter().map(block).collect())?
    };
    Ok(sums.into_iter().fold(Dd::ZERO, |a, b| a + b))
}

fn check_t(t: f64) -> Result<u64> {
    if !(t.is_finite() && t >= 2.0) {
        return Err(Error::invalid(format!("T must be a real >= 2, got {t}")));
    }
    if t > MAX_MEAN_SQUARE_T {
        return Err(Error::out_of_range("T", t, MAX_MEAN_SQUARE_T));
    }
    Ok(t.floor() as u64)
}

fn summatory_prefix(limit: u64, tables: &Tables) -> Result<Vec<i64>> {
    if limit > tables.limit() as u64 {
        return Err(Error::TableTooSmall {
            limit: tables.limit(),
            needed: limit,
        });
    }
    let mut f = f_table(GKind::Mu, tables);
    f.truncate(limit as usize + 1);
    for i in 1..f.len() {
        f[i] += f[i - 1];
    }
    Ok(f)
}

pub fn mean_square(t: f64, tables: &Tables, constants: &ConstantBundle) -> Result<MeanSquareResult> {
    let mut v = mean_square_profile(&[t], tables, constants, 1)?;
    Ok(v.pop().unwrap())
}

/// `I_μ` at each of the increasing sample points, in one pass.
pub fn mean_square_profile(
    samples: &[f64],
    tables: &Tables,
    constants: &ConstantBundle,
    threads: usize,
) -> Result<Vec<MeanSquareResult>> {
    if samples.is_empty() {
        return Err(Error::invalid("at least one T is required"));
    }
    let floors = samples.iter().map(|&t| check_t(t)).collect::<Result<Vec<_>>>()?;
    if samples.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sample T values must be strictly increasing"));
    }
    let hot = constants.hot();
    let prefix = summatory_prefix(*floors.last().unwrap(), tables)?;
    let mut done = 1u64;
    let mut acc = Dd::ZERO;
    let mut out: Vec<MeanSquareResult> = Vec::with_capacity(samples.len());
    for (&t, &n) in samples.iter().zip(&floors) {
        acc += full_intervals(done, n, &prefix, hot, threads)?;
        done = n;
        let tail = interval_contribution(prefix[n as usize], n as f64, t, hot);
        let integral = (acc + tail).to_f64();
        let interval_count = if t > n as f64 { n } else { n - 1 };
        let mut fitted = out.iter().map(|r| (r.t_value, r.integral)).collect::<Vec<_>>();
        fitted.push((t, integral));
        out.push(MeanSquareResult {
            t_value: t,
            integral,
            interval_count,
            fitted_exponent: if fitted.len() >= 3 { fit_exponent(&fitted).ok() } else { None },
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln v` against `ln t`.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::invalid("fit needs at least 3 samples"));
    }
    if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::invalid("sample t values must be strictly increasing"));
    }
    if let Some(&(t, v)) = samples.iter().find(|&&(t, v)| !(v > 0.0 && t > 0.0)) {
        return Err(Error::invalid(format!("fit needs positive samples, got ({t}, {v})")));
    }
    let n = samples.len() as f64;
    let (mx, my) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, v)| (a + t.ln() / n, b + v.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in samples {
        let dx = t.ln() - mx;
        sxy += dx * (v.ln() - my);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// `Σ_{n≤N} f_μ(n)/n^s` against `ζ²(s)/ζ²(2s)`.
pub fn dirichlet_series_check(s: f64, n: u64, tables: &Tables, constants: &ConstantBundle) -> Result<SeriesCheck> {
    if !(s.is_finite() && s >= MIN_SERIES_S) {
        return Err(Error::invalid(format!(
            "s = {s} is too close to 1; the tail would dominate (need s >= {MIN_SERIES_S})"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    if n > MAX_SERIES_TERMS {
        return Err(Error::out_of_range("N", n as f64, MAX_SERIES_TERMS as f64));
    }
    if n > tables.limit() as u64 {
        return Err(Error::TableTooSmall {
            limit: tables.limit(),
            needed: n,
        });
    }
    let f = f_table(GKind::Mu, tables);
    // Smallest terms first.
    let lhs: NeumaierSum = (1..=n as usize)
        .rev()
        .filter(|&m| f[m] != 0)
        .map(|m| f[m] as f64 * (m as f64).powf(-s))
        .sum();
    let lhs = lhs.value();
    let digits = constants.precision_digits;
    let zs = to_dd(&compute_zeta(s, digits)?);
    let z2s = to_dd(&compute_zeta(2.0 * s, digits)?);
    let rhs = (zs.square() / z2s.square()).to_f64();
    Ok(SeriesCheck { lhs, rhs, diff: lhs - rhs })
}

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-5, 1e12)`.
pub fn format_sig12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-5..12).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    strip_zeros(&format!("{v:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value a 12-digit printout re-parses to; what the JSON writers emit.
pub fn round_sig12(v: f64) -> f64 {
    format_sig12(v).parse().unwrap_or(v)
}

pub fn write_scan_csv<W: Write>(scan: &ErrorScan, mut w: W) -> Result<()> {
    w.write_all(b"x,e,ratio_sqrt,ratio_quarter\n")?;
    for p in &scan.points {
        writeln!(
            w,
            "{},{},{},{}",
            format_sig12(p.x),
            format_sig12(p.e),
            format_sig12(p.ratio_sqrt),
            format_sig12(p.ratio_quarter)
        )?;
    }
    Ok(())
}

pub fn write_meansquare_csv<W: Write>(rows: &[MeanSquareResult], mut w: W) -> Result<()> {
    w.write_all(b"T,I,exponent_so_far\n")?;
    for r in rows {
        let slope = r.fitted_exponent.map_or_else(|| "nan".to_string(), format_sig12);
        writeln!(w, "{},{},{}", format_sig12(r.t_value), format_sig12(r.integral), slope)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanRowJson {
    x: f64,
    e: f64,
    ratio_sqrt: f64,
    ratio_quarter: f64,
}

#[derive(Serialize)]
struct MeanSquareRowJson {
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "I")]
    i: f64,
    exponent_so_far: Option<f64>,
}

pub fn write_scan_json<W: Write>(scan: &ErrorScan, mut w: W) -> Result<()> {
    let rows: Vec<ScanRowJson> = scan
        .points
        .iter()
        .map(|p| ScanRowJson {
            x: round_sig12(p.x),
            e: round_sig12(p.e),
            ratio_sqrt: round_sig12(p.ratio_sqrt),
            ratio_quarter: round_sig12(p.ratio_quarter),
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &rows).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_meansquare_json<W: Write>(rows: &[MeanSquareResult], mut w: W) -> Result<()> {
    let rows: Vec<MeanSquareRowJson> = rows
        .iter()
        .map(|r| MeanSquareRowJson {
            t: round_sig12(r.t_value),
            i: round_sig12(r.integral),
            exponent_so_far: r.fitted_exponent.map(round_sig12),
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &rows).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}
