//! `S_{g,k}(x) = Σ_{n≤x} f_{g,k}(n)` with
//! `f_{g,k}(n) = Σ_{d₁⋯d_k = n} g(gcd(d₁,…,d_k))`, for `g = μ` and `g = |μ|`.
//!
//! Three routes to the same integers:
//!
//! * brute force over the defining tuples, with a per-pair Euclidean gcd;
//! * the convolution identity `f_{g,k}(n) = Σ_{a^k b = n} (μ*g)(a) τ_k(b)`;
//! * the fast routes `S_μ(x) = Σ_{m≤√x} (μ*μ)(m) D(x/m²)` and
//!   `S_{|μ|}(x) = Σ_{m≤x^{1/4}} μ(m) D(x/m⁴)`.
//!
//! All summatory functions are defined at real `x` through `⌊x⌋`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::accum::NeumaierSum;
use crate::constants::{ConstantBundle, HotConstants};
use crate::dd::Dd;
use crate::divisor::{delta_dd, hyperbola_count};
use crate::error::{Error, Result};
use crate::roots::{iroot, iroot4, isqrt};
use crate::sieve::{dirichlet_convolve, FunctionKind, FunctionTable, LinearSieve};
use crate::{floor_arg, with_threads};

pub const MAX_FAST: f64 = 1e12;
pub const MAX_BRUTE: f64 = 1e6;
pub const MAX_F_VALUE_K2: u64 = 1_000_000;
pub const MAX_F_VALUE_K3: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GKind {
    Mu,
    AbsMu,
}

impl GKind {
    fn apply(self, mu: i32) -> i64 {
        match self {
            GKind::Mu => mu as i64,
            GKind::AbsMu => mu.abs() as i64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SumMethod {
    BruteForce,
    IdentityRoute,
    FastRoute,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummatoryResult {
    pub x: f64,
    pub s_value: i64,
    pub main_term: f64,
    pub error: f64,
    pub g_kind: GKind,
    pub k: u32,
    pub method: SumMethod,
}

/// `A(y) = Σ_{n≤y} (μ*μ)(n)/n²` and `B(y) = Σ_{n≤y} (μ*μ)(n) ln n / n²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialSumPair {
    pub y: f64,
    pub a_value: f64,
    pub b_value: f64,
}

/// Sieve tables shared by the identity and fast routes, all on `1..=limit`.
#[derive(Clone, Debug)]
pub struct Tables {
    pub mobius: FunctionTable,
    pub mu_star_mu: FunctionTable,
    /// μ * μ², nonzero only on squares: `(μ*μ²)(m²) = μ(m)`.
    pub mu_star_abs_mu: FunctionTable,
    pub tau: FunctionTable,
    pub tau3: Option<FunctionTable>,
}

impl Tables {
    pub fn new(limit: usize) -> Result<Self> {
        Self::build(limit, false)
    }

    /// Also builds τ₃, needed by the `k = 3` identity.
    pub fn with_tau3(limit: usize) -> Result<Self> {
        Self::build(limit, true)
    }

    /// Smallest tables that serve the fast routes up to `x`.
    pub fn for_fast_routes(x: f64) -> Result<Self> {
        let n = floor_arg("x", x, MAX_FAST)?;
        Self::new(isqrt(n).max(1) as usize)
    }

    /// Reads the tables from `dir` when a complete, matching set of cache
    /// files is there; otherwise builds them and writes the files.
    pub fn cached(limit: usize, tau3: bool, dir: &Path) -> Result<Self> {
        let path = |name: &str| dir.join(format!("{name}-{limit}.gmft"));
        let load = |name: &str, kind: FunctionKind| -> Option<FunctionTable> {
            let file = File::open(path(name)).ok()?;
            let t = FunctionTable::read_from(BufReader::new(file)).ok()?;
            (t.limit() == limit && t.kind() == kind).then_some(t)
        };
        let loaded = (|| {
            Some(Tables {
                mobius: load("mobius", FunctionKind::Mobius)?,
                mu_star_mu: load("mu_star_mu", FunctionKind::MuStarMu)?,
                mu_star_abs_mu: load("mu_star_mu_squared", FunctionKind::MuStarMuSquared)?,
                tau: load("tau", FunctionKind::Tau)?,
                tau3: if tau3 { Some(load("tau3", FunctionKind::TauK(3))?) } else { None },
            })
        })();
        if let Some(t) = loaded {
            return Ok(t);
        }
        let t = Self::build(limit, tau3)?;
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            ("mobius", &t.mobius),
            ("mu_star_mu", &t.mu_star_mu),
            ("mu_star_mu_squared", &t.mu_star_abs_mu),
            ("tau", &t.tau),
        ];
        if let Some(t3) = &t.tau3 {
            files.push(("tau3", t3));
        }
        for (name, table) in files {
            let mut w = BufWriter::new(File::create(path(name))?);
            table.write_to(&mut w)?;
            w.flush()?;
        }
        Ok(t)
    }

    fn build(limit: usize, tau3: bool) -> Result<Self> {
        let sieve = LinearSieve::new(limit)?;
        let mobius = sieve.mobius()?;
        let mu_star_abs_mu = dirichlet_convolve(&mobius, &sieve.mu_squared()?)?;
        Ok(Tables {
            mu_star_mu: sieve.mu_star_mu()?,
            mu_star_abs_mu,
            tau: sieve.tau_k(2)?,
            tau3: if tau3 { Some(sieve.tau_k(3)?) } else { None },
            mobius,
        })
    }

    pub fn limit(&self) -> usize {
        self.mobius.limit()
    }

    fn require(&self, needed: u64) -> Result<()> {
        if needed > self.limit() as u64 {
            return Err(Error::TableTooSmall {
                limit: self.limit(),
                needed,
            });
        }
        Ok(())
    }

    fn kernel(&self, g: GKind) -> &FunctionTable {
        match g {
            GKind::Mu => &self.mu_star_mu,
            GKind::AbsMu => &self.mu_star_abs_mu,
        }
    }

    fn tau_k(&self, k: u32) -> Result<&FunctionTable> {
        match k {
            2 => Ok(&self.tau),
            3 => self
                .tau3
                .as_ref()
                .ok_or_else(|| Error::invalid("tables were built without tau_3")),
            _ => Err(unsupported_k(k)),
        }
    }
}

fn unsupported_k(k: u32) -> Error {
    Error::invalid(format!("k = {k} is not supported (only k = 2 and k = 3)"))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// μ(n) by trial division; the brute-force routes use this rather than the
/// sieve so that they stay independent of it.
fn mobius_trial(mut n: u64) -> i32 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        -sign
    } else {
        sign
    }
}

/// μ on `0..=n` by the sieve of Eratosthenes (index 0 unused).
fn mobius_eratosthenes(n: usize) -> Vec<i8> {
    let mut mu = vec![1i8; n + 1];
    let mut composite = vec![false; n + 1];
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        for m in (p..=n).step_by(p) {
            if m > p {
                composite[m] = true;
            }
            mu[m] = -mu[m];
        }
        if let Some(sq) = p.checked_mul(p).filter(|&sq| sq <= n) {
            for m in (sq..=n).step_by(sq) {
                mu[m] = 0;
            }
        }
    }
    mu
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// `f_{g,k}(n)` from its definition, by enumerating ordered `k`-tuples.
pub fn f_value(g: GKind, k: u32, n: u64) -> Result<i64> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    match k {
        2 => {
            if n > MAX_F_VALUE_K2 {
                return Err(Error::out_of_range("n", n as f64, MAX_F_VALUE_K2 as f64));
            }
            Ok(divisors(n)
                .into_iter()
                .map(|d| g.apply(mobius_trial(gcd(d, n / d))))
                .sum())
        }
        3 => {
            if n > MAX_F_VALUE_K3 {
                return Err(Error::out_of_range("n", n as f64, MAX_F_VALUE_K3 as f64));
            }
            let mut total = 0;
            for d1 in divisors(n) {
                for d2 in divisors(n / d1) {
                    let d3 = n / d1 / d2;
                    total += g.apply(mobius_trial(gcd(gcd(d1, d2), d3)));
                }
            }
            Ok(total)
        }
        _ => Err(unsupported_k(k)),
    }
}

/// `f_{g,k}(n) = Σ_{a^k b = n} (μ*g)(a) τ_k(b)`.
pub fn f_value_identity(g: GKind, k: u32, n: u64, tables: &Tables) -> Result<i64> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let tau = tables.tau_k(k)?;
    tables.require(n)?;
    let kernel = tables.kernel(g);
    let top = iroot(n, k);
    let mut total = 0i64;
    for a in 1..=top {
        let ak = a.pow(k);
        if n.is_multiple_of(ak) {
            total += kernel.get(a as usize) as i64 * tau.get((n / ak) as usize) as i64;
        }
    }
    Ok(total)
}

/// `f_{g,2}(n)` for every `n <= tables.limit()`, spread from the identity:
/// each `a` with `(μ*g)(a) != 0` contributes `(μ*g)(a) τ(b)` at `a²b`.
pub fn f_table(g: GKind, tables: &Tables) -> Vec<i64> {
    let n = tables.limit();
    let kernel = tables.kernel(g);
    let mut f = vec![0i64; n + 1];
    for a in 1..=isqrt(n as u64) as usize {
        let c = kernel.get(a) as i64;
        if c == 0 {
            continue;
        }
        let sq = a * a;
        for b in 1..=n / sq {
            f[sq * b] += c * tables.tau.get(b) as i64;
        }
    }
    f
}

/// `Σ_{mn≤x} g(gcd(m, n))` by the double loop.
pub fn brute_s(g: GKind, x: f64) -> Result<i64> {
    let n = floor_arg("x", x, MAX_BRUTE)? as usize;
    let mu = mobius_eratosthenes(n);
    let mut total = 0i64;
    for a in 1..=n {
        for b in 1..=n / a {
            total += g.apply(mu[gcd(a as u64, b as u64) as usize] as i32);
        }
    }
    Ok(total)
}

/// The same double loop, bucketed by `mn`: returns `S(0), S(1), …, S(limit)`.
pub fn brute_s_prefix(g: GKind, limit: u64) -> Result<Vec<i64>> {
    if limit as f64 > MAX_BRUTE {
        return Err(Error::out_of_range("limit", limit as f64, MAX_BRUTE));
    }
    let n = limit as usize;
    let mu = mobius_eratosthenes(n);
    let mut f = vec![0i64; n + 1];
    for a in 1..=n {
        for b in 1..=n / a {
            f[a * b] += g.apply(mu[gcd(a as u64, b as u64) as usize] as i32);
        }
    }
    for i in 1..=n {
        f[i] += f[i - 1];
    }
    Ok(f)
}

pub(crate) fn main_term_mu_dd(x: Dd, hot: &HotConstants) -> Dd {
    hot.inv_zeta2_sq * x * (x.ln() + hot.theorem1_shift)
}

pub(crate) fn main_term_abs_mu_dd(x: Dd, hot: &HotConstants) -> Dd {
    x / hot.zeta4 * (x.ln() + hot.sqfree_shift)
}

fn check_positive(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!("x must be a positive real, got {x}")));
    }
    Ok(())
}

/// `(1/ζ²(2)) (ln x + 2γ - 1 - 4ζ'(2)/ζ(2)) x`.
pub fn main_term_mu(x: f64, constants: &ConstantBundle) -> Result<f64> {
    check_positive(x)?;
    Ok(main_term_mu_dd(Dd::from(x), constants.hot()).to_f64())
}

/// `(x/ζ(4)) (ln x + 2γ - 1 - 4ζ'(4)/ζ(4))`.
///
/// Expanding `D(x/m⁴) ≈ (x/m⁴)(ln x - 4 ln m + 2γ - 1)` and summing against
/// `Σ μ(m) ln m / m⁴ = ζ'(4)/ζ²(4)` gives the factor 4 on `ζ'(4)/ζ(4)`.
pub fn main_term_abs_mu(x: f64, constants: &ConstantBundle) -> Result<f64> {
    check_positive(x)?;
    Ok(main_term_abs_mu_dd(Dd::from(x), constants.hot()).to_f64())
}

fn main_term_dd(g: GKind, x: Dd, hot: &HotConstants) -> Dd {
    match g {
        GKind::Mu => main_term_mu_dd(x, hot),
        GKind::AbsMu => main_term_abs_mu_dd(x, hot),
    }
}

// Main terms are known only for k = 2; other k report NaN for M and E.
fn finish(g: GKind, k: u32, x: f64, s_value: i64, method: SumMethod, hot: &HotConstants) -> SummatoryResult {
    let (main_term, error) = if k == 2 {
        let m = main_term_dd(g, Dd::from(x), hot);
        (m.to_f64(), (Dd::from_i64(s_value) - m).to_f64())
    } else {
        (f64::NAN, f64::NAN)
    };
    SummatoryResult {
        x,
        s_value,
        main_term,
        error,
        g_kind: g,
        k,
        method,
    }
}

// Fixed-size blocks so the reduction order is the same for any thread count.
const BLOCK: u64 = 1 << 12;

/// `Σ_{m ≤ top} c(m) D(⌊n / m^p⌋)` split into blocks of `m`.
fn weighted_divisor_sum(n: u64, top: u64, power: u32, coeff: &FunctionTable, threads: usize) -> Result<i64> {
    let block_sum = |start: u64| -> i64 {
        let end = (start + BLOCK - 1).min(top);
        let mut s = 0i64;
        for m in start..=end {
            let c = coeff.get(m as usize) as i64;
            if c != 0 {
                s += c * hyperbola_count(n / m.pow(power)) as i64;
            }
        }
        s
    };
    let starts: Vec<u64> = (1..=top).step_by(BLOCK as usize).collect();
    if threads <= 1 {
        return Ok(starts.into_iter().map(block_sum).sum());
    }
    with_threads(threads, || starts.into_par_iter().map(block_sum).sum())
}

/// `S_μ(x) = Σ_{m≤√x} (μ*μ)(m) D(x/m²)`.
pub fn fast_s_mu(x: f64, tables: &Tables, constants: &ConstantBundle) -> Result<SummatoryResult> {
    fast_s_mu_threads(x, tables, constants, 1)
}

pub fn fast_s_mu_threads(
    x: f64,
    tables: &Tables,
    constants: &ConstantBundle,
    threads: usize,
) -> Result<SummatoryResult> {
    check_positive(x)?;
    let n = floor_arg("x", x, MAX_FAST)?;
    let top = isqrt(n);
    tables.require(top)?;
    let s = weighted_divisor_sum(n, top, 2, &tables.mu_star_mu, threads)?;
    Ok(finish(GKind::Mu, 2, x, s, SumMethod::FastRoute, constants.hot()))
}

/// `S_{|μ|}(x) = Σ_{m≤x^{1/4}} μ(m) D(x/m⁴)`.
pub fn fast_s_abs_mu(x: f64, tables: &Tables, constants: &ConstantBundle) -> Result<SummatoryResult> {
    fast_s_abs_mu_threads(x, tables, constants, 1)
}

pub fn fast_s_abs_mu_threads(
    x: f64,
    tables: &Tables,
    constants: &ConstantBundle,
    threads: usize,
) -> Result<SummatoryResult> {
    check_positive(x)?;
    let n = floor_arg("x", x, MAX_FAST)?;
    let top = iroot4(n);
    tables.require(top)?;
    let s = weighted_divisor_sum(n, top, 4, &tables.mobius, threads)?;
    Ok(finish(GKind::AbsMu, 2, x, s, SumMethod::FastRoute, constants.hot()))
}

/// `S_{g,k}(x)` by the chosen route, with its main term when `k = 2`.
pub fn summatory(
    g: GKind,
    k: u32,
    x: f64,
    method: SumMethod,
    tables: &Tables,
    constants: &ConstantBundle,
) -> Result<SummatoryResult> {
    check_positive(x)?;
    let hot = constants.hot();
    match (method, k) {
        (SumMethod::FastRoute, 2) => match g {
            GKind::Mu => fast_s_mu(x, tables, constants),
            GKind::AbsMu => fast_s_abs_mu(x, tables, constants),
        },
        (SumMethod::BruteForce, 2) => Ok(finish(g, 2, x, brute_s(g, x)?, method, hot)),
        (SumMethod::IdentityRoute | SumMethod::BruteForce, 2 | 3) => {
            let cap = match method {
                SumMethod::BruteForce => MAX_F_VALUE_K3 as f64,
                _ => tables.limit() as f64,
            };
            let n = floor_arg("x", x, cap)?;
            let mut s = 0i64;
            for m in 1..=n {
                s += match method {
                    SumMethod::BruteForce => f_value(g, k, m)?,
                    _ => f_value_identity(g, k, m, tables)?,
                };
            }
            Ok(finish(g, k, x, s, method, hot))
        }
        (SumMethod::FastRoute, _) => Err(Error::invalid("fast routes exist only for k = 2")),
        _ => Err(unsupported_k(k)),
    }
}

/// `(A(y), B(y))`, summed in increasing `n` with compensation.
pub fn partial_sums_lemma22(y: f64, tables: &Tables) -> Result<PartialSumPair> {
    if !(y >= 1.0) {
        return Err(Error::invalid(format!("y must be at least 1, got {y}")));
    }
    let n = floor_arg("y", y, tables.limit() as f64)? as usize;
    let mut a = NeumaierSum::new();
    let mut b = NeumaierSum::new();
    for m in 1..=n {
        let c = tables.mu_star_mu.get(m);
        if c == 0 {
            continue;
        }
        let mf = m as f64;
        let t = c as f64 / (mf * mf);
        a += t;
        b += t * mf.ln();
    }
    Ok(PartialSumPair {
        y,
        a_value: a.value(),
        b_value: b.value(),
    })
}

/// `E_μ(x) = S_μ(x) - M_μ(x)`.
pub fn error_mu(x: f64, tables: &Tables, constants: &ConstantBundle) -> Result<f64> {
    Ok(fast_s_mu(x, tables, constants)?.error)
}

/// `Σ_{ℓ≤Y} (μ*μ)(ℓ) Δ(x/ℓ²)` for `1 <= Y <= √x`.
///
/// `x/ℓ²` is formed in double-double and its integer part is the exact
/// `⌊⌊x⌋/ℓ²⌋`; arguments in `[1, 2)` use the same `D - x(ln x + 2γ - 1)`.
pub fn delta_weighted_sum(x: f64, y_cut: f64, tables: &Tables, constants: &ConstantBundle) -> Result<f64> {
    check_positive(x)?;
    let n = floor_arg("x", x, crate::divisor::MAX_HYPERBOLA)?;
    if !(y_cut >= 1.0) || y_cut > x.sqrt() {
        return Err(Error::invalid(format!(
            "cutoff Y = {y_cut} must lie in [1, sqrt(x)] for x = {x}"
        )));
    }
    let top = (y_cut.floor() as u64).min(isqrt(n));
    tables.require(top)?;
    let hot = constants.hot();
    let xd = Dd::from(x);
    let mut total = Dd::ZERO;
    for l in 1..=top {
        let c = tables.mu_star_mu.get(l as usize);
        if c == 0 {
            continue;
        }
        let sq = l * l;
        let d = delta_dd(n / sq, xd / Dd::from_u64(sq), hot);
        total += d.mul_f64(c as f64);
    }
    Ok(total.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::sync::OnceLock;

    fn bundle() -> &'static ConstantBundle {
        static B: OnceLock<ConstantBundle> = OnceLock::new();
        B.get_or_init(|| ConstantBundle::new(30).unwrap())
    }

    fn tables() -> &'static Tables {
        static T: OnceLock<Tables> = OnceLock::new();
        T.get_or_init(|| Tables::with_tau3(1_000_000).unwrap())
    }

    #[test]
    fn f_value_small_cases() {
        assert_eq!(f_value(GKind::Mu, 2, 1).unwrap(), 1);
        assert_eq!(f_value(GKind::Mu, 2, 4).unwrap(), 1);
        assert_eq!(f_value(GKind::Mu, 2, 8).unwrap(), 0);
        assert!(f_value(GKind::Mu, 4, 8).is_err());
        assert!(f_value(GKind::Mu, 2, 0).is_err());
        assert!(f_value(GKind::Mu, 3, 10_001).is_err());
    }

    #[test]
    fn identity_small_cases() {
        let t = tables();
        assert_eq!(f_value_identity(GKind::Mu, 2, 4, t).unwrap(), 1);
        assert_eq!(f_value_identity(GKind::Mu, 2, 9, t).unwrap(), 1);
        for n in [1u64, 2, 6, 30, 210, 2310] {
            assert_eq!(
                f_value_identity(GKind::Mu, 2, n, t).unwrap(),
                t.tau.get(n as usize) as i64
            );
        }
        let small = Tables::new(10).unwrap();
        assert!(matches!(
            f_value_identity(GKind::Mu, 2, 11, &small),
            Err(Error::TableTooSmall { .. })
        ));
        assert!(f_value_identity(GKind::Mu, 3, 5, &small).is_err());
    }

    #[test]
    fn identity_matches_definition() {
        let t = tables();
        for g in [GKind::Mu, GKind::AbsMu] {
            for n in 1..=10_000u64 {
                assert_eq!(
                    f_value(g, 2, n).unwrap(),
                    f_value_identity(g, 2, n, t).unwrap(),
                    "{g:?} n = {n}"
                );
            }
        }
        for n in 1..=1000u64 {
            assert_eq!(
                f_value(GKind::Mu, 3, n).unwrap(),
                f_value_identity(GKind::Mu, 3, n, t).unwrap()
            );
        }
    }

    #[test]
    fn spread_table_matches_pointwise_identity() {
        let t = Tables::new(5000).unwrap();
        for g in [GKind::Mu, GKind::AbsMu] {
            let f = f_table(g, &t);
            for n in 1..=5000u64 {
                assert_eq!(f[n as usize], f_value_identity(g, 2, n, &t).unwrap());
            }
        }
    }

    #[test]
    fn brute_small_cases() {
        assert_eq!(brute_s(GKind::Mu, 1.0).unwrap(), 1);
        assert_eq!(brute_s(GKind::Mu, 10.0).unwrap(), 19);
        assert_eq!(brute_s(GKind::AbsMu, 16.0).unwrap(), 49);
        assert!(matches!(brute_s(GKind::Mu, 2e6), Err(Error::OutOfRange { .. })));
        let prefix = brute_s_prefix(GKind::Mu, 3000).unwrap();
        for x in [1usize, 10, 999, 3000] {
            assert_eq!(prefix[x], brute_s(GKind::Mu, x as f64).unwrap());
        }
    }

    #[test]
    fn eratosthenes_mobius_matches_trial_division() {
        let mu = mobius_eratosthenes(5000);
        for n in 1..=5000u64 {
            assert_eq!(mu[n as usize] as i32, mobius_trial(n));
        }
    }

    #[test]
    fn fast_routes_small_cases() {
        let (t, b) = (tables(), bundle());
        assert_eq!(fast_s_mu(10.0, t, b).unwrap().s_value, 19);
        assert_eq!(fast_s_mu(1.0, t, b).unwrap().s_value, 1);
        assert_eq!(fast_s_mu(10.5, t, b).unwrap().s_value, 19);
        assert_eq!(fast_s_abs_mu(16.0, t, b).unwrap().s_value, 49);
        assert_eq!(fast_s_abs_mu(15.0, t, b).unwrap().s_value, 45);
        assert_eq!(fast_s_abs_mu(1.0, t, b).unwrap().s_value, 1);
        assert!(matches!(fast_s_mu(2e12, t, b), Err(Error::OutOfRange { .. })));
        let small = Tables::new(10).unwrap();
        assert!(matches!(
            fast_s_mu(1e4, &small, b),
            Err(Error::TableTooSmall { .. })
        ));
    }

    #[test]
    fn fast_matches_brute_and_telescopes() {
        let (t, b) = (tables(), bundle());
        let mu = brute_s_prefix(GKind::Mu, 5000).unwrap();
        let abs = brute_s_prefix(GKind::AbsMu, 5000).unwrap();
        for x in 1..=5000u64 {
            let xf = x as f64;
            assert_eq!(fast_s_mu(xf, t, b).unwrap().s_value, mu[x as usize]);
            assert_eq!(fast_s_abs_mu(xf, t, b).unwrap().s_value, abs[x as usize]);
            if x >= 2 {
                assert_eq!(mu[x as usize] - mu[x as usize - 1], f_value(GKind::Mu, 2, x).unwrap());
            }
        }
        // A handful of direct double loops at larger x.
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..5 {
            let x = rng.gen_range(10_000..200_000) as f64;
            assert_eq!(fast_s_mu(x, t, b).unwrap().s_value, brute_s(GKind::Mu, x).unwrap());
        }
    }

    #[test]
    fn summatory_dispatch_routes_agree() {
        let (t, b) = (tables(), bundle());
        for g in [GKind::Mu, GKind::AbsMu] {
            let x = 777.5;
            let fast = summatory(g, 2, x, SumMethod::FastRoute, t, b).unwrap();
            let brute = summatory(g, 2, x, SumMethod::BruteForce, t, b).unwrap();
            let ident = summatory(g, 2, x, SumMethod::IdentityRoute, t, b).unwrap();
            assert_eq!(fast.s_value, brute.s_value);
            assert_eq!(fast.s_value, ident.s_value);
            assert_eq!(ident.method, SumMethod::IdentityRoute);
        }
        let b3 = summatory(GKind::Mu, 3, 300.0, SumMethod::BruteForce, &Tables::new(1).unwrap(), b).unwrap();
        assert!(b3.main_term.is_nan() && b3.error.is_nan());
        let i3 = summatory(GKind::Mu, 3, 300.0, SumMethod::IdentityRoute, t, b).unwrap();
        assert_eq!(b3.s_value, i3.s_value);
        assert!(summatory(GKind::Mu, 3, 300.0, SumMethod::FastRoute, t, b).is_err());
    }

    #[test]
    fn main_term_values() {
        let b = bundle();
        let m100 = main_term_mu(100.0, b).unwrap();
        // 40-digit evaluations.
        assert!((m100 - 260.160_560_871_709_04).abs() < 1e-12, "{m100}");
        let a100 = main_term_abs_mu(100.0, b).unwrap();
        assert!((a100 - 463.288_638_683_229_6).abs() < 1e-12, "{a100}");
        let hot = b.hot();
        let e = std::f64::consts::E;
        let direct = hot.inv_zeta2_sq.to_f64() * e * (1.0 + hot.theorem1_shift.to_f64());
        assert!((main_term_mu(e, b).unwrap() - direct).abs() < 1e-13);
        for x in [3.0, 50.5, 1e6, 1e12] {
            let lhs = main_term_mu(x, b).unwrap() / x;
            let rhs = (x.ln() + hot.theorem1_shift.to_f64()) * hot.inv_zeta2_sq.to_f64();
            assert!((lhs - rhs).abs() <= 1e-14 * rhs);
        }
        let mut prev = main_term_mu(3.0, b).unwrap();
        for i in 1..=1000 {
            let m = main_term_mu(3.0 + i as f64 * 0.37, b).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn squarefree_residual_is_sublinear() {
        // A wrong coefficient on ζ'(4)/ζ(4) leaves a residual proportional
        // to x; the correct one stays far below x^0.45.
        let (t, b) = (tables(), bundle());
        for x in [1e6, 1e8, 1e10, 1e12] {
            let r = fast_s_abs_mu(x, t, b).unwrap();
            assert!(r.error.abs() < x.powf(0.45), "x = {x}: {}", r.error);
        }
        let h = b.hot();
        assert!((h.sqfree_shift.to_f64() - 0.409_110_389_624_550_2).abs() < 1e-15);
    }

    #[test]
    fn result_reconstructs_s() {
        let (t, b) = (tables(), bundle());
        for x in [10.0, 12345.5, 1e8 + 0.5, 1e11 + 0.5] {
            let r = fast_s_mu(x, t, b).unwrap();
            let ulp = f64::EPSILON * r.s_value as f64;
            assert!((r.error + r.main_term - r.s_value as f64).abs() <= 8.0 * ulp);
            assert_eq!(r.method, SumMethod::FastRoute);
        }
        let r = fast_s_mu(10.0, t, b).unwrap();
        assert!((r.error - (19.0 - main_term_mu(10.0, b).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn error_steps_at_integers() {
        let (t, b) = (tables(), bundle());
        for n in [100u64, 1000, 4321] {
            let below = error_mu(n as f64 - 1e-9, t, b).unwrap();
            let above = error_mu(n as f64 + 1e-9, t, b).unwrap();
            let f = f_value(GKind::Mu, 2, n).unwrap() as f64;
            assert!((above - below - f).abs() < 1e-3);
        }
        let e6 = error_mu(1e6, t, b).unwrap();
        assert!(e6.abs() < 1e3 * 1e6f64.ln().powi(2));
    }

    #[test]
    fn partial_sums_small_and_limits() {
        let t = tables();
        let p1 = partial_sums_lemma22(1.0, t).unwrap();
        assert_eq!((p1.a_value, p1.b_value), (1.0, 0.0));
        let p2 = partial_sums_lemma22(2.0, t).unwrap();
        assert!((p2.a_value - 0.5).abs() < 1e-15);
        assert!((p2.b_value + 2f64.ln() / 2.0).abs() < 1e-15);
        let h = bundle().hot();
        let p = partial_sums_lemma22(1e6, t).unwrap();
        assert!((p.a_value - h.inv_zeta2_sq.to_f64()).abs() <= 1e-4);
        assert!((p.b_value - h.lemma22_b.to_f64()).abs() <= 1e-3);
        assert!(partial_sums_lemma22(2e6, t).is_err());
        assert!(partial_sums_lemma22(0.5, t).is_err());
    }

    #[test]
    fn truncated_delta_sum_cases() {
        let (t, b) = (tables(), bundle());
        let x = 10_000.0;
        assert_eq!(
            delta_weighted_sum(x, 1.0, t, b).unwrap(),
            crate::divisor::delta(x, b).unwrap()
        );
        let full = delta_weighted_sum(x, 100.0, t, b).unwrap();
        let part = delta_weighted_sum(x, 10.0, t, b).unwrap();
        let mut direct = 0.0;
        for l in 11..=100u64 {
            let c = t.mu_star_mu.get(l as usize) as f64;
            if c != 0.0 {
                direct += c * crate::divisor::delta(x / (l * l) as f64, b).unwrap();
            }
        }
        assert!((full - part - direct).abs() < 1e-9);

        let h = b.hot();
        let e = error_mu(x, t, b).unwrap();
        let ab = partial_sums_lemma22(100.0, t).unwrap();
        let l = x.ln() + h.divisor_shift.to_f64();
        let expect = e - x * l * (ab.a_value - h.inv_zeta2_sq.to_f64())
            + 2.0 * x * (ab.b_value - h.lemma22_b.to_f64());
        assert!((full - expect).abs() < 1e-6 * x, "{full} vs {expect}");

        assert!(delta_weighted_sum(x, 100.5, t, b).is_err());
        assert!(delta_weighted_sum(x, 0.5, t, b).is_err());
    }

    #[test]
    fn decomposition_reconstructs_s() {
        let (t, b) = (tables(), bundle());
        let h = b.hot();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let x = rng.gen_range(1_000u64..=1_000_000) as f64;
            let root = isqrt(x as u64) as f64;
            let s = fast_s_mu(x, t, b).unwrap().s_value as f64;
            let ab = partial_sums_lemma22(root, t).unwrap();
            let u = delta_weighted_sum(x, x.sqrt(), t, b).unwrap();
            let rebuilt = x * (x.ln() + h.divisor_shift.to_f64()) * ab.a_value - 2.0 * x * ab.b_value + u;
            assert!((rebuilt - s).abs() <= 1e-6 * s, "x = {x}");
        }
    }

    #[test]
    fn cache_round_trip_and_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        let built = Tables::cached(2000, true, dir.path()).unwrap();
        assert!(dir.path().join("tau3-2000.gmft").exists());
        let loaded = Tables::cached(2000, true, dir.path()).unwrap();
        assert_eq!(built.mu_star_mu.values(), loaded.mu_star_mu.values());
        assert_eq!(loaded.tau3.unwrap().values(), built.tau3.as_ref().unwrap().values());
        // A damaged file is ignored and rewritten.
        std::fs::write(dir.path().join("mobius-2000.gmft"), b"GMFT junk").unwrap();
        let again = Tables::cached(2000, false, dir.path()).unwrap();
        assert_eq!(again.mobius.values(), built.mobius.values());
        let fresh = std::fs::read(dir.path().join("mobius-2000.gmft")).unwrap();
        assert!(fresh.len() > 2000 * 4);
    }

    #[test]
    fn threads_do_not_change_results() {
        let b = bundle();
        let t = Tables::for_fast_routes(1e10).unwrap();
        let one = fast_s_mu_threads(1e10, &t, b, 1).unwrap();
        let four = fast_s_mu_threads(1e10, &t, b, 4).unwrap();
        assert_eq!(one, four);
        let one = fast_s_abs_mu_threads(1e10, &t, b, 1).unwrap();
        let three = fast_s_abs_mu_threads(1e10, &t, b, 3).unwrap();
        assert_eq!(one, three);
    }
}
