//! Exact tables of multiplicative functions on `1..=N`.
//!
//! Everything is derived from one linear sieve that stores the smallest
//! prime factor of each `n <= N`. A multiplicative function is then filled
//! in one ascending pass: write `n = p^e * m` with `p = spf(n)`, `p ∤ m`,
//! and set `f(n) = f(m) * f(p^e)` where `f(m)` is already known.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Largest table size this crate will build.
pub const MAX_TABLE: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Mobius,
    Tau,
    TauK(u8),
    MuStarMu,
    MuSquared,
    /// The constant function 1.
    One,
    /// μ * μ², the kernel of the squarefree variant.
    MuStarMuSquared,
    /// Any other convolution product.
    Convolution,
}

impl FunctionKind {
    fn code(self) -> (u8, u8) {
        match self {
            FunctionKind::Mobius => (0, 0),
            FunctionKind::Tau => (1, 2),
            FunctionKind::TauK(k) => (2, k),
            FunctionKind::MuStarMu => (3, 0),
            FunctionKind::MuSquared => (4, 0),
            FunctionKind::One => (5, 0),
            FunctionKind::MuStarMuSquared => (6, 0),
            FunctionKind::Convolution => (7, 0),
        }
    }

    fn from_code(kind: u8, k: u8) -> Result<Self> {
        Ok(match kind {
            0 => FunctionKind::Mobius,
            1 => FunctionKind::Tau,
            2 => FunctionKind::TauK(k),
            3 => FunctionKind::MuStarMu,
            4 => FunctionKind::MuSquared,
            5 => FunctionKind::One,
            6 => FunctionKind::MuStarMuSquared,
            7 => FunctionKind::Convolution,
            other => return Err(Error::Format(format!("unknown kind code {other}"))),
        })
    }

    /// The divisor-function order, if this is τ_k.
    pub fn tau_order(self) -> Option<u8> {
        match self {
            FunctionKind::One => Some(1),
            FunctionKind::Tau => Some(2),
            FunctionKind::TauK(k) => Some(k),
            _ => None,
        }
    }
}

/// Values of an arithmetic function on `1..=limit`. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    kind: FunctionKind,
    // values[0] is padding so that values[n] is f(n).
    values: Vec<i32>,
}

impl FunctionTable {
    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn limit(&self) -> usize {
        self.values.len() - 1
    }

    /// `f(n)` for `1 <= n <= limit`.
    #[inline]
    pub fn get(&self, n: usize) -> i32 {
        debug_assert!(n >= 1);
        self.values[n]
    }

    /// Values for `n = 1..=limit`.
    pub fn values(&self) -> &[i32] {
        &self.values[1..]
    }

    /// Entrywise square, e.g. μ → μ².
    pub fn squared(&self) -> Result<FunctionTable> {
        let mut values = alloc_table(self.limit())?;
        for (dst, &v) in values.iter_mut().zip(&self.values).skip(1) {
            *dst = v.checked_mul(v).ok_or(Error::EntryOverflow { n: 0 })?;
        }
        let kind = match self.kind {
            FunctionKind::Mobius => FunctionKind::MuSquared,
            _ => FunctionKind::Convolution,
        };
        Ok(FunctionTable { kind, values })
    }

    /// Writes the little-endian cache format:
    /// `"GMFT"`, version `u32`, kind `u8`, k `u8`, N `u64`, then N `i32`s.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let (kind, k) = self.kind.code();
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&[kind, k])?;
        w.write_all(&(self.limit() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.limit() * 4);
        for v in self.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<FunctionTable> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut kind_k = [0u8; 2];
        r.read_exact(&mut kind_k)?;
        let kind = FunctionKind::from_code(kind_k[0], kind_k[1])?;
        let mut long = [0u8; 8];
        r.read_exact(&mut long)?;
        let n = u64::from_le_bytes(long);
        if n == 0 || n > MAX_TABLE as u64 {
            return Err(Error::Format(format!("table length {n} out of range")));
        }
        let mut raw = vec![0u8; n as usize * 4];
        r.read_exact(&mut raw)?;
        let mut values = Vec::with_capacity(n as usize + 1);
        values.push(0);
        values.extend(
            raw.chunks_exact(4)
                .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        if values[1] != 1 {
            return Err(Error::Format("f(1) must be 1".into()));
        }
        Ok(FunctionTable { kind, values })
    }
}

const CACHE_MAGIC: &[u8; 4] = b"GMFT";
const CACHE_VERSION: u32 = 1;

fn check_limit(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("table limit must be at least 1"));
    }
    if n > MAX_TABLE {
        return Err(Error::out_of_range("N", n as f64, MAX_TABLE as f64));
    }
    Ok(())
}

fn alloc_table(n: usize) -> Result<Vec<i32>> {
    let mut v: Vec<i32> = Vec::new();
    v.try_reserve_exact(n + 1)
        .map_err(|_| Error::Allocation { requested: n as u64 })?;
    v.resize(n + 1, 0);
    Ok(v)
}

/// Smallest-prime-factor table from a linear (Euler) sieve.
#[derive(Clone, Debug)]
pub struct LinearSieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl LinearSieve {
    pub fn new(n: usize) -> Result<Self> {
        check_limit(n)?;
        let mut spf: Vec<u32> = Vec::new();
        spf.try_reserve_exact(n + 1)
            .map_err(|_| Error::Allocation { requested: n as u64 })?;
        spf.resize(n + 1, 0);
        let mut primes = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let lp = spf[i];
            for &p in &primes {
                let m = i * p as usize;
                if p > lp || m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        Ok(LinearSieve { spf, primes })
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn smallest_prime_factor(&self, n: usize) -> Option<u32> {
        (n >= 2).then(|| self.spf[n])
    }

    /// Fills a multiplicative function from its values on prime powers.
    fn multiplicative<F>(&self, kind: FunctionKind, mut at_prime_power: F) -> Result<FunctionTable>
    where
        F: FnMut(u32, u32) -> i64,
    {
        let n = self.limit();
        let mut values = alloc_table(n)?;
        values[1] = 1;
        for i in 2..=n {
            let p = self.spf[i] as usize;
            let mut m = i / p;
            let mut e = 1;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            let v = values[m] as i64 * at_prime_power(p as u32, e);
            values[i] = i32::try_from(v).map_err(|_| Error::EntryOverflow { n: i })?;
        }
        Ok(FunctionTable { kind, values })
    }

    pub fn mobius(&self) -> Result<FunctionTable> {
        self.multiplicative(FunctionKind::Mobius, |_, e| if e == 1 { -1 } else { 0 })
    }

    pub fn mu_squared(&self) -> Result<FunctionTable> {
        self.multiplicative(FunctionKind::MuSquared, |_, e| if e == 1 { 1 } else { 0 })
    }

    /// τ_k(p^e) = C(e + k - 1, k - 1).
    pub fn tau_k(&self, k: u8) -> Result<FunctionTable> {
        check_tau_order(k)?;
        let kind = if k == 2 {
            FunctionKind::Tau
        } else {
            FunctionKind::TauK(k)
        };
        self.multiplicative(kind, |_, e| binomial(e as u64 + k as u64 - 1, k as u64 - 1))
    }

    /// μ*μ from its prime-power values: -2 at p, 1 at p², 0 beyond.
    pub fn mu_star_mu(&self) -> Result<FunctionTable> {
        self.multiplicative(FunctionKind::MuStarMu, |_, e| match e {
            1 => -2,
            2 => 1,
            _ => 0,
        })
    }
}

fn check_tau_order(k: u8) -> Result<()> {
    if !(2..=5).contains(&k) {
        return Err(Error::invalid(format!(
            "divisor function order k = {k} is outside 2..=5"
        )));
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> i64 {
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc as i64
}

pub fn sieve_mobius(n: usize) -> Result<FunctionTable> {
    LinearSieve::new(n)?.mobius()
}

pub fn sieve_tau_k(n: usize, k: u8) -> Result<FunctionTable> {
    check_tau_order(k)?;
    LinearSieve::new(n)?.tau_k(k)
}

pub fn sieve_mu_squared(n: usize) -> Result<FunctionTable> {
    LinearSieve::new(n)?.mu_squared()
}

/// μ*μ via the multiplicative closed form (no convolution).
pub fn mu_star_mu_closed_form(n: usize) -> Result<FunctionTable> {
    LinearSieve::new(n)?.mu_star_mu()
}

/// The constant function 1 on `1..=n`.
pub fn ones(n: usize) -> Result<FunctionTable> {
    check_limit(n)?;
    let mut values = alloc_table(n)?;
    values[1..].fill(1);
    Ok(FunctionTable {
        kind: FunctionKind::One,
        values,
    })
}

fn convolution_kind(f: FunctionKind, g: FunctionKind) -> FunctionKind {
    use FunctionKind::*;
    match (f, g) {
        (Mobius, Mobius) => MuStarMu,
        (Mobius, MuSquared) | (MuSquared, Mobius) => MuStarMuSquared,
        (a, b) => match (a.tau_order(), b.tau_order()) {
            (Some(i), Some(j)) if i + j == 2 => Tau,
            (Some(i), Some(j)) if i + j <= 5 => TauK(i + j),
            _ => Convolution,
        },
    }
}

/// `(f * g)(n) = Σ_{d | n} f(d) g(n/d)` by enumerating multiples of each `d`.
pub fn dirichlet_convolve(f: &FunctionTable, g: &FunctionTable) -> Result<FunctionTable> {
    if f.limit() != g.limit() {
        return Err(Error::LimitMismatch {
            left: f.limit(),
            right: g.limit(),
        });
    }
    let n = f.limit();
    let mut acc: Vec<i64> = Vec::new();
    acc.try_reserve_exact(n + 1)
        .map_err(|_| Error::Allocation { requested: n as u64 })?;
    acc.resize(n + 1, 0);
    for d in 1..=n {
        let fd = f.values[d] as i64;
        if fd == 0 {
            continue;
        }
        for (m, slot) in (1..=n / d).zip(acc.iter_mut().skip(d).step_by(d)) {
            *slot += fd * g.values[m] as i64;
        }
    }
    let mut values = alloc_table(n)?;
    for (i, (dst, &v)) in values.iter_mut().zip(&acc).enumerate().skip(1) {
        *dst = i32::try_from(v).map_err(|_| Error::EntryOverflow { n: i })?;
    }
    Ok(FunctionTable {
        kind: convolution_kind(f.kind, g.kind),
        values,
    })
}
