//! The divisor summatory function `D(x) = Σ_{n≤x} τ(n)`, its error term
//! `Δ(x) = D(x) - x(ln x + 2γ - 1)`, and `∫₁^y Δ(ξ) dξ`.

use crate::constants::{ConstantBundle, HotConstants};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::floor_arg;
use crate::roots::isqrt;

/// Cap for the O(x) column-by-column oracle.
pub const MAX_NAIVE: f64 = 1e8;
/// Cap for the hyperbola route; keeps `2 Σ ⌊x/n⌋` well inside `u64`.
pub const MAX_HYPERBOLA: f64 = 1e15;
/// Cap for [`delta_integral`].
pub const MAX_DELTA_INTEGRAL: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisorMethod {
    Naive,
    Hyperbola,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorSumResult {
    pub x: f64,
    pub d_value: u64,
    pub delta: f64,
    pub method: DivisorMethod,
}

/// `Σ_{n≤N} ⌊N/n⌋`, one column of lattice points at a time.
pub fn divisor_sum_naive(x: f64) -> Result<u64> {
    let n = floor_arg("x", x, MAX_NAIVE)?;
    // N ≤ 10^8 fits u32, whose division is markedly cheaper.
    let n = n as u32;
    Ok((1..=n).map(|k| (n / k) as u64).sum())
}

/// `D(N)` by the hyperbola method, `2 Σ_{n≤√N} ⌊N/n⌋ - ⌊√N⌋²`.
///
/// The caller guarantees `n <= MAX_HYPERBOLA`.
pub fn hyperbola_count(n: u64) -> u64 {
    let r = isqrt(n);
    let mut sum = 0u64;
    for k in 1..=r {
        sum += n / k;
    }
    2 * sum - r * r
}

pub fn divisor_sum_hyperbola(x: f64) -> Result<u64> {
    let n = floor_arg("x", x, MAX_HYPERBOLA)?;
    Ok(hyperbola_count(n))
}

/// `D(⌊x⌋) - x(ln x + 2γ - 1)` with `x` carried exactly in double-double.
///
/// `floor` must equal `⌊x⌋`; passing it separately lets callers with
/// rational arguments (`x/ℓ²`) supply the exact integer part.
pub(crate) fn delta_dd(floor: u64, x: Dd, hot: &HotConstants) -> Dd {
    let d = Dd::from_u64(hyperbola_count(floor));
    d - x * (x.ln() + hot.divisor_shift)
}

/// Δ(x) for `1 <= x <= MAX_HYPERBOLA`.
///
/// Below 2 the same expression `D - x(ln x + 2γ - 1)` is used unchanged.
pub fn delta(x: f64, constants: &ConstantBundle) -> Result<f64> {
    let n = floor_arg("x", x, MAX_HYPERBOLA)?;
    if x < 1.0 {
        return Err(Error::invalid(format!("delta requires x >= 1, got {x}")));
    }
    Ok(delta_dd(n, Dd::from(x), constants.hot()).to_f64())
}

pub fn divisor_sum(x: f64, method: DivisorMethod, constants: &ConstantBundle) -> Result<DivisorSumResult> {
    let d_value = match method {
        DivisorMethod::Naive => divisor_sum_naive(x)?,
        DivisorMethod::Hyperbola => divisor_sum_hyperbola(x)?,
    };
    let delta = if x >= 1.0 {
        let xd = Dd::from(x);
        (Dd::from_u64(d_value) - xd * (xd.ln() + constants.hot().divisor_shift)).to_f64()
    } else {
        0.0
    };
    Ok(DivisorSumResult {
        x,
        d_value,
        delta,
        method,
    })
}

/// Antiderivative of `t(ln t + c)`: `t²/2 ln t - t²/4 + c t²/2`.
fn smooth_antiderivative(t: Dd, c: Dd) -> Dd {
    let t2 = t * t;
    t2.mul_f64(0.5) * (t.ln() + c) - t2.mul_f64(0.25)
}

/// `Σ_{n=1}^{L} D(n)`, using `Σ_{n≤L} ⌊n/d⌋ = d q(q-1)/2 + q(r+1)` with
/// `L = qd + r`.
fn cumulative_divisor_sum(l: u64) -> u128 {
    let mut total: u128 = 0;
    for d in 1..=l {
        let q = (l / d) as u128;
        let r = (l % d) as u128;
        total += d as u128 * q * (q.saturating_sub(1)) / 2 + q * (r + 1);
    }
    total
}

/// `∫₁^y Δ(ξ) dξ` in closed form.
///
/// `D` is constant on each `[n, n+1)`, so the step part is the exact integer
/// `Σ_{n<m} D(n) + D(m)(y - m)` with `m = ⌊y⌋`; the smooth part is the
/// antiderivative evaluated at the two endpoints.
pub fn delta_integral(y: f64, constants: &ConstantBundle) -> Result<f64> {
    let m = floor_arg("y", y, MAX_DELTA_INTEGRAL)?;
    if y < 1.0 {
        return Err(Error::invalid(format!("delta_integral requires y >= 1, got {y}")));
    }
    let c = constants.hot().divisor_shift;
    let steps = Dd::from_i128(cumulative_divisor_sum(m - 1) as i128)
        + Dd::from_u64(hyperbola_count(m)) * (Dd::from(y) - Dd::from_u64(m));
    let smooth = smooth_antiderivative(Dd::from(y), c) - smooth_antiderivative(Dd::ONE, c);
    Ok((steps - smooth).to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::sieve_tau_k;
    use std::sync::OnceLock;

    fn bundle() -> &'static ConstantBundle {
        static B: OnceLock<ConstantBundle> = OnceLock::new();
        B.get_or_init(|| ConstantBundle::new(30).unwrap())
    }

    #[test]
    fn naive_small_values() {
        assert_eq!(divisor_sum_naive(0.0).unwrap(), 0);
        assert_eq!(divisor_sum_naive(1.0).unwrap(), 1);
        assert_eq!(divisor_sum_naive(10.0).unwrap(), 27);
        assert_eq!(divisor_sum_naive(2.5).unwrap(), 3);
    }

    #[test]
    fn hyperbola_small_values() {
        assert_eq!(divisor_sum_hyperbola(0.0).unwrap(), 0);
        assert_eq!(divisor_sum_hyperbola(1.0).unwrap(), 1);
        assert_eq!(divisor_sum_hyperbola(10.0).unwrap(), 27);
        assert_eq!(
            divisor_sum_hyperbola(1e6).unwrap(),
            divisor_sum_naive(1e6).unwrap()
        );
    }

    #[test]
    fn hyperbola_matches_naive_exhaustively() {
        for x in 0..=20_000u32 {
            let x = x as f64;
            assert_eq!(divisor_sum_hyperbola(x).unwrap(), divisor_sum_naive(x).unwrap());
        }
        // Perfect squares and their neighbours are where a bad root bites.
        for r in [316u64, 999, 3162, 9999] {
            for n in [r * r - 1, r * r, r * r + 1] {
                let x = n as f64;
                assert_eq!(divisor_sum_hyperbola(x).unwrap(), divisor_sum_naive(x).unwrap());
            }
        }
    }

    #[test]
    fn caps_and_bad_arguments() {
        assert!(matches!(divisor_sum_naive(1e8 + 1.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(divisor_sum_hyperbola(2e15), Err(Error::OutOfRange { .. })));
        assert!(divisor_sum_naive(-1.0).is_err());
        assert!(divisor_sum_hyperbola(f64::NAN).is_err());
        assert!(delta(0.5, bundle()).is_err());
        assert!(delta_integral(2e7, bundle()).is_err());
    }

    #[test]
    fn telescopes_to_tau() {
        let tau = sieve_tau_k(10_000, 2).unwrap();
        let mut prev = divisor_sum_hyperbola(1.0).unwrap();
        for x in 2..=10_000u64 {
            let d = divisor_sum_hyperbola(x as f64).unwrap();
            assert_eq!(d - prev, tau.get(x as usize) as u64);
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn delta_small_values() {
        let b = bundle();
        let g = b.hot().gamma.to_f64();
        let direct = |d: f64, x: f64| d - x * (x.ln() + 2.0 * g - 1.0);
        let d10 = delta(10.0, b).unwrap();
        assert!((d10 - direct(27.0, 10.0)).abs() < 1e-12);
        // Frozen from a 40-digit evaluation: 2.42983577202888594769, 1.30484297927397793874.
        assert!((d10 - 2.429_835_772_028_886).abs() < 1e-12);
        let d2 = delta(2.0, b).unwrap();
        assert!((d2 - direct(3.0, 2.0)).abs() < 1e-13);
        assert!((d2 - 1.304_842_979_273_978).abs() < 1e-12);
        assert!(delta(100.0, b).unwrap().abs() < 3.0 * 100f64.powf(1.0 / 3.0));
    }

    #[test]
    fn divisor_result_reconstructs_d() {
        let b = bundle();
        for x in [2.0, 17.5, 1234.0, 1e9 + 0.5, 1e12] {
            let r = divisor_sum(x, DivisorMethod::Hyperbola, b).unwrap();
            let g = b.hot().divisor_shift.to_f64();
            let rebuilt = r.delta + x * (x.ln() + g);
            let ulp = f64::EPSILON * r.d_value as f64;
            // x(ln x + 2γ - 1) itself is only rounded to f64 here.
            assert!((rebuilt - r.d_value as f64).abs() <= 4.0 * ulp + 1e-9, "x = {x}");
        }
        assert_eq!(divisor_sum(0.5, DivisorMethod::Naive, b).unwrap().d_value, 0);
    }

    fn midpoint_delta_integral(y: u64, cells_per_unit: u64) -> f64 {
        let b = bundle();
        let h = 1.0 / cells_per_unit as f64;
        let mut acc = crate::accum::NeumaierSum::new();
        for n in 1..y {
            for j in 0..cells_per_unit {
                let t = n as f64 + (j as f64 + 0.5) * h;
                let v = delta_dd(n, Dd::from(t), b.hot()).to_f64();
                acc += v * h;
            }
        }
        acc.value()
    }

    #[test]
    fn integral_trivial_and_unit_interval() {
        let b = bundle();
        assert_eq!(delta_integral(1.0, b).unwrap(), 0.0);
        let closed = delta_integral(2.0, b).unwrap();
        let quad = midpoint_delta_integral(2, 100_000);
        assert!(((closed - quad) / closed).abs() < 1e-9, "{closed} vs {quad}");
    }

    #[test]
    fn integral_matches_quadrature_at_ten_thousand() {
        let b = bundle();
        let y = 10_000.0;
        let closed = delta_integral(y, b).unwrap();
        let quad = midpoint_delta_integral(10_000, 100);
        assert!((closed - quad).abs() < 1e-6 * y, "{closed} vs {quad}");
        assert!((closed - y / 4.0).abs() <= 5.0 * y.powf(0.75));
    }

    #[test]
    fn integral_at_fractional_endpoint() {
        let b = bundle();
        let a = delta_integral(100.0, b).unwrap();
        let c = delta_integral(100.25, b).unwrap();
        // On [100, 100.25) D = D(100).
        let d100 = divisor_sum_naive(100.0).unwrap() as f64;
        let g = b.hot().divisor_shift.to_f64();
        let f = |t: f64| t * t / 2.0 * t.ln() - t * t / 4.0 + g * t * t / 2.0;
        let piece = d100 * 0.25 - (f(100.25) - f(100.0));
        assert!((c - a - piece).abs() < 1e-9);
    }

    #[test]
    fn cumulative_sum_matches_direct() {
        let mut acc = 0u128;
        for n in 1..=500u64 {
            acc += divisor_sum_naive(n as f64).unwrap() as u128;
            assert_eq!(cumulative_divisor_sum(n), acc);
        }
        assert_eq!(cumulative_divisor_sum(0), 0);
    }
}
