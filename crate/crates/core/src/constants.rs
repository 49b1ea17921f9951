//! High-precision analytic constants: γ, ζ(2), ζ(4), ζ'(2), ζ'(4) and the
//! combinations that appear in the main terms.
//!
//! ζ and ζ' use Euler–Maclaurin summation with Bernoulli corrections through
//! B₁₀; the cutoff `N` is chosen so that the first omitted (B₁₂) term is below
//! `10^-(digits+2)`. γ is computed twice, by the harmonic-sum expansion and by
//! the Brent–McMillan Bessel-function series, and the two must agree.
//!
//! Arbitrary precision comes from `dashu-float`; hot loops elsewhere in the
//! crate use the double-double [`Dd`] copies in [`HotConstants`].

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};

pub type BigReal = FBig<HalfEven, 2>;

pub const DEFAULT_DIGITS: u32 = 30;
pub const MIN_DIGITS: u32 = 10;
pub const MAX_DIGITS: u32 = 50;

/// B₂, B₄, …, B₁₂ as (numerator, denominator).
const BERNOULLI: [(i64, u64); 6] = [(1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66), (-691, 2730)];

fn check_digits(digits: u32) -> Result<()> {
    if !(MIN_DIGITS..=MAX_DIGITS).contains(&digits) {
        return Err(Error::invalid(format!(
            "precision of {digits} digits is outside {MIN_DIGITS}..={MAX_DIGITS}"
        )));
    }
    Ok(())
}

/// Working precision in bits for `digits` decimal digits plus guard bits.
fn bits_for(digits: u32) -> usize {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 40
}

fn int(n: i64, prec: usize) -> BigReal {
    BigReal::from(n).with_precision(prec).value()
}

fn ratio(num: i64, den: u64, prec: usize) -> BigReal {
    int(num, prec) / int(den as i64, prec)
}

fn from_f64(x: f64, prec: usize) -> BigReal {
    BigReal::try_from(x)
        .expect("finite f64")
        .with_precision(prec)
        .value()
}

/// `10^-e` at the given precision.
fn ten_to_minus(e: u32, prec: usize) -> BigReal {
    int(1, prec) / int(10, prec).powi(IBig::from(e))
}

fn abs(x: BigReal) -> BigReal {
    if x.sign() == dashu_base::Sign::Negative {
        -x
    } else {
        x
    }
}

/// Rounds to the nearest pair of doubles.
pub fn to_dd(x: &BigReal) -> Dd {
    let hi = x.to_f64().value();
    if !hi.is_finite() {
        return Dd::from(hi);
    }
    let rest = x.clone() - from_f64(hi, x.precision().max(64));
    Dd::new(hi, rest.to_f64().value())
}

/// Decimal rendering with `digits` significant digits.
pub fn to_decimal_string(x: &BigReal, digits: u32) -> String {
    x.clone()
        .with_base_and_precision::<10>(digits as usize)
        .value()
        .to_string()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// log10 of the first omitted Euler–Maclaurin term (the B₁₂ term) for ζ(s)
/// at cutoff `n`, optionally for the s-derivative.
fn omitted_term_log10(s: f64, n: f64, derivative: bool) -> f64 {
    let b12 = 691.0 / 2730.0;
    let rising: f64 = (0..11).map(|i| (s + i as f64).log10()).sum();
    let mut lg = (b12 / factorial(12)).log10() + rising - (s + 11.0) * n.log10();
    if derivative {
        let harmonic: f64 = (0..11).map(|i| 1.0 / (s + i as f64)).sum();
        lg += (n.ln() + harmonic).log10();
    }
    lg
}

fn em_cutoff(s: f64, digits: u32, derivative: bool) -> u64 {
    let target = -(digits as f64) - 2.0;
    let mut n: u64 = 10.max(s.ceil() as u64 + 2);
    while omitted_term_log10(s, n as f64, derivative) >= target {
        n = n + n / 16 + 1;
    }
    n
}

/// Exponent with its exact integer value when it has one.
struct Exponent {
    value: BigReal,
    approx: f64,
    integer: Option<u32>,
}

impl Exponent {
    fn new(value: BigReal) -> Self {
        let approx = value.to_f64().value();
        let integer = if value.floor() == value && (1.0..=64.0).contains(&approx) {
            Some(approx as u32)
        } else {
            None
        };
        Exponent {
            value,
            approx,
            integer,
        }
    }
}

/// `n^-s`, reusing `ln n` when already known.
fn pow_neg(n: u64, s: &Exponent, ln_n: Option<&BigReal>, prec: usize) -> BigReal {
    match s.integer {
        Some(k) => int(1, prec) / int(n as i64, prec).powi(IBig::from(k)),
        None => {
            let l = match ln_n {
                Some(l) => l.clone(),
                None => int(n as i64, prec).ln(),
            };
            (-(s.value.clone() * l)).exp()
        }
    }
}

/// Coefficient B_{2j} / (2j)! · s(s+1)…(s+2j-2) for j = 1..=5, and the
/// accompanying harmonic sums Σ 1/(s+i) used by the derivative.
fn em_coefficients(s: &BigReal, prec: usize) -> Vec<(BigReal, BigReal)> {
    let mut out = Vec::with_capacity(5);
    let mut rising = s.clone();
    let mut harmonic = int(1, prec) / s.clone();
    let mut fact: u64 = 2;
    for (j, &(num, den)) in BERNOULLI.iter().take(5).enumerate() {
        if j > 0 {
            // Extend s(s+1)…(s+2j-2) by two factors.
            for i in [2 * j as i64 - 1, 2 * j as i64] {
                let f = s.clone() + int(i, prec);
                harmonic += int(1, prec) / f.clone();
                rising *= f;
            }
            fact *= (2 * j as u64 + 1) * (2 * j as u64 + 2);
        }
        let coeff = ratio(num, den, prec) / int(fact as i64, prec) * rising.clone();
        out.push((coeff, harmonic.clone()));
    }
    out
}

fn zeta_em(s: &Exponent, digits: u32) -> BigReal {
    let prec = bits_for(digits);
    let n = em_cutoff(s.approx, digits, false);
    let mut sum = int(1, prec);
    for m in 2..n {
        sum += pow_neg(m, s, None, prec);
    }
    let big_n = int(n as i64, prec);
    let n_pow = pow_neg(n, s, None, prec);
    let s_minus_1 = s.value.clone() - int(1, prec);
    sum += big_n.clone() * n_pow.clone() / s_minus_1;
    sum += n_pow.clone() / int(2, prec);
    let mut n_pow_odd = n_pow / big_n.clone();
    let n_sq = big_n.clone() * big_n;
    for (coeff, _) in em_coefficients(&s.value, prec) {
        sum += coeff * n_pow_odd.clone();
        n_pow_odd /= n_sq.clone();
    }
    sum
}

fn zeta_prime_em(s: &Exponent, digits: u32) -> BigReal {
    let prec = bits_for(digits);
    let n = em_cutoff(s.approx, digits, true);
    let mut sum = int(0, prec);
    for m in 2..n {
        let l = int(m as i64, prec).ln();
        let p = pow_neg(m, s, Some(&l), prec);
        sum -= l * p;
    }
    let big_n = int(n as i64, prec);
    let ln_n = big_n.ln();
    let n_pow = pow_neg(n, s, Some(&ln_n), prec);
    let n_pow_1 = big_n.clone() * n_pow.clone();
    let s_minus_1 = s.value.clone() - int(1, prec);

    // d/ds N^{1-s}/(s-1)
    sum -= ln_n.clone() * n_pow_1.clone() / s_minus_1.clone();
    sum -= n_pow_1 / (s_minus_1.clone() * s_minus_1);
    // d/ds N^{-s}/2
    sum -= ln_n.clone() * n_pow.clone() / int(2, prec);
    // d/ds of each Bernoulli term c_j(s) N^{-s-2j+1}
    let mut n_pow_odd = n_pow / big_n.clone();
    let n_sq = big_n.clone() * big_n;
    for (coeff, harmonic) in em_coefficients(&s.value, prec) {
        sum += coeff * n_pow_odd.clone() * (harmonic - ln_n.clone());
        n_pow_odd /= n_sq.clone();
    }
    sum
}

fn check_exponent(s: f64) -> Result<()> {
    if !s.is_finite() || s <= 1.0 {
        return Err(Error::invalid(format!(
            "zeta requires a real exponent s > 1, got {s}"
        )));
    }
    Ok(())
}

/// ζ(s) for real `s > 1`.
pub fn compute_zeta(s: f64, digits: u32) -> Result<BigReal> {
    check_exponent(s)?;
    check_digits(digits)?;
    Ok(zeta_em(&Exponent::new(from_f64(s, bits_for(digits))), digits))
}

/// ζ'(s) for real `s > 1`.
pub fn compute_zeta_prime(s: f64, digits: u32) -> Result<BigReal> {
    check_exponent(s)?;
    check_digits(digits)?;
    Ok(zeta_prime_em(
        &Exponent::new(from_f64(s, bits_for(digits))),
        digits,
    ))
}

/// Central difference `(ζ(s+h) - ζ(s-h)) / 2h` with `h = 10^-⌊digits/2⌋`,
/// evaluated at full working precision (the shifted exponents are not
/// rounded to `f64`).
pub fn zeta_prime_finite_difference(s: f64, digits: u32) -> Result<BigReal> {
    check_exponent(s)?;
    check_digits(digits)?;
    let prec = bits_for(digits);
    let h = ten_to_minus(digits / 2, prec);
    let s_big = from_f64(s, prec);
    if (s_big.clone() - h.clone()).to_f64().value() <= 1.0 {
        return Err(Error::invalid("finite-difference stencil crosses s = 1"));
    }
    let up = zeta_em(&Exponent::new(s_big.clone() + h.clone()), digits);
    let down = zeta_em(&Exponent::new(s_big - h.clone()), digits);
    Ok((up - down) / (int(2, prec) * h))
}

/// γ from `H_N - ln N - 1/(2N) + Σ B_{2j} / (2j N^{2j})`, j = 1..=5.
pub fn gamma_harmonic(digits: u32) -> Result<BigReal> {
    check_digits(digits)?;
    let prec = bits_for(digits);
    // First omitted term |B₁₂| / (12 N¹²).
    let b12: f64 = 691.0 / 2730.0 / 12.0;
    let target = -(digits as f64) - 2.0;
    let mut n: u64 = 10;
    while b12.log10() - 12.0 * (n as f64).log10() >= target {
        n = n + n / 16 + 1;
    }
    let mut h = int(0, prec);
    for m in 1..=n {
        h += int(1, prec) / int(m as i64, prec);
    }
    let big_n = int(n as i64, prec);
    let mut g = h - big_n.ln() - int(1, prec) / (int(2, prec) * big_n.clone());
    let n_sq = big_n.clone() * big_n;
    let mut n_pow = n_sq.clone();
    for (j, &(num, den)) in BERNOULLI.iter().take(5).enumerate() {
        let two_j = 2 * (j as u64 + 1);
        g += ratio(num, den * two_j, prec) / n_pow.clone();
        n_pow *= n_sq.clone();
    }
    Ok(g)
}

/// γ from the Brent–McMillan series `U(n)/V(n)` with
/// `V = Σ (n^k/k!)²`, `U = Σ (n^k/k!)² (H_k - ln n)`; error ~ π e^{-4n}.
pub fn gamma_brent_mcmillan(digits: u32) -> Result<BigReal> {
    check_digits(digits)?;
    let prec = bits_for(digits) + 32;
    let n = (((digits as f64 + 3.0) * std::f64::consts::LN_10 + std::f64::consts::PI.ln()) / 4.0)
        .ceil() as i64
        + 1;
    let n_sq = int(n * n, prec);
    let mut a = -int(n, prec).ln();
    let mut b = int(1, prec);
    let mut u = a.clone();
    let mut v = b.clone();
    let tol = ten_to_minus(digits + 8, prec);
    let mut k: i64 = 1;
    loop {
        let kk = int(k, prec);
        b = b * n_sq.clone() / (kk.clone() * kk.clone());
        a = (a * n_sq.clone() / kk.clone() + b.clone()) / kk;
        u += a.clone();
        v += b.clone();
        if k > n
            && b.clone() < tol.clone() * v.clone()
            && abs(a.clone()) < tol.clone() * abs(u.clone()) {
            break;
        }
        k += 1;
    }
    Ok(u / v)
}

/// γ, accepted only when both independent methods agree to `digits`.
pub fn compute_gamma(digits: u32) -> Result<BigReal> {
    let em = gamma_harmonic(digits)?;
    let bm = gamma_brent_mcmillan(digits)?;
    let tol = ten_to_minus(digits, bits_for(digits));
    if abs(em.clone() - bm) > tol {
        return Err(Error::Invariant(
            "Euler-Maclaurin and Brent-McMillan values of gamma disagree".into(),
        ));
    }
    Ok(em)
}

/// Double-double copies of the constants used in inner loops.
#[derive(Clone, Copy, Debug)]
pub struct HotConstants {
    pub gamma: Dd,
    /// 2γ - 1
    pub divisor_shift: Dd,
    pub zeta2: Dd,
    pub zeta4: Dd,
    pub inv_zeta2_sq: Dd,
    pub lemma22_b: Dd,
    pub theorem1_shift: Dd,
    pub sqfree_shift: Dd,
}

#[derive(Clone, Debug)]
pub struct ConstantBundle {
    pub precision_digits: u32,
    pub gamma: BigReal,
    pub zeta2: BigReal,
    pub zeta4: BigReal,
    pub zeta2_prime: BigReal,
    pub zeta4_prime: BigReal,
    /// 1/ζ²(2)
    pub inv_zeta2_sq: BigReal,
    /// 2ζ'(2)/ζ³(2)
    pub lemma22_b: BigReal,
    /// 2γ - 1 - 4ζ'(2)/ζ(2)
    pub theorem1_shift: BigReal,
    /// 2γ - 1 - 4ζ'(4)/ζ(4)
    pub sqfree_shift: BigReal,
    hot: HotConstants,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub gamma: String,
    pub zeta2: String,
    pub zeta4: String,
    pub zeta2_prime: String,
    pub zeta4_prime: String,
    pub inv_zeta2_sq: String,
    pub lemma22_b: String,
    pub theorem1_shift: String,
    pub sqfree_shift: String,
    pub precision_digits: u32,
}

pub struct Derived {
    pub inv_zeta2_sq: BigReal,
    pub lemma22_b: BigReal,
    pub theorem1_shift: BigReal,
    pub sqfree_shift: BigReal,
}

/// The combinations of the primaries that the main terms consume.
pub fn derive(
    gamma: &BigReal,
    zeta2: &BigReal,
    zeta4: &BigReal,
    zeta2_prime: &BigReal,
    zeta4_prime: &BigReal,
    prec: usize,
) -> Derived {
    let one = int(1, prec);
    let two = int(2, prec);
    let z2_sq = zeta2.clone() * zeta2.clone();
    let shift = two.clone() * gamma.clone() - one.clone();
    Derived {
        inv_zeta2_sq: one / z2_sq.clone(),
        lemma22_b: two.clone() * zeta2_prime.clone() / (z2_sq * zeta2.clone()),
        theorem1_shift: shift.clone() - int(4, prec) * zeta2_prime.clone() / zeta2.clone(),
        sqfree_shift: shift - int(4, prec) * zeta4_prime.clone() / zeta4.clone(),
    }
}

impl ConstantBundle {
    pub fn new(digits: u32) -> Result<Self> {
        check_digits(digits)?;
        let prec = bits_for(digits);
        let gamma = compute_gamma(digits)?;
        let zeta2 = compute_zeta(2.0, digits)?;
        let zeta4 = compute_zeta(4.0, digits)?;
        let zeta2_prime = compute_zeta_prime(2.0, digits)?;
        let zeta4_prime = compute_zeta_prime(4.0, digits)?;
        let d = derive(&gamma, &zeta2, &zeta4, &zeta2_prime, &zeta4_prime, prec);
        let hot = HotConstants {
            gamma: to_dd(&gamma),
            divisor_shift: to_dd(&(int(2, prec) * gamma.clone() - int(1, prec))),
            zeta2: to_dd(&zeta2),
            zeta4: to_dd(&zeta4),
            inv_zeta2_sq: to_dd(&d.inv_zeta2_sq),
            lemma22_b: to_dd(&d.lemma22_b),
            theorem1_shift: to_dd(&d.theorem1_shift),
            sqfree_shift: to_dd(&d.sqfree_shift),
        };
        let bundle = ConstantBundle {
            precision_digits: digits,
            gamma,
            zeta2,
            zeta4,
            zeta2_prime,
            zeta4_prime,
            inv_zeta2_sq: d.inv_zeta2_sq,
            lemma22_b: d.lemma22_b,
            theorem1_shift: d.theorem1_shift,
            sqfree_shift: d.sqfree_shift,
            hot,
        };
        if !(bundle.zeta2_prime < int(0, prec) && bundle.zeta4_prime < int(0, prec)) {
            return Err(Error::Invariant("zeta'(2), zeta'(4) must be negative".into()));
        }
        Ok(bundle)
    }

    pub fn hot(&self) -> &HotConstants {
        &self.hot
    }

    pub fn report(&self) -> ConstantsReport {
        let d = self.precision_digits;
        ConstantsReport {
            gamma: to_decimal_string(&self.gamma, d),
            zeta2: to_decimal_string(&self.zeta2, d),
            zeta4: to_decimal_string(&self.zeta4, d),
            zeta2_prime: to_decimal_string(&self.zeta2_prime, d),
            zeta4_prime: to_decimal_string(&self.zeta4_prime, d),
            inv_zeta2_sq: to_decimal_string(&self.inv_zeta2_sq, d),
            lemma22_b: to_decimal_string(&self.lemma22_b, d),
            theorem1_shift: to_decimal_string(&self.theorem1_shift, d),
            sqfree_shift: to_decimal_string(&self.sqfree_shift, d),
            precision_digits: d,
        }
    }
}
