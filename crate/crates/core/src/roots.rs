//! Exact integer roots.
//!
//! Floating-point `sqrt` is only used to seed Newton's iteration; the final
//! answer is corrected with exact integer arithmetic, so `isqrt(n)` is the
//! largest `r` with `r * r <= n` for every `u64`.

/// Largest `r` with `r * r <= n`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    // Seed above the root so that Newton decreases monotonically.
    let mut r = (n as f64).sqrt() as u64 + 1;
    loop {
        let next = (r + n / r) / 2;
        if next >= r {
            break;
        }
        r = next;
    }
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// `base^exp`, or `None` on overflow.
fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Largest `r` with `r^k <= n`, for `k >= 1`.
pub fn iroot(n: u64, k: u32) -> u64 {
    assert!(k >= 1, "root index must be positive");
    match k {
        1 => return n,
        2 => return isqrt(n),
        _ => {}
    }
    if n < 2 {
        return n;
    }
    let k64 = k as u64;
    let mut r = (n as f64).powf(1.0 / k as f64) as u64 + 1;
    // Newton step for f(r) = r^k - n, from above.
    loop {
        let Some(rk1) = checked_pow(r, k - 1) else {
            r -= 1;
            continue;
        };
        let next = ((k64 - 1) * r + n / rk1) / k64;
        if next >= r {
            break;
        }
        r = next;
    }
    while checked_pow(r, k).is_none_or(|p| p > n) {
        r -= 1;
    }
    while checked_pow(r + 1, k).is_some_and(|p| p <= n) {
        r += 1;
    }
    r
}

/// Largest `r` with `r^4 <= n`.
pub fn iroot4(n: u64) -> u64 {
    iroot(n, 4)
}
