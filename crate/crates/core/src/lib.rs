//! Exact summatory functions of the Möbius function over greatest common
//! divisors, the divisor problem error term, and the analytic constants
//! their main terms need.

pub mod accum;
pub mod analysis;
pub mod cli;
pub mod constants;
pub mod dd;
pub mod divisor;
pub mod error;
pub mod roots;
pub mod sieve;
pub mod summatory;

pub use constants::{ConstantBundle, HotConstants};
pub use dd::Dd;
pub use error::{Error, Result};
pub use sieve::{FunctionKind, FunctionTable, LinearSieve};

/// `⌊x⌋` for a finite nonnegative real no larger than `cap`.
pub(crate) fn floor_arg(what: &'static str, x: f64, cap: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!("{what} must be a nonnegative real, got {x}")));
    }
    if x.floor() > cap {
        return Err(Error::out_of_range(what, x, cap));
    }
    Ok(x.floor() as u64)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub(crate) fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}
