//! Worker-pool configuration.
//!
//! Every parallel kernel in this crate reduces in a fixed order, so results
//! do not depend on the number of workers. The pool size only affects speed.

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "XFERKIT_THREADS";

/// Reads the worker cap from `XFERKIT_THREADS`; `None` when unset or empty.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            if n == 0 {
                return Err(Error::param(format!("{THREADS_ENV} must be at least 1")));
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Builds a dedicated pool with `threads` workers (rayon's default when `None`).
pub fn build_pool(threads: Option<usize>) -> Result<ThreadPool> {
    let mut builder = ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::param(format!("cannot build worker pool: {e}")))
}
