//! Replicate-parallel execution.
//!
//! Replicate `i` derives all its randomness from `(master_seed, i)`, and
//! results come back in index order, so reductions done by the caller are
//! identical for any worker count.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Runs `task(i)` for `i in 0..n` on `workers` threads (`None` = rayon's
/// global pool) and returns the results in index order.
pub fn run_replicates<T, F>(n: usize, workers: Option<usize>, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match workers {
        None => Ok((0..n as u64).into_par_iter().map(&task).collect()),
        Some(0) => Err(invalid("workers must be at least 1")),
        Some(1) => Ok((0..n as u64).map(&task).collect()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(|| (0..n as u64).into_par_iter().map(&task).collect()))
        }
    }
}

/// Fallible variant: the first error (by index) wins.
pub fn try_run_replicates<T, F>(n: usize, workers: Option<usize>, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    run_replicates(n, workers, task)?.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{replicate_rng, tag};
    use rand::Rng;

    #[test]
    fn results_independent_of_worker_count() {
        let task = |i: u64| replicate_rng(99, i, tag::FIELD).random::<f64>();
        let a = run_replicates(1000, Some(1), task).unwrap();
        let b = run_replicates(1000, Some(8), task).unwrap();
        let c = run_replicates(1000, None, task).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(run_replicates(3, Some(0), task).is_err());
    }
}
