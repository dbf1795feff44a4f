//! Parallel trial runners whose results do not depend on the thread count.
//!
//! Each trial derives its randomness from `(seed, trial index)` alone.
//! Integer counts are reduced by addition, which is order-free; float
//! results are collected in trial order and summed sequentially.

use rayon::prelude::*;

use crate::error::Result;

/// Runs `trial(t, counts)` for `t in 0..trials`, each adding into a
/// zero-initialized `counts` of length `width`, and returns the total.
pub fn count_trials<F>(trials: u64, width: usize, trial: F) -> Result<Vec<u64>>
where
    F: Fn(u64, &mut [u64]) -> Result<()> + Sync,
{
    (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; width],
            |mut acc, t| {
                trial(t, &mut acc)?;
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Per-trial results in trial order.
// The closure is needed: rayon requires `Send` on the mapper, which `F` lacks.
#[allow(clippy::redundant_closure)]
pub fn map_trials<T, F>(trials: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..trials).into_par_iter().map(|t| trial(t)).collect()
}

/// Elementwise mean of equal-length vectors, summed in order.
pub fn mean_columns(rows: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let mut sum = vec![0.0; first.len()];
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    sum.iter().map(|s| s / rows.len() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(threads: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
    }

    #[test]
    fn results_independent_of_threads() {
        let run = || {
            let counts = count_trials(1000, 3, |t, c| {
                c[(t % 3) as usize] += t;
                Ok(())
            })
            .unwrap();
            let floats = map_trials(1000, |t| Ok(vec![(t as f64).sqrt(), 1.0 / (t as f64 + 1.0)])).unwrap();
            (counts, mean_columns(&floats))
        };
        let one = pool(1).install(run);
        let four = pool(4).install(run);
        assert_eq!(one, four);
        assert_eq!(one.0.iter().sum::<u64>(), 999 * 1000 / 2);
    }

    #[test]
    fn errors_propagate() {
        let err = count_trials(10, 1, |t, _| {
            if t == 7 {
                Err(crate::error::Error::EmptyInstance)
            } else {
                Ok(())
            }
        });
        assert!(err.is_err());
        assert!(mean_columns(&[]).is_empty());
    }
}
