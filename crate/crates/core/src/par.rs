//! Data-parallel helpers with a sequential fallback.
//!
//! Every reduction here is order-fixed: work is split into chunks of a fixed
//! size, chunk results are collected in index order and folded sequentially,
//! so floating-point results do not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Items per reduction chunk. Part of the numerical contract: changing it
/// changes the last bits of sums.
pub const CHUNK: usize = 1024;

/// How the hot loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon global pool when the `parallel` feature is enabled,
    /// otherwise identical to `Sequential`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Order-preserving map.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Maps each fixed-size chunk to a partial result and folds the partials
/// left to right.
pub fn fold_chunks<T, A, F, G>(exec: Execution, items: &[T], init: A, chunk_fn: F, combine: G) -> A
where
    T: Sync,
    A: Send,
    F: Fn(&[T]) -> A + Sync + Send,
    G: Fn(A, A) -> A,
{
    let partials: Vec<A> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_chunks(CHUNK).map(chunk_fn).collect(),
        _ => items.chunks(CHUNK).map(chunk_fn).collect(),
    };
    partials.into_iter().fold(init, combine)
}

/// Index of the largest value of `f` over `0..n`. `None` (infeasible) and
/// NaN entries are skipped; ties go to the smallest index.
pub fn argmax<F>(exec: Execution, n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> Option<f64> + Sync + Send,
{
    fn better(x: (usize, f64), y: (usize, f64)) -> (usize, f64) {
        if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) {
            y
        } else {
            x
        }
    }
    let eval = |i: usize| f(i).filter(|v| !v.is_nan()).map(|v| (i, v));
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().filter_map(eval).reduce_with(better),
        _ => (0..n).filter_map(eval).reduce(better),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_is_identical_across_modes() {
        let xs: Vec<f64> = (0..10_000)
            .map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0 / (i as f64 + 1.0))
            .collect();
        let sum = |exec| {
            fold_chunks(
                exec,
                &xs,
                0.0,
                |c: &[f64]| c.iter().sum::<f64>(),
                |a, b| a + b,
            )
        };
        assert_eq!(
            sum(Execution::Sequential).to_bits(),
            sum(Execution::Parallel).to_bits()
        );
    }

    #[test]
    fn argmax_ties_take_smallest_index() {
        let vals = [1.0, 3.0, 2.0, 3.0, f64::NAN];
        for exec in [Execution::Sequential, Execution::Parallel] {
            let got = argmax(exec, vals.len(), |i| Some(vals[i]));
            assert_eq!(got, Some((1, 3.0)));
        }
        assert_eq!(argmax(Execution::Sequential, 3, |_| None), None);
    }

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u32> = (0..5000).collect();
        assert_eq!(
            map(Execution::Parallel, &xs, |x| x * 2),
            map(Execution::Sequential, &xs, |x| x * 2)
        );
    }
}
