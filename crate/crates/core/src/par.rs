//! Sequential or rayon-backed helpers, selected by the `parallel` feature.
//! Both paths produce identical results: counts are integer sums and maps
//! preserve input order.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
const CHUNK: usize = 64;

/// Accumulates `n` integer counters over `inputs`; `f` adds one input's
/// contribution. With `parallel`, inputs are partitioned and partial
/// counts summed.
pub(crate) fn count_over<T, F>(inputs: &[T], n: usize, f: F) -> Vec<usize>
where
    T: Sync,
    F: Fn(&T, &mut [usize]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if inputs.len() > CHUNK {
            return inputs
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut acc = vec![0usize; n];
                    for t in chunk {
                        f(t, &mut acc);
                    }
                    acc
                })
                .reduce(
                    || vec![0usize; n],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        a
                    },
                );
        }
    }
    let mut acc = vec![0usize; n];
    for t in inputs {
        f(t, &mut acc);
    }
    acc
}

/// Order-preserving map.
pub(crate) fn map<T, R, F>(inputs: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        inputs.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        inputs.iter().map(f).collect()
    }
}
