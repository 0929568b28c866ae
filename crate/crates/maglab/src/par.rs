//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) batches run on the rayon pool.
//! Without it every entry point degrades to a plain iterator, so the
//! numerical results are identical in both builds.

/// Execution strategy for batch evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Strategy actually used: `Parallel` silently becomes `Sequential`
    /// when the crate is built without the `parallel` feature.
    pub fn effective(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Block length of [`sum_range`].
const SUM_BLOCK: usize = 1024;

/// Sum of `f(i)` over `0..n`.
///
/// Terms are added in fixed blocks of [`SUM_BLOCK`] and the block sums in
/// index order, so both strategies round identically for any thread count.
pub fn sum_range<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(SUM_BLOCK);
    let block = |b: usize| -> f64 { (b * SUM_BLOCK..((b + 1) * SUM_BLOCK).min(n)).map(&f).sum() };
    map_range(exec, blocks, block).into_iter().sum()
}

/// Apply `f` to disjoint chunks of `data` of length `chunk`.
pub fn for_each_chunk<T, F>(exec: Execution, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
        }
        _ => data
            .chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map(Execution::Sequential, &xs, |x| x * x);
        let b = map(Execution::Parallel, &xs, |x| x * x);
        assert_eq!(a, b);
        let f = |i: usize| (i as f64 * 0.37).sin() / (1.0 + i as f64);
        let s = sum_range(Execution::Sequential, 100_003, f);
        let p = sum_range(Execution::Parallel, 100_003, f);
        assert_eq!(s.to_bits(), p.to_bits());
        let mut d = vec![0usize; 100];
        for_each_chunk(Execution::Parallel, &mut d, 10, |i, c| c.fill(i));
        assert_eq!(d[95], 9);
    }
}
