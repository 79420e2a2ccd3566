//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! pool. Without it, or when [`Execution::Sequential`] is requested, the same
//! closures run in order on the calling thread. Results are identical either
//! way because work is partitioned deterministically before it is dispatched.

/// How a data-parallel loop should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
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

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Map over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Map then fold with an associative `combine`. The reduction tree differs
/// between modes, so floating-point sums may differ in the last bits.
pub fn map_reduce<T, R, F, C>(exec: Execution, items: &[T], f: F, identity: R, combine: C) -> R
where
    T: Sync,
    R: Send + Sync + Clone,
    F: Fn(&T) -> R + Sync + Send,
    C: Fn(R, R) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items
                .par_iter()
                .map(f)
                .reduce(|| identity.clone(), &combine)
        }
        _ => items.iter().map(f).fold(identity, combine),
    }
}

/// Accumulate `items` into per-worker states created by `init`, then merge them.
/// Useful when each item adds into a large buffer that should not be reallocated.
pub fn fold_reduce<T, R, I, F, C>(exec: Execution, items: &[T], init: I, fold: F, combine: C) -> R
where
    T: Sync,
    R: Send,
    I: Fn() -> R + Sync + Send,
    F: Fn(R, &T) -> R + Sync + Send,
    C: Fn(R, R) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().fold(&init, &fold).reduce(&init, &combine)
        }
        _ => {
            let _ = &combine;
            items.iter().fold(init(), fold)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_on_integer_work() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map(Execution::Sequential, &items, |x| x * x);
        let par = map(Execution::Parallel, &items, |x| x * x);
        assert_eq!(seq, par);
        let s = map_reduce(Execution::Sequential, &items, |x| *x, 0, |a, b| a + b);
        let p = map_reduce(Execution::Parallel, &items, |x| *x, 0, |a, b| a + b);
        assert_eq!(s, p);
    }
}
