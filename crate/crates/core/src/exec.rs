//! Data-parallel fan-out with a sequential fallback.
//!
//! With the `parallel` feature (default) work units run on the rayon pool;
//! without it, or when [`Execution::Sequential`] is requested, they run in
//! order on the calling thread. Output order always follows unit order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be fanned out.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for every `i` in `0..units`, returning results in index order.
pub fn map_units<T, F>(exec: Execution, units: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..units).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..units).map(f).collect()
}

/// Applies `f` to every element of `items`, preserving order.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
