//! Data-parallel helpers. With the `parallel` feature work is spread over the
//! current rayon pool; without it, or inside [`sequential`], it runs in a
//! plain loop. Callers only combine results in order-independent ways, so
//! both paths give identical output.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with parallel dispatch disabled on this thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    struct Reset(bool);
    impl Drop for Reset {
        fn drop(&mut self) {
            FORCE_SEQUENTIAL.with(|c| c.set(self.0));
        }
    }
    let _reset = Reset(FORCE_SEQUENTIAL.with(|c| c.replace(true)));
    f()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(Cell::get)
}

/// Number of workers the dispatch functions spread over.
pub fn workers() -> usize {
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return rayon::current_num_threads();
    }
    1
}

/// `(0..n).map(f).collect()`, in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Folds `0..n` into accumulators and merges them with `reduce`, which must
/// be associative and commutative.
pub fn fold_reduce<A, I, F, R>(n: usize, identity: I, fold: F, reduce: R) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, usize) -> A + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .fold(&identity, &fold)
            .reduce(&identity, &reduce);
    }
    let _ = &reduce;
    (0..n).fold(identity(), fold)
}
