// SPDX-License-Identifier: Apache-2.0

//! Data-parallel execution with a sequential fallback.
//!
//! Work is split into indexed batches whose results are collected in index
//! order, so output never depends on scheduling or on the worker count.

/// Worker count to use when the caller passes 0.
pub fn available_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn resolve(workers: usize) -> usize {
    if workers == 0 {
        available_workers()
    } else {
        workers
    }
}

/// `f(i)` for `i in 0..count`, in index order.
pub fn map_indexed<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let workers = resolve(workers);
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    parallel::map_indexed(count, workers, f)
}

/// `f(item)` for every item, in order.
pub fn map_slice<I, T, F>(items: &[I], workers: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    map_indexed(items.len(), workers, |i| f(&items[i]))
}

#[cfg(feature = "parallel")]
mod parallel {
    use rayon::prelude::*;

    pub(super) fn map_indexed<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let run = || (0..count).into_par_iter().map(&f).collect();
        if workers == rayon::current_num_threads() {
            return run();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => (0..count).map(&f).collect(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod parallel {
    pub(super) fn map_indexed<T, F>(count: usize, _workers: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T,
    {
        (0..count).map(f).collect()
    }
}
