//! Data-parallel helpers. With the `parallel` feature off, every
//! [`Exec::Parallel`] request runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Calls `f(row_index, row)` for each `stride`-sized row of `buf`.
pub fn for_each_row<F>(exec: Exec, buf: &mut [u8], stride: usize, f: F)
where
    F: Fn(usize, &mut [u8]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        buf.par_chunks_mut(stride).enumerate().for_each(|(y, row)| f(y, row));
        return;
    }
    let _ = exec;
    buf.chunks_mut(stride).enumerate().for_each(|(y, row)| f(y, row));
}

/// Order-preserving map over a slice.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Runs `job` on a dedicated pool of `workers` threads when parallel,
/// otherwise inline.
pub fn with_workers<R: Send>(exec: Exec, workers: usize, job: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
            return pool.install(job);
        }
    }
    let _ = (exec, workers);
    job()
}
