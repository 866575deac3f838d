//! Data-parallel map over independent work items. With the `parallel`
//! feature the items run on a rayon pool; without it everything runs in
//! order on the calling thread. Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Worker count; `0` uses every available core.
    Parallel(usize),
}

impl Execution {
    /// `None` or `Some(0)` mean all cores, `Some(1)` is sequential.
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Parallel(n),
            None => Execution::Parallel(0),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel(_))
    }

    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.into_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel(0) => items.into_par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
                Err(e) => {
                    log::warn!("thread pool unavailable ({e}); running sequentially");
                    items.into_iter().map(f).collect()
                }
            },
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel(_) => items.into_iter().map(f).collect(),
        }
    }
}
