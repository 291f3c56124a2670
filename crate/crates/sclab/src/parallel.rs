//! Order-preserving parallel map over a slice.

use std::sync::OnceLock;

use rayon::prelude::*;

/// Worker count: `SCLAB_THREADS` if set and positive, else the available parallelism.
pub fn workers() -> usize {
    if let Some(n) = std::env::var("SCLAB_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            return n;
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| rayon::ThreadPoolBuilder::new().num_threads(workers()).build().expect("thread pool"))
}

/// Apply `f` to every item, results in input order. Deterministic regardless
/// of the worker count since each item is computed independently.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let f = &f;
    pool().install(|| items.par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order() {
        let v: Vec<usize> = (0..1000).collect();
        let out = par_map(&v, |x| x * 2);
        assert_eq!(out, v.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(par_map(&Vec::<usize>::new(), |x| *x).is_empty());
    }
}
