//! Trial-level data parallelism. Independent seeded trials are mapped
//! across a thread pool when the `parallel` feature is enabled and the
//! caller asks for it; otherwise they run sequentially. Results come back
//! in trial order either way, so outputs are identical across modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map a function over trial indices `0..n`, in parallel when requested
/// and compiled in.
pub fn map_trials<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(&f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// True when the crate was built with the rayon-backed path.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
