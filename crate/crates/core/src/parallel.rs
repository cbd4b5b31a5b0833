//! Fan-out over independent seeds.
//!
//! With the `parallel` feature (on by default) seeds are processed on the
//! rayon pool; otherwise sequentially. Results always come back in the order
//! of the input seeds, so reductions over them are deterministic either way.

/// Apply `f` to every item on the rayon pool, or sequentially without the
/// `parallel` feature. Output order matches input order.
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Apply `f` to every seed, one after another.
pub fn map_sequential<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    seeds.iter().map(|&s| f(s)).collect()
}

/// Apply `f` to every seed on the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    seeds.par_iter().map(|&s| f(s)).collect()
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
#[cfg(feature = "parallel")]
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_parallel(seeds, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_sequential(seeds, f)
}

/// `count` consecutive seeds starting at `base`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}
