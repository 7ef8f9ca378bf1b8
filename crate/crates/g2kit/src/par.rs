//! Data-parallel map used by the scans. With the `parallel` feature the work
//! runs on the rayon pool; without it the same calls run sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();

    #[cfg(not(feature = "parallel"))]
    return 1;
}

/// Map `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return items.par_iter().map(f).collect();

    #[cfg(not(feature = "parallel"))]
    return items.iter().map(f).collect();
}

/// Run `f` on a single thread regardless of the feature set. Scans called
/// inside see a one-thread pool, which is how the benches get a sequential
/// baseline from the same code path.
pub fn sequential<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("single-thread pool");
        return pool.install(f);
    }

    #[cfg(not(feature = "parallel"))]
    return f();
}

#[cfg(test)]
mod tests {
    #[test]
    fn map_preserves_order() {
        let v: Vec<u64> = (0..1000).collect();
        let out = super::map(&v, |x| x * x);
        assert!(out.iter().enumerate().all(|(i, &y)| y == (i * i) as u64));
        let seq = super::sequential(|| super::map(&v, |x| x + 1));
        assert_eq!(seq[999], 1000);
    }
}
