//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it every policy runs sequentially. Callers split work into
//! chunks whose boundaries do not depend on the policy, and results come
//! back in chunk order, so reductions are identical for any thread count.

/// How many workers to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// `Threads(0)` uses rayon's default pool.
    #[default]
    Auto,
    Threads(usize),
}

impl Parallelism {
    /// `0` means automatic, `1` sequential.
    pub fn from_threads(threads: usize) -> Self {
        match threads {
            0 => Self::Auto,
            1 => Self::Sequential,
            n => Self::Threads(n),
        }
    }
}

/// `(0..n).map(f)` collected in index order under `policy`.
pub fn ordered_map<T, F>(n: usize, policy: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match policy {
            Parallelism::Sequential => (0..n).map(f).collect(),
            Parallelism::Auto => (0..n).into_par_iter().map(f).collect(),
            Parallelism::Threads(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(_) => (0..n).map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = policy;
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for policy in [
            Parallelism::Sequential,
            Parallelism::Auto,
            Parallelism::Threads(3),
        ] {
            let v = ordered_map(100, policy, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn thread_count_mapping() {
        assert_eq!(Parallelism::from_threads(0), Parallelism::Auto);
        assert_eq!(Parallelism::from_threads(1), Parallelism::Sequential);
        assert_eq!(Parallelism::from_threads(8), Parallelism::Threads(8));
    }
}
