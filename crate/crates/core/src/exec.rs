//! Execution strategy for the data-parallel loops (multiset enumeration,
//! sampling, sweeps). With the `parallel` feature disabled every strategy
//! runs sequentially; results are identical either way.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default cap on exhaustive enumerations (matrices or multisets).
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

/// Environment variable overriding [`DEFAULT_ENUMERATION_BUDGET`].
pub const BUDGET_ENV: &str = "POLYCLONE_BUDGET";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f` on `0..n` and returns the result for the smallest index
    /// that produced `Some`. Deterministic regardless of scheduling.
    pub fn find_first<T, F>(self, n: usize, f: F) -> Option<T>
    where
        T: Send,
        F: Fn(usize) -> Option<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().find_map_first(f);
        }
        (0..n).find_map(f)
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

/// Trials per independently seeded chunk in [`sampled_search`].
pub const SAMPLE_CHUNK: u64 = 1024;

/// Runs `trial` up to `trials` times and returns the first hit as
/// `(trial index, value)`. Trials are grouped in chunks of [`SAMPLE_CHUNK`];
/// chunk `c` draws from the ChaCha stream `c` of `seed`, so the outcome does
/// not depend on the execution strategy or thread count.
pub fn sampled_search<T, F>(exec: Exec, trials: u64, seed: u64, trial: F) -> Option<(u64, T)>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Option<T> + Sync + Send,
{
    let chunks = trials.div_ceil(SAMPLE_CHUNK) as usize;
    exec.find_first(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let start = c as u64 * SAMPLE_CHUNK;
        let end = (start + SAMPLE_CHUNK).min(trials);
        (start..end).find_map(|i| trial(&mut rng).map(|v| (i, v)))
    })
}

/// Enumeration budget, honouring the environment override.
pub fn enumeration_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUMERATION_BUDGET)
}
