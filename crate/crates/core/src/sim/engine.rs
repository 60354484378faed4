//! Deterministic parallel Monte Carlo.
//!
//! Trial `t` always draws from ChaCha8 stream `t` under the root seed, and
//! partial tallies are merged in chunk order, so results do not depend on
//! how many worker threads run them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Trials handed to one worker at a time.
const CHUNK: u64 = 2048;

/// Random stream of one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `y = x + z` with i.i.d. `N(0, σ²)` noise.
pub fn awgn_channel<R: rand::Rng + ?Sized>(x: &[f64], noise_var: f64, rng: &mut R) -> Vec<f64> {
    let mut y = x.to_vec();
    add_noise(&mut y, noise_var, rng);
    y
}

pub(crate) fn add_noise<R: rand::Rng + ?Sized>(y: &mut [f64], noise_var: f64, rng: &mut R) {
    let sigma = noise_var.sqrt();
    for v in y.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += sigma * z;
    }
}

/// Mergeable per-chunk results.
pub trait Tally: Default + Send {
    fn merge(&mut self, other: Self);
}

impl Tally for Vec<u64> {
    fn merge(&mut self, other: Self) {
        if self.len() < other.len() {
            self.resize(other.len(), 0);
        }
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

impl<const K: usize> Tally for [u64; K]
where
    [u64; K]: Default,
{
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Engine {
    pool: std::sync::Arc<rayon::ThreadPool>,
    workers: usize,
    /// Trials between early-stop checks.
    batch: u64,
}

impl Engine {
    /// `workers == 0` uses every available core.
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        let workers = pool.current_num_threads();
        Engine { pool: std::sync::Arc::new(pool), workers, batch: 1 << 18 }
    }

    pub fn with_batch(mut self, batch: u64) -> Self {
        self.batch = batch.max(1);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Run trials `0..trials`, each calling `f(trial, &mut tally)`, and stop
    /// after the first batch at which `stop` holds. Returns the tally and the
    /// number of trials actually run.
    pub fn run<T, F, S>(&self, trials: u64, f: F, stop: S) -> (T, u64)
    where
        T: Tally,
        F: Fn(u64, &mut T) + Sync,
        S: Fn(&T) -> bool,
    {
        let mut total = T::default();
        let mut done = 0u64;
        while done < trials {
            let end = (done + self.batch).min(trials);
            let chunks: Vec<(u64, u64)> = (done..end)
                .step_by(CHUNK as usize)
                .map(|s| (s, (s + CHUNK).min(end)))
                .collect();
            let parts: Vec<T> = self.pool.install(|| {
                chunks
                    .par_iter()
                    .map(|&(s, e)| {
                        let mut t = T::default();
                        for trial in s..e {
                            f(trial, &mut t);
                        }
                        t
                    })
                    .collect()
            });
            for p in parts {
                total.merge(p);
            }
            done = end;
            if stop(&total) {
                break;
            }
        }
        (total, done)
    }

    /// Ordered map over `range`.
    pub fn map<U, F>(&self, range: std::ops::Range<u64>, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(u64) -> U + Sync + Send,
    {
        self.pool.install(|| range.into_par_iter().map(f).collect())
    }

    /// Ordered filter-map over `range`, evaluated batch by batch until
    /// `enough(collected)` holds.
    pub fn collect_until<U, F>(&self, range: std::ops::Range<u64>, f: F, enough: impl Fn(&[U]) -> bool) -> (Vec<U>, u64)
    where
        U: Send,
        F: Fn(u64) -> Option<U> + Sync + Send,
    {
        let mut out = Vec::new();
        let mut done = range.start;
        while done < range.end {
            let end = (done + self.batch).min(range.end);
            let part: Vec<Option<U>> = self.pool.install(|| (done..end).into_par_iter().map(&f).collect());
            out.extend(part.into_iter().flatten());
            done = end;
            if enough(&out) {
                break;
            }
        }
        (out, done - range.start)
    }
}

/// Wilson score interval at 95%.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// A binomial proportion with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn new(hits: u64, trials: u64) -> Self {
        let (lo, hi) = wilson(hits, trials);
        let value = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Proportion { hits, trials, value, lo, hi }
    }

    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}
