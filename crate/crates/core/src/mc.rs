//! Reproducible parallel Monte Carlo.
//!
//! Every trajectory draws from its own ChaCha stream keyed by
//! `(master_seed, trajectory_index)`. Trajectories are grouped into chunks of
//! fixed size, each chunk is reduced by pairwise summation in index order, and
//! the chunk totals are pairwise-summed in index order again. The reduction
//! tree therefore depends only on the trajectory count, so results are
//! bit-identical for any number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type TrajectoryRng = ChaCha8Rng;

const CHUNK: u64 = 4096;

/// Independent generator for one trajectory.
pub fn trajectory_rng(master_seed: u64, index: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

fn pairwise_columns<const K: usize>(rows: &[[f64; K]]) -> [f64; K] {
    let mut out = [0.0; K];
    let mut column = Vec::with_capacity(rows.len());
    for (k, slot) in out.iter_mut().enumerate() {
        column.clear();
        column.extend(rows.iter().map(|r| r[k]));
        *slot = pairwise_sum(&column);
    }
    out
}

/// Runs `trajectories` independent samples of `f` and returns the
/// component-wise sums of the per-trajectory tallies.
pub fn reduce<const K: usize, F>(trajectories: u64, master_seed: u64, f: F) -> [f64; K]
where
    F: Fn(u64, &mut TrajectoryRng) -> [f64; K] + Sync,
{
    let chunks = trajectories.div_ceil(CHUNK);
    let totals: Vec<[f64; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(trajectories);
            let rows: Vec<[f64; K]> = (start..end)
                .map(|i| f(i, &mut trajectory_rng(master_seed, i)))
                .collect();
            pairwise_columns(&rows)
        })
        .collect();
    pairwise_columns(&totals)
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_sums(sum: f64, sum_sq: f64, samples: u64) -> Self {
        if samples == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                samples,
            };
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n).sqrt(),
            samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample(n: u64, seed: u64) -> [f64; 2] {
        reduce(n, seed, |_, rng| {
            let x: f64 = rng.random();
            [x, x * x]
        })
    }

    #[test]
    fn reduction_is_thread_count_independent() {
        let n = 3 * CHUNK + 17;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample(n, 42));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sample(n, 42));
        assert_eq!(one[0].to_bits(), many[0].to_bits());
        assert_eq!(one[1].to_bits(), many[1].to_bits());
        assert_ne!(sample(n, 43)[0].to_bits(), one[0].to_bits());
    }

    #[test]
    fn streams_differ_per_trajectory() {
        let a: u64 = trajectory_rng(0, 0).random();
        let b: u64 = trajectory_rng(0, 1).random();
        let c: u64 = trajectory_rng(1, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, trajectory_rng(0, 0).random::<u64>());
    }

    #[test]
    fn uniform_mean_estimate() {
        let n = 100_000;
        let [s, s2] = sample(n, 9);
        let est = Estimate::from_sums(s, s2, n);
        assert!((est.mean - 0.5).abs() < 3.0 * est.std_err);
        assert!((est.std_err - (1.0 / 12.0 / n as f64).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
