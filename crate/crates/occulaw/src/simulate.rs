//! Reproducible Monte Carlo simulation of trajectories, occupation vectors,
//! switch counts, and ensembles.
//!
//! The hot loop never materializes kernels: the row of `I + G/k^zeta` at the
//! current state is evaluated on the fly from the generator, one uniform draw
//! per step, O(m) memory per replica.
//!
//! Seed derivation is normative so independent implementations can reproduce
//! streams byte-exactly: `replica_seed = splitmix64(master_seed +
//! (index + 1) * 0x9E3779B97F4A7C15)` (wrapping arithmetic), and each replica
//! runs a `ChaCha8` generator seeded with `seed_from_u64(replica_seed)`.

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::core::{burn_in_threshold, ChainConfig, OccupationVector};
use crate::error::Result;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derived seed for one replica of an ensemble.
pub fn replica_seed(master_seed: u64, replica_index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(replica_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// One sampled path: `X_1..X_n` plus the separately drawn `X_0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x0: usize,
    pub states: Vec<u8>,
    pub horizon: u64,
    pub m: usize,
}

/// Occupation vectors of `R` replicas with their derived seeds and summary
/// statistics, merged in replica order regardless of worker count.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub replicas: Vec<OccupationVector>,
    pub seeds: Vec<u64>,
    pub switch_counts: Vec<u64>,
    pub final_states: Vec<usize>,
    pub horizon: u64,
    pub elapsed: f64,
}

impl EnsembleResult {
    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    /// Per-coordinate mean of the replica occupation vectors.
    pub fn mean(&self) -> Array1<f64> {
        let m = self.replicas[0].len();
        let mut acc = Array1::zeros(m);
        for z in &self.replicas {
            acc += z.frequencies();
        }
        acc / self.replicas.len() as f64
    }

    /// Per-coordinate sample standard deviation.
    pub fn std(&self) -> Array1<f64> {
        let m = self.replicas[0].len();
        let r = self.replicas.len();
        let mean = self.mean();
        let mut acc = Array1::<f64>::zeros(m);
        for z in &self.replicas {
            let d = z.frequencies() - &mean;
            acc += &(&d * &d);
        }
        (acc / (r.max(2) - 1) as f64).mapv(f64::sqrt)
    }

    /// Empirical distribution of the final states.
    pub fn final_state_frequencies(&self, m: usize) -> Array1<f64> {
        let mut counts = Array1::zeros(m);
        for &s in &self.final_states {
            counts[s] += 1.0;
        }
        counts / self.final_states.len() as f64
    }

    pub fn mean_switch_count(&self) -> f64 {
        self.switch_counts.iter().sum::<u64>() as f64 / self.switch_counts.len() as f64
    }
}

/// Inverse-CDF draw from a probability vector with a single uniform.
fn sample_categorical(p: &Array1<f64>, u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Core stepping loop shared by the path and streaming samplers.
///
/// `visit` receives each `X_k` for `k = 1..=n` in order.
fn run_chain<R: Rng, F: FnMut(u64, usize)>(config: &ChainConfig, rng: &mut R, mut visit: F) -> usize {
    let g = &config.generator;
    let m = g.dim();
    let zeta = config.zeta;
    let threshold = burn_in_threshold(g, zeta);

    let x0 = sample_categorical(&config.initial, rng.random::<f64>());
    let mut state = x0;
    for k in 1..=config.horizon {
        if k > threshold {
            let scale = (k as f64).powf(-zeta);
            let leave = -g.entry(state, state) * scale;
            let u: f64 = rng.random();
            if u < leave {
                // rescale u into the off-diagonal mass and scan
                let mut acc = 0.0;
                for j in 0..m {
                    if j == state {
                        continue;
                    }
                    acc += g.entry(state, j) * scale;
                    if u < acc {
                        state = j;
                        break;
                    }
                }
            }
        }
        visit(k, state);
    }
    x0
}

/// Sample one full trajectory under the chain measure; identical
/// `(config, seed)` gives an identical path.
pub fn simulate_path(config: &ChainConfig) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut states = Vec::with_capacity(config.horizon as usize);
    let x0 = run_chain(config, &mut rng, |_, s| states.push(s as u8));
    Trajectory {
        x0,
        states,
        horizon: config.horizon,
        m: config.generator.dim(),
    }
}

/// Occupation frequencies of `X_1..X_n` (`X_0` excluded).
pub fn occupation_vector(t: &Trajectory) -> OccupationVector {
    let mut counts = vec![0u64; t.m];
    for &s in &t.states {
        counts[s as usize] += 1;
    }
    OccupationVector::from_counts(&counts, t.horizon)
}

/// Number of indices `k >= 2` with `X_k != X_{k-1}`.
pub fn switch_count(t: &Trajectory) -> u64 {
    t.states.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

/// Streaming single-replica run: counts, switches, and final state without
/// storing the path. Consumes randomness identically to `simulate_path`.
pub fn simulate_occupation(config: &ChainConfig, seed: u64) -> (OccupationVector, u64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = config.generator.dim();
    let mut counts = vec![0u64; m];
    let mut switches = 0u64;
    let mut prev: Option<usize> = None;
    let mut last = 0usize;
    run_chain(config, &mut rng, |_, s| {
        counts[s] += 1;
        if let Some(p) = prev {
            if p != s {
                switches += 1;
            }
        }
        prev = Some(s);
        last = s;
    });
    (
        OccupationVector::from_counts(&counts, config.horizon),
        switches,
        last,
    )
}

/// `R` independent replicas, each seeded deterministically from the master
/// seed and its index; results are merged by replica index so they do not
/// depend on the worker count.
pub fn ensemble_occupations(config: &ChainConfig, replicas: u64) -> Result<EnsembleResult> {
    if replicas < 1 {
        return Err(crate::error::Error::Invalid("replicas must be >= 1".into()));
    }
    let start = std::time::Instant::now();
    let seeds: Vec<u64> = (0..replicas).map(|r| replica_seed(config.seed, r)).collect();
    let runs: Vec<(OccupationVector, u64, usize)> = seeds
        .par_iter()
        .map(|&seed| simulate_occupation(config, seed))
        .collect();
    let mut result = EnsembleResult {
        replicas: Vec::with_capacity(runs.len()),
        seeds,
        switch_counts: Vec::with_capacity(runs.len()),
        final_states: Vec::with_capacity(runs.len()),
        horizon: config.horizon,
        elapsed: 0.0,
    };
    for (z, switches, last) in runs {
        result.replicas.push(z);
        result.switch_counts.push(switches);
        result.final_states.push(last);
    }
    result.elapsed = start.elapsed().as_secs_f64();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::GeneratorMatrix;
    use crate::test_support::theta11;
    use ndarray::array;

    fn config(g: GeneratorMatrix, zeta: f64, n: u64, seed: u64) -> ChainConfig {
        let m = g.dim();
        ChainConfig::new(g, zeta, ChainConfig::uniform_initial(m), n, seed).unwrap()
    }

    #[test]
    fn constant_path_within_burn_in() {
        // G_left has threshold 3 at zeta 1: a horizon-3 path never moves
        let g = crate::test_support::g_left();
        let c = config(g, 1.0, 3, 7);
        let t = simulate_path(&c);
        assert!(t.states.iter().all(|&s| s as usize == t.x0));
        assert_eq!(switch_count(&t), 0);
    }

    #[test]
    fn fixed_seed_reproduces_path() {
        let c = config(theta11(), 1.0, 5_000, 99);
        let a = simulate_path(&c);
        let b = simulate_path(&c);
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn streaming_matches_path_sampler() {
        let c = config(crate::test_support::g_right(), 1.0, 10_000, 4242);
        let t = simulate_path(&c);
        let (z, switches, last) = simulate_occupation(&c, c.seed);
        assert_eq!(occupation_vector(&t).frequencies(), z.frequencies());
        assert_eq!(switch_count(&t), switches);
        assert_eq!(*t.states.last().unwrap() as usize, last);
    }

    #[test]
    fn occupation_counts_are_exact() {
        let t = Trajectory {
            x0: 0,
            states: vec![0, 1, 0, 1],
            horizon: 4,
            m: 2,
        };
        let z = occupation_vector(&t);
        assert_eq!(z.get(0), 0.5);
        assert_eq!(z.get(1), 0.5);
        assert_eq!(switch_count(&t), 3);

        let t = Trajectory {
            x0: 0,
            states: vec![0, 1, 0, 1, 0],
            horizon: 5,
            m: 2,
        };
        let z = occupation_vector(&t);
        assert_eq!(z.get(0), 0.6);
        assert_eq!(z.get(1), 0.4);
    }

    #[test]
    fn constant_path_is_basis_vector() {
        let t = Trajectory {
            x0: 2,
            states: vec![2; 10],
            horizon: 10,
            m: 3,
        };
        let z = occupation_vector(&t);
        assert_eq!(z.frequencies(), &array![0.0, 0.0, 1.0]);
        assert_eq!(switch_count(&t), 0);
    }

    #[test]
    fn marginal_matches_limit_statistically() {
        // Theta(1,1): P(X_n = 1) -> 1/2; binomial check at 3 standard errors
        let c = config(theta11(), 1.0, 10_000, 2024);
        let r = 2_000;
        let ens = ensemble_occupations(&c, r).unwrap();
        let freq = ens.final_state_frequencies(2);
        let se = (0.5 * 0.5 / r as f64).sqrt();
        assert!(
            (freq[0] - 0.5).abs() <= 3.0 * se,
            "final-state frequency {} vs 0.5 (se {se})",
            freq[0]
        );
    }

    #[test]
    fn ensemble_single_replica_reduces_to_path() {
        let c = config(theta11(), 1.0, 1_000, 5);
        let ens = ensemble_occupations(&c, 1).unwrap();
        let (z, switches, last) = simulate_occupation(&c, replica_seed(c.seed, 0));
        assert_eq!(ens.replicas[0].frequencies(), z.frequencies());
        assert_eq!(ens.switch_counts[0], switches);
        assert_eq!(ens.final_states[0], last);
    }

    #[test]
    fn ensemble_mean_near_stationary() {
        let g = crate::test_support::g_right();
        let nu = crate::spectral::stationary_distribution(&g).unwrap();
        let c = config(g, 1.0, 10_000, 31);
        let r = 1_000;
        let ens = ensemble_occupations(&c, r).unwrap();
        let mean = ens.mean();
        let std = ens.std();
        for i in 0..3 {
            let se = std[i] / (r as f64).sqrt();
            assert!(
                (mean[i] - nu[i]).abs() <= 3.0 * se,
                "coordinate {i}: mean {} vs nu {} (se {se})",
                mean[i],
                nu[i]
            );
        }
    }

    #[test]
    fn ensemble_reproducible() {
        let c = config(crate::test_support::g_left(), 1.0, 2_000, 77);
        let a = ensemble_occupations(&c, 50).unwrap();
        let b = ensemble_occupations(&c, 50).unwrap();
        for (x, y) in a.replicas.iter().zip(&b.replicas) {
            assert_eq!(x.frequencies(), y.frequencies());
        }
        assert_eq!(a.switch_counts, b.switch_counts);
        assert_eq!(a.final_states, b.final_states);
    }

    #[test]
    fn switch_count_bounded_by_summed_switch_probability() {
        // mean switches <= sum_{k > threshold} max_i |G(i,i)| / k^1.5,
        // computed numerically as the comparison bound
        let g = theta11();
        let zeta = 1.5;
        let n = 20_000u64;
        let c = config(g.clone(), zeta, n, 13);
        let r = 500;
        let ens = ensemble_occupations(&c, r).unwrap();
        let threshold = burn_in_threshold(&g, zeta);
        let bound: f64 = ((threshold + 1)..=n)
            .map(|k| g.max_abs_diagonal() * (k as f64).powf(-zeta))
            .sum();
        let mean = ens.mean_switch_count();
        // allow 3 standard errors of slack on the Monte Carlo side
        let se = (bound / r as f64).sqrt().max(0.05);
        assert!(
            mean <= bound + 3.0 * se,
            "mean switches {mean} above bound {bound}"
        );
    }
}
