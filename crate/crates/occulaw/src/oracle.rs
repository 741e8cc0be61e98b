//! Exact finite-horizon computations used as ground truth: marginal laws by
//! kernel chaining, the exact joint law of the visit-count vector by dynamic
//! programming over the count lattice, and exact finite-n moments read off
//! that law.
//!
//! The DP state is (current position, counts of `X_1..X_k`); dense layers for
//! m <= 3, a hash map for larger m. Counts exclude `X_0`, matching the
//! occupation statistic.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array1;

use crate::core::{
    burn_in_threshold, transition_kernel, GeneratorMatrix, MultiIndex,
};
use crate::error::{Error, Result};

/// Default cap on DP work, in state updates as estimated by
/// `n^(m-1) * m * n`. Large enough for m = 3 at n = 2^10; m = 3 beyond
/// n ~ 4096 is refused.
pub const DEFAULT_BUDGET: u128 = 20_000_000_000;

/// Exact joint law of the count vector `(n Z_1, ..., n Z_m)`.
#[derive(Debug, Clone)]
pub struct ExactOccupationLaw {
    pub horizon: u64,
    pub m: usize,
    /// count vector (summing to the horizon) -> probability
    pub support: BTreeMap<Vec<u32>, f64>,
}

impl ExactOccupationLaw {
    pub fn total_mass(&self) -> f64 {
        self.support.values().sum()
    }

    /// Marginal law of one coordinate's count.
    pub fn marginal_counts(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.horizon as usize + 1];
        for (counts, &p) in &self.support {
            out[counts[i] as usize] += p;
        }
        out
    }

    /// Exact `E[prod_i Z_i^{gamma_i}]` under this law.
    pub fn moment(&self, gamma: &MultiIndex) -> f64 {
        let n = self.horizon as f64;
        let mut acc = 0.0;
        for (counts, &p) in &self.support {
            let mut term = p;
            for (c, &g) in counts.iter().zip(gamma.gamma()) {
                if g > 0 {
                    term *= (*c as f64 / n).powi(g as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Variance of `Z_i`.
    pub fn variance(&self, i: usize) -> f64 {
        let m1 = self.moment(&MultiIndex::axis(self.m, i, 1));
        let m2 = self.moment(&MultiIndex::axis(self.m, i, 2));
        m2 - m1 * m1
    }
}

/// Exact law of the position at time `n`: `pi^t P_1 ... P_n`.
pub fn exact_marginal(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
) -> Result<Array1<f64>> {
    crate::core::validate_probability_vector(pi)?;
    if pi.len() != generator.dim() {
        return Err(Error::Invalid("pi length does not match generator".into()));
    }
    let threshold = burn_in_threshold(generator, zeta);
    let mut v = pi.clone();
    for k in (threshold + 1)..=n {
        let scale = (k as f64).powf(-zeta);
        let delta = v.dot(generator.entries());
        v = &v + &(delta * scale);
    }
    Ok(v)
}

fn budget_estimate(m: usize, n: u64) -> u128 {
    let n = n as u128;
    n.pow(m as u32 - 1) * m as u128 * n
}

/// Exact joint law of the count vector by forward DP with the default budget.
pub fn exact_occupation_law(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
) -> Result<ExactOccupationLaw> {
    exact_occupation_law_budgeted(generator, zeta, pi, n, DEFAULT_BUDGET)
}

pub fn exact_occupation_law_budgeted(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
    budget: u128,
) -> Result<ExactOccupationLaw> {
    crate::core::validate_probability_vector(pi)?;
    let m = generator.dim();
    if pi.len() != m {
        return Err(Error::Invalid("pi length does not match generator".into()));
    }
    let estimated = budget_estimate(m, n);
    if estimated > budget {
        return Err(Error::BudgetExceeded { estimated, budget });
    }
    match m {
        2 => Ok(dp_dense_m2(generator, zeta, pi, n)),
        3 => Ok(dp_dense_m3(generator, zeta, pi, n)),
        _ => Ok(dp_hashed(generator, zeta, pi, n)),
    }
}

/// Exact moment `E[prod_i Z_{i,n}^{gamma_i}]` from the DP law.
pub fn exact_moment(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
    gamma: &MultiIndex,
) -> Result<f64> {
    let law = exact_occupation_law(generator, zeta, pi, n)?;
    Ok(law.moment(gamma))
}

fn kernel_rows(generator: &GeneratorMatrix, zeta: f64, k: u64) -> Vec<f64> {
    let p = transition_kernel(generator, zeta, k);
    p.entries().iter().copied().collect()
}

/// m = 2: layer indexed by (state, count of state 1).
fn dp_dense_m2(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
) -> ExactOccupationLaw {
    let width = n as usize + 1;
    let mut cur = vec![0.0f64; 2 * width];
    let mut next = vec![0.0f64; 2 * width];
    // step 1: X_0 ~ pi, then one transition producing the first counted state
    let p1 = kernel_rows(generator, zeta, 1);
    for i in 0..2 {
        for j in 0..2 {
            let c1 = if j == 0 { 1 } else { 0 };
            cur[j * width + c1] += pi[i] * p1[i * 2 + j];
        }
    }
    for k in 2..=n {
        let p = kernel_rows(generator, zeta, k);
        next.iter_mut().for_each(|x| *x = 0.0);
        let kmax = (k - 1) as usize;
        for i in 0..2 {
            for c1 in 0..=kmax {
                let mass = cur[i * width + c1];
                if mass == 0.0 {
                    continue;
                }
                next[c1 + 1] += mass * p[i * 2]; // to state 0
                next[width + c1] += mass * p[i * 2 + 1]; // to state 1
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut support = BTreeMap::new();
    for c1 in 0..=n as usize {
        let p = cur[c1] + cur[width + c1];
        if p > 0.0 {
            support.insert(vec![c1 as u32, (n as usize - c1) as u32], p);
        }
    }
    ExactOccupationLaw {
        horizon: n,
        m: 2,
        support,
    }
}

/// m = 3: layer indexed by (state, count of state 1, count of state 2).
fn dp_dense_m3(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
) -> ExactOccupationLaw {
    let width = n as usize + 1;
    let plane = width * width;
    let mut cur = vec![0.0f64; 3 * plane];
    let mut next = vec![0.0f64; 3 * plane];
    let p1 = kernel_rows(generator, zeta, 1);
    for i in 0..3 {
        for j in 0..3 {
            let (c1, c2) = match j {
                0 => (1, 0),
                1 => (0, 1),
                _ => (0, 0),
            };
            cur[j * plane + c1 * width + c2] += pi[i] * p1[i * 3 + j];
        }
    }
    for k in 2..=n {
        let p = kernel_rows(generator, zeta, k);
        next.iter_mut().for_each(|x| *x = 0.0);
        let kmax = (k - 1) as usize;
        for i in 0..3 {
            let base = i * plane;
            let (pi0, pi1, pi2) = (p[i * 3], p[i * 3 + 1], p[i * 3 + 2]);
            for c1 in 0..=kmax {
                let row = base + c1 * width;
                for c2 in 0..=(kmax - c1) {
                    let mass = cur[row + c2];
                    if mass == 0.0 {
                        continue;
                    }
                    next[(c1 + 1) * width + c2] += mass * pi0;
                    next[plane + c1 * width + c2 + 1] += mass * pi1;
                    next[2 * plane + c1 * width + c2] += mass * pi2;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut support = BTreeMap::new();
    for c1 in 0..=n as usize {
        for c2 in 0..=(n as usize - c1) {
            let idx = c1 * width + c2;
            let p = cur[idx] + cur[plane + idx] + cur[2 * plane + idx];
            if p > 0.0 {
                support.insert(
                    vec![c1 as u32, c2 as u32, (n as usize - c1 - c2) as u32],
                    p,
                );
            }
        }
    }
    ExactOccupationLaw {
        horizon: n,
        m: 3,
        support,
    }
}

/// General m: hashed layers keyed by (state, counts of the first m-1 states).
fn dp_hashed(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    n: u64,
) -> ExactOccupationLaw {
    let m = generator.dim();
    let mut cur: HashMap<(usize, Vec<u32>), f64> = HashMap::new();
    let p1 = kernel_rows(generator, zeta, 1);
    for i in 0..m {
        for j in 0..m {
            let mut counts = vec![0u32; m - 1];
            if j < m - 1 {
                counts[j] = 1;
            }
            *cur.entry((j, counts)).or_insert(0.0) += pi[i] * p1[i * m + j];
        }
    }
    for k in 2..=n {
        let p = kernel_rows(generator, zeta, k);
        let mut next: HashMap<(usize, Vec<u32>), f64> = HashMap::with_capacity(cur.len() * 2);
        for ((i, counts), mass) in cur {
            for j in 0..m {
                let mut c = counts.clone();
                if j < m - 1 {
                    c[j] += 1;
                }
                *next.entry((j, c)).or_insert(0.0) += mass * p[i * m + j];
            }
        }
        cur = next;
    }
    let mut support = BTreeMap::new();
    for ((_, counts), mass) in cur {
        let used: u32 = counts.iter().sum();
        let mut full = counts;
        full.push(n as u32 - used);
        *support.entry(full).or_insert(0.0) += mass;
    }
    ExactOccupationLaw {
        horizon: n,
        m,
        support,
    }
}
