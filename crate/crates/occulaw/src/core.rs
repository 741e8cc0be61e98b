//! Domain types: validated generator matrices, chain configurations,
//! transition kernels, and the burn-in threshold.
//!
//! A generator matrix has strictly positive off-diagonal entries and rows
//! summing to zero. The chain driven by it uses the time-dependent kernel
//! `I + G / n^zeta` once `n` is past the burn-in threshold, and the identity
//! before that, so every kernel is stochastic.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const DIAGONAL_TOL: f64 = 1e-9;

/// Validated member of the generator class: `m >= 2`, strictly positive
/// off-diagonals, zero row sums (diagonal reconstructed at build time).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    m: usize,
    entries: Array2<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GeneratorJson {
    m: usize,
    entries: Vec<Vec<f64>>,
}

impl GeneratorMatrix {
    /// Validate a raw square matrix as a generator.
    ///
    /// The supplied diagonal must be within `1e-9` of the negative
    /// off-diagonal row sum; it is then replaced by the exact negative sum so
    /// that row sums are zero to machine precision.
    pub fn validate(raw: &Array2<f64>) -> Result<Self> {
        let (rows, cols) = raw.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let m = rows;
        if m < 2 {
            return Err(Error::TooSmall { m });
        }
        let mut entries = raw.clone();
        for i in 0..m {
            let mut off_sum = 0.0;
            for j in 0..m {
                if j == i {
                    continue;
                }
                let v = entries[[i, j]];
                if v <= 0.0 || !v.is_finite() {
                    return Err(Error::NonPositiveOffDiagonal { i, j, value: v });
                }
                off_sum += v;
            }
            let expected = -off_sum;
            let supplied = entries[[i, i]];
            if (supplied - expected).abs() > DIAGONAL_TOL {
                return Err(Error::RowSumViolation {
                    i,
                    supplied,
                    expected,
                });
            }
            entries[[i, i]] = expected;
        }
        Ok(GeneratorMatrix { m, entries })
    }

    /// Parse from the JSON wire form `{"m": int, "entries": [[..], ..]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let parsed: GeneratorJson = serde_json::from_str(s)?;
        if parsed.entries.len() != parsed.m || parsed.entries.iter().any(|r| r.len() != parsed.m) {
            return Err(Error::Invalid(format!(
                "entries shape does not match m = {}",
                parsed.m
            )));
        }
        let flat: Vec<f64> = parsed.entries.iter().flatten().copied().collect();
        let raw = Array2::from_shape_vec((parsed.m, parsed.m), flat)
            .map_err(|e| Error::Invalid(e.to_string()))?;
        Self::validate(&raw)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.m)
            .map(|i| (0..self.m).map(|j| self.entries[[i, j]]).collect())
            .collect();
        serde_json::to_string(&GeneratorJson {
            m: self.m,
            entries: rows,
        })
        .expect("generator serializes")
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    /// Largest absolute diagonal entry, the rate scale of the generator.
    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.m)
            .map(|i| self.entries[[i, i]].abs())
            .fold(0.0, f64::max)
    }
}

/// First index beyond which `I + G/n^zeta` is guaranteed stochastic:
/// the ceiling of `max_i |G(i,i)|^(1/zeta)`.
pub fn burn_in_threshold(generator: &GeneratorMatrix, zeta: f64) -> u64 {
    assert!(zeta > 0.0, "zeta must be positive");
    let r = generator.max_abs_diagonal();
    let v = r.powf(1.0 / zeta);
    // powf can land a hair above an exact integer; snap before the ceiling.
    let snapped = if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    snapped.ceil() as u64
}

/// Row-stochastic matrix: entries in `[0,1]`, unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: Array2<f64>,
}

impl StochasticMatrix {
    /// Validate with the default tolerance (`1e-12` on row sums).
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        Self::with_tolerance(entries, ROW_SUM_TOL)
    }

    /// Validate with a caller-chosen tolerance; entries within `tol` outside
    /// `[0,1]` are clamped.
    pub fn with_tolerance(mut entries: Array2<f64>, tol: f64) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        for i in 0..rows {
            let mut sum = 0.0;
            for j in 0..cols {
                let v = entries[[i, j]];
                if v < -tol || v > 1.0 + tol {
                    return Err(Error::Invalid(format!(
                        "entry ({i},{j}) = {v} outside [0,1]"
                    )));
                }
                entries[[i, j]] = v.clamp(0.0, 1.0);
                sum += v;
            }
            if (sum - 1.0).abs() > tol {
                return Err(Error::Invalid(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(StochasticMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }
}

/// One-step kernel at time `n`: identity up to the burn-in threshold,
/// `I + G/n^zeta` after it.
pub fn transition_kernel(generator: &GeneratorMatrix, zeta: f64, n: u64) -> StochasticMatrix {
    assert!(n >= 1, "kernel index starts at 1");
    let m = generator.dim();
    let threshold = burn_in_threshold(generator, zeta);
    let mut entries = Array2::eye(m);
    if n > threshold {
        let scale = (n as f64).powf(-zeta);
        for i in 0..m {
            for j in 0..m {
                entries[[i, j]] += generator.entry(i, j) * scale;
            }
        }
    }
    StochasticMatrix::new(entries).expect("kernel is stochastic past the burn-in threshold")
}

/// Validate a probability vector: non-negative entries summing to 1.
pub fn validate_probability_vector(v: &Array1<f64>) -> Result<()> {
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Invalid("probability entries must be >= 0".into()));
    }
    let sum: f64 = v.sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Invalid(format!(
            "probability vector sums to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Full configuration of one chain: generator, strength parameter, initial
/// distribution, horizon, and master seed.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub generator: GeneratorMatrix,
    pub zeta: f64,
    pub initial: Array1<f64>,
    pub horizon: u64,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(
        generator: GeneratorMatrix,
        zeta: f64,
        initial: Array1<f64>,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        if zeta <= 0.0 || !zeta.is_finite() {
            return Err(Error::Invalid(format!("zeta = {zeta} must be > 0")));
        }
        if initial.len() != generator.dim() {
            return Err(Error::Invalid(format!(
                "initial distribution has {} entries, generator has {} states",
                initial.len(),
                generator.dim()
            )));
        }
        validate_probability_vector(&initial)?;
        if horizon < 1 {
            return Err(Error::Invalid("horizon must be >= 1".into()));
        }
        Ok(ChainConfig {
            generator,
            zeta,
            initial,
            horizon,
            seed,
        })
    }

    /// Uniform initial distribution over the generator's states.
    pub fn uniform_initial(m: usize) -> Array1<f64> {
        Array1::from_elem(m, 1.0 / m as f64)
    }
}

/// Point of the simplex built from empirical state frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationVector {
    frequencies: Array1<f64>,
}

impl OccupationVector {
    /// Build from per-state visit counts over a length-`n` path.
    pub fn from_counts(counts: &[u64], n: u64) -> Self {
        debug_assert_eq!(counts.iter().sum::<u64>(), n);
        let frequencies = counts.iter().map(|&c| c as f64 / n as f64).collect();
        OccupationVector { frequencies }
    }

    pub fn from_frequencies(frequencies: Array1<f64>) -> Result<Self> {
        validate_probability_vector(&frequencies)?;
        Ok(OccupationVector { frequencies })
    }

    pub fn frequencies(&self) -> &Array1<f64> {
        &self.frequencies
    }

    pub fn get(&self, i: usize) -> f64 {
        self.frequencies[i]
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Moment multi-index `(gamma_1, ..., gamma_m)` with total degree >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    gamma: Vec<u32>,
}

impl MultiIndex {
    pub fn new(gamma: Vec<u32>) -> Result<Self> {
        if gamma.iter().sum::<u32>() < 1 {
            return Err(Error::Invalid("total degree must be >= 1".into()));
        }
        Ok(MultiIndex { gamma })
    }

    /// `k * e_i` in `m` coordinates.
    pub fn axis(m: usize, i: usize, k: u32) -> Self {
        let mut gamma = vec![0; m];
        gamma[i] = k;
        MultiIndex { gamma }
    }

    pub fn gamma(&self) -> &[u32] {
        &self.gamma
    }

    pub fn total(&self) -> u32 {
        self.gamma.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// This index with one more power on coordinate `i`.
    pub fn bump(&self, i: usize) -> Self {
        let mut gamma = self.gamma.clone();
        gamma[i] += 1;
        MultiIndex { gamma }
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.gamma.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}
