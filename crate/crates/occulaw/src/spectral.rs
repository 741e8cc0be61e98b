//! Linear algebra on generators: stationary distributions, resolvents,
//! eigendecompositions, kernel products (naive and spectral fast path),
//! Dobrushin contraction coefficients, and the zeta > 1 limit marginal.
//!
//! Complex arithmetic stays inside this module; every exported matrix is real
//! after its imaginary residue has been checked against tolerance.

use ndarray::{Array1, Array2};
use ndarray_linalg::types::c64;
use ndarray_linalg::{Eig, Inverse, Solve};

use crate::core::{burn_in_threshold, transition_kernel, GeneratorMatrix, StochasticMatrix};
use crate::error::{Error, Result};

const NULL_EIGENVALUE_TOL: f64 = 1e-8;
const RECONSTRUCTION_REL_TOL: f64 = 1e-8;
const CONDITION_CAP: f64 = 1e8;

/// Eigendecomposition `G = V Diag(lambda) V^{-1}` with a diagonalizability
/// verdict based on reconstruction error and eigenvector conditioning.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Array1<c64>,
    right_vectors: Array2<c64>,
    inverse_vectors: Array2<c64>,
    is_diagonalizable: bool,
    condition_estimate: f64,
    null_index: usize,
}

impl SpectralDecomposition {
    pub fn compute(generator: &GeneratorMatrix) -> Result<Self> {
        let m = generator.dim();
        let (mut eigenvalues, right_vectors) = generator
            .entries()
            .eig()
            .map_err(|e| Error::SingularSolve(e.to_string()))?;

        // Generator eigenvalues have non-positive real parts and exactly one
        // null eigenvalue; locate it and snap it to 0 exactly so downstream
        // diagonal products treat the stationary mode without drift.
        let norm = matrix_max_norm_c(&right_vectors).max(1.0);
        let mut null_index = 0;
        let mut best = f64::INFINITY;
        for (k, lambda) in eigenvalues.iter().enumerate() {
            if lambda.re > 1e-10 {
                return Err(Error::SingularSolve(format!(
                    "eigenvalue {lambda} has positive real part"
                )));
            }
            if lambda.norm() < best {
                best = lambda.norm();
                null_index = k;
            }
        }
        if best > NULL_EIGENVALUE_TOL {
            return Err(Error::SingularSolve(format!(
                "no eigenvalue within {NULL_EIGENVALUE_TOL} of zero (closest {best})"
            )));
        }
        eigenvalues[null_index] = c64::new(0.0, 0.0);

        let inverse_vectors = match right_vectors.inv() {
            Ok(inv) => inv,
            Err(_) => {
                return Ok(SpectralDecomposition {
                    eigenvalues,
                    inverse_vectors: Array2::zeros((m, m)),
                    right_vectors,
                    is_diagonalizable: false,
                    condition_estimate: f64::INFINITY,
                    null_index,
                })
            }
        };

        let condition_estimate = norm * matrix_max_norm_c(&inverse_vectors) * m as f64;

        // reconstruction check in the max norm, relative to the generator scale
        let diag = Array2::from_diag(&eigenvalues);
        let rebuilt = right_vectors.dot(&diag).dot(&inverse_vectors);
        let scale = matrix_max_norm(generator.entries()).max(1.0);
        let mut err: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = c64::new(generator.entry(i, j), 0.0);
                err = err.max((rebuilt[[i, j]] - target).norm());
            }
        }
        let is_diagonalizable =
            err <= RECONSTRUCTION_REL_TOL * scale && condition_estimate <= CONDITION_CAP;

        Ok(SpectralDecomposition {
            eigenvalues,
            right_vectors,
            inverse_vectors,
            is_diagonalizable,
            condition_estimate,
            null_index,
        })
    }

    pub fn eigenvalues(&self) -> &Array1<c64> {
        &self.eigenvalues
    }

    pub fn right_vectors(&self) -> &Array2<c64> {
        &self.right_vectors
    }

    pub fn inverse_vectors(&self) -> &Array2<c64> {
        &self.inverse_vectors
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.is_diagonalizable
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Index of the (snapped) zero eigenvalue.
    pub fn null_index(&self) -> usize {
        self.null_index
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

/// Resolvent `(x I - G)^{-1}` for a recorded `x >= 1`.
#[derive(Debug, Clone)]
pub struct ResolventMatrix {
    x: f64,
    matrix: Array2<f64>,
}

impl ResolventMatrix {
    pub(crate) fn new_unchecked(x: f64, matrix: Array2<f64>) -> Self {
        ResolventMatrix { x, matrix }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[[i, j]]
    }
}

/// Unique positive left null vector of `G`, normalized to unit sum.
///
/// Solved exactly (at small `m`) as a bordered linear system: the transpose
/// system with one redundant row replaced by the normalization constraint.
pub fn stationary_distribution(generator: &GeneratorMatrix) -> Result<Array1<f64>> {
    let m = generator.dim();
    let mut a = generator.entries().t().to_owned();
    for j in 0..m {
        a[[m - 1, j]] = 1.0;
    }
    let mut b = Array1::zeros(m);
    b[m - 1] = 1.0;
    let nu = a.solve(&b).map_err(|e| Error::SingularSolve(e.to_string()))?;
    if nu.iter().any(|&v| v <= 0.0) {
        return Err(Error::SingularSolve(
            "stationary solve produced non-positive entries".into(),
        ));
    }
    let sum: f64 = nu.sum();
    Ok(nu / sum)
}

/// Resolvent `(x I - G)^{-1}`, defined for `x >= 1` since generator
/// eigenvalues have non-positive real parts.
pub fn resolvent(generator: &GeneratorMatrix, x: f64) -> Result<ResolventMatrix> {
    if x < 1.0 {
        return Err(Error::Invalid(format!("resolvent requires x >= 1, got {x}")));
    }
    let m = generator.dim();
    let mut a = -generator.entries().clone();
    for i in 0..m {
        a[[i, i]] += x;
    }
    let matrix = a.inv().map_err(|e| Error::SingularSolve(e.to_string()))?;
    Ok(ResolventMatrix { x, matrix })
}

/// Left-to-right product of one-step kernels with indices `i..=j`.
pub fn kernel_product(
    generator: &GeneratorMatrix,
    zeta: f64,
    i: u64,
    j: u64,
) -> Result<StochasticMatrix> {
    if i < 1 || i > j {
        return Err(Error::BadRange { i, j });
    }
    let m = generator.dim();
    let threshold = burn_in_threshold(generator, zeta);
    let mut acc = Array2::eye(m);
    // factors at or below the threshold are the identity
    let start = i.max(threshold + 1);
    for l in start..=j {
        let p = transition_kernel(generator, zeta, l);
        acc = acc.dot(p.entries());
    }
    StochasticMatrix::with_tolerance(acc, 1e-10)
}

/// Same product through the eigendecomposition: the factors share the
/// eigenvectors of `G`, so the product reduces to scalar products
/// `prod_l (1 + lambda_k / l^zeta)` on the diagonal. Cost `O((j-i) m + m^3)`.
///
/// Requires a diagonalizable generator and `i` past the burn-in threshold.
pub fn kernel_product_spectral(
    decomposition: &SpectralDecomposition,
    generator: &GeneratorMatrix,
    zeta: f64,
    i: u64,
    j: u64,
) -> Result<StochasticMatrix> {
    if i < 1 || i > j {
        return Err(Error::BadRange { i, j });
    }
    let threshold = burn_in_threshold(generator, zeta);
    if i <= threshold {
        return Err(Error::BeforeBurnIn { i, threshold });
    }
    if !decomposition.is_diagonalizable() {
        return Err(Error::NotDiagonalizable);
    }
    let m = generator.dim();
    let mut diag: Vec<c64> = decomposition.eigenvalues().iter().map(|_| c64::new(1.0, 0.0)).collect();
    for l in i..=j {
        let scale = (l as f64).powf(-zeta);
        for (d, lambda) in diag.iter_mut().zip(decomposition.eigenvalues().iter()) {
            *d *= c64::new(1.0, 0.0) + lambda * scale;
        }
    }
    let diag = Array2::from_diag(&Array1::from_vec(diag));
    let product = decomposition
        .right_vectors()
        .dot(&diag)
        .dot(decomposition.inverse_vectors());
    let mut real = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            let v = product[[i, j]];
            if v.im.abs() > 1e-8 {
                return Err(Error::SingularSolve(format!(
                    "kernel product has imaginary residue {}",
                    v.im
                )));
            }
            real[[i, j]] = v.re;
        }
    }
    StochasticMatrix::with_tolerance(real, 1e-8)
}

/// Convenience wrapper computing the decomposition on the fly.
pub fn kernel_product_spectral_fresh(
    generator: &GeneratorMatrix,
    zeta: f64,
    i: u64,
    j: u64,
) -> Result<StochasticMatrix> {
    let decomposition = SpectralDecomposition::compute(generator)?;
    kernel_product_spectral(&decomposition, generator, zeta, i, j)
}

/// Dobrushin contraction coefficient: half the maximum total-variation
/// distance between rows, equivalently `1 - min_{x,y} sum_z min(P(x,z), P(y,z))`.
pub fn contraction_coefficient(p: &StochasticMatrix) -> f64 {
    let m = p.dim();
    let mut min_overlap = f64::INFINITY;
    for x in 0..m {
        for y in (x + 1)..m {
            let overlap: f64 = (0..m).map(|z| p.entry(x, z).min(p.entry(y, z))).sum();
            min_overlap = min_overlap.min(overlap);
        }
    }
    if min_overlap.is_infinite() {
        // single row: rows trivially equal
        return 0.0;
    }
    (1.0 - min_overlap).clamp(0.0, 1.0)
}

/// Tail sum `sum_{n > big_n} n^{-zeta}` by Euler-Maclaurin around `big_n + 1`.
fn power_tail_sum(big_n: u64, zeta: f64) -> f64 {
    let a = (big_n + 1) as f64;
    a.powf(1.0 - zeta) / (zeta - 1.0) + 0.5 * a.powf(-zeta) + zeta / 12.0 * a.powf(-zeta - 1.0)
        - zeta * (zeta + 1.0) * (zeta + 2.0) / 720.0 * a.powf(-zeta - 3.0)
}

/// Limit of the marginal distribution of the position when `zeta > 1`:
/// `pi^t prod_{n >= 1} P_n`, the infinite product truncated at `N` with the
/// remaining tail applied as `exp(G * sum_{n > N} n^{-zeta})`.
///
/// The truncation point is chosen so the second-order error of the tail
/// exponential, of size `||G||^2 N^{1-2 zeta} / (2 zeta - 1)`, is below
/// `tol / 2`; the returned vector sums to 1.
pub fn limit_marginal_zeta_gt1(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    tol: f64,
) -> Result<Array1<f64>> {
    if zeta <= 1.0 {
        return Err(Error::ZetaNotGreaterThanOne { zeta });
    }
    crate::core::validate_probability_vector(pi)?;
    let m = generator.dim();
    if pi.len() != m {
        return Err(Error::Invalid("pi length does not match generator".into()));
    }
    let tol = tol.max(1e-14);

    // ||G|| in the max-row-sum norm is twice the largest diagonal rate
    let g_norm = 2.0 * generator.max_abs_diagonal();
    let exponent = 1.0 / (2.0 * zeta - 1.0);
    let n_bound = (g_norm * g_norm / ((2.0 * zeta - 1.0) * tol * 0.5)).powf(exponent);
    let big_n = (n_bound.ceil() as u64).clamp(1_000, 2_000_000);

    let threshold = burn_in_threshold(generator, zeta);
    let mut v = pi.clone();
    for n in (threshold + 1)..=big_n {
        let scale = (n as f64).powf(-zeta);
        // v <- v (I + G/n^zeta)
        let delta = v.dot(generator.entries());
        v = &v + &(delta * scale);
    }

    // tail: v <- v exp(G * s), s tiny, plain Taylor series converges fast
    let s = power_tail_sum(big_n, zeta);
    let tail = matrix_exponential_small(generator.entries(), s);
    v = v.dot(&tail);

    for x in v.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-9 {
                return Err(Error::SingularSolve(format!(
                    "limit marginal entry {x} below zero"
                )));
            }
            *x = 0.0;
        }
    }
    let sum: f64 = v.sum();
    Ok(v / sum)
}

/// Cross-check route for diagonalizable generators: the eigen-product form
/// `pi^t V Diag(prod_n (1 + lambda_k/n^zeta)) V^{-1}` with the same
/// truncation-plus-exponential tail treatment done per eigenvalue.
pub fn limit_marginal_eigenproduct(
    generator: &GeneratorMatrix,
    zeta: f64,
    pi: &Array1<f64>,
    tol: f64,
) -> Result<Array1<f64>> {
    if zeta <= 1.0 {
        return Err(Error::ZetaNotGreaterThanOne { zeta });
    }
    let decomposition = SpectralDecomposition::compute(generator)?;
    if !decomposition.is_diagonalizable() {
        return Err(Error::NotDiagonalizable);
    }
    let m = generator.dim();
    let tol = tol.max(1e-14);
    let g_norm = 2.0 * generator.max_abs_diagonal();
    let exponent = 1.0 / (2.0 * zeta - 1.0);
    let n_bound = (g_norm * g_norm / ((2.0 * zeta - 1.0) * tol * 0.5)).powf(exponent);
    let big_n = (n_bound.ceil() as u64).clamp(1_000, 2_000_000);
    let threshold = burn_in_threshold(generator, zeta);

    let s = power_tail_sum(big_n, zeta);
    let mut diag: Vec<c64> = Vec::with_capacity(m);
    for lambda in decomposition.eigenvalues() {
        let mut d = c64::new(1.0, 0.0);
        for n in (threshold + 1)..=big_n {
            d *= c64::new(1.0, 0.0) + lambda * (n as f64).powf(-zeta);
        }
        d *= (lambda * s).exp();
        diag.push(d);
    }
    let diag = Array2::from_diag(&Array1::from_vec(diag));
    let pi_c: Array1<c64> = pi.iter().map(|&x| c64::new(x, 0.0)).collect();
    let out = pi_c
        .dot(decomposition.right_vectors())
        .dot(&diag)
        .dot(decomposition.inverse_vectors());
    let mut real = Array1::zeros(m);
    for (i, v) in out.iter().enumerate() {
        if v.im.abs() > 1e-8 {
            return Err(Error::SingularSolve(format!(
                "eigen-product marginal has imaginary residue {}",
                v.im
            )));
        }
        real[i] = v.re.max(0.0);
    }
    let sum: f64 = real.sum();
    Ok(real / sum)
}

/// `exp(A * s)` by Taylor series; intended for `||A * s||` well below 1.
fn matrix_exponential_small(a: &Array2<f64>, s: f64) -> Array2<f64> {
    let m = a.nrows();
    let scaled = a * s;
    let mut result = Array2::eye(m);
    let mut term = Array2::eye(m);
    for k in 1..60 {
        term = term.dot(&scaled) / k as f64;
        let size = matrix_max_norm(&term);
        result += &term;
        if size < 1e-18 {
            break;
        }
    }
    result
}

fn matrix_max_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn matrix_max_norm_c(a: &Array2<c64>) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}
