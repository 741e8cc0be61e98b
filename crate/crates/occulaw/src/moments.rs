//! Exact limit-law moments of the occupation distribution at `zeta = 1`,
//! via the permutation-resolvent sum, plus the Dirichlet special case:
//! the constant-column generator built from positive weights, its closed-form
//! resolvent, Dirichlet moments by rising factorials, and the vertex-moment
//! recursion.

use ndarray::Array2;

use crate::core::{GeneratorMatrix, MultiIndex};
use crate::error::{Error, Result};
use crate::spectral::{resolvent, stationary_distribution, ResolventMatrix};

/// Default cap on the total degree; the permutation enumeration is factorial.
pub const DEFAULT_DEGREE_CAP: u32 = 10;

/// Positive weight vector `theta` with its sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    theta: Vec<f64>,
    theta_bar: f64,
}

impl ThetaParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::TooSmall { m: theta.len() });
        }
        for (index, &value) in theta.iter().enumerate() {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::NonPositiveTheta { index, value });
            }
        }
        let theta_bar = theta.iter().sum();
        Ok(ThetaParams { theta, theta_bar })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_bar(&self) -> f64 {
        self.theta_bar
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// How a moment value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    PermutationFormula,
    DirichletClosedForm,
    VertexRecursion,
}

impl MomentMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            MomentMethod::PermutationFormula => "permutation_formula",
            MomentMethod::DirichletClosedForm => "dirichlet_closed_form",
            MomentMethod::VertexRecursion => "vertex_recursion",
        }
    }
}

/// A computed moment together with its multi-index and provenance.
#[derive(Debug, Clone)]
pub struct MomentValue {
    pub value: f64,
    pub gamma: MultiIndex,
    pub method: MomentMethod,
}

/// Iterator over the distinct arrangements of the multiset
/// `{1^gamma_1, ..., m^gamma_m}` in lexicographic order; each arrangement
/// carries multiplicity `prod_k gamma_k!`, and the multiplicities total
/// `gamma_bar!`.
pub struct MultisetPermutations {
    current: Option<Vec<u8>>,
    pub multiplicity: f64,
}

impl MultisetPermutations {
    fn next_permutation(a: &mut [u8]) -> bool {
        if a.len() < 2 {
            return false;
        }
        let mut i = a.len() - 1;
        while i > 0 && a[i - 1] >= a[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = a.len() - 1;
        while a[j] <= a[i - 1] {
            j -= 1;
        }
        a.swap(i - 1, j);
        a[i..].reverse();
        true
    }
}

impl Iterator for MultisetPermutations {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let current = self.current.take()?;
        let mut next = current.clone();
        if Self::next_permutation(&mut next) {
            self.current = Some(next);
        }
        Some(current)
    }
}

/// Distinct permutations of the multiset described by `gamma`, with their
/// common multiplicity, refusing degrees above `cap`.
pub fn multiset_permutations(gamma: &MultiIndex, cap: u32) -> Result<MultisetPermutations> {
    let degree = gamma.total();
    if degree > cap {
        return Err(Error::DegreeOverflow { degree, cap });
    }
    let mut start = Vec::with_capacity(degree as usize);
    for (state, &count) in gamma.gamma().iter().enumerate() {
        for _ in 0..count {
            start.push(state as u8);
        }
    }
    let multiplicity = gamma
        .gamma()
        .iter()
        .map(|&g| factorial(g))
        .product();
    Ok(MultisetPermutations {
        current: Some(start),
        multiplicity,
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Moment of the `zeta = 1` limit law: `nu_G(i)` for a first moment, and for
/// total degree >= 2 the multiplicity-weighted sum over distinct arrangements
/// `sigma` of `nu_G(sigma_1) prod_i (iI - G)^{-1}(sigma_i, sigma_{i+1})`,
/// divided by the total degree.
pub fn limit_moment(generator: &GeneratorMatrix, gamma: &MultiIndex) -> Result<MomentValue> {
    limit_moment_capped(generator, gamma, DEFAULT_DEGREE_CAP)
}

pub fn limit_moment_capped(
    generator: &GeneratorMatrix,
    gamma: &MultiIndex,
    cap: u32,
) -> Result<MomentValue> {
    let m = generator.dim();
    if gamma.len() != m {
        return Err(Error::Invalid(format!(
            "gamma has {} coordinates, generator has {m} states",
            gamma.len()
        )));
    }
    let degree = gamma.total();
    if degree > cap {
        return Err(Error::DegreeOverflow { degree, cap });
    }
    let nu = stationary_distribution(generator)?;
    if degree == 1 {
        let i = gamma.gamma().iter().position(|&g| g == 1).expect("degree 1");
        return Ok(MomentValue {
            value: nu[i],
            gamma: gamma.clone(),
            method: MomentMethod::PermutationFormula,
        });
    }

    // resolvents (iI - G)^{-1} for i = 1..degree-1, computed once
    let resolvents: Vec<ResolventMatrix> = (1..degree)
        .map(|i| resolvent(generator, i as f64))
        .collect::<Result<_>>()?;

    let perms = multiset_permutations(gamma, cap)?;
    let multiplicity = perms.multiplicity;
    let mut sum = 0.0;
    for sigma in perms {
        let mut term = nu[sigma[0] as usize];
        for (i, window) in sigma.windows(2).enumerate() {
            term *= resolvents[i].entry(window[0] as usize, window[1] as usize);
        }
        sum += term;
    }
    Ok(MomentValue {
        value: multiplicity * sum / degree as f64,
        gamma: gamma.clone(),
        method: MomentMethod::PermutationFormula,
    })
}

/// Generator whose off-diagonal column-`j` entries all equal `theta_j`
/// (diagonal `theta_i - theta_bar`).
pub fn theta_generator(theta: &ThetaParams) -> Result<GeneratorMatrix> {
    let m = theta.len();
    let mut entries = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            entries[[i, j]] = if i == j {
                theta.theta()[i] - theta.theta_bar()
            } else {
                theta.theta()[j]
            };
        }
    }
    GeneratorMatrix::validate(&entries)
}

/// Dirichlet moment: `prod_i rising(theta_i, gamma_i) / rising(theta_bar, gamma_bar)`.
///
/// Computed in log space when `theta_bar + gamma_bar > 30` to avoid overflow.
pub fn dirichlet_moment(theta: &ThetaParams, gamma: &MultiIndex) -> Result<f64> {
    if gamma.len() != theta.len() {
        return Err(Error::Invalid(format!(
            "gamma has {} coordinates, theta has {}",
            gamma.len(),
            theta.len()
        )));
    }
    let degree = gamma.total();
    if degree < 1 {
        return Err(Error::Invalid("total degree must be >= 1".into()));
    }
    if theta.theta_bar() + degree as f64 > 30.0 {
        let mut log_num = 0.0;
        for (t, &g) in theta.theta().iter().zip(gamma.gamma()) {
            for k in 0..g {
                log_num += (t + k as f64).ln();
            }
        }
        let mut log_den = 0.0;
        for k in 0..degree {
            log_den += (theta.theta_bar() + k as f64).ln();
        }
        Ok((log_num - log_den).exp())
    } else {
        let mut num = 1.0;
        for (t, &g) in theta.theta().iter().zip(gamma.gamma()) {
            for k in 0..g {
                num *= t + k as f64;
            }
        }
        let mut den = 1.0;
        for k in 0..degree {
            den *= theta.theta_bar() + k as f64;
        }
        Ok(num / den)
    }
}

/// Closed-form resolvent of the theta generator: `(lI - Theta)^{-1} =
/// F_{l+1} / (l (l + theta_bar))` where `F_{l+1}` has `theta_k` off the
/// diagonal and `theta_j + l` on it.
pub fn theta_resolvent_closed_form(theta: &ThetaParams, l: u32) -> Result<ResolventMatrix> {
    if l < 1 {
        return Err(Error::Invalid("l must be >= 1".into()));
    }
    let m = theta.len();
    let l_f = l as f64;
    let scale = 1.0 / (l_f * (l_f + theta.theta_bar()));
    let mut matrix = Array2::zeros((m, m));
    for j in 0..m {
        for k in 0..m {
            let f = if j == k {
                theta.theta()[j] + l_f
            } else {
                theta.theta()[k]
            };
            matrix[[j, k]] = f * scale;
        }
    }
    ResolventMatrix::from_parts(l_f, matrix)
}

/// Moments of one vertex coordinate by the diagonal-resolvent recursion:
/// `alpha_{l,1} = nu_G(l)`, `alpha_{l,k+1} = (I - G/k)^{-1}(l,l) alpha_{l,k}`.
pub fn vertex_moment_sequence(
    generator: &GeneratorMatrix,
    l: usize,
    big_k: u32,
) -> Result<Vec<f64>> {
    if l >= generator.dim() {
        return Err(Error::Invalid(format!(
            "state {l} out of range for m = {}",
            generator.dim()
        )));
    }
    if big_k < 1 {
        return Err(Error::Invalid("K must be >= 1".into()));
    }
    let nu = stationary_distribution(generator)?;
    let mut seq = Vec::with_capacity(big_k as usize);
    let mut alpha = nu[l];
    seq.push(alpha);
    for k in 1..big_k {
        // (I - G/k)^{-1}(l,l) = k (kI - G)^{-1}(l,l)
        let r = resolvent(generator, k as f64)?;
        alpha *= k as f64 * r.entry(l, l);
        seq.push(alpha);
    }
    Ok(seq)
}

impl ResolventMatrix {
    /// Assemble from an explicit closed form; verifies nothing beyond shape.
    pub(crate) fn from_parts(x: f64, matrix: Array2<f64>) -> Result<ResolventMatrix> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(ResolventMatrix::new_unchecked(x, matrix))
    }
}
