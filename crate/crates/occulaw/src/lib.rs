//! Simulation and exact analysis of time-nonhomogeneous Markov chains whose
//! one-step kernel at time `n` is `I + G/n^zeta` for a generator matrix `G`
//! with strictly positive off-diagonals.
//!
//! The crate covers:
//! - validated generator matrices, kernels, and the burn-in threshold
//!   ([`core`]);
//! - stationary distributions, resolvents, eigendecompositions, exact kernel
//!   products with a spectral fast path, Dobrushin contraction coefficients,
//!   and the `zeta > 1` limit marginal ([`spectral`]);
//! - reproducible seeded Monte Carlo ensembles of occupation vectors
//!   ([`simulate`]);
//! - exact moments of the `zeta = 1` limit occupation law through the
//!   permutation-resolvent sum, with the Dirichlet special case in closed
//!   form ([`moments`]);
//! - exact finite-horizon marginals, occupation laws, and moments by dynamic
//!   programming, used as ground truth ([`oracle`]);
//! - experiment orchestration, the simplex-to-plane map, and CSV/JSON
//!   emission behind the `occulaw` binary ([`cli`]).

pub mod cli;
pub mod core;
pub mod error;
pub mod moments;
pub mod oracle;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
