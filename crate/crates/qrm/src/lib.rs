//! Numerical evaluation of the quantum Rabi model heat kernel
//! `H = a†a + Δσ_z + g(a + a†)σ_x` (with ω = 1) from its closed-form
//! series of iterated simplex integrals, together with the finite-N
//! Trotter kernels the series is built from, partition functions, and
//! independent brute-force / spectral oracles for cross-validation.
//!
//! Layout:
//! - [`core`]: shared domain types, the Mehler-type kernel K₀, the
//!   single-step kernel D, hyperbolic 2×2 builders.
//! - [`combinatorics`]: the Z₂ᵏ harmonic-analysis toolbox (φ_k and its
//!   q-analogue, hypercube Fourier transforms, even-graph sets V₀, and
//!   the summation identities), all with brute-force verifiers.
//! - [`quadrature`]: integration over ordered simplices
//!   {0 ≤ μ₁ ≤ … ≤ μ_λ ≤ 1} (nested Gauss–Legendre and sorted QMC).
//! - [`trotter`]: the exact N-step kernel D_N as a 2^N path sum.
//! - [`series`]: the heat-kernel series (θ_λ, ξ_λ, adaptive truncation)
//!   and the parity kernels K_±.
//! - [`thermo`]: partition functions Z and Z_±.
//! - [`oracle`]: truncated Fock-space spectral ground truth with an
//!   in-repo dense symmetric eigensolver ([`linalg`]).
//! - [`checks`]: named verification suites over all of the above,
//!   shared by the CLI `verify` command and the acceptance tests.

pub mod checks;
pub mod combinatorics;
pub mod core;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod series;
pub mod thermo;
pub mod trotter;

use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Clone, Error)]
pub enum QrmError {
    /// A constructor or operation was handed an argument outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A computation produced a non-finite intermediate or final value.
    #[error("overflow / non-finite value in {0}")]
    Overflow(String),
    /// Refusal to run an exponential-size enumeration past the supported cap.
    #[error("path sum for N = {n} refused: {cost} paths exceed the N ≤ {cap} cap")]
    PathSumTooLarge { n: usize, cap: usize, cost: u128 },
    /// A quadrature backend hit a non-finite sample or a malformed rule.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    /// The iterative eigensolver did not reach its convergence target.
    #[error("eigensolver failed to converge (residual {residual:.3e})")]
    EigenFailure { residual: f64 },
    /// The Fock cutoff certification loop hit its cap before converging.
    #[error("Fock cutoff insufficient: doubling delta {delta:.3e} above tolerance {tol:.3e} at n_cut = {n_cut}")]
    CutoffInsufficient { n_cut: usize, delta: f64, tol: f64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, QrmError>;
