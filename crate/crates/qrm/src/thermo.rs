//! Partition functions: the spectral trace Z(β) = Tr e^{−βH} of the
//! Rabi Hamiltonian and of its two parity sectors.
//!
//! Integrating tr K(x,x,β) over the line kills the odd-λ terms of the
//! kernel series (their 2×2 bracket is traceless) and turns each even
//! θ into a Gaussian moment, leaving
//!
//! ```text
//!   Z(β) = 2e^{g²β}/(1−e^{−β}) [ 1 + e^{−2g² coth(β/2)} Σ_{λ≥1} (βΔ)^{2λ}
//!            ∫ e^{4g² cosh(β(1−μ_{2λ}))/sinh β + ξ_{2λ} + ψ⁻_{2λ}} dμ ],
//! ```
//!
//! with the Gaussian-moment functions ψ_λ^± defined below. The parity
//! traces Z_± keep, in addition, the odd-λ block (through K₀(x,−x) and
//! ψ⁺) with opposite signs, so Z_+ + Z_− = Z termwise.
//!
//! β plays the role of t throughout; ξ is shared with the kernel-series
//! module rather than re-derived.

use crate::core::{ModelParams, Parity, SimplexPoint};
use crate::quadrature::{simplex_integrate, SimplexRule};
use crate::series::{
    effective_rule, envelope_tail, gate_exponent, series_prefactor_ln, xi_lambda, SeriesResult,
    TruncationPolicy,
};
use crate::{QrmError, Result};

/// An inverse temperature paired with model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub beta: f64,
    pub params: ModelParams,
}

impl ThermoPoint {
    pub fn new(beta: f64, params: ModelParams) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(QrmError::InvalidParameter(format!(
                "inverse temperature must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { beta, params })
    }
}

/// The Gaussian-moment function
///
/// ```text
///   ψ_λ^±(μ, t; g) = (g²/sinh t) [ Σ_{γ=0}^{λ} (−1)^γ
///                      (e^{t(1/2−μ_γ)} ± e^{t(μ_γ−1/2)}) ]²,
/// ```
///
/// μ₀ = 0, produced by ∫ e^{−αx²} cosh(ηx) dx = √(π/α) e^{η²/4α} when
/// the diagonal θ is integrated out. Always ≥ 0; `sign` selects the ±.
pub fn psi_lambda_pm(mu: &SimplexPoint, t: f64, g: f64, sign: Parity) -> f64 {
    let s = sign.sign();
    let pref = g * g / t.sinh(); // = 2g² e^{−t}/(1−e^{−2t})
    let eh = (0.5 * t).exp();
    let mut acc = 0.0;
    let mut sign_gamma = 1.0;
    for gamma in 0..=mu.lambda() {
        let w = (t * mu.mu(gamma)).exp(); // e^{t μ_γ}
        acc += sign_gamma * (eh / w + s * w / eh);
        sign_gamma = -sign_gamma;
    }
    pref * acc * acc
}

/// Sup of ψ⁻ over even-length tuples. The bracket alternates a strictly
/// decreasing w(s) = 2sinh(t(1/2−s)) an odd number of times, which pins
/// it to [w(0) − TV, w(0)] = [−2sinh(t/2), 2sinh(t/2)]; squaring and
/// the half-angle identity give 2g² tanh(t/2).
fn psi_minus_even_max(t: f64, g: f64) -> f64 {
    2.0 * g * g * (0.5 * t).tanh()
}

/// Sup of ψ⁺ over odd-length tuples. The bracket pairs increments of
/// the V-shaped w(s) = 2cosh(t(1/2−s)) over disjoint intervals, so it
/// is bounded by the total variation 4(cosh(t/2) − 1).
fn psi_plus_odd_max(t: f64, g: f64) -> f64 {
    let v = 2.0 * ((0.5 * t).cosh() - 1.0);
    g * g / t.sinh() * (2.0 * v) * (2.0 * v)
}

/// Z(β): the even-λ series above, truncated by the shared envelope with
/// the (βΔ)^{2λ}/(2λ)! weight. `per_term` is [leading term, λ=2 term,
/// λ=4 term, …] and `lambda_used` the last λ included.
pub fn partition_function(
    tp: &ThermoPoint,
    policy: &TruncationPolicy,
    rule: &SimplexRule,
) -> Result<SeriesResult<f64>> {
    policy.validate()?;
    let beta = tp.beta;
    let (g, delta) = (tp.params.g, tp.params.delta);
    let ln_pref = std::f64::consts::LN_2 + g * g * beta - (1.0 - (-beta).exp()).ln();

    let term0 = ln_pref.exp();
    if !term0.is_finite() {
        return Err(QrmError::Overflow(format!(
            "partition prefactor e^{{g²β}}/(1−e^{{−β}}) at β = {beta}, g = {g}"
        )));
    }
    let mut value = term0;
    let mut per_term = vec![term0];
    let mut lambda_used = 0usize;

    let bc = &policy.bound_constants;
    let gate_max = 4.0 * g * g * beta.cosh() / beta.sinh();
    let b = ln_pref + bc.gate * gate_max + series_prefactor_ln(true, beta, g)
        + bc.osc * psi_minus_even_max(beta, g);
    let z = beta * delta * bc.xi.exp();
    let mut capped = false;
    let tail_bound;
    let mut lambda = 2usize;
    loop {
        let bound = envelope_tail(b, z, lambda);
        if bound < policy.tol {
            tail_bound = bound;
            break;
        }
        if lambda > policy.lambda_cap {
            tail_bound = bound;
            capped = true;
            break;
        }
        let ln_front =
            ln_pref + lambda as f64 * (beta * delta).ln() + series_prefactor_ln(true, beta, g);
        let eff = effective_rule(rule, lambda);
        let (integral, _se) = simplex_integrate(&eff, lambda, |mu: &SimplexPoint| {
            (ln_front
                + gate_exponent(true, mu, beta, g)
                + xi_lambda(mu, beta, g)
                + psi_lambda_pm(mu, beta, g, Parity::Minus))
            .exp()
        })?;
        value += integral;
        per_term.push(integral);
        lambda_used = lambda;
        lambda += 2;
    }
    Ok(SeriesResult { value, lambda_used, tail_bound, per_term, capped })
}

/// Z_±(β): the trace of e^{−βH_±} over one parity sector,
///
/// ```text
///   Z_± = e^{g²β}/(1−e^{−β}) [ 1 + e^{−2g² coth(β/2)} Σ_{λ even ≥ 2}
///            (βΔ)^λ ∫ e^{gate + ξ_λ + ψ⁻_λ} dμ ]
///       ∓ e^{g²β} e^{−2g² tanh(β/2)}/(1+e^{−β}) Σ_{λ odd}
///            (βΔ)^λ ∫ e^{ξ_λ + ψ⁺_λ} dμ.
/// ```
///
/// `per_term` interleaves the two blocks in λ order with the odd terms
/// already signed, so summing the results for both parities cancels
/// them and reproduces Z exactly termwise.
pub fn parity_partition(
    tp: &ThermoPoint,
    parity: Parity,
    policy: &TruncationPolicy,
    rule: &SimplexRule,
) -> Result<SeriesResult<f64>> {
    policy.validate()?;
    let beta = tp.beta;
    let (g, delta) = (tp.params.g, tp.params.delta);
    let em = (-beta).exp();
    let ln_even = g * g * beta - (1.0 - em).ln();
    let ln_odd = g * g * beta - (1.0 + em).ln() + series_prefactor_ln(false, beta, g);
    let odd_coeff = -parity.sign();

    let term0 = ln_even.exp();
    if !term0.is_finite() {
        return Err(QrmError::Overflow(format!(
            "parity partition prefactor at β = {beta}, g = {g}"
        )));
    }
    let mut value = term0;
    let mut per_term = vec![term0];
    let mut lambda_used = 0usize;

    let bc = &policy.bound_constants;
    let gate_max = 4.0 * g * g * beta.cosh() / beta.sinh();
    let b_even = ln_even + bc.gate * gate_max + series_prefactor_ln(true, beta, g)
        + bc.osc * psi_minus_even_max(beta, g);
    let b_odd = ln_odd + bc.osc * psi_plus_odd_max(beta, g);
    let b = b_even.max(b_odd);
    let z = beta * delta * bc.xi.exp();
    let mut capped = false;
    let tail_bound;
    let mut lambda = 1usize;
    loop {
        let bound = envelope_tail(b, z, lambda);
        if bound < policy.tol {
            tail_bound = bound;
            break;
        }
        if lambda > policy.lambda_cap {
            tail_bound = bound;
            capped = true;
            break;
        }
        let even = lambda % 2 == 0;
        let ln_base = if even { ln_even + series_prefactor_ln(true, beta, g) } else { ln_odd };
        let ln_front = ln_base + lambda as f64 * (beta * delta).ln();
        let psi_sign = if even { Parity::Minus } else { Parity::Plus };
        let eff = effective_rule(rule, lambda);
        let (integral, _se) = simplex_integrate(&eff, lambda, |mu: &SimplexPoint| {
            (ln_front
                + gate_exponent(even, mu, beta, g)
                + xi_lambda(mu, beta, g)
                + psi_lambda_pm(mu, beta, g, psi_sign))
            .exp()
        })?;
        let term = if even { integral } else { odd_coeff * integral };
        value += term;
        per_term.push(term);
        lambda_used = lambda;
        lambda += 1;
    }
    Ok(SeriesResult { value, lambda_used, tail_bound, per_term, capped })
}
