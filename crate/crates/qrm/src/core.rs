//! Shared domain types and the closed-form building blocks every other
//! module leans on: the Mehler-type kernel K₀, the one-step product
//! kernel D(x,y,t), and hyperbolic 2×2 matrix builders.
//!
//! Conventions fixed here once and for all:
//! - ω = 1 (frequency rescaling is a non-goal),
//! - σ_z = diag(1, −1), σ_x = [[0,1],[1,0]], spin index 1 = "up",
//! - bit strings are 1-indexed when they mirror a function s(1..k),
//! - the simplex convention μ₀ = 0 lives in [`SimplexPoint::mu`] and is
//!   never repeated at call sites.

use crate::{QrmError, Result};

/// Physical parameters of the model: coupling `g` and level splitting
/// `delta` (both dimensionless, both ≥ 0; ω is fixed to 1).
///
/// Negative splittings are handled by the parity-swap helpers in
/// [`crate::series`], never by this type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub g: f64,
    pub delta: f64,
}

impl ModelParams {
    pub fn new(g: f64, delta: f64) -> Result<Self> {
        if !g.is_finite() || g < 0.0 {
            return Err(QrmError::InvalidParameter(format!(
                "coupling g must be finite and ≥ 0, got {g}"
            )));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(QrmError::InvalidParameter(format!(
                "splitting delta must be finite and ≥ 0, got {delta}"
            )));
        }
        Ok(Self { g, delta })
    }
}

/// One evaluation point (x, y, t) of a kernel; Euclidean time t > 0 is
/// enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl EvalPoint {
    pub fn new(x: f64, y: f64, t: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(QrmError::InvalidParameter(format!(
                "positions must be finite, got x = {x}, y = {y}"
            )));
        }
        if !t.is_finite() || t <= 0.0 {
            return Err(QrmError::InvalidParameter(format!(
                "time t must be finite and > 0, got {t}"
            )));
        }
        Ok(Self { x, y, t })
    }

    /// Same point with both positions negated (used by parity identities).
    pub fn reflected(&self) -> Self {
        Self { x: -self.x, y: -self.y, t: self.t }
    }

    /// Same point with y negated (the K₀(x,−y) argument of the parity kernels).
    pub fn y_reflected(&self) -> Self {
        Self { x: self.x, y: -self.y, t: self.t }
    }
}

/// Parity label for the invariant subspaces of the reflection symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    /// +1 for `Plus`, −1 for `Minus`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }
}

/// A real 2×2 kernel value at one (x, y, t) point, laid out as
/// [[k11, k12], [k21, k22]] over the spin basis (up, down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel2x2 {
    pub k11: f64,
    pub k12: f64,
    pub k21: f64,
    pub k22: f64,
}

impl Kernel2x2 {
    pub const ZERO: Self = Self { k11: 0.0, k12: 0.0, k21: 0.0, k22: 0.0 };
    pub const IDENTITY: Self = Self { k11: 1.0, k12: 0.0, k21: 0.0, k22: 1.0 };

    pub fn new(k11: f64, k12: f64, k21: f64, k22: f64) -> Self {
        Self { k11, k12, k21, k22 }
    }

    pub fn transpose(&self) -> Self {
        Self { k11: self.k11, k12: self.k21, k21: self.k12, k22: self.k22 }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { k11: c * self.k11, k12: c * self.k12, k21: c * self.k21, k22: c * self.k22 }
    }

    /// Right-multiplication by diag(d1, d2): scales column 1 by d1 and
    /// column 2 by d2.
    pub fn col_scale(&self, d1: f64, d2: f64) -> Self {
        Self { k11: self.k11 * d1, k12: self.k12 * d2, k21: self.k21 * d1, k22: self.k22 * d2 }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            k11: self.k11 + other.k11,
            k12: self.k12 + other.k12,
            k21: self.k21 + other.k21,
            k22: self.k22 + other.k22,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            k11: self.k11 - other.k11,
            k12: self.k12 - other.k12,
            k21: self.k21 - other.k21,
            k22: self.k22 - other.k22,
        }
    }

    /// Ordinary 2×2 matrix product self · other.
    pub fn matmul(&self, other: &Self) -> Self {
        Self {
            k11: self.k11 * other.k11 + self.k12 * other.k21,
            k12: self.k11 * other.k12 + self.k12 * other.k22,
            k21: self.k21 * other.k11 + self.k22 * other.k21,
            k22: self.k21 * other.k12 + self.k22 * other.k22,
        }
    }

    pub fn det(&self) -> f64 {
        self.k11 * self.k22 - self.k12 * self.k21
    }

    pub fn max_abs(&self) -> f64 {
        self.k11.abs().max(self.k12.abs()).max(self.k21.abs()).max(self.k22.abs())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.k11.is_finite() && self.k12.is_finite() && self.k21.is_finite() && self.k22.is_finite()
    }
}

/// An element of Z₂ᵏ. Stored 0-based internally; the 1-based accessor
/// [`BitString::bit1`] mirrors the s(1..k) / ρ_1..ρ_k function notation
/// so formulas can be transcribed without index shifts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(QrmError::InvalidParameter("bit string entries must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(k: usize) -> Self {
        Self { bits: vec![0; k] }
    }

    pub fn ones(k: usize) -> Self {
        Self { bits: vec![1; k] }
    }

    /// Builds the length-k string whose i-th entry (1-based) is bit i−1
    /// of `index`; the LSB of `index` is the first entry. Requires k ≤ 64.
    pub fn from_index(k: usize, index: u64) -> Self {
        assert!(k <= 64, "from_index supports k ≤ 64");
        let bits = (0..k).map(|i| ((index >> i) & 1) as u8).collect();
        Self { bits }
    }

    /// Inverse of [`BitString::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len() <= 64, "to_index supports k ≤ 64");
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of ones |ρ|.
    pub fn norm(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// 1-based entry access: `bit1(i)` is s(i) for i ∈ 1..=k.
    pub fn bit1(&self, i: usize) -> u8 {
        assert!(
            (1..=self.len()).contains(&i),
            "1-based index {i} out of range for length {}",
            self.len()
        );
        self.bits[i - 1]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Strictly increasing 1-based positions j₁ < … < j_{|ρ|} of the ones.
    pub fn ones_positions(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i + 1))
            .collect()
    }

    /// The prefix of the first j entries (j ≤ k).
    pub fn prefix(&self, j: usize) -> Self {
        assert!(j <= self.len(), "prefix length {j} exceeds string length {}", self.len());
        Self { bits: self.bits[..j].to_vec() }
    }

    /// The string with one extra bit v appended at the end.
    pub fn append(&self, v: u8) -> Self {
        assert!(v <= 1, "appended bit must be 0 or 1");
        let mut bits = self.bits.clone();
        bits.push(v);
        Self { bits }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|&b| 1 - b).collect() }
    }

    /// Componentwise sum mod 2 (group law of Z₂ᵏ).
    pub fn add_mod2(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(QrmError::InvalidParameter(format!(
                "length mismatch in Z₂ᵏ addition: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| (a + b) % 2)
                .collect(),
        })
    }
}

/// An ordered tuple 0 ≤ μ₁ ≤ … ≤ μ_λ ≤ 1 over which the iterated
/// integrals run. λ = 0 encodes the empty tuple. The convention μ₀ = 0
/// is part of the accessor [`SimplexPoint::mu`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    mu: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        let mut prev = 0.0f64;
        for (i, &m) in mu.iter().enumerate() {
            if !m.is_finite() || !(0.0..=1.0).contains(&m) {
                return Err(QrmError::InvalidParameter(format!(
                    "simplex coordinate μ_{} = {m} outside [0, 1]",
                    i + 1
                )));
            }
            if m < prev {
                return Err(QrmError::InvalidParameter(format!(
                    "simplex coordinates not ordered: μ_{} = {m} < μ_{} = {prev}",
                    i + 1,
                    i
                )));
            }
            prev = m;
        }
        Ok(Self { mu })
    }

    pub fn empty() -> Self {
        Self { mu: Vec::new() }
    }

    /// Dimension λ.
    pub fn lambda(&self) -> usize {
        self.mu.len()
    }

    /// μ_γ for γ ∈ 0..=λ, with the μ₀ = 0 convention built in.
    pub fn mu(&self, gamma: usize) -> f64 {
        if gamma == 0 {
            0.0
        } else {
            self.mu[gamma - 1]
        }
    }

    /// μ_λ, i.e. the largest coordinate (0 for the empty tuple, by the
    /// μ₀ = 0 convention).
    pub fn last(&self) -> f64 {
        self.mu.last().copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    /// Construction without the ordering check, for quadrature hot loops
    /// that generate coordinates already sorted.
    pub(crate) fn from_vec_unchecked(mu: Vec<f64>) -> Self {
        Self { mu }
    }

    pub(crate) fn set_unchecked(&mut self, idx: usize, value: f64) {
        self.mu[idx] = value;
    }
}

/// Natural logarithm of the Mehler-type kernel K₀(x, y, t; g); always
/// finite for t > 0, so this is the preferred form for exponent
/// assembly.
pub fn mehler_k0_ln(p: &EvalPoint, g: f64) -> f64 {
    let u = (-p.t).exp();
    let w = 1.0 - u * u; // 1 − e^{−2t} ∈ (0, 1)
    g * g * p.t - 0.5 * (std::f64::consts::PI * w).ln()
        - (1.0 + u * u) * (p.x * p.x + p.y * p.y) / (2.0 * w)
        + 2.0 * u * p.x * p.y / w
}

/// The Mehler-type kernel
/// K₀(x,y,t;g) = e^{g²t}/√(π(1−e^{−2t})) ·
///   exp(−(1+e^{−2t})(x²+y²)/(2(1−e^{−2t})) + 2e^{−t}xy/(1−e^{−2t})).
///
/// Strictly positive; errors only if the result is not representable.
pub fn mehler_k0(p: &EvalPoint, g: f64) -> Result<f64> {
    let v = mehler_k0_ln(p, g).exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QrmError::Overflow(format!(
            "mehler_k0 at x = {}, y = {}, t = {}, g = {g}",
            p.x, p.y, p.t
        )))
    }
}

/// e^{ln_scale} · rot_even(θ) (or rot_odd for `even = false`), assembled
/// from the two exponentials e^{ln_scale ± θ} so that large θ with a
/// strongly negative scale never overflows.
pub fn scaled_rot(even: bool, ln_scale: f64, theta: f64) -> Kernel2x2 {
    let ep = (ln_scale + theta).exp();
    let em = (ln_scale - theta).exp();
    let ch = 0.5 * (ep + em); // e^{ln_scale} cosh θ
    let sh = 0.5 * (ep - em); // e^{ln_scale} sinh θ
    if even {
        Kernel2x2::new(ch, -sh, -sh, ch)
    } else {
        Kernel2x2::new(-ch, sh, -sh, ch)
    }
}

/// [[cosh θ, −sinh θ], [−sinh θ, cosh θ]] — the even-λ bracket.
/// Entries overflow to ±∞ for |θ| beyond ~709.
pub fn rot_even(theta: f64) -> Kernel2x2 {
    scaled_rot(true, 0.0, theta)
}

/// [[−cosh θ, sinh θ], [−sinh θ, cosh θ]] — the odd-λ bracket.
pub fn rot_odd(theta: f64) -> Kernel2x2 {
    scaled_rot(false, 0.0, theta)
}

/// The integral kernel of one Trotter step,
/// D(x,y,t) = K₀(x,y,t) · e^{−2g²(1−u)/(1+u)} ·
///   exp(−((1−u)/(1+u)) √2 g (x+y) σ_x) · e^{−tΔσ_z},  u = e^{−t}.
pub fn single_step_kernel(p: &EvalPoint, params: &ModelParams) -> Result<Kernel2x2> {
    let u = (-p.t).exp();
    let r = (1.0 - u) / (1.0 + u); // tanh(t/2)
    let ln_s = mehler_k0_ln(p, params.g) - 2.0 * params.g * params.g * r;
    let c = r * std::f64::consts::SQRT_2 * params.g * (p.x + p.y);
    // exp(−c σ_x) = [[cosh c, −sinh c], [−sinh c, cosh c]]
    let m = scaled_rot(true, ln_s, c);
    let td = p.t * params.delta;
    let out = m.col_scale((-td).exp(), td.exp());
    if out.is_finite() {
        Ok(out)
    } else {
        Err(QrmError::Overflow(format!(
            "single_step_kernel at x = {}, y = {}, t = {}",
            p.x, p.y, p.t
        )))
    }
}
