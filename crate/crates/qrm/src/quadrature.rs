//! Quadrature over the ordered simplex 0 ≤ μ₁ ≤ … ≤ μ_λ ≤ 1.
//!
//! Two complementary rules are provided. Low dimensions use a nested
//! Gauss–Legendre tensor rule obtained by iterating the one-dimensional
//! rule through the telescoping bounds; its cost grows like orderᵠ so
//! the order is trimmed with λ and the rule is capped at λ ≤ 8. Higher
//! dimensions use a randomized quasi-Monte Carlo rule: Halton points,
//! shifted per batch (Cranley–Patterson rotation), sorted into the
//! simplex and divided by λ!.

use crate::core::{Kernel2x2, SimplexPoint};
use crate::{QrmError, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Gauss–Legendre nodes and weights on [0, 1]. Nodes ascend; weights
/// sum to one. Computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_01(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > 100_000 {
        return Err(QrmError::InvalidParameter(format!(
            "Gauss–Legendre order must be in 1..=100000, got {n}"
        )));
    }
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th root of P_n on [−1, 1]
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0f64;
            let mut p1 = 0.0f64;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            // derivative from the standard identity
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        // map [−1, 1] → [0, 1]; roots come out in descending order of z
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

/// Values that can be accumulated by the quadrature drivers.
pub trait IntegrandValue: Clone {
    fn zero() -> Self;
    /// self += a · x
    fn axpy(&mut self, a: f64, x: &Self);
    fn max_abs(&self) -> f64;
    fn finite(&self) -> bool;

    fn scaled(&self, a: f64) -> Self {
        let mut z = Self::zero();
        z.axpy(a, self);
        z
    }

    /// max-abs norm of self − other.
    fn abs_diff(&self, other: &Self) -> f64 {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d.max_abs()
    }
}

impl IntegrandValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl IntegrandValue for [f64; 2] {
    fn zero() -> Self {
        [0.0; 2]
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        self[0] += a * x[0];
        self[1] += a * x[1];
    }
    fn max_abs(&self) -> f64 {
        self[0].abs().max(self[1].abs())
    }
    fn finite(&self) -> bool {
        self[0].is_finite() && self[1].is_finite()
    }
}

impl IntegrandValue for Kernel2x2 {
    fn zero() -> Self {
        Kernel2x2::ZERO
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        self.k11 += a * x.k11;
        self.k12 += a * x.k12;
        self.k21 += a * x.k21;
        self.k22 += a * x.k22;
    }
    fn max_abs(&self) -> f64 {
        Kernel2x2::max_abs(self)
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadMode {
    NestedGauss,
    SortedQmc,
}

/// Dimension cap for the nested Gauss rule (cost is orderᵠ; the order
/// is trimmed per dimension to keep the tensor size near 10⁶).
pub const NESTED_LAMBDA_CAP: usize = 8;
/// Default crossover dimension: nested Gauss up to here, QMC beyond.
pub const DEFAULT_CROSSOVER_LAMBDA: usize = 8;
pub const DEFAULT_NESTED_ORDER: usize = 16;
pub const DEFAULT_QMC_COUNT: usize = 1 << 16;
const QMC_BATCHES: usize = 16;

/// A quadrature rule for the ordered simplex. `order` is the 1-D node
/// count for `NestedGauss` and the total sample count for `SortedQmc`;
/// `seed` only affects the QMC shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexRule {
    pub mode: QuadMode,
    pub order: usize,
    pub seed: u64,
}

impl SimplexRule {
    pub fn nested_gauss(order: usize) -> Result<Self> {
        if !(2..=64).contains(&order) {
            return Err(QrmError::InvalidParameter(format!(
                "nested Gauss order must be in 2..=64, got {order}"
            )));
        }
        Ok(Self { mode: QuadMode::NestedGauss, order, seed: 0 })
    }

    pub fn sorted_qmc(count: usize, seed: u64) -> Result<Self> {
        if !count.is_power_of_two() || !(16..=(1 << 24)).contains(&count) {
            return Err(QrmError::InvalidParameter(format!(
                "QMC sample count must be a power of two in 16..=2^24, got {count}"
            )));
        }
        Ok(Self { mode: QuadMode::SortedQmc, order: count, seed })
    }

    /// The default rule for a given dimension: nested Gauss of order 16
    /// up to the crossover, sorted QMC with 2^16 samples beyond.
    pub fn for_lambda(lambda: usize, seed: u64) -> Self {
        if lambda <= DEFAULT_CROSSOVER_LAMBDA {
            Self { mode: QuadMode::NestedGauss, order: DEFAULT_NESTED_ORDER, seed }
        } else {
            Self { mode: QuadMode::SortedQmc, order: DEFAULT_QMC_COUNT, seed }
        }
    }

    /// The node count actually used at a given dimension. The nested
    /// rule trims its order as λ grows so the tensor cost stays between
    /// 10⁵ and 2·10⁶ nodes (10⁵ at λ = 5, 6⁸ ≈ 1.7·10⁶ at λ = 8).
    pub fn effective_order(&self, lambda: usize) -> usize {
        match self.mode {
            QuadMode::NestedGauss => match lambda {
                0..=4 => self.order,
                5 => self.order.min(10),
                6 => self.order.min(8),
                7 => self.order.min(7),
                _ => self.order.min(6),
            },
            QuadMode::SortedQmc => self.order,
        }
    }
}

fn factorial_f64(n: usize) -> Result<f64> {
    if n > 170 {
        return Err(QrmError::Overflow(format!("{n}! exceeds f64 range")));
    }
    Ok((1..=n).fold(1.0f64, |acc, k| acc * k as f64))
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(k);
    let mut candidate = 2u64;
    while primes.len() < k {
        if primes.iter().all(|&p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut f = inv_base;
    let mut out = 0.0;
    while n > 0 {
        out += (n % base) as f64 * f;
        n /= base;
        f *= inv_base;
    }
    out
}

fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn bad_sample_error(mu: &SimplexPoint) -> QrmError {
    QrmError::QuadratureFailure(format!(
        "integrand returned a non-finite value at μ = {:?}",
        mu.as_slice()
    ))
}

fn nested_pass<V, F>(
    lambda: usize,
    order: usize,
    f: &mut F,
) -> Result<V>
where
    V: IntegrandValue,
    F: FnMut(&SimplexPoint) -> V,
{
    let (nodes, weights) = gauss_legendre_01(order)?;
    let mut buf = SimplexPoint::from_vec_unchecked(vec![0.0; lambda]);
    fn rec<V, F>(
        level: usize,
        upper: f64,
        nodes: &[f64],
        weights: &[f64],
        buf: &mut SimplexPoint,
        f: &mut F,
    ) -> Result<V>
    where
        V: IntegrandValue,
        F: FnMut(&SimplexPoint) -> V,
    {
        if level == 0 {
            let v = f(buf);
            if !v.finite() {
                return Err(bad_sample_error(buf));
            }
            return Ok(v);
        }
        let mut acc = V::zero();
        for (&xi, &w) in nodes.iter().zip(weights) {
            buf.set_unchecked(level - 1, upper * xi);
            let inner: V = rec(level - 1, upper * xi, nodes, weights, buf, f)?;
            acc.axpy(w * upper, &inner);
        }
        Ok(acc)
    }
    rec(lambda, 1.0, &nodes, &weights, &mut buf, f)
}

fn qmc_pass<V, F>(
    lambda: usize,
    count: usize,
    seed: u64,
    f: &mut F,
) -> Result<(V, f64)>
where
    V: IntegrandValue,
    F: FnMut(&SimplexPoint) -> V,
{
    let per_batch = (count / QMC_BATCHES).max(1);
    let bases = first_primes(lambda);
    let inv_fact = 1.0 / factorial_f64(lambda)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut shifts = vec![0.0f64; QMC_BATCHES * lambda];
    for s in shifts.iter_mut() {
        *s = u64_to_unit(rng.next_u64());
    }
    let mut batch_means: Vec<V> = Vec::with_capacity(QMC_BATCHES);
    let mut coords = vec![0.0f64; lambda];
    let mut point = SimplexPoint::from_vec_unchecked(vec![0.0; lambda]);
    for b in 0..QMC_BATCHES {
        let shift = &shifts[b * lambda..(b + 1) * lambda];
        let mut acc = V::zero();
        for i in 1..=per_batch as u64 {
            for (j, c) in coords.iter_mut().enumerate() {
                let v = radical_inverse(i, bases[j]) + shift[j];
                *c = v - v.floor();
            }
            coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (j, &c) in coords.iter().enumerate() {
                point.set_unchecked(j, c);
            }
            let v = f(&point);
            if !v.finite() {
                return Err(bad_sample_error(&point));
            }
            acc.axpy(1.0, &v);
        }
        batch_means.push(acc.scaled(inv_fact / per_batch as f64));
    }
    let mut mean = V::zero();
    for m in &batch_means {
        mean.axpy(1.0 / QMC_BATCHES as f64, m);
    }
    let mut var = 0.0f64;
    for m in &batch_means {
        let d = m.abs_diff(&mean);
        var += d * d;
    }
    let se = (var / (QMC_BATCHES * (QMC_BATCHES - 1)) as f64).sqrt();
    Ok((mean, se))
}

/// Integrates `f` over the ordered simplex of dimension `lambda` and
/// returns (value, error estimate). For λ = 0 the integral is f(∅) with
/// zero error. The nested Gauss estimate compares against a half-order
/// pass; the QMC estimate is the standard error over 16 shifted batches.
pub fn simplex_integrate_with<V, F>(
    rule: &SimplexRule,
    lambda: usize,
    mut f: F,
) -> Result<(V, f64)>
where
    V: IntegrandValue,
    F: FnMut(&SimplexPoint) -> V,
{
    if lambda == 0 {
        let p = SimplexPoint::empty();
        let v = f(&p);
        if !v.finite() {
            return Err(bad_sample_error(&p));
        }
        return Ok((v, 0.0));
    }
    match rule.mode {
        QuadMode::NestedGauss => {
            if lambda > NESTED_LAMBDA_CAP {
                return Err(QrmError::InvalidParameter(format!(
                    "nested Gauss rule capped at λ ≤ {NESTED_LAMBDA_CAP} (cost orderᵠ); \
                     λ = {lambda} needs the sorted QMC rule"
                )));
            }
            let order = rule.effective_order(lambda);
            let value: V = nested_pass(lambda, order, &mut f)?;
            let coarse: V = nested_pass(lambda, (order / 2).max(2), &mut f)?;
            let err = value.abs_diff(&coarse);
            Ok((value, err))
        }
        QuadMode::SortedQmc => {
            if lambda > 128 {
                return Err(QrmError::InvalidParameter(format!(
                    "QMC rule capped at λ ≤ 128, got {lambda}"
                )));
            }
            qmc_pass(lambda, rule.order, rule.seed, &mut f)
        }
    }
}

/// Scalar convenience wrapper around [`simplex_integrate_with`].
pub fn simplex_integrate<F>(rule: &SimplexRule, lambda: usize, f: F) -> Result<(f64, f64)>
where
    F: FnMut(&SimplexPoint) -> f64,
{
    simplex_integrate_with(rule, lambda, f)
}
