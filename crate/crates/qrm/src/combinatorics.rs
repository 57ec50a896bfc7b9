//! Combinatorics on Z₂^k underlying the closed-form kernel: the
//! alternating position sum φ and its q-analogue, Fourier transforms of
//! the nearest-neighbour sign couplings, even-degree graph vectors with
//! the hyperbolic product sums they control, and the class decomposition
//! of sign paths by their constant tail.

use crate::core::BitString;
use crate::{QrmError, Result};

/// The q-integer [i]_t = 1 + t + … + t^{i−1} (so [i]_1 = i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QNumber {
    pub i: usize,
    pub t: f64,
}

impl QNumber {
    pub fn value(&self) -> f64 {
        q_number(self.i, self.t)
    }
}

/// [i]_t by direct summation; exact at t = 1.
pub fn q_number(i: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    let mut p = 1.0;
    for _ in 0..i {
        acc += p;
        p *= t;
    }
    acc
}

/// Parities of the suffix sums Σ_{j=i}^k ρ_j for i = 1..=k.
fn suffix_parities(rho: &BitString) -> Vec<u8> {
    let k = rho.len();
    let mut out = vec![0u8; k];
    let mut parity = 0u8;
    for i in (1..=k).rev() {
        parity ^= rho.bit1(i);
        out[i - 1] = parity;
    }
    out
}

/// The alternating position sum φ(ρ) = j_n − j_{n−1} + … ± j_1 over the
/// ascending positions j_1 < … < j_n of the ones of ρ. Always a
/// non-negative integer; φ(∅) = φ(0) = 0.
pub fn varphi(rho: &BitString) -> i64 {
    let pos = rho.ones_positions();
    let mut acc = 0i64;
    let mut sign = 1i64;
    for &j in pos.iter().rev() {
        acc += sign * j as i64;
        sign = -sign;
    }
    acc
}

/// Coefficients c_i ∈ {0, 1} of the q-analogue φ(ρ; t) = Σ_i c_i t^{i−1}:
/// c_i indicates an odd suffix sum Σ_{j≥i} ρ_j.
pub fn varphi_t_coeffs(rho: &BitString) -> Vec<u8> {
    suffix_parities(rho)
}

/// The q-analogue φ(ρ; t) = ½ Σ_{i=1}^k (1 − (−1)^{Σ_{j=i}^k ρ_j}) t^{i−1}.
/// Reduces to [`varphi`] at t = 1.
pub fn varphi_t(rho: &BitString, t: f64) -> f64 {
    let mut acc = 0.0;
    let mut p = 1.0;
    for &c in &suffix_parities(rho) {
        if c == 1 {
            acc += p;
        }
        p *= t;
    }
    acc
}

/// φ(ρ; t) as the alternating sum of q-integers over the one positions:
/// Σ_i (−1)^{i−1} [j_{n+1−i}]_t. Equivalent to [`varphi_t`].
pub fn varphi_t_positions(rho: &BitString, t: f64) -> f64 {
    let pos = rho.ones_positions();
    let mut acc = 0.0;
    let mut sign = 1.0;
    for &j in pos.iter().rev() {
        acc += sign * q_number(j, t);
        sign = -sign;
    }
    acc
}

/// φ(ρ; t) in the product form Σ_i [i]_t ρ_i ∏_{j>i} (1 − 2ρ_j).
/// Equivalent to [`varphi_t`].
pub fn varphi_t_remform(rho: &BitString, t: f64) -> f64 {
    let k = rho.len();
    let mut acc = 0.0;
    // running value of ∏_{j>i}(1−2ρ_j), built from the right
    let mut tail = 1.0;
    for i in (1..=k).rev() {
        if rho.bit1(i) == 1 {
            acc += q_number(i, t) * tail;
        }
        tail *= 1.0 - 2.0 * rho.bit1(i) as f64;
    }
    acc
}

/// The boundary-weighted nearest-neighbour coupling on Z₂^k:
/// g_k^{(v,w)}(s) = 2^{−k} (1+(−1)^{v+s(1)}τ)(1+(−1)^{w+s(k)}τ)
///                    ∏_{i<k} (1+(−1)^{s(i)+s(i+1)}τ),
/// with the k = 0 convention g_0^{(v,w)} = 1 + (−1)^{v+w}τ.
pub fn g_k_direct(s: &BitString, v: u8, w: u8, tau: f64) -> f64 {
    let k = s.len();
    if k == 0 {
        return 1.0 + if (v + w) % 2 == 0 { tau } else { -tau };
    }
    let sgn = |e: u8| if e % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = (1.0 + sgn(v + s.bit1(1)) * tau) * (1.0 + sgn(w + s.bit1(k)) * tau);
    for i in 1..k {
        acc *= 1.0 + sgn(s.bit1(i) + s.bit1(i + 1)) * tau;
    }
    acc / 2f64.powi(k as i32)
}

/// Closed form of the Fourier transform ĝ_k^{(v,w)}(ρ) = Σ_s (−1)^{ρ·s}
/// g_k^{(v,w)}(s):
/// ĝ = (−1)^{v|ρ|} (τ^{φ(ρ)} + (−1)^{v+w} τ^{k+1−φ(ρ)}).
pub fn fourier_g_hat(rho: &BitString, v: u8, w: u8, tau: f64) -> f64 {
    let k = rho.len() as i64;
    let phi = varphi(rho);
    let sign_v = if (v as usize * rho.norm()) % 2 == 0 { 1.0 } else { -1.0 };
    let sign_vw = if (v + w) % 2 == 0 { 1.0 } else { -1.0 };
    sign_v * (tau.powi(phi as i32) + sign_vw * tau.powi((k + 1 - phi) as i32))
}

/// In-place Walsh–Hadamard transform, f̂(ρ) = Σ_s (−1)^{ρ·s} f(s), for
/// data indexed by [`BitString::to_index`]. Length must be a power of two.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "FWHT length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// An edge/loop indicator vector for the complete graph with loops on
/// vertices {1, …, m}: first the m loop entries r_{0,i}, then the
/// m(m−1)/2 edge entries r_{i,j} in lexicographic order
/// (1,2), (1,3), …, (1,m), (2,3), …
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphVector {
    m: usize,
    r: Vec<u8>,
}

impl GraphVector {
    /// Vector length m(m+1)/2 for m vertices.
    pub fn len_for(m: usize) -> usize {
        m * (m + 1) / 2
    }

    pub fn new(m: usize, r: Vec<u8>) -> Result<Self> {
        if r.len() != Self::len_for(m) {
            return Err(QrmError::InvalidParameter(format!(
                "graph vector for m = {m} must have {} entries, got {}",
                Self::len_for(m),
                r.len()
            )));
        }
        if r.iter().any(|&b| b > 1) {
            return Err(QrmError::InvalidParameter("graph vector entries must be 0/1".into()));
        }
        Ok(Self { m, r })
    }

    /// The vector whose entries are the binary digits of `index`
    /// (least significant digit = first entry).
    pub fn from_index(m: usize, index: u64) -> Self {
        let len = Self::len_for(m);
        assert!(len <= 63, "graph vector too long for index construction");
        let r = (0..len).map(|b| ((index >> b) & 1) as u8).collect();
        Self { m, r }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[u8] {
        &self.r
    }

    /// Position of the edge entry r_{i,j} (1 ≤ i < j ≤ m) in the vector.
    pub fn edge_index(m: usize, i: usize, j: usize) -> usize {
        assert!(1 <= i && i < j && j <= m, "edge ({i},{j}) out of range for m = {m}");
        m + (i - 1) * m - i * (i - 1) / 2 + (j - i - 1)
    }

    /// Loop entry r_{0,i}, 1 ≤ i ≤ m.
    pub fn loop_entry(&self, i: usize) -> u8 {
        assert!(1 <= i && i <= self.m);
        self.r[i - 1]
    }

    /// Edge entry r_{i,j}, 1 ≤ i < j ≤ m.
    pub fn edge_entry(&self, i: usize, j: usize) -> u8 {
        self.r[Self::edge_index(self.m, i, j)]
    }

    /// Degree of vertex i with the convention that a loop contributes 1.
    pub fn degree(&self, i: usize) -> usize {
        let mut d = self.loop_entry(i) as usize;
        for j in 1..=self.m {
            if j != i {
                d += self.edge_entry(i.min(j), i.max(j)) as usize;
            }
        }
        d
    }

    pub fn degrees(&self) -> Vec<usize> {
        (1..=self.m).map(|i| self.degree(i)).collect()
    }

    /// All vertex degrees even?
    pub fn is_even(&self) -> bool {
        (1..=self.m).all(|i| self.degree(i) % 2 == 0)
    }

    /// Projection onto the loop block (first m entries).
    pub fn p1(&self) -> BitString {
        BitString::new(self.r[..self.m].to_vec()).expect("loop block is 0/1")
    }

    /// Projection onto the edge block, reinterpreted as a graph vector
    /// on m − 1 vertices (edges (1, j) become the loops of the smaller
    /// vector). Requires m ≥ 1.
    pub fn p2(&self) -> Self {
        assert!(self.m >= 1, "p2 requires at least one vertex");
        Self { m: self.m - 1, r: self.r[self.m..].to_vec() }
    }

    /// The m − 1 entries r_{1,2}, …, r_{1,m}; equals p1 ∘ p2. Requires
    /// m ≥ 2.
    pub fn q1(&self) -> BitString {
        assert!(self.m >= 2, "q1 requires at least two vertices");
        self.p2().p1()
    }

    /// The last (m−1)(m−2)/2 entries as a graph vector on m − 2
    /// vertices; equals p2 ∘ p2. Requires m ≥ 2.
    pub fn q2(&self) -> Self {
        assert!(self.m >= 2, "q2 requires at least two vertices");
        self.p2().p2()
    }
}

/// All even-degree vectors V₀^{(m)}, by brute enumeration and filter of
/// the full cube. Capped at m ≤ 6 (2^21 candidates).
pub fn enumerate_v0(m: usize) -> Result<Vec<GraphVector>> {
    if m > 6 {
        return Err(QrmError::InvalidParameter(format!(
            "V₀ enumeration capped at m ≤ 6 (2^{} candidates at m = {m})",
            GraphVector::len_for(m)
        )));
    }
    let len = GraphVector::len_for(m);
    let mut out = Vec::new();
    for idx in 0..(1u64 << len) {
        let r = GraphVector::from_index(m, idx);
        if r.is_even() {
            out.push(r);
        }
    }
    Ok(out)
}

/// The loop-flip involution σ_ρ(r) = r + (ρ ⊕ 0): adds ρ to the loop
/// block mod 2 and leaves the edge block untouched. Maps V₀ onto V_ρ.
pub fn sigma_rho(r: &GraphVector, rho: &BitString) -> Result<GraphVector> {
    if rho.len() != r.m() {
        return Err(QrmError::InvalidParameter(format!(
            "ρ must have length m = {}, got {}",
            r.m(),
            rho.len()
        )));
    }
    let mut flipped = r.r.clone();
    for i in 0..r.m {
        flipped[i] ^= rho.bit1(i + 1);
    }
    Ok(GraphVector { m: r.m, r: flipped })
}

/// The hyperbolic monomial T^{(r)}(a) = ∏_e cosh(a_e)^{1−r_e} sinh(a_e)^{r_e}
/// over all m(m+1)/2 entries, with `a` in the same layout as `r`.
pub fn t_factor(r: &GraphVector, a: &[f64]) -> f64 {
    assert_eq!(a.len(), r.r.len(), "coefficient vector length mismatch");
    let mut acc = 1.0;
    for (&re, &ae) in r.r.iter().zip(a) {
        acc *= if re == 0 { ae.cosh() } else { ae.sinh() };
    }
    acc
}

/// Both sides of the hyperbolic product-sum identity
///   Σ_{r∈V₀^{(m)}} T^{(r)}(a) ∏_{i=1}^m (1 + (−1)^{v₀+v_i} tanh(a_i)^{1−2r_{0,i}})
///     = exp( Σ_{0≤i<j≤m} (−1)^{v_i+v_j} a_{i,j} ),
/// where a_i = a_{0,i} and `v` holds the m+1 parities v₀, …, v_m.
/// The left side regroups each loop factor as cosh + ε·sinh (r = 0) or
/// sinh + ε·cosh (r = 1), which is the same product without the 0 · ∞
/// ambiguity at a_i = 0. Capped at m ≤ 5.
pub fn verify_sum_v0(m: usize, a: &[f64], v: &[u8]) -> Result<(f64, f64)> {
    if m > 5 {
        return Err(QrmError::InvalidParameter(format!("verify_sum_v0 capped at m ≤ 5, got {m}")));
    }
    if a.len() != GraphVector::len_for(m) {
        return Err(QrmError::InvalidParameter(format!(
            "need {} coefficients for m = {m}, got {}",
            GraphVector::len_for(m),
            a.len()
        )));
    }
    if v.len() != m + 1 {
        return Err(QrmError::InvalidParameter(format!(
            "need {} parities for m = {m}, got {}",
            m + 1,
            v.len()
        )));
    }
    let sgn = |e: u8| if e % 2 == 0 { 1.0 } else { -1.0 };
    let mut lhs = 0.0;
    for r in enumerate_v0(m)? {
        let mut term = 1.0;
        for i in 1..=m {
            let eps = sgn(v[0] + v[i]);
            let (c, s) = (a[i - 1].cosh(), a[i - 1].sinh());
            term *= if r.loop_entry(i) == 0 { c + eps * s } else { s + eps * c };
        }
        for i in 1..m {
            for j in i + 1..=m {
                let ae = a[GraphVector::edge_index(m, i, j)];
                term *= if r.edge_entry(i, j) == 0 { ae.cosh() } else { ae.sinh() };
            }
        }
        lhs += term;
    }
    let mut exponent = 0.0;
    for i in 1..=m {
        exponent += sgn(v[0] + v[i]) * a[i - 1];
    }
    for i in 1..m {
        for j in i + 1..=m {
            exponent += sgn(v[i] + v[j]) * a[GraphVector::edge_index(m, i, j)];
        }
    }
    Ok((lhs, exponent.exp()))
}

/// Visits all ascending index tuples 1 ≤ j_1 < … < j_len ≤ k.
fn for_each_combination<F: FnMut(&[usize])>(k: usize, len: usize, mut f: F) {
    if len > k {
        return;
    }
    let mut idx: Vec<usize> = (1..=len).collect();
    loop {
        f(&idx);
        // advance the odometer
        let mut pos = len;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] < k - (len - 1 - pos) {
                idx[pos] += 1;
                for q in pos + 1..len {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Both sides of the segment-product expansion of
/// f_k(τ) + (−1)^{v+w} g_k(τ), where
///   f_k = Σ_ρ τ^{φ(ρ)} ∏ A_i^{ρ_i},  g_k = Σ_ρ τ^{k+1−φ(ρ)} ∏ A_i^{ρ_i}.
/// The left side is computed by the two-term recurrence
/// f_k = f_{k−1} + A_k g_{k−1}, g_k = τ(g_{k−1} + A_k f_{k−1}); the
/// right side sums over ascending index tuples j_1 < … < j_ℓ with
/// segment-wise alternating signs (j_0 = 0, j_{ℓ+1} = k). Capped at
/// k ≤ 16.
pub fn verify_sum_fg(k: usize, tau: f64, a: &[f64], v: u8, w: u8) -> Result<(f64, f64)> {
    if k == 0 || k > 16 {
        return Err(QrmError::InvalidParameter(format!("verify_sum_fg needs 1 ≤ k ≤ 16, got {k}")));
    }
    if a.len() != k {
        return Err(QrmError::InvalidParameter(format!(
            "need {k} coefficients, got {}",
            a.len()
        )));
    }
    let sigma = if (v + w) % 2 == 0 { 1.0 } else { -1.0 };
    let (mut f, mut g) = (1.0, tau);
    for &ai in a {
        let (fp, gp) = (f + ai * g, tau * (g + ai * f));
        f = fp;
        g = gp;
    }
    let lhs = f + sigma * g;

    let mut rhs = 0.0;
    for ell in 0..=k {
        let sign_ell = if ell % 2 == 0 { sigma } else { -sigma };
        let prefactor = (1.0 + tau).powi((k - ell) as i32)
            * (1.0 - tau).powi(ell as i32)
            * (1.0 + sign_ell * tau);
        let mut subset_sum = 0.0;
        for_each_combination(k, ell, |js| {
            let mut prod = 1.0;
            let mut lo = 0usize;
            for i in 0..=ell {
                let hi = if i == ell { k } else { js[i] };
                // segment sign (−1)^{v+w+ℓ−i}
                let seg = if (ell - i) % 2 == 0 { sigma } else { -sigma };
                for n in lo + 1..=hi {
                    prod *= 1.0 + seg * a[n - 1];
                }
                lo = hi;
            }
            subset_sum += prod;
        });
        rhs += prefactor * subset_sum;
    }
    rhs /= 2f64.powi(k as i32);
    Ok((lhs, rhs))
}

/// Σ_{j=1}^k t^j φ_j(pref_j(ρ); s), grown with the append rule
/// φ_{j}(pref_j; s) = ρ_j [j]_s + (−1)^{ρ_j} φ_{j−1}(pref_{j−1}; s).
pub fn sumexp_exponent_lhs(rho: &BitString, t: f64, s: f64) -> f64 {
    let k = rho.len();
    let mut acc = 0.0;
    let mut phi = 0.0;
    let mut tp = 1.0;
    for j in 1..=k {
        phi = if rho.bit1(j) == 1 { q_number(j, s) - phi } else { phi };
        tp *= t;
        acc += tp * phi;
    }
    acc
}

/// The same exponent in terms of the one positions i_1 < … < i_λ of ρ:
/// Σ_{0≤α<β≤λ, β−α odd} t^{i_β} s^{i_α} [i_{α+1}−i_α]_s [i_{β+1}−i_β]_t
/// with i_0 = 0 and i_{λ+1} = k+1.
pub fn sumexp_exponent_rhs(rho: &BitString, t: f64, s: f64) -> f64 {
    let k = rho.len();
    let pos = rho.ones_positions();
    let lambda = pos.len();
    let idx = |a: usize| -> usize {
        if a == 0 {
            0
        } else if a == lambda + 1 {
            k + 1
        } else {
            pos[a - 1]
        }
    };
    let mut acc = 0.0;
    for alpha in 0..lambda {
        for beta in alpha + 1..=lambda {
            if (beta - alpha) % 2 == 1 {
                acc += t.powi(idx(beta) as i32)
                    * s.powi(idx(alpha) as i32)
                    * q_number(idx(alpha + 1) - idx(alpha), s)
                    * q_number(idx(beta + 1) - idx(beta), t);
            }
        }
    }
    acc
}

/// Both sides of the norm-λ exponential sum identity
///   Σ_{|ρ|=λ} exp(Σ_j t^j φ_j(pref_j(ρ); s))
///     = Σ_{i_1<…<i_λ} exp(Σ_{β−α odd} t^{i_β} s^{i_α} [i_{α+1}−i_α]_s [i_{β+1}−i_β]_t).
/// Requires 1 ≤ λ ≤ k ≤ 16.
pub fn verify_sumexp(k: usize, lambda: usize, t: f64, s: f64) -> Result<(f64, f64)> {
    if k == 0 || k > 16 || lambda == 0 || lambda > k {
        return Err(QrmError::InvalidParameter(format!(
            "verify_sumexp needs 1 ≤ λ ≤ k ≤ 16, got λ = {lambda}, k = {k}"
        )));
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for_each_combination(k, lambda, |js| {
        let mut bits = vec![0u8; k];
        for &j in js {
            bits[j - 1] = 1;
        }
        let rho = BitString::new(bits).expect("0/1 by construction");
        lhs += sumexp_exponent_lhs(&rho, t, s).exp();
        rhs += sumexp_exponent_rhs(&rho, t, s).exp();
    });
    Ok((lhs, rhs))
}

/// The class of a sign path by its constant tail: `first` = s(1),
/// `last` = s(N), and `k` the tail index, i.e. the smallest k such that
/// s(n) = s(N) for all n ≥ k, taken as 1 for constant paths. The
/// classes partition Z₂^N; for k ≥ 3 each nonempty class has 2^{k−3}
/// members (s(2), …, s(k−2) free).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathClass {
    pub first: u8,
    pub last: u8,
    pub k: usize,
}

pub fn path_class(s: &BitString) -> Result<PathClass> {
    let n = s.len();
    if n == 0 {
        return Err(QrmError::InvalidParameter("path class needs a nonempty path".into()));
    }
    let last = s.bit1(n);
    let mut k = 1;
    for i in (1..=n).rev() {
        if s.bit1(i) != last {
            k = i + 1;
            break;
        }
    }
    Ok(PathClass { first: s.bit1(1), last, k })
}

impl PathClass {
    /// Membership test against the defining pattern.
    pub fn contains(&self, s: &BitString) -> bool {
        let n = s.len();
        if n == 0 || s.bit1(1) != self.first || s.bit1(n) != self.last {
            return false;
        }
        match self.k {
            1 => (1..=n).all(|i| s.bit1(i) == self.last),
            2 => {
                s.bit1(1) == 1 - self.last && (2..=n).all(|i| s.bit1(i) == self.last)
            }
            k => {
                k >= 3
                    && k <= n
                    && s.bit1(k - 1) == 1 - self.last
                    && (k..=n).all(|i| s.bit1(i) == self.last)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num::{BigInt, BigRational};
    use std::collections::{HashMap, HashSet};

    fn bs(bits: &[u8]) -> BitString {
        BitString::new(bits.to_vec()).unwrap()
    }

    fn all_bitstrings(k: usize) -> impl Iterator<Item = BitString> {
        (0..(1u64 << k)).map(move |idx| BitString::from_index(k, idx))
    }

    #[test]
    fn varphi_hand_values() {
        assert_eq!(varphi(&BitString::zeros(4)), 0);
        assert_eq!(varphi(&bs(&[1])), 1);
        assert_eq!(varphi(&bs(&[0, 1])), 2);
        assert_eq!(varphi(&bs(&[1, 1])), 1);
        assert_eq!(varphi(&bs(&[1, 0, 1])), 2);
        assert_eq!(varphi(&bs(&[1, 1, 1, 0, 1])), 3); // 5−3+2−1
    }

    #[test]
    fn varphi_forms_agree_exhaustively() {
        for k in 0..=10usize {
            for rho in all_bitstrings(k) {
                let phi = varphi(&rho);
                assert!(phi >= 0);
                // t = 1 recovers the integer form, exactly
                assert_eq!(varphi_t(&rho, 1.0), phi as f64);
                for &t in &[0.3, 1.7, -0.6] {
                    let reference = varphi_t(&rho, t);
                    assert_abs_diff_eq!(varphi_t_positions(&rho, t), reference, epsilon = 1e-12);
                    assert_abs_diff_eq!(varphi_t_remform(&rho, t), reference, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn varphi_append_and_prepend_rules() {
        for k in 0..=8usize {
            for rho in all_bitstrings(k) {
                for v in 0..=1u8 {
                    for &t in &[0.4, 1.0, 2.3] {
                        // append: φ(ρ ⊕ (v); t) = v[k+1]_t + (−1)^v φ(ρ; t)
                        let appended = rho.append(v);
                        let expect = v as f64 * q_number(k + 1, t)
                            + if v == 1 { -1.0 } else { 1.0 } * varphi_t(&rho, t);
                        assert_abs_diff_eq!(varphi_t(&appended, t), expect, epsilon = 1e-12);
                        // prepend: φ((v) ⊕ ρ; t) = t·φ(ρ; t) + (1−(−1)^{v+|ρ|})/2
                        let prepended = bs(&[v]).concat(&rho);
                        let indicator =
                            if (v as usize + rho.norm()) % 2 == 1 { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(
                            varphi_t(&prepended, t),
                            t * varphi_t(&rho, t) + indicator,
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn varphi_reversal_and_complement_sum() {
        for k in 1..=8usize {
            for rho in all_bitstrings(k) {
                let rev = BitString::new(rho.bits().iter().rev().copied().collect()).unwrap();
                for &t in &[0.5f64, 2.0] {
                    // φ(ρ̌; t) = (−1)^{|ρ|} t^k φ(ρ; 1/t) + 1_{|ρ| odd} [k+1]_t
                    let sign = if rho.norm() % 2 == 0 { 1.0 } else { -1.0 };
                    let indicator = if rho.norm() % 2 == 1 { 1.0 } else { 0.0 };
                    let expect = sign * t.powi(k as i32) * varphi_t(&rho, 1.0 / t)
                        + indicator * q_number(k + 1, t);
                    assert_relative_eq!(
                        varphi_t(&rev, t),
                        expect,
                        max_relative = 1e-12,
                        epsilon = 1e-12
                    );
                    // Σ_i (−1)^{suffix} t^{i−1} = [k]_t − 2φ(ρ; t)
                    let mut lhs = 0.0;
                    let parities = varphi_t_coeffs(&rho);
                    for (i, &c) in parities.iter().enumerate() {
                        lhs += if c == 0 { 1.0 } else { -1.0 } * t.powi(i as i32);
                    }
                    assert_abs_diff_eq!(
                        lhs,
                        q_number(k, t) - 2.0 * varphi_t(&rho, t),
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn varphi_coeffs_are_mod2_additive() {
        for k in 1..=7usize {
            for rho in all_bitstrings(k) {
                for theta in all_bitstrings(k) {
                    let sum = rho.add_mod2(&theta).unwrap();
                    let ca = varphi_t_coeffs(&rho);
                    let cb = varphi_t_coeffs(&theta);
                    let cs = varphi_t_coeffs(&sum);
                    for i in 0..k {
                        assert_eq!(cs[i], (ca[i] + cb[i]) % 2);
                    }
                }
            }
        }
    }

    #[test]
    fn varphi_drop_last_recursion() {
        // φ_k(ρ) = (−1)^{ρ_k} φ_{k−1}(δ) + ρ_k · k
        for k in 1..=10usize {
            for rho in all_bitstrings(k) {
                let delta = rho.prefix(k - 1);
                let sign = if rho.bit1(k) == 1 { -1 } else { 1 };
                assert_eq!(
                    varphi(&rho),
                    sign * varphi(&delta) + rho.bit1(k) as i64 * k as i64
                );
            }
        }
    }

    #[test]
    fn fourier_of_varphi_closed_form() {
        for k in 1..=10usize {
            let mut data: Vec<f64> =
                all_bitstrings(k).map(|s| varphi(&s) as f64).collect();
            fwht(&mut data);
            for rho in all_bitstrings(k) {
                let idx = rho.to_index() as usize;
                // nonzero only at 0 and at the suffix blocks 0_i ⊕ 1_{k−i}
                let expect = if rho.norm() == 0 {
                    k as f64 * 2f64.powi(k as i32 - 1)
                } else {
                    let ones = rho.ones_positions();
                    let suffix_block = ones.windows(2).all(|w| w[1] == w[0] + 1)
                        && *ones.last().unwrap() == k;
                    if suffix_block {
                        -(2f64.powi(k as i32 - 1))
                    } else {
                        0.0
                    }
                };
                assert_abs_diff_eq!(data[idx], expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn g_hat_matches_walsh_transform() {
        let tau = 0.7;
        for k in 1..=12usize {
            for v in 0..=1u8 {
                for w in 0..=1u8 {
                    let mut data: Vec<f64> =
                        all_bitstrings(k).map(|s| g_k_direct(&s, v, w, tau)).collect();
                    fwht(&mut data);
                    for rho in all_bitstrings(k) {
                        let idx = rho.to_index() as usize;
                        let expect = fourier_g_hat(&rho, v, w, tau);
                        assert_abs_diff_eq!(data[idx], expect, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn graph_vector_layout_and_degrees() {
        // worked example on m = 4 vertices
        let r = GraphVector::new(4, vec![0, 0, 1, 1, 1, 1, 1, 0, 0, 1]).unwrap();
        assert_eq!(r.degrees(), vec![3, 1, 3, 3]);
        assert!(!r.is_even());
        assert_eq!(r.p1().bits(), &[0, 0, 1, 1]);
        assert_eq!(r.p2().entries(), &[1, 1, 1, 0, 0, 1]);
        assert_eq!(r.q1().bits(), &[1, 1, 1]);
        assert_eq!(r.q2().entries(), &[0, 0, 1]);
        assert_eq!(GraphVector::edge_index(4, 1, 2), 4);
        assert_eq!(GraphVector::edge_index(4, 3, 4), 9);
    }

    #[test]
    fn v0_count_and_small_table() {
        for m in 0..=6usize {
            let v0 = enumerate_v0(m).unwrap();
            assert_eq!(v0.len(), 1usize << (m.saturating_sub(1) * m / 2));
        }
        // spot check the closed-form count 2^{m(m−1)/2}
        assert_eq!(enumerate_v0(4).unwrap().len(), 64);
        assert_eq!(enumerate_v0(6).unwrap().len(), 1 << 15);
        // the m = 3 table, exactly
        let expect: HashSet<Vec<u8>> = [
            [0, 0, 0, 0, 0, 0],
            [0, 0, 0, 1, 1, 1],
            [0, 1, 1, 0, 0, 1],
            [0, 1, 1, 1, 1, 0],
            [1, 0, 1, 0, 1, 0],
            [1, 0, 1, 1, 0, 1],
            [1, 1, 0, 0, 1, 1],
            [1, 1, 0, 1, 0, 0],
        ]
        .iter()
        .map(|v| v.to_vec())
        .collect();
        let got: HashSet<Vec<u8>> =
            enumerate_v0(3).unwrap().iter().map(|r| r.entries().to_vec()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn v0_projection_structure() {
        for m in 1..=5usize {
            let v0 = enumerate_v0(m).unwrap();
            // (1) p2 is a bijection onto the full edge cube
            let p2_images: HashSet<Vec<u8>> =
                v0.iter().map(|r| r.p2().entries().to_vec()).collect();
            assert_eq!(p2_images.len(), v0.len());
            assert_eq!(p2_images.len(), 1 << (m * (m - 1) / 2));
            // (2) loop blocks have even weight and exhaust the even vectors
            let p1_images: HashSet<Vec<u8>> =
                v0.iter().map(|r| r.p1().bits().to_vec()).collect();
            for b in &p1_images {
                assert_eq!(b.iter().map(|&x| x as usize).sum::<usize>() % 2, 0);
            }
            assert_eq!(p1_images.len(), 1 << (m - 1));
            // (3) the p1 = 0 fiber projects onto V₀ one size down
            let smaller: HashSet<Vec<u8>> = enumerate_v0(m - 1)
                .unwrap()
                .iter()
                .map(|r| r.entries().to_vec())
                .collect();
            let fiber: HashSet<Vec<u8>> = v0
                .iter()
                .filter(|r| r.p1().norm() == 0)
                .map(|r| r.p2().entries().to_vec())
                .collect();
            assert_eq!(fiber, smaller);
        }
    }

    #[test]
    fn v0_tail_fiber_structure() {
        for m in 2..=5usize {
            let v0 = enumerate_v0(m).unwrap();
            let mut fibers: HashMap<Vec<u8>, Vec<&GraphVector>> = HashMap::new();
            for r in &v0 {
                fibers.entry(r.q2().entries().to_vec()).or_default().push(r);
            }
            assert_eq!(fibers.len(), 1 << ((m - 1) * (m - 2) / 2));
            for (v, members) in &fibers {
                assert_eq!(members.len(), 1 << (m - 1));
                // (4) p1 bijects the fiber onto the even vectors, q1 onto the cube
                let p1s: HashSet<Vec<u8>> =
                    members.iter().map(|r| r.p1().bits().to_vec()).collect();
                let q1s: HashSet<Vec<u8>> =
                    members.iter().map(|r| r.q1().bits().to_vec()).collect();
                assert_eq!(p1s.len(), 1 << (m - 1));
                assert_eq!(q1s.len(), 1 << (m - 1));
                assert!(p1s.iter().all(|b| b.iter().map(|&x| x as usize).sum::<usize>() % 2 == 0));
                // (5) against the distinguished loopless member
                let r0 = members
                    .iter()
                    .find(|r| r.p1().norm() == 0)
                    .expect("fiber contains a loopless member");
                for r in members {
                    for j in 2..=m {
                        let expect = (r0.q1().bit1(j - 1) + r.loop_entry(j)) % 2;
                        assert_eq!(
                            r.q1().bit1(j - 1),
                            expect,
                            "m = {m}, fiber {v:?}, member {:?}",
                            r.entries()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn v0_worked_tail_example() {
        // m = 3: v = (1), r = (1,0,1,1,0,1) has r₀ = (0,0,0,1,1,1),
        // q1(r₀) = (1,1), loops (r_{0,2}, r_{0,3}) = (0,1), q1(r) = (1,0)
        let r = GraphVector::new(3, vec![1, 0, 1, 1, 0, 1]).unwrap();
        assert!(r.is_even());
        assert_eq!(r.q2().entries(), &[1]);
        let r0 = GraphVector::new(3, vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!(r0.is_even());
        assert_eq!(r0.p1().norm(), 0);
        assert_eq!(r0.q2().entries(), &[1]);
        assert_eq!(r0.q1().bits(), &[1, 1]);
        assert_eq!(r.q1().bits(), &[1, 0]);
        assert_eq!((r0.q1().bit1(1) + r.loop_entry(2)) % 2, r.q1().bit1(1));
        assert_eq!((r0.q1().bit1(2) + r.loop_entry(3)) % 2, r.q1().bit1(2));
    }

    #[test]
    fn sigma_rho_flips_loops_and_rescales_t() {
        let r = GraphVector::new(3, vec![0, 1, 1, 1, 1, 0]).unwrap();
        let rho = bs(&[1, 0, 1]);
        let image = sigma_rho(&r, &rho).unwrap();
        assert_eq!(image.entries(), &[1, 1, 0, 1, 1, 0]);
        assert_eq!(image.degrees().iter().map(|d| d % 2).collect::<Vec<_>>(), vec![1, 0, 1]);
        // T^{(σ_ρ r)}(a) = ∏_i (tanh(a_i)^{1−2r_{0,i}})^{ρ_i} T^{(r)}(a)
        let a = [0.3f64, 0.7, -0.2, 0.4, 1.1, 0.5];
        for r in enumerate_v0(3).unwrap() {
            for rho in all_bitstrings(3) {
                let image = sigma_rho(&r, &rho).unwrap();
                let mut factor = 1.0;
                for i in 1..=3 {
                    if rho.bit1(i) == 1 {
                        let th = a[i - 1].tanh();
                        factor *= if r.loop_entry(i) == 0 { th } else { th.recip() };
                    }
                }
                assert_relative_eq!(
                    t_factor(&image, &a),
                    factor * t_factor(&r, &a),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn hyperbolic_sum_identity() {
        let a5 = [
            0.31, -0.44, 0.12, 0.87, -0.23, 0.55, 0.04, -0.61, 0.29, 0.73, -0.15, 0.38, 0.92,
            -0.07, 0.46,
        ];
        for m in 1..=5usize {
            let a = &a5[..GraphVector::len_for(m)];
            for vmask in 0..(1u32 << (m + 1)) {
                let v: Vec<u8> = (0..=m).map(|i| ((vmask >> i) & 1) as u8).collect();
                let (lhs, rhs) = verify_sum_v0(m, a, &v).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
        // coefficients exactly zero must not produce NaN (0·∞ regrouping)
        let zeros = vec![0.0; GraphVector::len_for(4)];
        let (lhs, rhs) = verify_sum_v0(4, &zeros, &[0, 1, 0, 1, 1]).unwrap();
        assert_relative_eq!(lhs, 1.0, max_relative = 1e-14);
        assert_relative_eq!(rhs, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn fg_sum_identity_and_brute_force() {
        let coeffs = [
            0.42, -0.17, 0.89, 0.05, -0.63, 0.31, 0.74, -0.28, 0.11, 0.57, -0.46, 0.93, 0.22,
            -0.08, 0.66, 0.39,
        ];
        let tau = 0.64f64;
        for k in 1..=10usize {
            let a = &coeffs[..k];
            // brute force f and g straight from the definition
            let (mut f_brute, mut g_brute) = (0.0, 0.0);
            for rho in all_bitstrings(k) {
                let mut mono = 1.0;
                for i in 1..=k {
                    if rho.bit1(i) == 1 {
                        mono *= a[i - 1];
                    }
                }
                let phi = varphi(&rho);
                f_brute += tau.powi(phi as i32) * mono;
                g_brute += tau.powi((k as i64 + 1 - phi) as i32) * mono;
            }
            for v in 0..=1u8 {
                for w in 0..=1u8 {
                    let sigma = if (v + w) % 2 == 0 { 1.0 } else { -1.0 };
                    let (lhs, rhs) = verify_sum_fg(k, tau, a, v, w).unwrap();
                    assert_relative_eq!(lhs, f_brute + sigma * g_brute, max_relative = 1e-12);
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn fg_sum_identity_exact_rational() {
        let rat = |p: i64, q: i64| BigRational::new(BigInt::from(p), BigInt::from(q));
        let tau = rat(3, 7);
        for k in 1..=6usize {
            let a: Vec<BigRational> =
                (0..k).map(|i| rat(2 * i as i64 - 3, 5 + i as i64)).collect();
            for sigma_neg in [false, true] {
                let sigma = if sigma_neg { rat(-1, 1) } else { rat(1, 1) };
                let (mut f, mut g) = (rat(1, 1), tau.clone());
                for ai in &a {
                    let fp = &f + ai * &g;
                    let gp = &tau * (&g + ai * &f);
                    f = fp;
                    g = gp;
                }
                let lhs = &f + &sigma * &g;
                let one = rat(1, 1);
                let mut rhs = rat(0, 1);
                for ell in 0..=k {
                    let sign_ell =
                        if ell % 2 == 0 { sigma.clone() } else { -sigma.clone() };
                    let mut pref = (&one + &tau).pow((k - ell) as i32)
                        * (&one - &tau).pow(ell as i32);
                    pref *= &one + &sign_ell * &tau;
                    let mut subset_sum = rat(0, 1);
                    for_each_combination(k, ell, |js| {
                        let mut prod = one.clone();
                        let mut lo = 0usize;
                        for i in 0..=ell {
                            let hi = if i == ell { k } else { js[i] };
                            let seg = if (ell - i) % 2 == 0 {
                                sigma.clone()
                            } else {
                                -sigma.clone()
                            };
                            for n in lo + 1..=hi {
                                prod *= &one + &seg * &a[n - 1];
                            }
                            lo = hi;
                        }
                        subset_sum += prod;
                    });
                    rhs += pref * subset_sum;
                }
                rhs /= rat(1 << k, 1);
                assert_eq!(lhs, rhs, "exact identity fails at k = {k}");
            }
        }
    }

    #[test]
    fn sumexp_identity() {
        for &(k, lambda) in &[(1, 1), (3, 1), (5, 2), (8, 3), (12, 4), (10, 10)] {
            for &(t, s) in &[(0.37, 0.81), (0.9, 0.2), (1.0, 1.0)] {
                let (lhs, rhs) = verify_sumexp(k, lambda, t, s).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sumexp_exponent_identity_per_path() {
        for k in 1..=8usize {
            for rho in all_bitstrings(k) {
                if rho.norm() == 0 {
                    continue;
                }
                for &(t, s) in &[(0.37, 0.81), (1.3, 0.7)] {
                    assert_abs_diff_eq!(
                        sumexp_exponent_lhs(&rho, t, s),
                        sumexp_exponent_rhs(&rho, t, s),
                        epsilon = 1e-11
                    );
                }
            }
        }
    }

    /// Integer bivariate polynomials, dense enough for exact comparison.
    #[derive(Debug, Clone, Default, PartialEq, Eq)]
    struct Poly2(HashMap<(u32, u32), i64>);

    impl Poly2 {
        fn term(tp: u32, sp: u32, c: i64) -> Self {
            let mut m = HashMap::new();
            if c != 0 {
                m.insert((tp, sp), c);
            }
            Poly2(m)
        }
        fn add_assign(&mut self, other: &Poly2) {
            for (&k, &v) in &other.0 {
                let e = self.0.entry(k).or_insert(0);
                *e += v;
                if *e == 0 {
                    self.0.remove(&k);
                }
            }
        }
        fn mul(&self, other: &Poly2) -> Poly2 {
            let mut out: HashMap<(u32, u32), i64> = HashMap::new();
            for (&(a1, b1), &c1) in &self.0 {
                for (&(a2, b2), &c2) in &other.0 {
                    let e = out.entry((a1 + a2, b1 + b2)).or_insert(0);
                    *e += c1 * c2;
                }
            }
            out.retain(|_, v| *v != 0);
            Poly2(out)
        }
    }

    fn q_poly(d: usize, in_t: bool) -> Poly2 {
        let mut p = Poly2::default();
        for a in 0..d as u32 {
            p.add_assign(&if in_t { Poly2::term(a, 0, 1) } else { Poly2::term(0, a, 1) });
        }
        p
    }

    #[test]
    fn sumexp_exponent_identity_exact_polynomials() {
        for k in 1..=7usize {
            for rho in all_bitstrings(k) {
                if rho.norm() == 0 {
                    continue;
                }
                // left side: Σ_j t^j φ_j(pref_j(ρ); s) with 0/1 coefficients
                let mut lhs = Poly2::default();
                for j in 1..=k {
                    let pref = rho.prefix(j);
                    for (i, &c) in varphi_t_coeffs(&pref).iter().enumerate() {
                        if c == 1 {
                            lhs.add_assign(&Poly2::term(j as u32, i as u32, 1));
                        }
                    }
                }
                // right side: position form with q-integer factors
                let pos = rho.ones_positions();
                let lambda = pos.len();
                let idx = |a: usize| -> usize {
                    if a == 0 {
                        0
                    } else if a == lambda + 1 {
                        k + 1
                    } else {
                        pos[a - 1]
                    }
                };
                let mut rhs = Poly2::default();
                for alpha in 0..lambda {
                    for beta in alpha + 1..=lambda {
                        if (beta - alpha) % 2 == 1 {
                            let mono =
                                Poly2::term(idx(beta) as u32, idx(alpha) as u32, 1);
                            let qs = q_poly(idx(alpha + 1) - idx(alpha), false);
                            let qt = q_poly(idx(beta + 1) - idx(beta), true);
                            rhs.add_assign(&mono.mul(&qs).mul(&qt));
                        }
                    }
                }
                assert_eq!(lhs, rhs, "exact exponent mismatch at ρ = {:?}", rho.bits());
            }
        }
    }

    #[test]
    fn path_classes_partition_the_cube() {
        for n in [1usize, 3, 6, 8, 10] {
            let mut counts: HashMap<(u8, u8, usize), usize> = HashMap::new();
            for s in all_bitstrings(n) {
                let c = path_class(&s).unwrap();
                assert!(c.contains(&s), "classifier/membership mismatch for {:?}", s.bits());
                assert_eq!(c.first, s.bit1(1));
                assert_eq!(c.last, s.bit1(n));
                *counts.entry((c.first, c.last, c.k)).or_insert(0) += 1;
            }
            let total: usize = counts.values().sum();
            assert_eq!(total, 1 << n);
            for (&(first, last, k), &count) in &counts {
                match k {
                    1 => {
                        assert_eq!(first, last);
                        assert_eq!(count, 1);
                    }
                    2 => {
                        assert_eq!(first, 1 - last);
                        assert_eq!(count, 1);
                    }
                    k => {
                        assert!((3..=n).contains(&k));
                        assert_eq!(count, 1 << (k - 3), "class A^{first},{last}_{k},{n}");
                    }
                }
            }
        }
    }

    #[test]
    fn q_number_basics() {
        assert_eq!(q_number(0, 0.7), 0.0);
        assert_eq!(q_number(5, 1.0), 5.0);
        let t: f64 = 0.3;
        assert_relative_eq!(
            QNumber { i: 7, t }.value(),
            (1.0 - t.powi(7)) / (1.0 - t),
            max_relative = 1e-14
        );
    }
}
