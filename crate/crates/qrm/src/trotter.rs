//! The finite-N product kernel D_N(x,y,t): closed-form Gaussian
//! integrals I_N over sign paths, the 2×2 matrix factors G_N, and the
//! full 2^N path sum evaluated by a Gray-code sweep. D_N converges to
//! the heat kernel at rate O(1/N) and doubles as the bridge between the
//! one-step kernel and the series form.

use crate::core::{mehler_k0_ln, BitString, EvalPoint, Kernel2x2, ModelParams};
use crate::linalg::Matrix;
use crate::{QrmError, Result};

/// Paths longer than this make the 2^N sweep unreasonable on one core.
pub const MAX_PATH_BITS: usize = 22;

/// Chebyshev polynomial of the second kind, U_n(x), by the three-term
/// recurrence U_{n+1} = 2x U_n − U_{n−1}, U_0 = 1, U_1 = 2x.
pub fn chebyshev_u(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// The tridiagonal Gaussian form A_{N−1} = tridiag(−u, 1+u², −u) of
/// size (N−1)×(N−1) that the intermediate integration variables couple
/// through, together with its closed-form determinant and inverse.
#[derive(Debug, Clone, Copy)]
pub struct TridiagState {
    big_n: usize,
    u: f64,
}

impl TridiagState {
    pub fn new(big_n: usize, u: f64) -> Result<Self> {
        if big_n < 2 {
            return Err(QrmError::InvalidParameter(format!(
                "tridiagonal state needs N ≥ 2, got {big_n}"
            )));
        }
        if !u.is_finite() || u <= 0.0 || u >= 1.0 {
            return Err(QrmError::InvalidParameter(format!("u must lie in (0, 1), got {u}")));
        }
        Ok(Self { big_n, u })
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// det A_{N−1} = (1 − u^{2N})/(1 − u²) = 1 + u² + … + u^{2(N−1)}.
    pub fn det(&self) -> f64 {
        let u2 = self.u * self.u;
        (1.0 - u2.powi(self.big_n as i32)) / (1.0 - u2)
    }

    /// (A⁻¹)_{ij} = u^{j−i}(1−u^{2i})(1−u^{2(N−j)}) / ((1−u^{2N})(1−u²)),
    /// 1-based, stated for i ≤ j and extended by symmetry.
    pub fn inv_entry(&self, i: usize, j: usize) -> f64 {
        let n = self.big_n;
        assert!(
            (1..n).contains(&i) && (1..n).contains(&j),
            "inverse index ({i},{j}) out of range for size {}",
            n - 1
        );
        let (i, j) = (i.min(j), i.max(j));
        let u = self.u;
        let u2 = u * u;
        u.powi((j - i) as i32) * (1.0 - u2.powi(i as i32)) * (1.0 - u2.powi((n - j) as i32))
            / ((1.0 - u2.powi(n as i32)) * (1.0 - u2))
    }

    /// Dense A_{N−1}, for cross-checks.
    pub fn dense(&self) -> Matrix {
        let size = self.big_n - 1;
        let u = self.u;
        Matrix::from_fn(size, size, |r, c| {
            if r == c {
                1.0 + u * u
            } else if r.abs_diff(c) == 1 {
                -u
            } else {
                0.0
            }
        })
    }
}

/// A sign path s ∈ Z₂^N together with the per-step decay u, exposing
/// the three path functionals of the Gaussian integral:
/// η_i = (−1)^{s(i)} + (−1)^{s(i+1)},
/// Λ^{(j)} = u^{j−1}(1 − u^{2(N−j)+1}),
/// Ω^{(i,j)} = u^{j−i}(1 − u^{2i})(1 − u^{2(N−j)}).
#[derive(Debug, Clone)]
pub struct SignPath {
    s: BitString,
    u: f64,
}

impl SignPath {
    pub fn new(s: BitString, u: f64) -> Result<Self> {
        if s.is_empty() {
            return Err(QrmError::InvalidParameter("sign path must be nonempty".into()));
        }
        if !u.is_finite() || u <= 0.0 || u >= 1.0 {
            return Err(QrmError::InvalidParameter(format!("u must lie in (0, 1), got {u}")));
        }
        Ok(Self { s, u })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced nonempty at construction
    }

    pub fn bits(&self) -> &BitString {
        &self.s
    }

    /// η_i for i ∈ 1..=N−1; values in {−2, 0, 2}.
    pub fn eta(&self, i: usize) -> f64 {
        let sgn = |b: u8| if b == 0 { 1.0 } else { -1.0 };
        sgn(self.s.bit1(i)) + sgn(self.s.bit1(i + 1))
    }

    /// Λ^{(j)} for j ∈ 1..=N.
    pub fn lambda_coef(&self, j: usize) -> f64 {
        let n = self.len();
        assert!((1..=n).contains(&j), "Λ index {j} out of range for N = {n}");
        self.u.powi((j - 1) as i32) * (1.0 - self.u.powi((2 * (n - j) + 1) as i32))
    }

    /// Ω^{(i,j)} for 1 ≤ i, j ≤ N−1, extended symmetrically to i > j.
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        assert!(
            (1..n).contains(&i) && (1..n).contains(&j),
            "Ω index ({i},{j}) out of range for N = {n}"
        );
        let (i, j) = (i.min(j), i.max(j));
        let u2 = self.u * self.u;
        self.u.powi((j - i) as i32)
            * (1.0 - u2.powi(i as i32))
            * (1.0 - u2.powi((n - j) as i32))
    }
}

/// The closed form of the iterated Gaussian integral over one sign path:
/// I_N(x,y,u,s) = K₀(x,y,u^N)
///   · exp( √2 g (1−u)/(1−u^{2N}) Σ_j (−1)^{s(j)} (x Λ^{(j)} + y Λ^{(N−j+1)}) )
///   · exp( g²(1−u)²/(2(1+u)²(1−u^{2N})) (Σ_i η_i² Ω^{(i,i)} + 2 Σ_{i<j} η_i η_j Ω^{(i,j)})
///          − 2N g² (1−u)/(1+u) ).
pub fn i_n_scalar(x: f64, y: f64, g: f64, u: f64, s: &BitString) -> Result<f64> {
    let path = SignPath::new(s.clone(), u)?;
    let n = path.len();
    let big = 1.0 - u.powi(2 * n as i32);

    let mut lin = 0.0;
    for j in 1..=n {
        let sign = if s.bit1(j) == 0 { 1.0 } else { -1.0 };
        lin += sign * (x * path.lambda_coef(j) + y * path.lambda_coef(n - j + 1));
    }

    let mut quad = 0.0;
    for i in 1..n {
        let ei = path.eta(i);
        quad += ei * ei * path.omega(i, i);
        for j in i + 1..n {
            quad += 2.0 * ei * path.eta(j) * path.omega(i, j);
        }
    }

    let total_t = -(n as f64) * u.ln();
    let ln_k0 = mehler_k0_ln(&EvalPoint { x, y, t: total_t }, g);
    let exponent = ln_k0
        + std::f64::consts::SQRT_2 * g * (1.0 - u) / big * lin
        + g * g * (1.0 - u) * (1.0 - u) / (2.0 * (1.0 + u) * (1.0 + u) * big) * quad
        - 2.0 * n as f64 * g * g * (1.0 - u) / (1.0 + u);
    let v = exponent.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QrmError::Overflow(format!("path integral at x = {x}, y = {y}, u = {u}")))
    }
}

/// The four boundary matrices the ordered product collapses onto.
pub const M_00: Kernel2x2 = Kernel2x2 { k11: 1.0, k12: -1.0, k21: -1.0, k22: 1.0 };
pub const M_01: Kernel2x2 = Kernel2x2 { k11: -1.0, k12: -1.0, k21: 1.0, k22: 1.0 };
pub const M_10: Kernel2x2 = Kernel2x2 { k11: -1.0, k12: 1.0, k21: -1.0, k22: 1.0 };
pub const M_11: Kernel2x2 = Kernel2x2 { k11: 1.0, k12: 1.0, k21: 1.0, k22: 1.0 };

/// M_{ij} selected by the first and last entries of the path.
pub fn boundary_matrix(first: u8, last: u8) -> Kernel2x2 {
    match (first, last) {
        (0, 0) => M_00,
        (0, 1) => M_01,
        (1, 0) => M_10,
        (1, 1) => M_11,
        _ => panic!("boundary labels must be 0/1, got ({first},{last})"),
    }
}

/// The literal word product
/// [[1, ±1], [±1, 1]] ∏_i (I + [[−|d_i|, −d_i], [d_i, −|d_i|]]),
/// d_i = s(i+1) − s(i), which collapses onto the boundary matrix
/// M_{s(1), s(k)}.
pub fn m_word_product(s: &BitString) -> Kernel2x2 {
    let k = s.len();
    assert!(k >= 1, "word product needs a nonempty path");
    let b = if s.bit1(1) == 0 { -1.0 } else { 1.0 };
    let mut m = Kernel2x2::new(1.0, b, b, 1.0);
    for i in 1..k {
        let d = s.bit1(i + 1) as f64 - s.bit1(i) as f64;
        let step = Kernel2x2::new(1.0 - d.abs(), -d, d, 1.0 - d.abs());
        m = m.matmul(&step);
    }
    m
}

/// Scalar part of the matrix factor:
/// g_k(u,s) = ∏_{i<k} (1 + (−1)^{s(i)+s(i+1)} u^{2Δ}) / (u^{(k−1)Δ} 2^k).
pub fn g_n_scalar(s: &BitString, u: f64, delta: f64) -> f64 {
    let k = s.len();
    assert!(k >= 1, "g_k needs a nonempty path");
    let tau = u.powf(2.0 * delta);
    let mut prod = 1.0;
    for i in 1..k {
        prod *= if s.bit1(i) == s.bit1(i + 1) { 1.0 + tau } else { 1.0 - tau };
    }
    prod / (u.powf((k - 1) as f64 * delta) * 2f64.powi(k as i32))
}

/// The full matrix factor G_k(u,s) = g_k(u,s) · M_{s(1),s(k)} · u^{Δσ_z}.
pub fn g_n_matrix(s: &BitString, u: f64, delta: f64) -> Kernel2x2 {
    let k = s.len();
    let scalar = g_n_scalar(s, u, delta);
    let ud = u.powf(delta);
    boundary_matrix(s.bit1(1), s.bit1(k)).scale(scalar).col_scale(ud, 1.0 / ud)
}

/// G_k(u,s) straight from its definition as the ordered product
/// 2^{−k} ∏_i [I + (−1)^{1−s(i)} σ_x] u^{Δσ_z} — the independent check
/// on the collapsed form.
pub fn g_n_matrix_product(s: &BitString, u: f64, delta: f64) -> Kernel2x2 {
    let ud = u.powf(delta);
    let mut m = Kernel2x2::IDENTITY;
    for i in 1..=s.len() {
        let e = if s.bit1(i) == 0 { -1.0 } else { 1.0 };
        let factor = Kernel2x2::new(0.5, 0.5 * e, 0.5 * e, 0.5).col_scale(ud, 1.0 / ud);
        m = m.matmul(&factor);
    }
    m
}

/// D_N(x,y,t) = Σ_{s ∈ Z₂^N} G_N(u,s) I_N(x,y,u,s) with u = e^{−t/N}:
/// the kernel of (e^{−(t/N)(b†b−g²)} e^{−(t/N)Δσ_z})^N, which converges
/// to the heat kernel at rate O(1/N).
///
/// The 2^N paths are visited in Gray-code order so each step updates
/// the linear form, the η vector and the quadratic form incrementally;
/// exact state resyncs every 4096 steps stop floating-point drift. The
/// matrix factor only depends on the endpoints of the path, so the sum
/// collapses onto four compensated accumulators.
pub fn d_n_kernel(p: &EvalPoint, params: &ModelParams, n: usize) -> Result<Kernel2x2> {
    if n == 0 {
        return Err(QrmError::InvalidParameter("path count N must be ≥ 1".into()));
    }
    if n > MAX_PATH_BITS {
        return Err(QrmError::PathSumTooLarge {
            n,
            cap: MAX_PATH_BITS,
            cost: (n as u128) << n,
        });
    }
    let u = (-p.t / n as f64).exp();
    let g = params.g;
    let big = 1.0 - u.powi(2 * n as i32);
    let a_lin = std::f64::consts::SQRT_2 * g * (1.0 - u) / big;
    let b_quad = g * g * (1.0 - u) * (1.0 - u) / (2.0 * (1.0 + u) * (1.0 + u) * big);
    let c_const = 2.0 * n as f64 * g * g * (1.0 - u) / (1.0 + u);
    let ln_k0 = mehler_k0_ln(p, g);

    // path-independent coefficient tables (1-based formulas, 0-based stores)
    let template = SignPath::new(BitString::zeros(n), u)?;
    let c_lin: Vec<f64> = (1..=n)
        .map(|j| p.x * template.lambda_coef(j) + p.y * template.lambda_coef(n - j + 1))
        .collect();
    let m_eta = n - 1;
    let mut omega = vec![0.0; m_eta * m_eta];
    for i in 1..=m_eta {
        for j in 1..=m_eta {
            omega[(i - 1) * m_eta + (j - 1)] = template.omega(i, j);
        }
    }
    // g_N(u,s) depends only on the number of sign changes along the path
    let tau = u.powf(2.0 * params.delta);
    let g_norm = u.powf((n - 1) as f64 * params.delta) * 2f64.powi(n as i32);
    let mut g_by_flips = vec![0.0; n];
    for f in 0..n {
        g_by_flips[f] =
            (1.0 + tau).powi((n - 1 - f) as i32) * (1.0 - tau).powi(f as i32) / g_norm;
    }

    // mutable sweep state for s = 0
    let mut sign = vec![1.0f64; n + 1]; // 1-based; sign[j] = (−1)^{s(j)}
    let mut lin: f64 = c_lin.iter().sum();
    let mut eta = vec![2.0f64; m_eta];
    let mut w: Vec<f64> = (0..m_eta)
        .map(|i| (0..m_eta).map(|j| omega[i * m_eta + j] * eta[j]).sum())
        .collect();
    let mut quad: f64 = (0..m_eta).map(|i| eta[i] * w[i]).sum();
    let mut flips = 0usize;

    let mut acc = [[0.0f64; 2]; 2];
    let mut comp = [[0.0f64; 2]; 2];
    let add = |first: usize, last: usize, v: f64, acc: &mut [[f64; 2]; 2], comp: &mut [[f64; 2]; 2]| {
        let y = v - comp[first][last];
        let t = acc[first][last] + y;
        comp[first][last] = (t - acc[first][last]) - y;
        acc[first][last] = t;
    };

    let total = 1u64 << n;
    for m in 0..total {
        if m > 0 {
            let pos = (m.trailing_zeros() + 1) as usize; // 1-based flip position
            let old = sign[pos];
            let new = -old;
            sign[pos] = new;
            lin += (new - old) * c_lin[pos - 1];
            let delta_eta = new - old;
            for idx in [pos.wrapping_sub(1), pos] {
                if (1..=m_eta).contains(&idx) {
                    let i0 = idx - 1;
                    quad += 2.0 * delta_eta * w[i0] + delta_eta * delta_eta * omega[i0 * m_eta + i0];
                    eta[i0] += delta_eta;
                    for j in 0..m_eta {
                        w[j] += delta_eta * omega[j * m_eta + i0];
                    }
                }
            }
            for q in [pos.wrapping_sub(1), pos + 1] {
                if (1..=n).contains(&q) {
                    if sign[q] == new {
                        flips -= 1;
                    } else {
                        flips += 1;
                    }
                }
            }
            if m % 4096 == 0 {
                // exact resync against accumulated drift
                lin = (1..=n).map(|j| sign[j] * c_lin[j - 1]).sum();
                for i in 0..m_eta {
                    eta[i] = sign[i + 1] + sign[i + 2];
                }
                for i in 0..m_eta {
                    w[i] = (0..m_eta).map(|j| omega[i * m_eta + j] * eta[j]).sum();
                }
                quad = (0..m_eta).map(|i| eta[i] * w[i]).sum();
                flips = (1..n).filter(|&i| sign[i] != sign[i + 1]).count();
            }
        }
        let exponent = ln_k0 + a_lin * lin + b_quad * quad - c_const;
        let v = g_by_flips[flips] * exponent.exp();
        let first = usize::from(sign[1] < 0.0);
        let last = usize::from(sign[n] < 0.0);
        add(first, last, v, &mut acc, &mut comp);
    }

    let ud = u.powf(params.delta);
    let mut out = Kernel2x2::ZERO;
    for first in 0..2 {
        for last in 0..2 {
            out = out.add(&boundary_matrix(first as u8, last as u8).scale(acc[first][last]));
        }
    }
    let out = out.col_scale(ud, 1.0 / ud);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(QrmError::Overflow(format!(
            "path sum at x = {}, y = {}, t = {}, N = {n}",
            p.x, p.y, p.t
        )))
    }
}

/// Least-squares order p of a convergence study err ≈ C·N^{−p}: the
/// slope of ln err against ln N, negated. First-order splitting should
/// give p ≈ 1.
pub fn fit_log_slope(ns: &[usize], errs: &[f64]) -> Result<f64> {
    if ns.len() != errs.len() || ns.len() < 2 {
        return Err(QrmError::InvalidParameter(format!(
            "slope fit needs matching lists of at least two points, got {} and {}",
            ns.len(),
            errs.len()
        )));
    }
    if errs.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(QrmError::InvalidParameter(
            "slope fit needs positive finite errors".into(),
        ));
    }
    let m = ns.len() as f64;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|&e| e.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    Ok(-sxy / sxx)
}
