//! Independent ground truth for every closed-form result in this crate:
//! the model Hamiltonian and its parity blocks in a truncated Fock
//! basis, dense eigendecomposition, spectral heat kernels and traces,
//! and the matrix-side Trotter product. Everything here goes through
//! textbook matrix mechanics only — none of the closed-form machinery
//! being validated is reused.

use crate::core::{EvalPoint, Kernel2x2, ModelParams, Parity};
use crate::linalg::{sym_eigen, Matrix};
use crate::{QrmError, Result};

/// Which operator to represent: the full two-level model or one of the
/// parity-reduced Hamiltonians H_± = a†a + g(a+a†) ± Δ·T̂.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Full,
    ParityBlock(Parity),
}

/// Default Fock cutoff and the hard cap used by the certification loop.
pub const DEFAULT_N_CUT: usize = 60;
pub const MAX_N_CUT: usize = 240;

/// A truncated Fock-space Hamiltonian together with its
/// eigendecomposition. Matrix dimension is 2(n_cut+1) for the full
/// model and n_cut+1 for a parity block. Basis layout for the full
/// model: index σ·(n_cut+1) + m with spin σ ∈ {0 = up, 1 = down} and
/// boson number m.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub n_cut: usize,
    pub which: Which,
    pub params: ModelParams,
    pub hamiltonian: Matrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, H = V diag(E) Vᵀ.
    pub eigenvectors: Matrix,
}

/// The Fock matrix of the model: ⟨n|a†a|n⟩ = n, ⟨n+1|a†|n⟩ = √(n+1),
/// T̂ = diag((−1)ⁿ).
pub fn build_hamiltonian(params: &ModelParams, n_cut: usize, which: Which) -> Matrix {
    let nb = n_cut + 1;
    match which {
        Which::Full => {
            let mut h = Matrix::zeros(2 * nb, 2 * nb);
            for sigma in 0..2usize {
                let sz = if sigma == 0 { 1.0 } else { -1.0 };
                for m in 0..nb {
                    h.set(sigma * nb + m, sigma * nb + m, m as f64 + params.delta * sz);
                }
            }
            for m in 0..nb.saturating_sub(1) {
                let c = ((m + 1) as f64).sqrt() * params.g;
                // g(a + a†)σ_x couples the spin blocks
                h.set(m, nb + m + 1, c);
                h.set(nb + m + 1, m, c);
                h.set(m + 1, nb + m, c);
                h.set(nb + m, m + 1, c);
            }
            h
        }
        Which::ParityBlock(par) => {
            let mut h = Matrix::zeros(nb, nb);
            for m in 0..nb {
                let t_hat = if m % 2 == 0 { 1.0 } else { -1.0 };
                h.set(m, m, m as f64 + par.sign() * params.delta * t_hat);
            }
            for m in 0..nb - 1 {
                let c = ((m + 1) as f64).sqrt() * params.g;
                h.set(m, m + 1, c);
                h.set(m + 1, m, c);
            }
            h
        }
    }
}

/// Assembles and diagonalizes the requested Hamiltonian. Enforces the
/// oracle accuracy contract: symmetric input, eigenpair residual at
/// most 1e−10·‖H‖, orthonormality defect below 1e−10.
pub fn build_model(params: &ModelParams, n_cut: usize, which: Which) -> Result<SpectralModel> {
    if n_cut < 8 {
        return Err(QrmError::InvalidParameter(format!(
            "Fock cutoff n_cut must be ≥ 8, got {n_cut}"
        )));
    }
    let h = build_hamiltonian(params, n_cut, which);
    debug_assert!(h.asymmetry() <= 1e-14 * h.max_abs().max(1.0));
    let eig = sym_eigen(&h)?;
    let scale = h.frobenius_norm().max(1.0);
    let residual = eig.max_residual(&h);
    if residual > 1e-10 * scale {
        return Err(QrmError::EigenFailure { residual: residual / scale });
    }
    if eig.orthonormality_defect() >= 1e-10 {
        return Err(QrmError::EigenFailure { residual: eig.orthonormality_defect() });
    }
    Ok(SpectralModel {
        n_cut,
        which,
        params: *params,
        hamiltonian: h,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

/// Evaluator for the orthonormal Hermite functions
/// φ_n(x) = H_n(x) e^{−x²/2} / (π^{1/4} √(2ⁿ n!)), n ≤ n_max.
#[derive(Debug, Clone, Copy)]
pub struct HermiteEval {
    pub n_max: usize,
}

impl HermiteEval {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    /// All of φ_0(x) … φ_{n_max}(x) by the stable two-term recurrence
    /// φ_{n+1} = √(2/(n+1)) x φ_n − √(n/(n+1)) φ_{n−1}.
    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_max + 1);
        let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
        out.push(phi0);
        if self.n_max == 0 {
            return out;
        }
        out.push(std::f64::consts::SQRT_2 * x * phi0);
        for n in 1..self.n_max {
            let np1 = (n + 1) as f64;
            let next =
                (2.0 / np1).sqrt() * x * out[n] - ((n as f64) / np1).sqrt() * out[n - 1];
            out.push(next);
        }
        out
    }
}

/// φ_n(x) for a single index (prefer [`HermiteEval::values`] in loops).
pub fn hermite_phi(n: usize, x: f64) -> f64 {
    HermiteEval::new(n).values(x)[n]
}

fn boson_dim(model: &SpectralModel) -> usize {
    model.n_cut + 1
}

/// Position-space spin-block kernel of an arbitrary operator matrix in
/// the full basis: K_{στ}(x,y) = Σ_{m,m'} φ_m(x) · M[σm, τm'] · φ_{m'}(y).
pub fn position_kernel_full(op: &Matrix, n_cut: usize, x: f64, y: f64) -> Kernel2x2 {
    let nb = n_cut + 1;
    assert_eq!(op.rows, 2 * nb, "operator dimension does not match cutoff");
    let phi = HermiteEval::new(n_cut);
    let px = phi.values(x);
    let py = phi.values(y);
    let mut block = [[0.0f64; 2]; 2];
    for (sigma, row_block) in block.iter_mut().enumerate() {
        for (tau, entry) in row_block.iter_mut().enumerate() {
            let mut acc = 0.0;
            for m in 0..nb {
                if px[m] == 0.0 {
                    continue;
                }
                let row = op.row(sigma * nb + m);
                let mut inner = 0.0;
                for mp in 0..nb {
                    inner += row[tau * nb + mp] * py[mp];
                }
                acc += px[m] * inner;
            }
            *entry = acc;
        }
    }
    Kernel2x2::new(block[0][0], block[0][1], block[1][0], block[1][1])
}

/// Spectral heat kernel of the full model:
/// K(x,y,t) = Σ_j e^{−t E_j} Ψ_j(x) Ψ_j(y)ᵀ with Ψ_j the spinor-valued
/// position eigenfunctions.
pub fn oracle_heat_kernel(model: &SpectralModel, p: &EvalPoint) -> Result<Kernel2x2> {
    if model.which != Which::Full {
        return Err(QrmError::InvalidParameter(
            "oracle_heat_kernel requires a full model; use oracle_heat_kernel_scalar".into(),
        ));
    }
    let nb = boson_dim(model);
    let dim = 2 * nb;
    let phi = HermiteEval::new(model.n_cut);
    let px = phi.values(p.x);
    let py = phi.values(p.y);
    let v = &model.eigenvectors;
    let mut k = [[0.0f64; 2]; 2];
    for j in 0..dim {
        let w = (-p.t * model.eigenvalues[j]).exp();
        if w == 0.0 {
            continue;
        }
        let mut amp_x = [0.0f64; 2];
        let mut amp_y = [0.0f64; 2];
        for sigma in 0..2 {
            let mut ax = 0.0;
            let mut ay = 0.0;
            for m in 0..nb {
                let c = v.get(sigma * nb + m, j);
                ax += c * px[m];
                ay += c * py[m];
            }
            amp_x[sigma] = ax;
            amp_y[sigma] = ay;
        }
        for sigma in 0..2 {
            for tau in 0..2 {
                k[sigma][tau] += w * amp_x[sigma] * amp_y[tau];
            }
        }
    }
    let out = Kernel2x2::new(k[0][0], k[0][1], k[1][0], k[1][1]);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(QrmError::Overflow("oracle_heat_kernel".into()))
    }
}

/// Spectral heat kernel of a parity block (scalar-valued).
pub fn oracle_heat_kernel_scalar(model: &SpectralModel, p: &EvalPoint) -> Result<f64> {
    if model.which == Which::Full {
        return Err(QrmError::InvalidParameter(
            "oracle_heat_kernel_scalar requires a parity model".into(),
        ));
    }
    let nb = boson_dim(model);
    let phi = HermiteEval::new(model.n_cut);
    let px = phi.values(p.x);
    let py = phi.values(p.y);
    let v = &model.eigenvectors;
    let mut k = 0.0;
    for j in 0..nb {
        let w = (-p.t * model.eigenvalues[j]).exp();
        let mut ax = 0.0;
        let mut ay = 0.0;
        for m in 0..nb {
            let c = v.get(m, j);
            ax += c * px[m];
            ay += c * py[m];
        }
        k += w * ax * ay;
    }
    if k.is_finite() {
        Ok(k)
    } else {
        Err(QrmError::Overflow("oracle_heat_kernel_scalar".into()))
    }
}

/// Spectral partition function Σ_n e^{−βE_n} over the retained levels.
pub fn oracle_partition(model: &SpectralModel, beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(QrmError::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    Ok(model.eigenvalues.iter().map(|&e| (-beta * e).exp()).sum())
}

/// A model whose Fock cutoff has been certified by doubling: the
/// observable moved by less than the requested tolerance when n_cut was
/// doubled.
#[derive(Debug, Clone)]
pub struct CertifiedModel {
    pub model: SpectralModel,
    /// Largest observable change seen in the final doubling step.
    pub cutoff_delta: f64,
}

/// Builds models at n_cut = 60, 120, … (cap 240), comparing heat-kernel
/// values at the probe points between consecutive cutoffs; returns the
/// finer model once the change drops below `tol`.
pub fn build_model_certified(
    params: &ModelParams,
    which: Which,
    probes: &[EvalPoint],
    tol: f64,
) -> Result<CertifiedModel> {
    let mut n_cut = DEFAULT_N_CUT;
    let mut coarse = build_model(params, n_cut, which)?;
    loop {
        let fine = build_model(params, 2 * n_cut, which)?;
        let mut delta = 0.0f64;
        for p in probes {
            let d = match which {
                Which::Full => oracle_heat_kernel(&coarse, p)?
                    .max_abs_diff(&oracle_heat_kernel(&fine, p)?),
                Which::ParityBlock(_) => (oracle_heat_kernel_scalar(&coarse, p)?
                    - oracle_heat_kernel_scalar(&fine, p)?)
                .abs(),
            };
            delta = delta.max(d);
        }
        if delta < tol {
            return Ok(CertifiedModel { model: fine, cutoff_delta: delta });
        }
        n_cut *= 2;
        if 2 * n_cut > MAX_N_CUT {
            return Err(QrmError::CutoffInsufficient { n_cut: 2 * n_cut, delta, tol });
        }
        coarse = fine;
    }
}

/// The Trotter product (e^{−t(b†b−g²)/N} · e^{−tΔσ_z/N})^N in the full
/// Fock basis, with b†b − g² assembled as a†a + g(a+a†)σ_x.
pub fn trotter_matrix_product(
    params: &ModelParams,
    n_cut: usize,
    t: f64,
    n_steps: u32,
) -> Result<Matrix> {
    if n_steps == 0 {
        return Err(QrmError::InvalidParameter("n_steps must be ≥ 1".into()));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(QrmError::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    let nb = n_cut + 1;
    let displaced = ModelParams { g: params.g, delta: 0.0 };
    let x_op = build_hamiltonian(&displaced, n_cut, Which::Full);
    let eig = sym_eigen(&x_op)?;
    let step = t / n_steps as f64;
    let exp_x = eig.apply_function(|lam| (-step * lam).exp());
    // right factor e^{−tΔσ_z/N} is diagonal: e^{∓tΔ/N} on the spin blocks
    let up = (-step * params.delta).exp();
    let dn = (step * params.delta).exp();
    let mut c = exp_x;
    for i in 0..2 * nb {
        let d = if i < nb { up } else { dn };
        for r in 0..2 * nb {
            let v = c.get(r, i) * d;
            c.set(r, i, v);
        }
    }
    Ok(c.pow(n_steps))
}

/// The orthogonal block transform W = ½ [[1+T̂, 1−T̂], [1−T̂, 1+T̂]]
/// (an involution) that block-diagonalizes the full Hamiltonian into
/// the parity blocks: W H W = diag(H₊, H₋).
pub fn parity_transform(n_cut: usize) -> Matrix {
    let nb = n_cut + 1;
    let mut w = Matrix::zeros(2 * nb, 2 * nb);
    for m in 0..nb {
        let t_hat = if m % 2 == 0 { 1.0 } else { -1.0 };
        w.set(m, m, 0.5 * (1.0 + t_hat));
        w.set(nb + m, nb + m, 0.5 * (1.0 + t_hat));
        w.set(m, nb + m, 0.5 * (1.0 - t_hat));
        w.set(nb + m, m, 0.5 * (1.0 - t_hat));
    }
    w
}

/// The full spectral kernel conjugated by the parity transform,
/// evaluated in position space. Returns [[K'₁₁, K'₁₂], [K'₂₁, K'₂₂]];
/// the off-diagonal entries must vanish and the diagonal ones equal the
/// parity kernels K_±(x,y).
///
/// Because the transform mixes the reflection T̂ into the position
/// arguments, the result combines the kernel at (±x, ±y):
/// K'_{ij}(x,y) = ¼ Σ_{a,b} [K_{ab}(x,y) + ε_{ia}K_{ab}(−x,y)
///                + ε_{bj}K_{ab}(x,−y) + ε_{ia}ε_{bj}K_{ab}(−x,−y)]
/// with ε_{ia} = +1 for i = a and −1 otherwise.
pub fn conjugated_parity_blocks(model: &SpectralModel, p: &EvalPoint) -> Result<[[f64; 2]; 2]> {
    let k_pp = oracle_heat_kernel(model, p)?;
    let k_mp = oracle_heat_kernel(model, &EvalPoint { x: -p.x, ..*p })?;
    let k_pm = oracle_heat_kernel(model, &p.y_reflected())?;
    let k_mm = oracle_heat_kernel(model, &p.reflected())?;
    let entry = |k: &Kernel2x2, a: usize, b: usize| match (a, b) {
        (0, 0) => k.k11,
        (0, 1) => k.k12,
        (1, 0) => k.k21,
        (1, 1) => k.k22,
        _ => unreachable!(),
    };
    let mut out = [[0.0f64; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, val) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..2 {
                let eia = if i == a { 1.0 } else { -1.0 };
                for b in 0..2 {
                    let ebj = if b == j { 1.0 } else { -1.0 };
                    acc += entry(&k_pp, a, b)
                        + eia * entry(&k_mp, a, b)
                        + ebj * entry(&k_pm, a, b)
                        + eia * ebj * entry(&k_mm, a, b);
                }
            }
            *val = 0.25 * acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{mehler_k0, single_step_kernel};
    use crate::quadrature::gauss_legendre_01;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(g: f64, delta: f64) -> ModelParams {
        ModelParams::new(g, delta).unwrap()
    }

    #[test]
    fn hermite_basics() {
        assert_relative_eq!(
            hermite_phi(0, 0.0),
            std::f64::consts::PI.powf(-0.25),
            max_relative = 1e-15
        );
        assert_abs_diff_eq!(hermite_phi(1, 0.0), 0.0, epsilon = 1e-300);
        // recurrence stays finite deep into the classically forbidden region
        for &x in &[-10.0, -3.7, 0.0, 4.2, 10.0] {
            let vals = HermiteEval::new(200).values(x);
            assert!(vals.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn hermite_orthonormality_by_quadrature() {
        let (nodes, weights) = gauss_legendre_01(220).unwrap();
        let (a, b) = (-10.0, 10.0);
        let nmax = 20;
        let he = HermiteEval::new(nmax);
        let mut gram = vec![vec![0.0f64; nmax + 1]; nmax + 1];
        for (&xi, &w) in nodes.iter().zip(&weights) {
            let x = a + (b - a) * xi;
            let vals = he.values(x);
            for i in 0..=nmax {
                for j in i..=nmax {
                    gram[i][j] += w * (b - a) * vals[i] * vals[j];
                }
            }
        }
        for i in 0..=nmax {
            for j in i..=nmax {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[i][j] - target).abs() < 1e-10,
                    "⟨φ_{i}, φ_{j}⟩ = {}",
                    gram[i][j]
                );
            }
        }
    }

    #[test]
    fn hermite_series_reproduces_mehler_kernel() {
        // Σ_n e^{−nt} φ_n(x) φ_n(y) → K₀(x,y,t;0)
        let he = HermiteEval::new(80);
        for &(x, y, t) in &[(0.0, 0.0, 1.0), (0.7, -0.4, 0.8), (1.5, 1.0, 2.0)] {
            let vx = he.values(x);
            let vy = he.values(y);
            let mut s = 0.0;
            for n in 0..=80 {
                s += (-(n as f64) * t).exp() * vx[n] * vy[n];
            }
            let p = EvalPoint::new(x, y, t).unwrap();
            assert_relative_eq!(s, mehler_k0(&p, 0.0).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn spectrum_at_g_zero_is_levels_plus_minus_delta() {
        let m = build_model(&params(0.0, 0.35), 20, Which::Full).unwrap();
        let mut expect: Vec<f64> = (0..=20)
            .flat_map(|n| [n as f64 + 0.35, n as f64 - 0.35])
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in m.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectrum_at_delta_zero_is_shifted_oscillator() {
        let g = 0.9;
        let m = build_model(&params(g, 0.0), 70, Which::Full).unwrap();
        // lowest eigenvalue −g², doubly degenerate
        assert_abs_diff_eq!(m.eigenvalues[0], -g * g, epsilon = 1e-8);
        assert_abs_diff_eq!(m.eigenvalues[1], -g * g, epsilon = 1e-8);
        assert_abs_diff_eq!(m.eigenvalues[2], 1.0 - g * g, epsilon = 1e-7);
    }

    #[test]
    fn spectrum_stable_under_cutoff_doubling() {
        let p = params(1.0, 1.0);
        let coarse = build_model(&p, 40, Which::Full).unwrap();
        let fine = build_model(&p, 80, Which::Full).unwrap();
        for j in 0..10 {
            assert!((coarse.eigenvalues[j] - fine.eigenvalues[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn free_kernel_is_mehler_times_identity() {
        let m = build_model(&params(0.0, 0.0), 60, Which::Full).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.8, -0.3), (1.5, 1.2)] {
            let p = EvalPoint::new(x, y, 1.0).unwrap();
            let k = oracle_heat_kernel(&m, &p).unwrap();
            let k0 = mehler_k0(&p, 0.0).unwrap();
            assert_relative_eq!(k.k11, k0, max_relative = 1e-10);
            assert_relative_eq!(k.k22, k0, max_relative = 1e-10);
            assert_abs_diff_eq!(k.k12, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(k.k21, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kernel_swap_symmetry() {
        let m = build_model(&params(0.8, 0.5), 60, Which::Full).unwrap();
        let k1 = oracle_heat_kernel(&m, &EvalPoint::new(0.9, -0.4, 0.7).unwrap()).unwrap();
        let k2 = oracle_heat_kernel(&m, &EvalPoint::new(-0.4, 0.9, 0.7).unwrap()).unwrap();
        assert!(k1.max_abs_diff(&k2.transpose()) < 1e-12 * k1.max_abs().max(1.0));
    }

    #[test]
    fn long_time_kernel_is_ground_state_projector() {
        let p = params(0.3, 0.25);
        let m = build_model(&p, 60, Which::Full).unwrap();
        // t·gap = 25 leaves the first excited state at e^{−25}; the
        // margin matters because the ground state's up-component is
        // odd in x and small near the probe points, which inflates the
        // excited-to-ground ratio on k11 by a couple of decades.
        let gap = m.eigenvalues[1] - m.eigenvalues[0];
        let t = 25.0 / gap;
        let e0 = m.eigenvalues[0];
        let nb = m.n_cut + 1;
        let he = HermiteEval::new(m.n_cut);
        let point = EvalPoint::new(0.4, 0.1, t).unwrap();
        let k = oracle_heat_kernel(&m, &point).unwrap();
        let psi = |x: f64, sigma: usize| {
            let vals = he.values(x);
            (0..nb).map(|mm| m.eigenvectors.get(sigma * nb + mm, 0) * vals[mm]).sum::<f64>()
        };
        let w = (-t * e0).exp();
        for (have, want) in [
            (k.k11, w * psi(point.x, 0) * psi(point.y, 0)),
            (k.k12, w * psi(point.x, 0) * psi(point.y, 1)),
            (k.k21, w * psi(point.x, 1) * psi(point.y, 0)),
            (k.k22, w * psi(point.x, 1) * psi(point.y, 1)),
        ] {
            assert_relative_eq!(have, want, max_relative = 1e-6);
        }
    }

    #[test]
    fn kernel_semigroup_property() {
        let m = build_model(&params(0.7, 0.4), 60, Which::Full).unwrap();
        let (t1, t2) = (0.6, 0.9);
        let (x, y) = (0.5, -0.8);
        let direct =
            oracle_heat_kernel(&m, &EvalPoint::new(x, y, t1 + t2).unwrap()).unwrap();
        let (nodes, weights) = gauss_legendre_01(140).unwrap();
        let (a, b) = (-9.0, 9.0);
        let mut acc = Kernel2x2::ZERO;
        for (&xi, &w) in nodes.iter().zip(&weights) {
            let z = a + (b - a) * xi;
            let k1 = oracle_heat_kernel(&m, &EvalPoint::new(x, z, t1).unwrap()).unwrap();
            let k2 = oracle_heat_kernel(&m, &EvalPoint::new(z, y, t2).unwrap()).unwrap();
            acc = acc.add(&k1.matmul(&k2).scale(w * (b - a)));
        }
        assert!(direct.max_abs_diff(&acc) < 1e-6);
    }

    #[test]
    fn gaussian_expectation_bounded_and_monotone_for_oscillator() {
        // ⟨φ⊗up| e^{−tH} |φ⊗up⟩ with φ = (φ₀ + φ₁)/√2; for the bare
        // oscillator this is (1 + e^{−t})/2 exactly.
        let m = build_model(&params(0.0, 0.0), 40, Which::Full).unwrap();
        let (nodes, weights) = gauss_legendre_01(100).unwrap();
        let (a, b) = (-8.0, 8.0);
        let mix = |x: f64| (hermite_phi(0, x) + hermite_phi(1, x)) / 2.0f64.sqrt();
        let sandwich = |t: f64| {
            let mut acc = 0.0;
            for (&xi, &wx) in nodes.iter().zip(&weights) {
                let x = a + (b - a) * xi;
                let px = mix(x);
                for (&yj, &wy) in nodes.iter().zip(&weights) {
                    let y = a + (b - a) * yj;
                    let k =
                        oracle_heat_kernel(&m, &EvalPoint::new(x, y, t).unwrap()).unwrap();
                    acc += wx * wy * (b - a) * (b - a) * px * k.k11 * mix(y);
                }
            }
            acc
        };
        let q1 = sandwich(0.5);
        let q2 = sandwich(1.0);
        assert_relative_eq!(q1, 0.5 * (1.0 + (-0.5f64).exp()), max_relative = 1e-7);
        assert_relative_eq!(q2, 0.5 * (1.0 + (-1.0f64).exp()), max_relative = 1e-7);
        assert!(q2 < q1, "sandwich must decrease in t for the oscillator");
    }

    #[test]
    fn partition_closed_forms() {
        let beta = 1.3;
        let md = build_model(&params(0.8, 0.0), 80, Which::Full).unwrap();
        let z = oracle_partition(&md, beta).unwrap();
        let expect = 2.0 * (0.8f64 * 0.8 * beta).exp() / (1.0 - (-beta).exp());
        assert_relative_eq!(z, expect, max_relative = 1e-8);

        let mg = build_model(&params(0.0, 0.6), 80, Which::Full).unwrap();
        let z = oracle_partition(&mg, beta).unwrap();
        let expect = 2.0 * (beta * 0.6f64).cosh() / (1.0 - (-beta).exp());
        assert_relative_eq!(z, expect, max_relative = 1e-10);
    }

    #[test]
    fn partition_splits_into_parity_traces() {
        let p = params(0.9, 0.7);
        let full = build_model(&p, 60, Which::Full).unwrap();
        let plus = build_model(&p, 60, Which::ParityBlock(Parity::Plus)).unwrap();
        let minus = build_model(&p, 60, Which::ParityBlock(Parity::Minus)).unwrap();
        for &beta in &[0.5, 1.0, 2.0] {
            let z = oracle_partition(&full, beta).unwrap();
            let zp = oracle_partition(&plus, beta).unwrap();
            let zm = oracle_partition(&minus, beta).unwrap();
            assert_relative_eq!(z, zp + zm, max_relative = 1e-10);
        }
    }

    #[test]
    fn parity_transform_block_diagonalizes() {
        let p = params(0.8, 0.6);
        let n_cut = 40;
        let nb = n_cut + 1;
        let h = build_hamiltonian(&p, n_cut, Which::Full);
        let w = parity_transform(n_cut);
        // W is a symmetric orthogonal involution
        let ww = w.matmul(&w);
        let mut worst = 0.0f64;
        for i in 0..2 * nb {
            for j in 0..2 * nb {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ww.get(i, j) - t).abs());
            }
        }
        assert!(worst < 1e-14);
        let whw = w.matmul(&h).matmul(&w);
        let hp = build_hamiltonian(&p, n_cut, Which::ParityBlock(Parity::Plus));
        let hm = build_hamiltonian(&p, n_cut, Which::ParityBlock(Parity::Minus));
        let mut dev = 0.0f64;
        for i in 0..nb {
            for j in 0..nb {
                dev = dev.max((whw.get(i, j) - hp.get(i, j)).abs());
                dev = dev.max((whw.get(nb + i, nb + j) - hm.get(i, j)).abs());
                dev = dev.max(whw.get(i, nb + j).abs());
                dev = dev.max(whw.get(nb + i, j).abs());
            }
        }
        assert!(dev < 1e-12, "parity conjugation deviates by {dev}");
    }

    #[test]
    fn conjugated_kernel_blocks_match_parity_models() {
        let p = params(0.8, 0.6);
        let full = build_model(&p, 80, Which::Full).unwrap();
        let plus = build_model(&p, 80, Which::ParityBlock(Parity::Plus)).unwrap();
        let minus = build_model(&p, 80, Which::ParityBlock(Parity::Minus)).unwrap();
        let point = EvalPoint::new(0.7, -0.2, 1.0).unwrap();
        let blocks = conjugated_parity_blocks(&full, &point).unwrap();
        assert!(blocks[0][1].abs() < 1e-10);
        assert!(blocks[1][0].abs() < 1e-10);
        let kp = oracle_heat_kernel_scalar(&plus, &point).unwrap();
        let km = oracle_heat_kernel_scalar(&minus, &point).unwrap();
        assert_relative_eq!(blocks[0][0], kp, max_relative = 1e-8);
        assert_relative_eq!(blocks[1][1], km, max_relative = 1e-8);
    }

    #[test]
    fn trotter_product_exact_for_commuting_factors() {
        // Δ = 0: the two factors commute, every N gives e^{−tH} exactly.
        let p = params(0.7, 0.0);
        let n_cut = 40;
        let h = build_hamiltonian(&p, n_cut, Which::Full);
        let exact = sym_eigen(&h).unwrap().apply_function(|lam| (-1.0f64 * lam).exp());
        for n_steps in [1u32, 3, 8] {
            let prod = trotter_matrix_product(&p, n_cut, 1.0, n_steps).unwrap();
            let mut worst = 0.0f64;
            for i in 0..2 * (n_cut + 1) {
                for j in 0..2 * (n_cut + 1) {
                    worst = worst.max((prod.get(i, j) - exact.get(i, j)).abs());
                }
            }
            assert!(worst < 1e-11, "N = {n_steps} deviates by {worst}");
        }
    }

    #[test]
    fn trotter_single_step_kernel_matches_closed_form() {
        let p = params(1.0, 0.7);
        let n_cut = 80;
        let t = 1.0;
        let prod = trotter_matrix_product(&p, n_cut, t, 1).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.9, -1.3), (1.5, 0.4)] {
            let k = position_kernel_full(&prod, n_cut, x, y);
            let point = EvalPoint::new(x, y, t).unwrap();
            let d = single_step_kernel(&point, &p).unwrap();
            assert!(
                k.max_abs_diff(&d) < 1e-8,
                "single-step kernel mismatch at ({x},{y}): {:?} vs {:?}",
                k,
                d
            );
        }
    }

    #[test]
    fn trotter_operator_error_scales_as_one_over_n() {
        let p = params(0.6, 0.4);
        let n_cut = 40;
        let t = 1.0;
        let h = build_hamiltonian(&p, n_cut, Which::Full);
        let exact = sym_eigen(&h).unwrap().apply_function(|lam| (-t * lam).exp());
        let dev = |n_steps: u32| {
            let prod = trotter_matrix_product(&p, n_cut, t, n_steps).unwrap();
            let mut worst = 0.0f64;
            for i in 0..2 * (n_cut + 1) {
                for j in 0..2 * (n_cut + 1) {
                    worst = worst.max((prod.get(i, j) - exact.get(i, j)).abs());
                }
            }
            worst
        };
        let ns = [4u32, 8, 16, 32];
        let devs: Vec<f64> = ns.iter().map(|&n| dev(n)).collect();
        // least-squares slope of ln(dev) against ln(N); O(1/N) ⇒ slope ≈ −1
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!(
            (-1.2..=-0.8).contains(&slope),
            "Trotter slope {slope} outside [−1.2, −0.8]; devs {devs:?}"
        );
    }

    #[test]
    fn certification_loop_returns_converged_model() {
        let p = params(0.5, 0.5);
        let probes = [
            EvalPoint::new(0.0, 0.0, 0.5).unwrap(),
            EvalPoint::new(1.5, -1.5, 0.5).unwrap(),
        ];
        let cert = build_model_certified(&p, Which::Full, &probes, 1e-7).unwrap();
        assert!(cert.cutoff_delta < 1e-7);
        assert!(cert.model.n_cut >= 2 * DEFAULT_N_CUT);
    }

    #[test]
    fn build_model_rejects_tiny_cutoff() {
        assert!(build_model(&params(0.5, 0.5), 4, Which::Full).is_err());
    }
}
