//! Minimal dense linear algebra for the spectral oracle: a row-major
//! matrix type and a cyclic Jacobi eigensolver for real symmetric
//! matrices. Jacobi is slower than Householder + QL but is simple,
//! unconditionally stable, and produces eigenvectors orthonormal to
//! machine precision (they are an accumulated product of rotations),
//! which is exactly what an oracle wants.

use crate::{QrmError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Matrix power by repeated squaring (square matrices only).
    pub fn pow(&self, mut e: u32) -> Self {
        assert_eq!(self.rows, self.cols, "pow requires a square matrix");
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// max |A − B| over entries; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// max |A − Aᵀ| over entries.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Eigendecomposition of a real symmetric matrix: ascending eigenvalues
/// and the orthonormal eigenvector matrix (eigenvectors in columns, so
/// A = V · diag(values) · Vᵀ).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
///
/// Terminates when the off-diagonal Frobenius norm has fallen below
/// 1e−15 of the matrix norm; errors with the residual if `MAX_SWEEPS`
/// cyclic sweeps were not enough.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    assert_eq!(a.rows, a.cols, "sym_eigen requires a square matrix");
    let n = a.rows;
    if n == 0 {
        return Ok(SymEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }
    let norm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut m = a.clone();
    let mut v = Matrix::identity(n);

    let off_norm = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m.get(i, j) * m.get(i, j);
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&m) <= 1e-15 * norm {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                // Skip rotations that cannot change anything at working precision.
                if apq.abs() <= 1e-300 || apq.abs() <= 1e-18 * (app.abs() + aqq.abs()) {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e10 {
                    // asymptotic form avoids overflow in theta²
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        m.set(k, p, new_kp);
                        m.set(p, k, new_kp);
                        m.set(k, q, new_kq);
                        m.set(q, k, new_kq);
                    }
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp - s * (vkq + tau * vkp));
                    v.set(k, q, vkq + s * (vkp - tau * vkq));
                }
            }
        }
    }
    if !converged && off_norm(&m) > 1e-15 * norm {
        return Err(QrmError::EigenFailure { residual: off_norm(&m) / norm });
    }

    // Sort ascending, permuting eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok(SymEigen { values, vectors })
}

impl SymEigen {
    /// max entry of |VᵀV − I|.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.values.len();
        let vtv = self.vectors.transpose().matmul(&self.vectors);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((vtv.get(i, j) - target).abs());
            }
        }
        worst
    }

    /// max over eigenpairs of ‖A v − λ v‖₂.
    pub fn max_residual(&self, a: &Matrix) -> f64 {
        let n = self.values.len();
        let av = a.matmul(&self.vectors);
        let mut worst = 0.0f64;
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                let r = av.get(i, j) - self.values[j] * self.vectors.get(i, j);
                s += r * r;
            }
            worst = worst.max(s.sqrt());
        }
        worst
    }

    /// Reconstructs f(A) = V · diag(f(λ)) · Vᵀ.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut scaled = Matrix::zeros(n, n);
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled.set(i, j, self.vectors.get(i, j) * fj);
            }
        }
        scaled.matmul(&self.vectors.transpose())
    }
}
