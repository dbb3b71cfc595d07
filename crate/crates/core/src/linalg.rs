//! Small dense complex linear-algebra helpers shared by the physics modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Dense complex matrix used for all operators and states.
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

pub fn from_real_diagonal(diag: &[f64]) -> CMatrix {
    let d = diag.len();
    let mut m = zeros(d);
    for (k, &v) in diag.iter().enumerate() {
        m[(k, k)] = c(v);
    }
    m
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius norm of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// `(m + m†) / 2`
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Column `k` of the returned matrix is the eigenvector for `values[k]`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(m);
    let eig = SymmetricEigen::new(h);
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(d, d, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// `Σ_k f(λ_k) |v_k⟩⟨v_k|` for a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let diag = from_real_diagonal(&values.iter().map(|&v| f(v)).collect::<Vec<_>>());
    &vectors * diag * vectors.adjoint()
}

/// `exp(−iθh)` for Hermitian `h`.
pub fn unitary_exp(h: &CMatrix, theta: f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -theta * v)),
    ));
    &vectors * phases * vectors.adjoint()
}

/// Expectation value `Tr[ρ O]`, real part.
pub fn expectation(rho: &CMatrix, op: &CMatrix) -> f64 {
    trace_product(rho, op).re
}

/// Sparse row-compressed copy of an operator, used in the hot RHS loop where
/// the spin operators have only a handful of nonzeros per row.
#[derive(Clone, Debug)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix, tol: f64) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let v = m[(r, col)];
                if v.norm() > tol {
                    entries.push((r, col, v));
                }
            }
        }
        SparseOp {
            dim: m.nrows(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `out += alpha · (self · m)`
    pub fn left_mul_acc(&self, m: &CMatrix, alpha: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        for &(r, k, v) in &self.entries {
            let w = alpha * v;
            for col in 0..d {
                out[(r, col)] += w * m[(k, col)];
            }
        }
    }

    /// `out += alpha · (m · self)`
    pub fn right_mul_acc(&self, m: &CMatrix, alpha: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        for &(k, col, v) in &self.entries {
            let w = alpha * v;
            for r in 0..d {
                out[(r, col)] += w * m[(r, k)];
            }
        }
    }

    /// `out += alpha · (m · self)` on raw column-major storage of dimension
    /// `self.dim()`; every update is a contiguous column axpy.
    pub fn right_mul_acc_slice(&self, m: &[Complex64], alpha: Complex64, out: &mut [Complex64]) {
        let d = self.dim;
        for &(k, col, v) in &self.entries {
            let w = alpha * v;
            let src = &m[k * d..(k + 1) * d];
            let dst = &mut out[col * d..(col + 1) * d];
            for (o, x) in dst.iter_mut().zip(src) {
                *o += w * x;
            }
        }
    }

    /// `Tr[self · m]`
    pub fn trace_with(&self, m: &CMatrix) -> Complex64 {
        self.entries.iter().map(|&(r, k, v)| v * m[(k, r)]).sum()
    }
}

/// `out += m†` on raw column-major storage.
pub fn add_adjoint_slice(m: &[Complex64], d: usize, out: &mut [Complex64]) {
    for col in 0..d {
        for r in 0..d {
            out[col * d + r] += m[r * d + col].conj();
        }
    }
}
