//! Angular-momentum matrices, Clebsch–Gordan coupling and the hyperfine
//! operator set of an alkali ground state (electron spin 1/2 plus nuclear
//! spin I).
//!
//! All matrices use ħ = 1. The coupled basis lists the F = I + 1/2 manifold
//! first and F = I − 1/2 second, with m_F descending inside each manifold.
//! For I = 3/2 this gives `|2,2⟩ … |2,−2⟩, |1,1⟩, |1,0⟩, |1,−1⟩`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use thiserror::Error;

use crate::linalg::{c, CMatrix, SparseOp};

#[derive(Debug, Error, PartialEq)]
pub enum SpinError {
    #[error("{0} is not a non-negative half-integer")]
    NotHalfInteger(f64),
    #[error("magnetic number {m} is out of range for spin {j}")]
    BadProjection { j: HalfInt, m: HalfInt },
}

/// A half-integer stored as twice its value, so `3/2` is `HalfInt(3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    /// Parses a real number that must be an exact multiple of 1/2.
    pub fn from_f64(x: f64) -> Result<Self, SpinError> {
        let twice = 2.0 * x;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 || twice.abs() > 1e6 {
            return Err(SpinError::NotHalfInteger(x));
        }
        Ok(HalfInt(twice.round() as i32))
    }

    /// A spin quantum number: a half-integer that is also non-negative.
    pub fn spin(x: f64) -> Result<Self, SpinError> {
        let h = Self::from_f64(x)?;
        if h.0 < 0 {
            return Err(SpinError::NotHalfInteger(x));
        }
        Ok(h)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Multiplicity 2j + 1.
    pub fn multiplicity(self) -> usize {
        (self.0 + 1) as usize
    }

    /// Magnetic projections `j, j−1, …, −j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j).map(move |k| HalfInt(j - 2 * k))
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

pub const SPIN_HALF: HalfInt = HalfInt(1);

/// Cartesian components of a spin-j operator in the `|j, m⟩` basis
/// (m descending).
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub j: HalfInt,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl SpinMatrices {
    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }
}

/// Builds `Jx, Jy, Jz` from the ladder operators,
/// `⟨m+1|J₊|m⟩ = √(j(j+1) − m(m+1))`.
pub fn build_spin_matrices(j: f64) -> Result<SpinMatrices, SpinError> {
    let j = HalfInt::spin(j)?;
    Ok(spin_matrices(j))
}

pub fn spin_matrices(j: HalfInt) -> SpinMatrices {
    let d = j.multiplicity();
    let jv = j.value();
    let ms: Vec<f64> = j.projections().map(HalfInt::value).collect();
    let mut jp = CMatrix::zeros(d, d);
    // Row k holds m = j - k, so J₊ raises column k+1 into row k.
    for k in 0..d.saturating_sub(1) {
        let m = ms[k + 1];
        jp[(k, k + 1)] = c((jv * (jv + 1.0) - m * (m + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let x = (&jp + &jm) * c(0.5);
    let y = (&jp - &jm) * num_complex::Complex64::new(0.0, -0.5);
    let mut z = CMatrix::zeros(d, d);
    for (k, &m) in ms.iter().enumerate() {
        z[(k, k)] = c(m);
    }
    SpinMatrices { j, x, y, z }
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | j m⟩` (Condon–Shortley phase),
/// evaluated with the Racah closed form.
///
/// Returns 0 whenever a selection rule fails: `m ≠ m1 + m2`, the triangle
/// rule, or a projection outside its spin.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> f64 {
    let (j1, m1, j2, m2, j, m) = (j1.0, m1.0, j2.0, m2.0, j.0, m.0);
    if m1 + m2 != m {
        return 0.0;
    }
    let in_range = |jj: i32, mm: i32| jj >= 0 && mm.abs() <= jj && (jj - mm) % 2 == 0;
    if !in_range(j1, m1) || !in_range(j2, m2) || !in_range(j, m) {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 - j) % 2 != 0 {
        return 0.0;
    }
    // All arguments below are integers once halved.
    let h = |twice: i32| twice / 2;
    let prefactor = ((j + 1) as f64
        * factorial(h(j + j1 - j2))
        * factorial(h(j - j1 + j2))
        * factorial(h(j1 + j2 - j))
        / factorial(h(j1 + j2 + j) + 1))
    .sqrt();
    let norm = (factorial(h(j + m))
        * factorial(h(j - m))
        * factorial(h(j1 - m1))
        * factorial(h(j1 + m1))
        * factorial(h(j2 - m2))
        * factorial(h(j2 + m2)))
    .sqrt();

    let k_min = 0.max(h(j2 - j - m1)).max(h(j1 - j + m2));
    let k_max = h(j1 + j2 - j).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(h(j1 + j2 - j) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k)
            * factorial(h(j - j2 + m1) + k)
            * factorial(h(j - j1 - m2) + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    prefactor * norm * sum
}

/// One coupled basis state `|F, m_F⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HyperfineLevel {
    pub f: HalfInt,
    pub m: HalfInt,
}

impl fmt::Display for HyperfineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.f, self.m)
    }
}

/// Coupled `|F, m_F⟩` basis of nuclear spin I and electron spin 1/2.
#[derive(Clone, Debug)]
pub struct CoupledBasis {
    pub nuclear_spin: HalfInt,
    pub labels: Vec<HyperfineLevel>,
    /// Rows are coupled states, columns uncoupled `|m_I⟩ ⊗ |m_S⟩` states
    /// (both m descending, electron index fastest).
    pub u: CMatrix,
}

impl CoupledBasis {
    pub fn new(nuclear_spin: HalfInt) -> Self {
        let i = nuclear_spin;
        let s = SPIN_HALF;
        let upper = HalfInt(i.0 + 1);
        let lower = HalfInt(i.0 - 1);
        let manifolds: Vec<HalfInt> = if lower.0 >= 0 {
            vec![upper, lower]
        } else {
            vec![upper]
        };
        let labels: Vec<HyperfineLevel> = manifolds
            .iter()
            .flat_map(|&f| f.projections().map(move |m| HyperfineLevel { f, m }))
            .collect();
        let uncoupled: Vec<(HalfInt, HalfInt)> = i
            .projections()
            .flat_map(|mi| s.projections().map(move |ms| (mi, ms)))
            .collect();
        let d = labels.len();
        debug_assert_eq!(d, uncoupled.len());
        let u = CMatrix::from_fn(d, d, |row, col| {
            let HyperfineLevel { f, m } = labels[row];
            let (mi, ms) = uncoupled[col];
            c(clebsch_gordan(i, mi, s, ms, f, m))
        });
        CoupledBasis {
            nuclear_spin,
            labels,
            u,
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Maps an operator from the uncoupled product basis into this basis.
    pub fn to_coupled(&self, op: &CMatrix) -> CMatrix {
        &self.u * op * self.u.adjoint()
    }

    pub fn index_of(&self, f: HalfInt, m: HalfInt) -> Option<usize> {
        self.labels.iter().position(|l| l.f == f && l.m == m)
    }

    /// Eigenvalues of `F_z` in basis order.
    pub fn m_values(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.m.value()).collect()
    }
}

/// Electron, nuclear and total spin components plus the hyperfine
/// Hamiltonian, all expressed in the coupled basis.
#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    pub basis: CoupledBasis,
    pub s: [CMatrix; 3],
    pub i: [CMatrix; 3],
    pub f: [CMatrix; 3],
    /// `A_hfs · I·S`
    pub h0: CMatrix,
    pub a_hfs: f64,
    pub(crate) s_sparse: [SparseOp; 3],
    /// Sparse `S₊` and `S₋` in the coupled basis.
    pub(crate) s_ladder: [SparseOp; 2],
}

/// Builds every operator for nuclear spin `nuclear_spin` and hyperfine
/// constant `a_hfs` (rad/s).
pub fn build_coupled_operators(
    nuclear_spin: f64,
    a_hfs: f64,
) -> Result<SpinOperatorSet, SpinError> {
    let i = HalfInt::spin(nuclear_spin)?;
    Ok(SpinOperatorSet::new(i, a_hfs))
}

impl SpinOperatorSet {
    pub fn new(nuclear_spin: HalfInt, a_hfs: f64) -> Self {
        let basis = CoupledBasis::new(nuclear_spin);
        let nuc = spin_matrices(nuclear_spin);
        let el = spin_matrices(SPIN_HALF);
        let id_i = CMatrix::identity(nuc.j.multiplicity(), nuc.j.multiplicity());
        let id_s = CMatrix::identity(2, 2);

        let lift_s = |m: &CMatrix| basis.to_coupled(&id_i.kronecker(m));
        let lift_i = |m: &CMatrix| basis.to_coupled(&m.kronecker(&id_s));
        let s = [lift_s(&el.x), lift_s(&el.y), lift_s(&el.z)];
        let i = [lift_i(&nuc.x), lift_i(&nuc.y), lift_i(&nuc.z)];
        let f = [&s[0] + &i[0], &s[1] + &i[1], &s[2] + &i[2]];
        let is = &i[0] * &s[0] + &i[1] * &s[1] + &i[2] * &s[2];
        let h0 = crate::linalg::hermitian_part(&(is * c(a_hfs)));
        let s_sparse = [
            SparseOp::from_dense(&s[0], 1e-14),
            SparseOp::from_dense(&s[1], 1e-14),
            SparseOp::from_dense(&s[2], 1e-14),
        ];
        let s_plus = &s[0] + &s[1] * crate::linalg::I;
        let s_ladder = [
            SparseOp::from_dense(&s_plus, 1e-14),
            SparseOp::from_dense(&s_plus.adjoint(), 1e-14),
        ];
        SpinOperatorSet {
            basis,
            s,
            i,
            f,
            h0,
            a_hfs,
            s_sparse,
            s_ladder,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Diagonal of `H0`; the coupled basis diagonalizes the hyperfine term.
    pub fn hyperfine_energies(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.h0[(k, k)].re).collect()
    }

    /// `Σ_k n_k F_k` for a direction `n`.
    pub fn f_along(&self, n: [f64; 3]) -> CMatrix {
        &self.f[0] * c(n[0]) + &self.f[1] * c(n[1]) + &self.f[2] * c(n[2])
    }

    /// Rotation `U` by ±π/2 with `U F_axis U† = F_z`; the identity for
    /// `axis = 2`.
    pub fn rotation_to_z(&self, axis: usize) -> CMatrix {
        let generator = match axis {
            0 => &self.f[1],
            1 => &self.f[0],
            _ => return CMatrix::identity(self.dim(), self.dim()),
        };
        [FRAC_PI_2, -FRAC_PI_2]
            .into_iter()
            .map(|theta| crate::linalg::unitary_exp(generator, theta))
            .min_by(|a, b| {
                let miss = |u: &CMatrix| {
                    crate::linalg::frobenius(&(u * &self.f[axis] * u.adjoint() - &self.f[2]))
                };
                miss(a).total_cmp(&miss(b))
            })
            .expect("two candidates")
    }
}
