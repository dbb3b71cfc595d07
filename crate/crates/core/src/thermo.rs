//! Entropy, irreversibility and extractable-work observables.
//!
//! The reference equilibrium state is the maximally mixed state, so the
//! accumulated entropy production is `D(ρ_t ‖ 𝟙/d) = ln d − S(ρ_t)`.
//! Energies use the hyperfine Hamiltonian shifted so that its ground level
//! sits at zero; ergotropy does not depend on the shift but the efficiency
//! `ℰ/E` does.

use thiserror::Error;

use crate::dynamics::{DensityMatrix, MasterEquation, Trajectory};
use crate::linalg::{self, c, CMatrix};

/// Eigenvalues below this are treated as exact zeros inside logarithms.
pub const EIGEN_FLOOR: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error(
        "relative entropy diverges: reference has a null eigenvector carrying weight {weight:.3e}"
    )]
    UnboundedRelativeEntropy { weight: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Clipped, renormalized spectrum of `rho` together with its eigenvectors.
fn clipped_spectrum(rho: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (mut vals, vecs) = linalg::eigh(rho);
    for v in vals.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let total: f64 = vals.iter().sum();
    if total > 0.0 {
        vals.iter_mut().for_each(|v| *v /= total);
    }
    (vals, vecs)
}

fn xlogx(x: f64) -> f64 {
    if x < EIGEN_FLOOR {
        0.0
    } else {
        x * x.ln()
    }
}

/// `ln ρ` with the eigenvalue floor applied.
fn floored_log(rho: &CMatrix) -> CMatrix {
    let (vals, vecs) = clipped_spectrum(rho);
    let logs: Vec<f64> = vals.iter().map(|v| v.max(EIGEN_FLOOR).ln()).collect();
    &vecs * linalg::from_real_diagonal(&logs) * vecs.adjoint()
}

/// `S(ρ) = −Tr[ρ ln ρ]` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let (vals, _) = clipped_spectrum(rho.matrix());
    -vals.iter().map(|&v| xlogx(v)).sum::<f64>()
}

/// `D(ρ‖σ) = Tr[ρ (ln ρ − ln σ)]` in nats.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, ThermoError> {
    if rho.dim() != sigma.dim() {
        return Err(ThermoError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let r = rho.matrix();
    let (svals, svecs) = clipped_spectrum(sigma.matrix());
    let mut cross = 0.0;
    for (k, &sv) in svals.iter().enumerate() {
        let v = svecs.column(k);
        let weight = (v.adjoint() * r * v)[(0, 0)].re;
        if sv < EIGEN_FLOOR {
            if weight > 1e-12 {
                return Err(ThermoError::UnboundedRelativeEntropy { weight });
            }
            continue;
        }
        cross += weight * sv.ln();
    }
    let self_term = linalg::expectation(r, &floored_log(r));
    Ok((self_term - cross).max(0.0))
}

/// Accumulated entropy production `⟨Σ_t⟩ = D(ρ_t ‖ 𝟙/d)`.
pub fn entropy_production(rho: &DensityMatrix) -> f64 {
    relative_entropy(rho, &DensityMatrix::maximally_mixed(rho.dim()))
        .expect("the maximally mixed state has full support")
}

/// `d⟨Σ_t⟩/dt = Tr[ρ̇ ln ρ]`; the reference term drops out because
/// `ln(𝟙/d)` is proportional to the identity and `Tr ρ̇ = 0`.
pub fn entropy_production_rate(rho: &DensityMatrix, rhs: &CMatrix) -> f64 {
    linalg::trace_product(rhs, &floored_log(rho.matrix())).re
}

/// `H − e_min 𝟙`, the Hamiltonian with its ground level at zero.
pub fn ground_referenced(h: &CMatrix) -> CMatrix {
    let e0 = linalg::eigvalsh(h)[0];
    h - linalg::identity(h.nrows()) * c(e0)
}

pub fn internal_energy(rho: &DensityMatrix, h: &CMatrix) -> f64 {
    rho.expectation(h)
}

/// Passive state: the spectrum of `rho` in descending order placed on the
/// eigenvectors of `h` in ascending energy order.
pub fn passive_state(rho: &DensityMatrix, h: &CMatrix) -> DensityMatrix {
    let (mut r, _) = linalg::eigh(rho.matrix());
    r.reverse();
    let (_, evecs) = linalg::eigh(h);
    let m = &evecs * linalg::from_real_diagonal(&r) * evecs.adjoint();
    DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(&m))
}

/// `Σ_i r_i e_i` with populations descending and energies ascending.
pub fn passive_energy(rho: &DensityMatrix, h: &CMatrix) -> f64 {
    let (mut r, _) = linalg::eigh(rho.matrix());
    r.reverse();
    let e = linalg::eigvalsh(h);
    r.iter().zip(&e).map(|(p, en)| p * en).sum()
}

/// `ℰ = Tr[Hρ] − Tr[Hρ_p] ≥ 0`
pub fn ergotropy(rho: &DensityMatrix, h: &CMatrix) -> f64 {
    (internal_energy(rho, h) - passive_energy(rho, h)).max(0.0)
}

/// Polarization efficiency `ℰ/E` with `E` measured from the ground level of
/// `h`. Defined as 0 when no work can be extracted.
pub fn efficiency(rho: &DensityMatrix, h: &CMatrix) -> f64 {
    let shifted = ground_referenced(h);
    let erg = ergotropy(rho, &shifted);
    let spectrum = linalg::eigvalsh(&shifted);
    let width = spectrum
        .last()
        .copied()
        .unwrap_or(0.0)
        .abs()
        .max(f64::MIN_POSITIVE);
    if erg <= 1e-12 * width {
        return 0.0;
    }
    let energy = internal_energy(rho, &shifted);
    (erg / energy).clamp(0.0, 1.0)
}

/// Thermodynamic record of one trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoSample {
    /// Seconds.
    pub t: f64,
    /// `t / T_SE`.
    pub t_norm: f64,
    /// Von Neumann entropy, nats.
    pub entropy: f64,
    /// Accumulated entropy production, nats.
    pub sigma: f64,
    /// Entropy production rate, nats/s.
    pub sigma_rate: f64,
    /// Internal energy above the hyperfine ground level, units of A_hfs.
    pub energy: f64,
    /// Ergotropy, units of A_hfs.
    pub ergotropy: f64,
    pub efficiency: f64,
}

pub fn thermo_sample(t: f64, t_se: f64, rho: &DensityMatrix, eq: &MasterEquation) -> ThermoSample {
    let ops = eq.ops();
    let h = ground_referenced(&ops.h0);
    let unit = if ops.a_hfs != 0.0 {
        ops.a_hfs.abs()
    } else {
        1.0
    };
    let rhs = eq.rhs(rho.matrix());
    ThermoSample {
        t,
        t_norm: t / t_se,
        entropy: von_neumann_entropy(rho),
        sigma: entropy_production(rho),
        sigma_rate: entropy_production_rate(rho, &rhs),
        energy: internal_energy(rho, &h) / unit,
        ergotropy: ergotropy(rho, &h) / unit,
        efficiency: efficiency(rho, &h),
    }
}

pub fn thermo_series(traj: &Trajectory, eq: &MasterEquation) -> Vec<ThermoSample> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, rho)| thermo_sample(t, traj.t_se, rho, eq))
        .collect()
}
