//! Quantum Fisher information for rotations generated by `F_k`, the
//! associated Cramér–Rao bound, and the reparametrization of QFI against
//! efficiency and entropy production.

use thiserror::Error;

use crate::dynamics::{DensityMatrix, MasterEquation, Trajectory};
use crate::linalg::{self, CMatrix};
use crate::thermo::ThermoSample;

/// Pairs with `λ_i + λ_j ≤ QFI_PAIR_FLOOR · Tr ρ` are left out of the sum.
pub const QFI_PAIR_FLOOR: f64 = 1e-12;

/// `F_Q(ρ, G) = 2 Σ_{ij} (λ_i − λ_j)² / (λ_i + λ_j) |⟨ψ_i|G|ψ_j⟩|²`
pub fn qfi(rho: &DensityMatrix, generator: &CMatrix) -> f64 {
    let (vals, vecs) = linalg::eigh(rho.matrix());
    let floor = QFI_PAIR_FLOOR * linalg::trace(rho.matrix()).re;
    let g = vecs.adjoint() * generator * &vecs;
    let d = vals.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let sum = vals[i] + vals[j];
            if sum <= floor {
                continue;
            }
            let diff = vals[i] - vals[j];
            acc += diff * diff / sum * g[(i, j)].norm_sqr();
        }
    }
    (2.0 * acc).max(0.0)
}

/// `⟨G²⟩ − ⟨G⟩²`
pub fn variance(rho: &DensityMatrix, generator: &CMatrix) -> f64 {
    let mean = rho.expectation(generator);
    rho.expectation(&(generator * generator)) - mean * mean
}

/// Lower bound on the single-shot estimation error, `F_Q^(−1/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CramerRao {
    Finite(f64),
    /// The state carries no information about the parameter.
    Unbounded,
}

impl CramerRao {
    pub fn value(self) -> f64 {
        match self {
            CramerRao::Finite(v) => v,
            CramerRao::Unbounded => f64::INFINITY,
        }
    }
}

pub fn cramer_rao_bound(qfi_value: f64) -> CramerRao {
    if qfi_value <= QFI_PAIR_FLOOR {
        CramerRao::Unbounded
    } else {
        CramerRao::Finite(qfi_value.powf(-0.5))
    }
}

/// QFI for the three Cartesian generators at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiSample {
    pub t: f64,
    pub qfi: [f64; 3],
    pub crb: [CramerRao; 3],
}

pub fn qfi_sample(t: f64, rho: &DensityMatrix, eq: &MasterEquation) -> QfiSample {
    let f = &eq.ops().f;
    let qfi = [qfi(rho, &f[0]), qfi(rho, &f[1]), qfi(rho, &f[2])];
    QfiSample {
        t,
        qfi,
        crb: qfi.map(cramer_rao_bound),
    }
}

pub fn qfi_series(traj: &Trajectory, eq: &MasterEquation) -> Vec<QfiSample> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, rho)| qfi_sample(t, rho, eq))
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("series lengths differ: {thermo} thermodynamic samples vs {qfi} QFI samples")]
    LengthMismatch { thermo: usize, qfi: usize },
    #[error("time grids differ at sample {index}: {thermo} s vs {qfi} s")]
    TimeMismatch { index: usize, thermo: f64, qfi: f64 },
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len();
    let nf = n as f64;
    if n < 2 {
        return LinearFit {
            slope: 0.0,
            intercept: points.first().map_or(0.0, |p| p.1),
            r_squared: 0.0,
            n,
        };
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if sxx > 0.0 && syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        0.0
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
        n,
    }
}

/// QFI re-expressed against a thermodynamic resource instead of time.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceCurve {
    /// `(abscissa, [qfi_x, qfi_y, qfi_z])`, sorted by abscissa.
    pub points: Vec<(f64, [f64; 3])>,
}

impl ResourceCurve {
    pub fn component(&self, k: usize) -> Vec<(f64, f64)> {
        self.points.iter().map(|(x, q)| (*x, q[k])).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reparametrization {
    pub versus_efficiency: ResourceCurve,
    pub versus_entropy_production: ResourceCurve,
    /// Line through `(Σ, F_Q(F_k))` for each generator, over samples with
    /// `Σ` above 1% of its final value.
    pub sigma_fit: [LinearFit; 3],
}

fn sorted_curve(mut points: Vec<(f64, [f64; 3])>) -> ResourceCurve {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    ResourceCurve { points }
}

pub fn reparametrize(
    thermo: &[ThermoSample],
    qfi: &[QfiSample],
) -> Result<Reparametrization, MetrologyError> {
    if thermo.len() != qfi.len() {
        return Err(MetrologyError::LengthMismatch {
            thermo: thermo.len(),
            qfi: qfi.len(),
        });
    }
    for (index, (a, b)) in thermo.iter().zip(qfi).enumerate() {
        if (a.t - b.t).abs() > 1e-12 * a.t.abs().max(b.t.abs()).max(1e-300) {
            return Err(MetrologyError::TimeMismatch {
                index,
                thermo: a.t,
                qfi: b.t,
            });
        }
    }
    let versus_efficiency = sorted_curve(
        thermo
            .iter()
            .zip(qfi)
            .map(|(a, b)| (a.efficiency, b.qfi))
            .collect(),
    );
    let versus_entropy_production = sorted_curve(
        thermo
            .iter()
            .zip(qfi)
            .map(|(a, b)| (a.sigma, b.qfi))
            .collect(),
    );

    let sigma_final = thermo.last().map_or(0.0, |s| s.sigma);
    let cutoff = 0.01 * sigma_final;
    let sigma_fit = std::array::from_fn(|k| {
        let pts: Vec<(f64, f64)> = thermo
            .iter()
            .zip(qfi)
            .filter(|(a, _)| a.sigma > cutoff)
            .map(|(a, b)| (a.sigma, b.qfi[k]))
            .collect();
        linear_fit(&pts)
    });
    Ok(Reparametrization {
        versus_efficiency,
        versus_entropy_production,
        sigma_fit,
    })
}

/// Divided second differences of `y(x)` on a non-uniform grid; points with
/// repeated abscissae are merged first.
pub fn second_differences(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(x, y) in points {
        match pts.last_mut() {
            Some(last) if (x - last.0).abs() <= 1e-12 * x.abs().max(1.0) => {
                last.1 = 0.5 * (last.1 + y)
            }
            _ => pts.push((x, y)),
        }
    }
    pts.windows(3)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            (x1, 2.0 * (d12 - d01) / (x2 - x0))
        })
        .collect()
}
