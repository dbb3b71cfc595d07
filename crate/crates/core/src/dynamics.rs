//! Mean-field master equation for a single representative alkali atom under
//! optical pumping, spin-exchange and spin-destruction collisions:
//!
//! ```text
//! dρ/dt = −i[H0, ρ] + R_op [φ(1 + 2 s·S) − ρ]
//!       + Γ_SE [φ(1 + 4⟨S⟩·S) − ρ] + Γ_SD [φ − ρ]
//! φ = ρ/4 + Σ_k S_k ρ S_k
//! ```
//!
//! The products `φ·(…)` are symmetrized, `(X + X†)/2`, so the generator maps
//! Hermitian matrices to Hermitian matrices. `⟨S⟩ = Tr[ρ S]` is recomputed at
//! every right-hand-side evaluation.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, c, CMatrix, ONE, ZERO};
use crate::spin_algebra::SpinOperatorSet;

/// Tolerance used when a state is accepted as a density matrix.
pub const STATE_TOL: f64 = 1e-9;
/// Integration aborts once a sampled state drifts past this tolerance.
pub const ABORT_TOL: f64 = 1e-6;
/// Steady state: `‖dρ/dt‖_F < NESS_TOL · Γ_SE`.
pub const NESS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid pump parameters: {0}")]
    InvalidParams(String),
    #[error("invalid integration settings: {0}")]
    InvalidIntegration(String),
    #[error("dimension mismatch: state is {state}x{state}, operators are {ops}x{ops}")]
    DimensionMismatch { state: usize, ops: usize },
    #[error("not a density matrix: {0}")]
    InvalidState(#[from] InvariantViolation),
    #[error("sample {index} (t = {time:.6e} s): {violation}")]
    Integration {
        index: usize,
        time: f64,
        violation: InvariantViolation,
    },
}

/// A density-matrix invariant that failed, with the offending magnitude.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum InvariantViolation {
    #[error("trace drift {0:.3e}")]
    Trace(f64),
    #[error("hermiticity defect {0:.3e}")]
    Hermiticity(f64),
    #[error("negative eigenvalue {0:.3e}")]
    Negativity(f64),
}

/// Measured deviations of a matrix from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDefects {
    pub trace_drift: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl StateDefects {
    pub fn measure(m: &CMatrix) -> Self {
        let finite = m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        StateDefects {
            trace_drift: (linalg::trace(m) - c(1.0)).norm(),
            hermiticity: linalg::hermiticity_defect(m),
            // The eigensolver is not guaranteed to terminate on NaN input.
            min_eigenvalue: if finite {
                linalg::eigvalsh(m)[0]
            } else {
                f64::NAN
            },
        }
    }

    pub fn check(&self, tol: f64) -> Result<(), InvariantViolation> {
        if !(self.trace_drift <= tol) {
            return Err(InvariantViolation::Trace(self.trace_drift));
        }
        if !(self.hermiticity <= tol) {
            return Err(InvariantViolation::Hermiticity(self.hermiticity));
        }
        if !(self.min_eigenvalue >= -tol) {
            return Err(InvariantViolation::Negativity(self.min_eigenvalue));
        }
        Ok(())
    }
}

/// Single-atom state ρ in the coupled `|F, m_F⟩` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates trace, hermiticity and positivity to [`STATE_TOL`].
    pub fn new(m: CMatrix) -> Result<Self, InvariantViolation> {
        StateDefects::measure(&m).check(STATE_TOL)?;
        Ok(DensityMatrix(m))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(linalg::identity(dim) * c(1.0 / dim as f64))
    }

    /// Pure state `|k⟩⟨k|` on basis vector `k`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = linalg::zeros(dim);
        m[(k, k)] = c(1.0);
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn defects(&self) -> StateDefects {
        StateDefects::measure(&self.0)
    }

    /// Diagonal entries in the coupled basis.
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn off_diagonal_mass(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for r in 0..d {
            for col in 0..d {
                if r != col {
                    acc += self.0[(r, col)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        linalg::expectation(&self.0, op)
    }
}

/// Optical pumping and collisional rates, all in s⁻¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PumpParams {
    pub r_op: f64,
    /// Photon spin vector, `|s| ≤ 1`.
    pub s: [f64; 3],
    pub gamma_se: f64,
    pub gamma_sd: f64,
}

impl PumpParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let rates = [
            ("r_op", self.r_op),
            ("gamma_se", self.gamma_se),
            ("gamma_sd", self.gamma_sd),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DynamicsError::InvalidParams(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        let norm = self.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm <= 1.0 + 1e-12) {
            return Err(DynamicsError::InvalidParams(format!(
                "|s| = {norm} exceeds 1"
            )));
        }
        Ok(())
    }

    /// `T_SE = 1/Γ_SE`; falls back to 1 s when spin exchange is switched off.
    pub fn t_se(&self) -> f64 {
        if self.gamma_se > 0.0 {
            1.0 / self.gamma_se
        } else {
            1.0
        }
    }
}

/// `φ = ρ/4 + Σ_k S_k ρ S_k`, the state with electron-spin correlations
/// removed.
pub fn nuclear_part(rho: &CMatrix, ops: &SpinOperatorSet) -> CMatrix {
    let mut phi = rho * c(0.25);
    let mut tmp = linalg::zeros(rho.nrows());
    for s in &ops.s_sparse {
        tmp.fill(ZERO);
        s.left_mul_acc(rho, c(1.0), &mut tmp);
        s.right_mul_acc(&tmp, c(1.0), &mut phi);
    }
    phi
}

/// Right-hand side of the master equation for an arbitrary Hermitian `rho`.
pub fn master_rhs(rho: &CMatrix, params: &PumpParams, ops: &SpinOperatorSet) -> CMatrix {
    let eq = MasterEquation::new(ops.clone(), *params);
    eq.rhs(rho)
}

/// Master equation with its operators and rates bound together.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    ops: SpinOperatorSet,
    params: PumpParams,
    energies: Vec<f64>,
}

/// Scratch matrices reused across right-hand-side evaluations.
struct Scratch {
    phi: CMatrix,
    tmp: CMatrix,
    adj: CMatrix,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch {
            phi: linalg::zeros(d),
            tmp: linalg::zeros(d),
            adj: linalg::zeros(d),
        }
    }
}

impl MasterEquation {
    pub fn new(ops: SpinOperatorSet, params: PumpParams) -> Self {
        let energies = ops.hyperfine_energies();
        MasterEquation {
            ops,
            params,
            energies,
        }
    }

    pub fn ops(&self) -> &SpinOperatorSet {
        &self.ops
    }

    pub fn params(&self) -> &PumpParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    /// Largest rate in the problem, setting the default step.
    pub fn fastest_rate(&self) -> f64 {
        let p = &self.params;
        [self.ops.a_hfs.abs(), p.r_op, p.gamma_se, p.gamma_sd]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// `dt = 1 / (50 · max(A_hfs, R_op, Γ_SE, Γ_SD))`
    pub fn default_dt(&self) -> f64 {
        1.0 / (50.0 * self.fastest_rate())
    }

    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = linalg::zeros(d);
        self.rhs_into(rho, &mut out, &mut Scratch::new(d));
        out
    }

    // Every product is formed as a right multiplication on column-major
    // storage, using Hermiticity of ρ and φ to avoid left products:
    // S_x ρ S_x + S_y ρ S_y = (S₊ ρ S₋ + S₋ ρ S₊)/2 and S₊ ρ S₋ = (ρ S₋)† S₋.
    fn rhs_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut Scratch) {
        let d = self.dim();
        let p = &self.params;
        let Scratch { phi, tmp, adj } = scratch;
        let [s_plus, s_minus] = &self.ops.s_ladder;
        let s_z = &self.ops.s_sparse[2];
        let rho_s = rho.as_slice();

        phi.copy_from(rho);
        *phi *= c(0.25);
        for (op, weight) in [(s_minus, 0.5), (s_plus, 0.5), (s_z, 1.0)] {
            tmp.fill(ZERO);
            op.right_mul_acc_slice(rho_s, ONE, tmp.as_mut_slice());
            adj.tr_copy_from(tmp);
            adj.conjugate_mut();
            op.right_mul_acc_slice(adj.as_slice(), c(weight), phi.as_mut_slice());
        }

        let total = c(p.r_op + p.gamma_se + p.gamma_sd);
        // −i[H0, ρ] with H0 diagonal, plus the scalar parts of every bracket.
        {
            let out_s = out.as_mut_slice();
            let phi_s = phi.as_slice();
            for col in 0..d {
                for r in 0..d {
                    let idx = col * d + r;
                    let de = self.energies[r] - self.energies[col];
                    let z = rho_s[idx];
                    out_s[idx] = total * (phi_s[idx] - z) + z * Complex64::new(0.0, -de);
                }
            }
        }

        // Σ_k c_k (φ S_k + S_k φ)/2 with c_k = 2 R_op s_k + 4 Γ_SE ⟨S_k⟩,
        // and c_x S_x + c_y S_y = c₊ S₊ + c₋ S₋ with c_∓ = (c_x ± i c_y)/2.
        let minus_mean = s_minus.trace_with(rho);
        let mean = [minus_mean.re, -minus_mean.im, s_z.trace_with(rho).re];
        let coeff: [f64; 3] =
            std::array::from_fn(|k| 2.0 * p.r_op * p.s[k] + 4.0 * p.gamma_se * mean[k]);
        if coeff.iter().all(|&x| x == 0.0) {
            return;
        }
        let c_minus = Complex64::new(0.25 * coeff[0], 0.25 * coeff[1]);
        tmp.fill(ZERO);
        let phi_s = phi.as_slice();
        s_minus.right_mul_acc_slice(phi_s, c_minus, tmp.as_mut_slice());
        s_plus.right_mul_acc_slice(phi_s, c_minus.conj(), tmp.as_mut_slice());
        s_z.right_mul_acc_slice(phi_s, c(0.5 * coeff[2]), tmp.as_mut_slice());
        let out_s = out.as_mut_slice();
        for (o, x) in out_s.iter_mut().zip(tmp.as_slice()) {
            *o += x;
        }
        linalg::add_adjoint_slice(tmp.as_slice(), d, out_s);
    }

    /// Frobenius norm of `dρ/dt` in units of Γ_SE.
    pub fn stationarity(&self, rho: &CMatrix) -> f64 {
        linalg::frobenius(&self.rhs(rho)) / self.rate_scale()
    }

    fn rate_scale(&self) -> f64 {
        1.0 / self.params.t_se()
    }
}

/// Settings for a fixed-step integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationSpec {
    /// Final time in seconds.
    pub t_end: f64,
    /// Step in seconds; the step is shrunk slightly so that `t_end` is hit
    /// exactly.
    pub dt: f64,
    /// Keep one state every `sample_every` steps (the first and last state
    /// are always kept).
    pub sample_every: usize,
}

impl IntegrationSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidIntegration(format!(
                "dt = {} must be > 0",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(DynamicsError::InvalidIntegration(format!(
                "t_end = {} must be > 0",
                self.t_end
            )));
        }
        if self.sample_every == 0 {
            return Err(DynamicsError::InvalidIntegration(
                "sample_every must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).ceil().max(1.0) as usize
    }
}

/// Sampled solution of the master equation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Sample times in seconds, strictly increasing.
    pub times: Vec<f64>,
    /// `T_SE = 1/Γ_SE` used for normalized time.
    pub t_se: f64,
    pub states: Vec<DensityMatrix>,
    /// Whether the final state satisfies the steady-state criterion.
    pub reached_ness: bool,
}

impl Trajectory {
    pub fn normalized_times(&self) -> Vec<f64> {
        self.times.iter().map(|t| t / self.t_se).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

struct Rk4 {
    k1: CMatrix,
    k2: CMatrix,
    k3: CMatrix,
    k4: CMatrix,
    stage: CMatrix,
    scratch: Scratch,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        Rk4 {
            k1: linalg::zeros(d),
            k2: linalg::zeros(d),
            k3: linalg::zeros(d),
            k4: linalg::zeros(d),
            stage: linalg::zeros(d),
            scratch: Scratch::new(d),
        }
    }

    fn step(&mut self, eq: &MasterEquation, rho: &mut CMatrix, dt: f64) {
        let half = c(0.5 * dt);
        let full = c(dt);
        eq.rhs_into(rho, &mut self.k1, &mut self.scratch);
        axpy_into(&mut self.stage, rho, half, &self.k1);
        eq.rhs_into(&self.stage, &mut self.k2, &mut self.scratch);
        axpy_into(&mut self.stage, rho, half, &self.k2);
        eq.rhs_into(&self.stage, &mut self.k3, &mut self.scratch);
        axpy_into(&mut self.stage, rho, full, &self.k3);
        eq.rhs_into(&self.stage, &mut self.k4, &mut self.scratch);
        let w = c(dt / 6.0);
        for idx in 0..rho.len() {
            rho[idx] += w * (self.k1[idx] + 2.0 * self.k2[idx] + 2.0 * self.k3[idx] + self.k4[idx]);
        }
    }
}

/// `out = a + alpha · b`
fn axpy_into(out: &mut CMatrix, a: &CMatrix, alpha: num_complex::Complex64, b: &CMatrix) {
    for idx in 0..a.len() {
        out[idx] = a[idx] + alpha * b[idx];
    }
}

fn check_sample(m: &CMatrix, index: usize, time: f64) -> Result<(), DynamicsError> {
    StateDefects::measure(m)
        .check(ABORT_TOL)
        .map_err(|violation| DynamicsError::Integration {
            index,
            time,
            violation,
        })
}

/// Integrates with classical fourth-order Runge–Kutta at a fixed step.
pub fn integrate(
    rho0: &DensityMatrix,
    eq: &MasterEquation,
    spec: &IntegrationSpec,
) -> Result<Trajectory, DynamicsError> {
    eq.params().validate()?;
    spec.validate()?;
    if rho0.dim() != eq.dim() {
        return Err(DynamicsError::DimensionMismatch {
            state: rho0.dim(),
            ops: eq.dim(),
        });
    }
    let steps = spec.steps();
    let dt = spec.t_end / steps as f64;
    let mut rho = rho0.matrix().clone();
    let mut rk = Rk4::new(eq.dim());

    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    for n in 1..=steps {
        rk.step(eq, &mut rho, dt);
        if n % spec.sample_every == 0 || n == steps {
            let t = n as f64 * dt;
            check_sample(&rho, states.len(), t)?;
            times.push(t);
            states.push(DensityMatrix::from_matrix_unchecked(rho.clone()));
        }
    }
    let reached_ness = eq.stationarity(&rho) < NESS_TOL;
    Ok(Trajectory {
        times,
        t_se: eq.params().t_se(),
        states,
        reached_ness,
    })
}

/// Integrates for at least `spec.t_end`, then keeps going in chunks of
/// `spec.t_end` until the state is stationary to [`NESS_TOL`] or `max_t_end`
/// is reached.
pub fn integrate_to_steady(
    rho0: &DensityMatrix,
    eq: &MasterEquation,
    spec: &IntegrationSpec,
    max_t_end: f64,
) -> Result<Trajectory, DynamicsError> {
    integrate_until(rho0, eq, spec, max_t_end, |traj| traj.reached_ness)
}

/// Integrates in chunks of `spec.t_end` until `done` accepts the trajectory
/// or `max_t_end` is reached.
pub fn integrate_until(
    rho0: &DensityMatrix,
    eq: &MasterEquation,
    spec: &IntegrationSpec,
    max_t_end: f64,
    done: impl Fn(&Trajectory) -> bool,
) -> Result<Trajectory, DynamicsError> {
    let mut traj = integrate(rho0, eq, spec)?;
    while !done(&traj) && *traj.times.last().unwrap() < max_t_end * (1.0 - 1e-12) {
        let t0 = *traj.times.last().unwrap();
        let chunk = IntegrationSpec {
            t_end: spec.t_end.min(max_t_end - t0),
            ..*spec
        };
        let next = integrate(traj.last(), eq, &chunk).map_err(|e| match e {
            DynamicsError::Integration {
                index,
                time,
                violation,
            } => DynamicsError::Integration {
                index: index + traj.len() - 1,
                time: time + t0,
                violation,
            },
            other => other,
        })?;
        traj.times.extend(next.times.iter().skip(1).map(|t| t + t0));
        traj.states.extend(next.states.into_iter().skip(1));
        traj.reached_ness = next.reached_ness;
    }
    Ok(traj)
}

/// Spin-temperature state `e^{β F_z} / Z`, diagonal in the coupled basis.
pub fn spin_temperature_state(beta: f64, ops: &SpinOperatorSet) -> DensityMatrix {
    let ms = ops.basis.m_values();
    let top = ms
        .iter()
        .map(|m| beta * m)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = ms.iter().map(|m| (beta * m - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let pops: Vec<f64> = weights.iter().map(|w| w / z).collect();
    DensityMatrix(linalg::from_real_diagonal(&pops))
}

/// Least-squares fit of `ln p = β m_F − ln Z` to the diagonal of `rho`.
///
/// Returns `β` and the largest relative deviation between the fitted
/// spin-temperature populations and the actual ones.
pub fn fit_spin_temperature(rho: &DensityMatrix, ops: &SpinOperatorSet) -> (f64, f64) {
    let ms = ops.basis.m_values();
    let lp: Vec<f64> = rho
        .populations()
        .iter()
        .map(|p| p.max(1e-300).ln())
        .collect();
    let n = ms.len() as f64;
    let mean_m = ms.iter().sum::<f64>() / n;
    let mean_l = lp.iter().sum::<f64>() / n;
    let sxy: f64 = ms
        .iter()
        .zip(&lp)
        .map(|(m, l)| (m - mean_m) * (l - mean_l))
        .sum();
    let sxx: f64 = ms.iter().map(|m| (m - mean_m).powi(2)).sum();
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let fitted = spin_temperature_state(beta, ops).populations();
    let residual = fitted
        .iter()
        .zip(rho.populations())
        .map(|(f, p)| ((f - p) / f).abs())
        .fold(0.0, f64::max);
    (beta, residual)
}

/// Result of scanning a trajectory for stationarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SteadyState {
    pub reached: bool,
    /// First sample from which every later sample satisfies
    /// `‖dρ/dt‖_F < tol · Γ_SE`.
    pub index: Option<usize>,
}

pub fn detect_steady_state(traj: &Trajectory, eq: &MasterEquation, tol: f64) -> SteadyState {
    let mut index = None;
    for (k, state) in traj.states.iter().enumerate().rev() {
        if eq.stationarity(state.matrix()) < tol {
            index = Some(k);
        } else {
            break;
        }
    }
    SteadyState {
        reached: index.is_some(),
        index,
    }
}
