//! Single-trajectory pipeline: rates, integration, observables, CSV files.

use std::path::Path;

use super::config::RunConfig;
use super::output::{create_dir, fmt_f64, write_csv};
use super::CliError;
use crate::cell_rates::RateSet;
use crate::dynamics::{
    fit_spin_temperature, integrate, integrate_until, DensityMatrix, IntegrationSpec,
    MasterEquation, PumpParams, Trajectory, NESS_TOL,
};
use crate::metrology::{qfi_series, CramerRao, QfiSample};
use crate::spin_algebra::{HalfInt, SpinOperatorSet};
use crate::thermo::{entropy_production_rate, thermo_series, ThermoSample};

pub const RATES_FILE: &str = "rates.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Final-state observables of one run, one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub radius_cm: f64,
    pub temperature_c: f64,
    pub p_he_torr: f64,
    pub p_n2_torr: f64,
    pub pump_axis: String,
    pub s_magnitude: f64,
    pub r_op_over_gamma_se: f64,
    pub a_hfs_over_gamma_se: f64,
    pub gamma_se: f64,
    pub gamma_sd: f64,
    pub reached_ness: bool,
    pub t_final_over_t_se: f64,
    /// `‖dρ/dt‖_F / Γ_SE` at the final state.
    pub stationarity: f64,
    pub entropy: f64,
    pub sigma: f64,
    pub sigma_rate: f64,
    pub energy: f64,
    pub ergotropy: f64,
    pub efficiency: f64,
    pub qfi: [f64; 3],
    pub spin: [f64; 3],
    /// Spin-temperature fit in the frame where the pump axis is z.
    pub spin_temperature_beta: f64,
    pub spin_temperature_residual: f64,
    pub off_diagonal_mass: f64,
}

impl Summary {
    pub const HEADER: [&'static str; 30] = [
        "radius_cm",
        "temperature_c",
        "p_he_torr",
        "p_n2_torr",
        "pump_axis",
        "s_magnitude",
        "r_op_over_gamma_se",
        "a_hfs_over_gamma_se",
        "gamma_se_hz",
        "gamma_sd_hz",
        "reached_ness",
        "t_final_over_t_se",
        "stationarity",
        "entropy",
        "sigma",
        "sigma_rate_per_s",
        "energy_over_a_hfs",
        "ergotropy_over_a_hfs",
        "efficiency",
        "qfi_x",
        "qfi_y",
        "qfi_z",
        "fx",
        "fy",
        "fz",
        "spin_temperature_beta",
        "spin_temperature_residual",
        "off_diagonal_mass",
        "nuclear_spin_dim",
        "samples",
    ];

    fn record(&self, dim: usize, samples: usize) -> Vec<String> {
        let mut r = vec![
            fmt_f64(self.radius_cm),
            fmt_f64(self.temperature_c),
            fmt_f64(self.p_he_torr),
            fmt_f64(self.p_n2_torr),
            self.pump_axis.clone(),
            fmt_f64(self.s_magnitude),
            fmt_f64(self.r_op_over_gamma_se),
            fmt_f64(self.a_hfs_over_gamma_se),
            fmt_f64(self.gamma_se),
            fmt_f64(self.gamma_sd),
            self.reached_ness.to_string(),
            fmt_f64(self.t_final_over_t_se),
            fmt_f64(self.stationarity),
            fmt_f64(self.entropy),
            fmt_f64(self.sigma),
            fmt_f64(self.sigma_rate),
            fmt_f64(self.energy),
            fmt_f64(self.ergotropy),
            fmt_f64(self.efficiency),
        ];
        r.extend(self.qfi.iter().map(|&x| fmt_f64(x)));
        r.extend(self.spin.iter().map(|&x| fmt_f64(x)));
        r.push(fmt_f64(self.spin_temperature_beta));
        r.push(fmt_f64(self.spin_temperature_residual));
        r.push(fmt_f64(self.off_diagonal_mass));
        r.push(dim.to_string());
        r.push(samples.to_string());
        r
    }
}

/// Everything computed for one configuration.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub rates: RateSet,
    pub equation: MasterEquation,
    pub trajectory: Trajectory,
    pub thermo: Vec<ThermoSample>,
    pub qfi: Vec<QfiSample>,
    /// `⟨F_x⟩, ⟨F_y⟩, ⟨F_z⟩` per sample.
    pub spin: Vec<[f64; 3]>,
    pub summary: Summary,
}

impl RunOutput {
    pub fn summary_record(&self) -> Vec<String> {
        self.summary
            .record(self.equation.dim(), self.trajectory.len())
    }

    pub fn trajectory_header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "t_s",
            "t_over_t_se",
            "entropy",
            "sigma",
            "sigma_rate_per_s",
            "energy_over_a_hfs",
            "ergotropy_over_a_hfs",
            "efficiency",
            "qfi_x",
            "qfi_y",
            "qfi_z",
            "crb_x",
            "crb_y",
            "crb_z",
            "fx",
            "fy",
            "fz",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(
            self.equation
                .ops()
                .basis
                .labels
                .iter()
                .map(|l| format!("pop_F{}_m{}", l.f, l.m)),
        );
        h
    }

    pub fn trajectory_records(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        (0..self.trajectory.len()).map(move |k| {
            let th = &self.thermo[k];
            let q = &self.qfi[k];
            let mut r: Vec<String> = [
                th.t,
                th.t_norm,
                th.entropy,
                th.sigma,
                th.sigma_rate,
                th.energy,
                th.ergotropy,
                th.efficiency,
            ]
            .iter()
            .chain(&q.qfi)
            .map(|&x| fmt_f64(x))
            .collect();
            r.extend(q.crb.iter().map(|c| match c {
                CramerRao::Finite(v) => fmt_f64(*v),
                CramerRao::Unbounded => "inf".to_string(),
            }));
            r.extend(self.spin[k].iter().map(|&x| fmt_f64(x)));
            r.extend(
                self.trajectory.states[k]
                    .populations()
                    .into_iter()
                    .map(fmt_f64),
            );
            r
        })
    }
}

/// Operators and master equation for `config` with rates `rates`.
pub fn build_equation(config: &RunConfig, rates: &RateSet) -> Result<MasterEquation, CliError> {
    config.validate()?;
    let gamma_se = rates.gamma_se;
    let spin =
        HalfInt::spin(config.nuclear_spin).map_err(|e| super::config::ConfigError::Invalid {
            field: "nuclear_spin".into(),
            reason: e.to_string(),
        })?;
    let ops = SpinOperatorSet::new(spin, config.a_hfs_over_gamma_se * gamma_se);
    let params = PumpParams {
        r_op: config.r_op_over_gamma_se * gamma_se,
        s: config.photon_spin(),
        gamma_se,
        gamma_sd: rates.gamma_sd_total,
    };
    params.validate()?;
    Ok(MasterEquation::new(ops, params))
}

/// Integration settings for `config` on `eq`.
pub fn integration_spec(config: &RunConfig, eq: &MasterEquation) -> IntegrationSpec {
    let t_se = eq.params().t_se();
    IntegrationSpec {
        t_end: config.t_end_over_t_se * t_se,
        dt: config
            .dt_over_t_se
            .map_or_else(|| eq.default_dt(), |d| d * t_se),
        sample_every: config.sample_every,
    }
}

pub fn simulate(config: &RunConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let rates = config.model.rates(&config.cell)?;
    let eq = build_equation(config, &rates)?;
    let spec = integration_spec(config, &eq);
    let rho0 = DensityMatrix::maximally_mixed(eq.dim());
    let trajectory = if config.until_steady {
        let tol = NESS_TOL / eq.params().t_se();
        let settled = |traj: &Trajectory| {
            let last = traj.last();
            traj.reached_ness && entropy_production_rate(last, &eq.rhs(last.matrix())).abs() < tol
        };
        integrate_until(
            &rho0,
            &eq,
            &spec,
            config.max_t_over_t_se * eq.params().t_se(),
            settled,
        )?
    } else {
        integrate(&rho0, &eq, &spec)?
    };
    let thermo = thermo_series(&trajectory, &eq);
    let qfi = qfi_series(&trajectory, &eq);
    let ops = eq.ops();
    let spin: Vec<[f64; 3]> = trajectory
        .states
        .iter()
        .map(|rho| std::array::from_fn(|k| rho.expectation(&ops.f[k])))
        .collect();

    let last = trajectory.last();
    let u = ops.rotation_to_z(config.pump_axis.index());
    let aligned = DensityMatrix::from_matrix_unchecked(&u * last.matrix() * u.adjoint());
    let (beta, residual) = fit_spin_temperature(&aligned, ops);
    let th = thermo.last().expect("trajectory has samples");
    let summary = Summary {
        radius_cm: config.cell.radius,
        temperature_c: config.cell.temperature,
        p_he_torr: config.cell.p_he,
        p_n2_torr: config.cell.p_n2,
        pump_axis: config.pump_axis.to_string(),
        s_magnitude: config.s_magnitude,
        r_op_over_gamma_se: config.r_op_over_gamma_se,
        a_hfs_over_gamma_se: config.a_hfs_over_gamma_se,
        gamma_se: rates.gamma_se,
        gamma_sd: rates.gamma_sd_total,
        reached_ness: trajectory.reached_ness,
        t_final_over_t_se: th.t_norm,
        stationarity: eq.stationarity(last.matrix()),
        entropy: th.entropy,
        sigma: th.sigma,
        sigma_rate: th.sigma_rate,
        energy: th.energy,
        ergotropy: th.ergotropy,
        efficiency: th.efficiency,
        qfi: qfi.last().expect("trajectory has samples").qfi,
        spin: *spin.last().expect("trajectory has samples"),
        spin_temperature_beta: beta,
        spin_temperature_residual: residual,
        off_diagonal_mass: aligned.off_diagonal_mass(),
    };
    Ok(RunOutput {
        config: config.clone(),
        rates,
        equation: eq,
        trajectory,
        thermo,
        qfi,
        spin,
        summary,
    })
}

pub fn write_rates(rates: &RateSet, dir: &Path) -> Result<(), CliError> {
    create_dir(dir)?;
    let row: Vec<String> = rates.csv_values().iter().map(|&x| fmt_f64(x)).collect();
    write_csv(&dir.join(RATES_FILE), &RateSet::CSV_HEADER, [row])
}

/// Writes `rates.csv`, `trajectory.csv` and `summary.csv` into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<(), CliError> {
    write_rates(&out.rates, dir)?;
    write_csv(
        &dir.join(TRAJECTORY_FILE),
        &out.trajectory_header(),
        out.trajectory_records(),
    )?;
    write_csv(
        &dir.join(SUMMARY_FILE),
        &Summary::HEADER,
        [out.summary_record()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_run_produces_consistent_tables() {
        let cfg = RunConfig {
            t_end_over_t_se: 0.2,
            until_steady: false,
            sample_every: 100,
            ..Default::default()
        };
        let out = simulate(&cfg).unwrap();
        assert_eq!(out.thermo.len(), out.trajectory.len());
        assert_eq!(out.trajectory_header().len(), 17 + 8);
        for row in out.trajectory_records() {
            assert_eq!(row.len(), 25);
        }
        assert_eq!(out.summary_record().len(), Summary::HEADER.len());
        assert_eq!(out.summary.spin[0], out.spin.last().unwrap()[0]);
        assert!(out.summary.spin[2] > 0.0);
        assert!(!out.summary.reached_ness);
    }
}
