//! Collision and wall relaxation rates of a spherical Rb vapor cell with He
//! and N₂ buffer gas.
//!
//! Everything inside this module is CGS: cm, g, s, erg, dyn/cm².
//! Temperatures enter in °C at the public surface and are converted to K.

use std::f64::consts::PI;

use thiserror::Error;

pub const K_B: f64 = 1.380649e-16; // erg/K
pub const AMU: f64 = 1.660_539_066_60e-24; // g
pub const TORR: f64 = 1_333.223_684_21; // dyn/cm²
pub const ATM_TORR: f64 = 760.0;
pub const T0: f64 = 273.15; // K

pub const MASS_RB87: f64 = 86.909_180_527; // amu
pub const MASS_HE: f64 = 4.002_602; // amu
pub const MASS_N2: f64 = 28.0134; // amu

/// Temperature window over which the vapor-pressure fits are trusted.
pub const TEMPERATURE_RANGE_C: (f64, f64) = (20.0, 200.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error("temperature {0} °C is outside the supported range 20..=200 °C")]
    TemperatureOutOfRange(f64),
    #[error("cell radius must be positive, got {0} cm")]
    BadRadius(f64),
    #[error("buffer pressure {name} must be >= 0, got {value} Torr")]
    BadPressure { name: &'static str, value: f64 },
    #[error("no buffer gas: the diffusion model needs at least one nonzero pressure")]
    NoBufferGas,
    #[error("invalid cross section {name} = {value} cm^2")]
    BadCrossSection { name: &'static str, value: f64 },
}

/// Geometry and fill of a spherical vapor cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellConfig {
    /// cm
    pub radius: f64,
    /// °C
    pub temperature: f64,
    /// Torr
    pub p_he: f64,
    /// Torr
    pub p_n2: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            radius: 1.5,
            temperature: 120.0,
            p_he: 200.0,
            p_n2: 75.0,
        }
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<(), CellError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(CellError::BadRadius(self.radius));
        }
        check_temperature(self.temperature)?;
        for (name, value) in [("p_he", self.p_he), ("p_n2", self.p_n2)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(CellError::BadPressure { name, value });
            }
        }
        Ok(())
    }

    pub fn temperature_k(&self) -> f64 {
        self.temperature + T0
    }
}

fn check_temperature(t_c: f64) -> Result<(), CellError> {
    let (lo, hi) = TEMPERATURE_RANGE_C;
    if !(t_c >= lo && t_c <= hi) {
        return Err(CellError::TemperatureOutOfRange(t_c));
    }
    Ok(())
}

/// Spin-exchange and spin-destruction cross sections, cm².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossSections {
    pub sigma_se: f64,
    pub sigma_sd_rbrb: f64,
    pub sigma_sd_rbhe: f64,
    pub sigma_sd_rbn2: f64,
}

impl Default for CrossSections {
    fn default() -> Self {
        CrossSections {
            sigma_se: 1.9e-14,
            sigma_sd_rbrb: 9.0e-18,
            sigma_sd_rbhe: 8.7e-24,
            sigma_sd_rbn2: 1.0e-22,
        }
    }
}

impl CrossSections {
    pub fn validate(&self) -> Result<(), CellError> {
        let all = [
            ("sigma_se", self.sigma_se),
            ("sigma_sd_rbrb", self.sigma_sd_rbrb),
            ("sigma_sd_rbhe", self.sigma_sd_rbhe),
            ("sigma_sd_rbn2", self.sigma_sd_rbn2),
        ];
        for (name, value) in all {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CellError::BadCrossSection { name, value });
            }
        }
        Ok(())
    }
}

/// Saturated Rb vapor pressure over the liquid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VaporPressureModel {
    /// `log10 P[Torr] = 15.88253 − 4529.635/T + 0.00058663 T − 2.99138 log10 T`
    #[default]
    Nesmeyanov,
    /// Two-constant Antoine form `log10 P[atm] = 4.312 − 4040/T`.
    Antoine,
}

impl VaporPressureModel {
    /// Vapor pressure in Torr at `t_k` kelvin.
    pub fn pressure_torr(self, t_k: f64) -> f64 {
        let log10_p = match self {
            VaporPressureModel::Nesmeyanov => {
                15.882_53 - 4529.635 / t_k + 0.000_586_63 * t_k - 2.991_38 * t_k.log10()
            }
            VaporPressureModel::Antoine => 4.312 - 4040.0 / t_k + ATM_TORR.log10(),
        };
        10f64.powf(log10_p)
    }

    /// Atomic density in cm⁻³ at `t_c` °C.
    pub fn number_density(self, t_c: f64) -> Result<f64, CellError> {
        check_temperature(t_c)?;
        let t_k = t_c + T0;
        Ok(self.pressure_torr(t_k) * TORR / (K_B * t_k))
    }
}

/// Rb atomic density (cm⁻³) of the saturated vapor at `t_c` °C.
pub fn rb_number_density(t_c: f64) -> Result<f64, CellError> {
    VaporPressureModel::default().number_density(t_c)
}

/// Mean relative speed `√(8 k_B T / (π μ))`, cm/s, masses in amu.
///
/// For equal masses this is `√(16 k_B T / (π m))`.
pub fn mean_relative_velocity(t_k: f64, m1_amu: f64, m2_amu: f64) -> f64 {
    let mu = if m2_amu.is_infinite() {
        m1_amu
    } else {
        m1_amu * m2_amu / (m1_amu + m2_amu)
    };
    (8.0 * K_B * t_k / (PI * mu * AMU)).sqrt()
}

/// Ideal-gas density (cm⁻³) at pressure `p_torr` and `t_k` kelvin.
pub fn gas_density(p_torr: f64, t_k: f64) -> f64 {
    p_torr * TORR / (K_B * t_k)
}

/// Density in amagat of a gas at `p_torr` held at `t_k` kelvin.
pub fn amagat(p_torr: f64, t_k: f64) -> f64 {
    (p_torr / ATM_TORR) * (T0 / t_k)
}

/// Buffer-gas diffusion model for the wall-relaxation channel,
/// `D = D₀^He/n_amg(P_He) + D₀^N2/n_amg(P_N2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionModel {
    /// cm²/s at 273.15 K and 1 atm.
    pub d0_he: f64,
    /// cm²/s at 273.15 K and 1 atm.
    pub d0_n2: f64,
    /// Each D₀ is scaled by `(T/T₀)^temperature_exponent`.
    pub temperature_exponent: f64,
    /// When false the amagat density is `P/760 Torr`; when true it is
    /// evaluated at the cell temperature.
    pub amagat_at_cell_temperature: bool,
}

impl Default for DiffusionModel {
    fn default() -> Self {
        DiffusionModel {
            d0_he: 0.35,
            d0_n2: 0.16,
            temperature_exponent: 0.0,
            amagat_at_cell_temperature: false,
        }
    }
}

impl DiffusionModel {
    /// Kinetic-theory variant: `(T/T₀)^{3/2}` scaling and amagat density at
    /// the operating temperature.
    pub fn kinetic() -> Self {
        DiffusionModel {
            temperature_exponent: 1.5,
            amagat_at_cell_temperature: true,
            ..Default::default()
        }
    }

    /// Effective diffusion coefficient (cm²/s). A gas with zero pressure
    /// contributes no term.
    pub fn coefficient(&self, cell: &CellConfig) -> Result<f64, CellError> {
        cell.validate()?;
        if cell.p_he <= 0.0 && cell.p_n2 <= 0.0 {
            return Err(CellError::NoBufferGas);
        }
        let t_k = cell.temperature_k();
        let scale = (t_k / T0).powf(self.temperature_exponent);
        let density_t = if self.amagat_at_cell_temperature {
            t_k
        } else {
            T0
        };
        let term = |d0: f64, p: f64| {
            if p > 0.0 {
                d0 * scale / amagat(p, density_t)
            } else {
                0.0
            }
        };
        Ok(term(self.d0_he, cell.p_he) + term(self.d0_n2, cell.p_n2))
    }
}

/// Effective diffusion coefficient with the default model.
pub fn diffusion_coefficient(cell: &CellConfig) -> Result<f64, CellError> {
    DiffusionModel::default().coefficient(cell)
}

/// Lowest-mode wall relaxation `(π/R)² D` for a sphere with fully
/// depolarizing walls.
pub fn gamma_wall(cell: &CellConfig, d_eff: f64) -> f64 {
    (PI / cell.radius).powi(2) * d_eff
}

/// `Γ_SE = n_Rb v_rel σ_SE` in s⁻¹.
pub fn gamma_se(cell: &CellConfig, xs: &CrossSections) -> Result<f64, CellError> {
    CellModel {
        cross_sections: *xs,
        ..Default::default()
    }
    .gamma_se(cell)
}

/// Every rate for a cell, s⁻¹ (reported as Hz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSet {
    /// cm⁻³
    pub n_rb: f64,
    pub gamma_se: f64,
    pub gamma_sd_rbrb: f64,
    pub gamma_sd_rbhe: f64,
    pub gamma_sd_rbn2: f64,
    pub gamma_wall: f64,
    pub gamma_sd_total: f64,
    /// cm²/s; zero when the wall channel is disabled.
    pub d_eff: f64,
}

impl RateSet {
    pub const CSV_HEADER: [&'static str; 8] = [
        "n_rb_cm3",
        "gamma_se_hz",
        "gamma_sd_rbrb_hz",
        "gamma_sd_rbhe_hz",
        "gamma_sd_rbn2_hz",
        "gamma_wall_hz",
        "gamma_sd_total_hz",
        "d_eff_cm2_s",
    ];

    pub fn csv_values(&self) -> [f64; 8] {
        [
            self.n_rb,
            self.gamma_se,
            self.gamma_sd_rbrb,
            self.gamma_sd_rbhe,
            self.gamma_sd_rbn2,
            self.gamma_wall,
            self.gamma_sd_total,
            self.d_eff,
        ]
    }
}

/// Cross sections, vapor-pressure curve and diffusion model bundled
/// together.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellModel {
    pub cross_sections: CrossSections,
    pub vapor: VaporPressureModel,
    pub diffusion: DiffusionModel,
}

impl CellModel {
    pub fn number_density(&self, cell: &CellConfig) -> Result<f64, CellError> {
        cell.validate()?;
        self.vapor.number_density(cell.temperature)
    }

    pub fn gamma_se(&self, cell: &CellConfig) -> Result<f64, CellError> {
        self.cross_sections.validate()?;
        let n = self.number_density(cell)?;
        let v = mean_relative_velocity(cell.temperature_k(), MASS_RB87, MASS_RB87);
        Ok(n * v * self.cross_sections.sigma_se)
    }

    /// All channels including diffusion to the walls.
    pub fn rates(&self, cell: &CellConfig) -> Result<RateSet, CellError> {
        let d_eff = self.diffusion.coefficient(cell)?;
        let mut set = self.rates_without_wall(cell)?;
        set.d_eff = d_eff;
        set.gamma_wall = gamma_wall(cell, d_eff);
        set.gamma_sd_total += set.gamma_wall;
        Ok(set)
    }

    /// Bulk collision channels only; `gamma_wall` and `d_eff` are zero.
    pub fn rates_without_wall(&self, cell: &CellConfig) -> Result<RateSet, CellError> {
        self.cross_sections.validate()?;
        let xs = &self.cross_sections;
        let t_k = cell.temperature_k();
        let n_rb = self.number_density(cell)?;
        let v_rbrb = mean_relative_velocity(t_k, MASS_RB87, MASS_RB87);
        let buffer = |p: f64, mass: f64, sigma: f64| {
            gas_density(p, t_k) * mean_relative_velocity(t_k, MASS_RB87, mass) * sigma
        };
        let gamma_sd_rbrb = n_rb * v_rbrb * xs.sigma_sd_rbrb;
        let gamma_sd_rbhe = buffer(cell.p_he, MASS_HE, xs.sigma_sd_rbhe);
        let gamma_sd_rbn2 = buffer(cell.p_n2, MASS_N2, xs.sigma_sd_rbn2);
        Ok(RateSet {
            n_rb,
            gamma_se: n_rb * v_rbrb * xs.sigma_se,
            gamma_sd_rbrb,
            gamma_sd_rbhe,
            gamma_sd_rbn2,
            gamma_wall: 0.0,
            gamma_sd_total: gamma_sd_rbrb + gamma_sd_rbhe + gamma_sd_rbn2,
            d_eff: 0.0,
        })
    }
}

/// Full rate set for `cell` with the default vapor and diffusion models.
pub fn gamma_sd_total(cell: &CellConfig, xs: &CrossSections) -> Result<RateSet, CellError> {
    CellModel {
        cross_sections: *xs,
        ..Default::default()
    }
    .rates(cell)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn density_is_increasing() {
        let n120 = rb_number_density(120.0).unwrap();
        let n121 = rb_number_density(121.0).unwrap();
        assert!(n121 > n120 && n120 > 0.0);
        for t in [20.0, 50.0, 100.0, 150.0, 199.0] {
            assert!(rb_number_density(t + 1.0).unwrap() > rb_number_density(t).unwrap());
        }
    }

    #[test]
    fn density_matches_back_solved_value() {
        // n = Γ_SE / (v_rel σ_SE) with the 14 kHz anchor, v_rel evaluated
        // directly from √(16 k_B T / (π m_Rb)).
        let t_k = 393.15;
        let v = (16.0 * 1.380649e-16 * t_k / (PI * 86.909180527 * 1.66053906660e-24)).sqrt();
        let n_anchor = 14_000.0 / (v * 1.9e-14);
        assert!(rel(n_anchor, 1.683e13) < 1e-3);
        assert!(rel(rb_number_density(120.0).unwrap(), n_anchor) < 0.2);
    }

    #[test]
    fn temperature_window() {
        assert_eq!(
            rb_number_density(10.0),
            Err(CellError::TemperatureOutOfRange(10.0))
        );
        assert!(rb_number_density(250.0).is_err());
        assert!(rb_number_density(f64::NAN).is_err());
    }

    #[test]
    fn relative_velocity() {
        let t = 393.15;
        let equal = mean_relative_velocity(t, MASS_RB87, MASS_RB87);
        let closed_form = (16.0 * K_B * t / (PI * MASS_RB87 * AMU)).sqrt();
        assert!(rel(equal, closed_form) < 1e-14);
        let heavy = mean_relative_velocity(t, MASS_RB87, f64::INFINITY);
        assert!(rel(heavy, (8.0 * K_B * t / (PI * MASS_RB87 * AMU)).sqrt()) < 1e-14);
        assert!(rel(mean_relative_velocity(t, MASS_RB87, 1e12), heavy) < 1e-9);
        // Rb–He: μ = 3.8246 amu → √(8 k_B T/(π μ)) ≈ 1.475e5 cm/s.
        let rbhe = mean_relative_velocity(t, MASS_RB87, MASS_HE);
        assert!(rel(rbhe, 1.4747e5) < 1e-3);
    }

    #[test]
    fn spin_exchange_rate() {
        let cell = CellConfig::default();
        let xs = CrossSections::default();
        let g = gamma_se(&cell, &xs).unwrap();
        assert!(rel(g, 14_000.0) < 0.2, "Γ_SE = {g}");
        let doubled = CrossSections {
            sigma_se: 2.0 * xs.sigma_se,
            ..xs
        };
        assert!(rel(gamma_se(&cell, &doubled).unwrap(), 2.0 * g) < 1e-14);
        let other = CellConfig {
            radius: 0.2,
            p_he: 10.0,
            p_n2: 700.0,
            ..cell
        };
        assert_eq!(gamma_se(&other, &xs).unwrap(), g);
    }

    #[test]
    fn antoine_curve_is_available_but_runs_hot() {
        let model = CellModel {
            vapor: VaporPressureModel::Antoine,
            ..Default::default()
        };
        let g = model.gamma_se(&CellConfig::default()).unwrap();
        assert!(g > 16_000.0 && g < 17_500.0);
    }

    #[test]
    fn diffusion_scaling() {
        let cell = CellConfig::default();
        let d = diffusion_coefficient(&cell).unwrap();
        let dense = CellConfig {
            p_he: 400.0,
            p_n2: 150.0,
            ..cell
        };
        assert!(rel(diffusion_coefficient(&dense).unwrap(), d / 2.0) < 1e-14);
        assert!((amagat(760.0, 273.15) - 1.0).abs() < 1e-15);
        let none = CellConfig {
            p_he: 0.0,
            p_n2: 0.0,
            ..cell
        };
        assert_eq!(diffusion_coefficient(&none), Err(CellError::NoBufferGas));
        let he_only = CellConfig { p_n2: 0.0, ..cell };
        assert!(
            rel(
                diffusion_coefficient(&he_only).unwrap(),
                0.35 * 760.0 / 200.0
            ) < 1e-14
        );
        let more_he = CellConfig {
            p_he: 300.0,
            ..cell
        };
        assert!(diffusion_coefficient(&more_he).unwrap() < d);
    }

    #[test]
    fn wall_rate_scaling() {
        let cell = CellConfig::default();
        let d = diffusion_coefficient(&cell).unwrap();
        let half = CellConfig {
            radius: 0.75,
            ..cell
        };
        assert!(rel(gamma_wall(&half, d), 4.0 * gamma_wall(&cell, d)) < 1e-14);
        let product = |r: f64| gamma_wall(&CellConfig { radius: r, ..cell }, d) * r * r;
        for r in [0.01, 0.1, 0.5, 1.0, 2.5] {
            assert!(rel(product(r), product(1.5)) < 1e-13);
        }
    }

    #[test]
    fn destruction_channels() {
        let cell = CellConfig::default();
        let set = gamma_sd_total(&cell, &CrossSections::default()).unwrap();
        let sum = set.gamma_sd_rbrb + set.gamma_sd_rbhe + set.gamma_sd_rbn2 + set.gamma_wall;
        assert_eq!(set.gamma_sd_total, sum);
        assert!(
            set.gamma_sd_total > 15.0 && set.gamma_sd_total < 45.0,
            "{set:?}"
        );
        assert!(set.gamma_se / set.gamma_sd_total > 100.0);

        let bare = CellConfig {
            p_he: 0.0,
            p_n2: 0.0,
            radius: 1e6,
            ..cell
        };
        let bulk = CellModel::default().rates_without_wall(&bare).unwrap();
        assert_eq!(bulk.gamma_sd_total, bulk.gamma_sd_rbrb);
        assert!(gamma_sd_total(&bare, &CrossSections::default()).is_err());

        let mut last = f64::INFINITY;
        for r in [0.01, 0.05, 0.2, 0.5, 1.0, 1.5, 2.5] {
            let g = gamma_sd_total(&CellConfig { radius: r, ..cell }, &CrossSections::default())
                .unwrap()
                .gamma_sd_total;
            assert!(g > 0.0 && g < last);
            last = g;
        }
    }

    #[test]
    fn invalid_inputs() {
        let xs = CrossSections::default();
        let bad_r = CellConfig {
            radius: 0.0,
            ..Default::default()
        };
        assert_eq!(gamma_sd_total(&bad_r, &xs), Err(CellError::BadRadius(0.0)));
        let bad_p = CellConfig {
            p_he: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            gamma_sd_total(&bad_p, &xs),
            Err(CellError::BadPressure { name: "p_he", .. })
        ));
        let bad_xs = CrossSections {
            sigma_se: 0.0,
            ..xs
        };
        assert!(gamma_se(&CellConfig::default(), &bad_xs).is_err());
    }

    /// SI end-to-end evaluation (m, kg, Pa, J) converted to CGS only at the end.
    #[test]
    fn unit_audit_against_si() {
        const KB_SI: f64 = 1.380649e-23;
        const AMU_SI: f64 = 1.66053906660e-27;
        const TORR_PA: f64 = 101_325.0 / 760.0;
        let cell = CellConfig {
            radius: 0.8,
            temperature: 95.0,
            p_he: 350.0,
            p_n2: 40.0,
        };
        let xs = CrossSections::default();
        let t = cell.temperature_k();
        let p_rb_pa = VaporPressureModel::default().pressure_torr(t) * TORR_PA;
        let n_rb = p_rb_pa / (KB_SI * t); // m⁻³
        let v = |m1: f64, m2: f64| (8.0 * KB_SI * t / (PI * (m1 * m2 / (m1 + m2)) * AMU_SI)).sqrt(); // m/s
        let cm2 = 1e-4; // m² per cm²
        let g_se = n_rb * v(MASS_RB87, MASS_RB87) * xs.sigma_se * cm2;
        let g_rbrb = n_rb * v(MASS_RB87, MASS_RB87) * xs.sigma_sd_rbrb * cm2;
        let g_he =
            cell.p_he * TORR_PA / (KB_SI * t) * v(MASS_RB87, MASS_HE) * xs.sigma_sd_rbhe * cm2;
        let g_n2 =
            cell.p_n2 * TORR_PA / (KB_SI * t) * v(MASS_RB87, MASS_N2) * xs.sigma_sd_rbn2 * cm2;
        let d_si = (0.35 / (cell.p_he / 760.0) + 0.16 / (cell.p_n2 / 760.0)) * cm2; // m²/s
        let g_wall = (PI / (cell.radius * 1e-2)).powi(2) * d_si;

        let set = gamma_sd_total(&cell, &xs).unwrap();
        assert!(rel(set.n_rb, n_rb * 1e-6) < 1e-10);
        assert!(rel(set.gamma_se, g_se) < 1e-10);
        assert!(rel(set.gamma_sd_rbrb, g_rbrb) < 1e-10);
        assert!(rel(set.gamma_sd_rbhe, g_he) < 1e-10);
        assert!(rel(set.gamma_sd_rbn2, g_n2) < 1e-10);
        assert!(rel(set.gamma_wall, g_wall) < 1e-10);
        assert!(rel(set.d_eff, d_si / cm2) < 1e-10);
    }
}
