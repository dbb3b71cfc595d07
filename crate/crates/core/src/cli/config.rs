//! Flat `key = value` run configuration.
//!
//! Blank lines and everything after `#` are ignored. Every key is optional;
//! an empty file yields the default cell (1.5 cm, 120 °C, 200 Torr He,
//! 75 Torr N₂) pumped along z with `s = 0.5` and `R_op = Γ_SE`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::cell_rates::{CellConfig, CellError, CellModel, VaporPressureModel};
use crate::spin_algebra::HalfInt;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Pump direction; the photon spin is `s_magnitude` times this unit vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err("expected x, y or z".into()),
        }
    }
}

/// Everything needed for one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub cell: CellConfig,
    pub model: CellModel,
    pub pump_axis: Axis,
    pub s_magnitude: f64,
    pub r_op_over_gamma_se: f64,
    /// Hyperfine constant in units of Γ_SE.
    pub a_hfs_over_gamma_se: f64,
    /// Integration horizon, or chunk length when `until_steady` is set.
    pub t_end_over_t_se: f64,
    /// Keep integrating in chunks of `t_end_over_t_se` until both
    /// `‖dρ/dt‖_F` and `|Σ̇|` fall below `10⁻⁶ Γ_SE`, or `max_t_over_t_se`
    /// is reached.
    pub until_steady: bool,
    pub max_t_over_t_se: f64,
    /// Step override; the default is `1/(50 · fastest rate)`.
    pub dt_over_t_se: Option<f64>,
    pub sample_every: usize,
    pub nuclear_spin: f64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cell: CellConfig::default(),
            model: CellModel::default(),
            pump_axis: Axis::Z,
            s_magnitude: 0.5,
            r_op_over_gamma_se: 1.0,
            a_hfs_over_gamma_se: 100.0,
            t_end_over_t_se: 10.0,
            until_steady: true,
            max_t_over_t_se: 200.0,
            dt_over_t_se: None,
            sample_every: 250,
            nuclear_spin: 1.5,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.cell;
        if let Err(e) = c.validate() {
            let field = match e {
                CellError::BadRadius(_) => "radius_cm",
                CellError::TemperatureOutOfRange(_) => "temperature_c",
                CellError::BadPressure { name: "p_he", .. } => "p_he_torr",
                _ => "p_n2_torr",
            };
            return Err(invalid(field, e.to_string()));
        }
        if c.p_he <= 0.0 && c.p_n2 <= 0.0 {
            return Err(invalid(
                "p_he_torr",
                "at least one buffer-gas pressure must be > 0",
            ));
        }
        if let Err(e) = self.model.cross_sections.validate() {
            let field = match e {
                CellError::BadCrossSection { name, .. } => name,
                _ => "sigma_se",
            };
            return Err(invalid(field, e.to_string()));
        }
        let d = &self.model.diffusion;
        for (field, v) in [("d0_he", d.d0_he), ("d0_n2", d.d0_n2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be > 0, got {v}")));
            }
        }
        if !d.temperature_exponent.is_finite() {
            return Err(invalid("diffusion_temperature_exponent", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.s_magnitude) {
            return Err(invalid(
                "s_magnitude",
                format!("must lie in [0, 1], got {}", self.s_magnitude),
            ));
        }
        if !(self.r_op_over_gamma_se >= 0.0 && self.r_op_over_gamma_se.is_finite()) {
            return Err(invalid("r_op_over_gamma_se", "must be finite and >= 0"));
        }
        if !(self.a_hfs_over_gamma_se > 0.0 && self.a_hfs_over_gamma_se.is_finite()) {
            return Err(invalid("a_hfs_over_gamma_se", "must be finite and > 0"));
        }
        if !(self.t_end_over_t_se > 0.0 && self.t_end_over_t_se.is_finite()) {
            return Err(invalid("t_end_over_t_se", "must be finite and > 0"));
        }
        if !(self.max_t_over_t_se >= self.t_end_over_t_se && self.max_t_over_t_se.is_finite()) {
            return Err(invalid(
                "max_t_over_t_se",
                "must be finite and >= t_end_over_t_se",
            ));
        }
        if let Some(dt) = self.dt_over_t_se {
            if !(dt > 0.0 && dt <= self.t_end_over_t_se) {
                return Err(invalid(
                    "dt_over_t_se",
                    "must be > 0 and <= t_end_over_t_se",
                ));
            }
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be >= 1"));
        }
        if HalfInt::spin(self.nuclear_spin).is_err() || self.nuclear_spin <= 0.0 {
            return Err(invalid(
                "nuclear_spin",
                "must be a positive integer or half-integer",
            ));
        }
        Ok(())
    }

    /// Photon spin vector `s_magnitude · axis`.
    pub fn photon_spin(&self) -> [f64; 3] {
        self.pump_axis.unit().map(|u| u * self.s_magnitude)
    }
}

/// Parameter that a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    S,
    ROp,
    Radius,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::S => "s",
            SweepVariable::ROp => "r_op",
            SweepVariable::Radius => "radius",
        }
    }

    /// Copy of `base` with this variable set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> RunConfig {
        let mut cfg = base.clone();
        match self {
            SweepVariable::S => cfg.s_magnitude = value,
            SweepVariable::ROp => cfg.r_op_over_gamma_se = value,
            SweepVariable::Radius => cfg.cell.radius = value,
        }
        cfg
    }
}

impl FromStr for SweepVariable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "s" | "s_magnitude" => Ok(SweepVariable::S),
            "r_op" | "r_op_over_gamma_se" => Ok(SweepVariable::ROp),
            "radius" | "radius_cm" => Ok(SweepVariable::Radius),
            _ => Err("expected s, r_op or radius".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub base: RunConfig,
}

/// A parsed file: the run configuration plus the optional sweep keys.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub run: RunConfig,
    pub sweep_variable: Option<SweepVariable>,
    pub sweep_values: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        let variable = self
            .sweep_variable
            .ok_or_else(|| invalid("sweep_variable", "required for a sweep"))?;
        let values = self
            .sweep_values
            .clone()
            .ok_or_else(|| invalid("sweep_values", "required for a sweep"))?;
        if values.is_empty() {
            return Err(invalid("sweep_values", "needs at least one value"));
        }
        for &v in &values {
            variable
                .apply(&self.run, v)
                .validate()
                .map_err(|e| match e {
                    ConfigError::Invalid { field, reason } => {
                        invalid("sweep_values", format!("value {v} gives {field}: {reason}"))
                    }
                    other => other,
                })?;
        }
        Ok(SweepSpec {
            variable,
            values,
            base: self.run.clone(),
        })
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    Ok(read_config_file(path)?.run)
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

pub fn parse_config_str(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut run = RunConfig::default();
    let mut sweep_variable = None;
    let mut sweep_values = None;
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "missing key before `=`".into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        let num = |v: &str| parse_value::<f64>(line, key, v);
        let xs = &mut run.model.cross_sections;
        let diff = &mut run.model.diffusion;
        match key {
            "radius_cm" => run.cell.radius = num(value)?,
            "temperature_c" => run.cell.temperature = num(value)?,
            "p_he_torr" => run.cell.p_he = num(value)?,
            "p_n2_torr" => run.cell.p_n2 = num(value)?,
            "pump_axis" => run.pump_axis = parse_value(line, key, value)?,
            "s_magnitude" => run.s_magnitude = num(value)?,
            "r_op_over_gamma_se" => run.r_op_over_gamma_se = num(value)?,
            "a_hfs_over_gamma_se" => run.a_hfs_over_gamma_se = num(value)?,
            "t_end_over_t_se" => run.t_end_over_t_se = num(value)?,
            "until_steady" => run.until_steady = parse_bool(line, key, value)?,
            "max_t_over_t_se" => run.max_t_over_t_se = num(value)?,
            "dt_over_t_se" => run.dt_over_t_se = Some(num(value)?),
            "sample_every" => run.sample_every = parse_value(line, key, value)?,
            "nuclear_spin" => run.nuclear_spin = num(value)?,
            "output" => run.output = Some(PathBuf::from(value)),
            "sigma_se" => xs.sigma_se = num(value)?,
            "sigma_sd_rbrb" => xs.sigma_sd_rbrb = num(value)?,
            "sigma_sd_rbhe" => xs.sigma_sd_rbhe = num(value)?,
            "sigma_sd_rbn2" => xs.sigma_sd_rbn2 = num(value)?,
            "d0_he" => diff.d0_he = num(value)?,
            "d0_n2" => diff.d0_n2 = num(value)?,
            "diffusion_temperature_exponent" => diff.temperature_exponent = num(value)?,
            "amagat_at_cell_temperature" => {
                diff.amagat_at_cell_temperature = parse_bool(line, key, value)?
            }
            "vapor_pressure_model" => {
                run.model.vapor = match value.to_ascii_lowercase().as_str() {
                    "nesmeyanov" => VaporPressureModel::Nesmeyanov,
                    "antoine" => VaporPressureModel::Antoine,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            value: value.into(),
                            reason: "expected nesmeyanov or antoine".into(),
                        })
                    }
                }
            }
            "sweep_variable" => sweep_variable = Some(parse_value(line, key, value)?),
            "sweep_values" => {
                let vals = value
                    .split(',')
                    .map(|v| num(v.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                sweep_values = Some(vals);
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    run.validate()?;
    Ok(ConfigFile {
        run,
        sweep_variable,
        sweep_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let f = parse_config_str("").unwrap();
        assert_eq!(f.run, RunConfig::default());
        assert_eq!(f.run.cell.radius, 1.5);
        assert_eq!(f.run.cell.temperature, 120.0);
        assert_eq!((f.run.cell.p_he, f.run.cell.p_n2), (200.0, 75.0));
        assert_eq!(f.run.photon_spin(), [0.0, 0.0, 0.5]);
        assert_eq!(f.run.r_op_over_gamma_se, 1.0);
        assert!(f.sweep_variable.is_none());
    }

    #[test]
    fn comments_and_whitespace() {
        let f =
            parse_config_str("# header\n  radius_cm = 2.5  # trailing\n\npump_axis=X\n").unwrap();
        assert_eq!(f.run.cell.radius, 2.5);
        assert_eq!(f.run.pump_axis, Axis::X);
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config_str("radius_cm = 1\nnot a pair\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config_str("radius = 1\n").unwrap_err();
        assert!(err.to_string().contains("`radius`"), "{err}");
    }

    #[test]
    fn validation_names_field() {
        let err = parse_config_str("s_magnitude = 1.5").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Invalid { field, .. } if field == "s_magnitude"),
            "{err}"
        );
        let err = parse_config_str("temperature_c = 400").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Invalid { field, .. } if field == "temperature_c"),
            "{err}"
        );
        let err = parse_config_str("p_he_torr = 0\np_n2_torr = 0").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Invalid { field, .. } if field == "p_he_torr"),
            "{err}"
        );
        let err = parse_config_str("nuclear_spin = 1.2").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Invalid { field, .. } if field == "nuclear_spin"),
            "{err}"
        );
    }

    #[test]
    fn bad_value_and_duplicates() {
        let err = parse_config_str("radius_cm = big").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { line: 1, .. }));
        let err = parse_config_str("radius_cm = 1\nradius_cm = 2").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn sweep_keys() {
        let f = parse_config_str("sweep_variable = r_op\nsweep_values = 0.5, 1, 2\n").unwrap();
        let spec = f.sweep_spec().unwrap();
        assert_eq!(spec.variable, SweepVariable::ROp);
        assert_eq!(spec.values, vec![0.5, 1.0, 2.0]);
        let bad = parse_config_str("sweep_variable = s\nsweep_values = 0.5, 2").unwrap();
        assert!(bad.sweep_spec().is_err());
        assert!(parse_config_str("").unwrap().sweep_spec().is_err());
    }
}
