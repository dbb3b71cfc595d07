//! Recipes regenerating the data behind every figure panel.
//!
//! Panels: `fig2a/b` spin polarization under z/x pumping, `fig3a–f` entropy,
//! entropy production and its rate, `fig4a–d` ergotropy and efficiency,
//! `fig5` efficiency versus cell radius, `fig6a–f` QFI time series and
//! `fig7a–f` QFI against efficiency and entropy production.
//! Multi-curve panels are written in long format: one leading column
//! identifies the curve, then the time series follows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Axis, RunConfig};
use super::output::{create_dir, fmt_f64, write_csv};
use super::run::{simulate, RunOutput};
use super::sweep::thread_pool;
use super::CliError;
use crate::metrology::reparametrize;

pub const S_VALUES: [f64; 3] = [0.25, 0.5, 0.75];
/// Pump rates in units of Γ_SE for the bottom-row panels.
pub const R_OP_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];
pub const RADII_CM: [f64; 12] = [
    0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5,
];
/// Pump rate of the radius scan, units of Γ_SE.
pub const RADIUS_SCAN_R_OP: f64 = 0.5;
/// Photon spin of the reparametrization panels.
pub const REPARAMETRIZATION_S: f64 = 0.75;
pub const MANIFEST_FILE: &str = "manifest.csv";

pub fn pumped(base: &RunConfig, axis: Axis, s: f64, r_op: f64) -> RunConfig {
    RunConfig {
        pump_axis: axis,
        s_magnitude: s,
        r_op_over_gamma_se: r_op,
        ..base.clone()
    }
}

pub fn radius_scan(base: &RunConfig, s: f64, radius: f64) -> RunConfig {
    let mut cfg = pumped(base, Axis::Z, s, RADIUS_SCAN_R_OP);
    cfg.cell.radius = radius;
    cfg
}

/// Every distinct configuration the recipes need.
pub fn required_configs(base: &RunConfig) -> Vec<RunConfig> {
    let mut all = vec![
        pumped(base, Axis::Z, 0.5, 1.0),
        pumped(base, Axis::X, 0.5, 1.0),
    ];
    all.extend(S_VALUES.iter().map(|&s| pumped(base, Axis::Z, s, 1.0)));
    all.extend(R_OP_VALUES.iter().map(|&r| pumped(base, Axis::Z, 0.5, r)));
    for &s in &S_VALUES {
        all.extend(RADII_CM.iter().map(|&r| radius_scan(base, s, r)));
    }
    let mut unique: Vec<RunConfig> = Vec::new();
    for cfg in all {
        if !unique.contains(&cfg) {
            unique.push(cfg);
        }
    }
    unique
}

fn key(cfg: &RunConfig) -> String {
    format!("{cfg:?}")
}

/// Completed runs, looked up by configuration.
#[derive(Debug, Default)]
pub struct RunCache {
    runs: BTreeMap<String, RunOutput>,
}

impl RunCache {
    pub fn get(&self, cfg: &RunConfig) -> Option<&RunOutput> {
        self.runs.get(&key(cfg))
    }

    fn expect(&self, cfg: &RunConfig) -> &RunOutput {
        self.get(cfg).expect("configuration was scheduled")
    }

    pub fn iter(&self) -> impl Iterator<Item = &RunOutput> {
        self.runs.values()
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

/// Runs `configs` on `jobs` workers; the first failure aborts.
pub fn run_all(configs: &[RunConfig], jobs: Option<usize>) -> Result<RunCache, CliError> {
    let results: Vec<Result<RunOutput, CliError>> =
        thread_pool(jobs).install(|| configs.par_iter().map(simulate).collect());
    let mut cache = RunCache::default();
    for (cfg, result) in configs.iter().zip(results) {
        cache.runs.insert(key(cfg), result?);
    }
    Ok(cache)
}

/// Column extractor for sample `k` of a run.
type Column = (&'static str, fn(&RunOutput, usize) -> f64);

const T_NORM: Column = ("t_over_t_se", |r, k| r.thermo[k].t_norm);
const ENTROPY: Column = ("entropy", |r, k| r.thermo[k].entropy);
const SIGMA: Column = ("sigma", |r, k| r.thermo[k].sigma);
const SIGMA_RATE: Column = ("sigma_rate_over_gamma_se", |r, k| {
    r.thermo[k].sigma_rate * r.trajectory.t_se
});
const ERGOTROPY: Column = ("ergotropy_over_a_hfs", |r, k| r.thermo[k].ergotropy);
const EFFICIENCY: Column = ("efficiency", |r, k| r.thermo[k].efficiency);
const QFI: [Column; 3] = [
    ("qfi_x", |r, k| r.qfi[k].qfi[0]),
    ("qfi_y", |r, k| r.qfi[k].qfi[1]),
    ("qfi_z", |r, k| r.qfi[k].qfi[2]),
];
const SPIN: [Column; 3] = [
    ("fx", |r, k| r.spin[k][0]),
    ("fy", |r, k| r.spin[k][1]),
    ("fz", |r, k| r.spin[k][2]),
];

/// Long-format table: `labels` identify each curve, `columns` follow.
fn family_rows(curves: &[(Vec<f64>, &RunOutput)], columns: &[Column]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (labels, run) in curves {
        for k in 0..run.trajectory.len() {
            let mut row: Vec<String> = labels.iter().map(|&x| fmt_f64(x)).collect();
            row.extend(columns.iter().map(|(_, f)| fmt_f64(f(run, k))));
            rows.push(row);
        }
    }
    rows
}

fn family_header(labels: &[&str], columns: &[Column]) -> Vec<String> {
    labels
        .iter()
        .copied()
        .chain(columns.iter().map(|(name, _)| *name))
        .map(str::to_string)
        .collect()
}

/// One written panel.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelRecord {
    pub file: String,
    pub panel: String,
    pub content: String,
    pub parameters: String,
}

struct Writer<'a> {
    dir: &'a Path,
    cache: &'a RunCache,
    manifest: Vec<PanelRecord>,
}

impl Writer<'_> {
    fn family(
        &mut self,
        name: &str,
        content: &str,
        labels: &[&str],
        curves: Vec<(Vec<f64>, RunConfig)>,
        columns: &[Column],
    ) -> Result<(), CliError> {
        let runs: Vec<(Vec<f64>, &RunOutput)> = curves
            .iter()
            .map(|(l, cfg)| (l.clone(), self.cache.expect(cfg)))
            .collect();
        let file = format!("{name}.csv");
        write_csv(
            &self.dir.join(&file),
            &family_header(labels, columns),
            family_rows(&runs, columns),
        )?;
        let parameters = curves
            .iter()
            .map(|(_, cfg)| describe(cfg))
            .collect::<Vec<_>>()
            .join(" | ");
        self.manifest.push(PanelRecord {
            file,
            panel: name.to_string(),
            content: content.to_string(),
            parameters,
        });
        Ok(())
    }
}

/// Compact parameter description for the manifest.
pub fn describe(cfg: &RunConfig) -> String {
    let horizon = if cfg.until_steady {
        format!(
            "until steady in chunks of {} T_SE (cap {} T_SE)",
            cfg.t_end_over_t_se, cfg.max_t_over_t_se
        )
    } else {
        format!("{} T_SE", cfg.t_end_over_t_se)
    };
    format!(
        "axis={} s={} r_op/gamma_se={} radius_cm={} T_c={} p_he={} p_n2={} a_hfs/gamma_se={} horizon={}",
        cfg.pump_axis,
        cfg.s_magnitude,
        cfg.r_op_over_gamma_se,
        cfg.cell.radius,
        cfg.cell.temperature,
        cfg.cell.p_he,
        cfg.cell.p_n2,
        cfg.a_hfs_over_gamma_se,
        horizon
    )
}

#[derive(Debug)]
pub struct FigureReport {
    pub directory: PathBuf,
    pub panels: Vec<PanelRecord>,
    pub runs: RunCache,
}

/// Runs every recipe from `base` and writes the panel CSVs plus
/// `manifest.csv` into `out`.
pub fn reproduce_figures(
    base: &RunConfig,
    out: &Path,
    jobs: Option<usize>,
) -> Result<FigureReport, CliError> {
    create_dir(out)?;
    let runs = run_all(&required_configs(base), jobs)?;
    let mut w = Writer {
        dir: out,
        cache: &runs,
        manifest: Vec::new(),
    };

    for (name, axis) in [("fig2a", Axis::Z), ("fig2b", Axis::X)] {
        let cfg = pumped(base, axis, 0.5, 1.0);
        let run = runs.expect(&cfg);
        let mut header = family_header(&[], &[T_NORM]);
        header.extend(SPIN.iter().map(|c| c.0.to_string()));
        header.extend(
            run.trajectory_header()
                .into_iter()
                .filter(|h| h.starts_with("pop_")),
        );
        let rows = (0..run.trajectory.len()).map(|k| {
            let mut row = vec![fmt_f64(T_NORM.1(run, k))];
            row.extend(SPIN.iter().map(|c| fmt_f64(c.1(run, k))));
            row.extend(
                run.trajectory.states[k]
                    .populations()
                    .into_iter()
                    .map(fmt_f64),
            );
            row
        });
        let file = format!("{name}.csv");
        write_csv(&out.join(&file), &header, rows)?;
        w.manifest.push(PanelRecord {
            file,
            panel: name.into(),
            content: "spin expectation values and Zeeman populations".into(),
            parameters: describe(&cfg),
        });
    }

    let by_s = |r_op: f64| -> Vec<(Vec<f64>, RunConfig)> {
        S_VALUES
            .iter()
            .map(|&s| (vec![s], pumped(base, Axis::Z, s, r_op)))
            .collect()
    };
    let by_r = || -> Vec<(Vec<f64>, RunConfig)> {
        R_OP_VALUES
            .iter()
            .map(|&r| (vec![r], pumped(base, Axis::Z, 0.5, r)))
            .collect()
    };
    let s_label = ["s"];
    let r_label = ["r_op_over_gamma_se"];

    let entropy_panels = [
        ("a", "d", ENTROPY, "von Neumann entropy"),
        ("b", "e", SIGMA, "entropy production"),
        ("c", "f", SIGMA_RATE, "entropy production rate"),
    ];
    for (top, bottom, col, what) in entropy_panels {
        w.family(
            &format!("fig3{top}"),
            what,
            &s_label,
            by_s(1.0),
            &[T_NORM, col],
        )?;
        w.family(
            &format!("fig3{bottom}"),
            what,
            &r_label,
            by_r(),
            &[T_NORM, col],
        )?;
    }
    w.family(
        "fig4a",
        "ergotropy",
        &s_label,
        by_s(1.0),
        &[T_NORM, ERGOTROPY],
    )?;
    w.family(
        "fig4b",
        "polarization efficiency",
        &s_label,
        by_s(1.0),
        &[T_NORM, EFFICIENCY],
    )?;
    w.family("fig4c", "ergotropy", &r_label, by_r(), &[T_NORM, ERGOTROPY])?;
    w.family(
        "fig4d",
        "polarization efficiency",
        &r_label,
        by_r(),
        &[T_NORM, EFFICIENCY],
    )?;

    let radius_curves: Vec<(Vec<f64>, RunConfig)> = S_VALUES
        .iter()
        .flat_map(|&s| {
            RADII_CM.iter().map(move |&r| {
                let cfg = radius_scan(base, s, r);
                (vec![s, r], cfg)
            })
        })
        .collect();
    let radius_curves: Vec<(Vec<f64>, RunConfig)> = radius_curves
        .into_iter()
        .map(|(mut labels, cfg)| {
            labels.push(runs.expect(&cfg).rates.gamma_sd_total);
            (labels, cfg)
        })
        .collect();
    w.family(
        "fig5",
        "polarization efficiency versus cell radius (last row per curve is the steady value)",
        &["s", "radius_cm", "gamma_sd_hz"],
        radius_curves,
        &[T_NORM, EFFICIENCY],
    )?;

    for (k, letter) in ["a", "b", "c"].into_iter().enumerate() {
        w.family(
            &format!("fig6{letter}"),
            QFI[k].0,
            &s_label,
            by_s(1.0),
            &[T_NORM, QFI[k]],
        )?;
    }
    for (k, letter) in ["d", "e", "f"].into_iter().enumerate() {
        w.family(
            &format!("fig6{letter}"),
            QFI[k].0,
            &r_label,
            by_r(),
            &[T_NORM, QFI[k]],
        )?;
    }

    let cfg = pumped(base, Axis::Z, REPARAMETRIZATION_S, 1.0);
    let run = runs.expect(&cfg);
    let rep = reparametrize(&run.thermo, &run.qfi).expect("series come from one trajectory");
    for k in 0..3 {
        let comp = ["x", "y", "z"][k];
        let file = format!("fig7{}.csv", ["a", "b", "c"][k]);
        let rows = rep
            .versus_efficiency
            .points
            .iter()
            .map(|(r, q)| vec![fmt_f64(*r), fmt_f64(q[k])]);
        write_csv(
            &out.join(&file),
            &["efficiency".to_string(), format!("qfi_{comp}")],
            rows,
        )?;
        w.manifest.push(PanelRecord {
            file,
            panel: format!("fig7{}", ["a", "b", "c"][k]),
            content: format!("qfi_{comp} versus polarization efficiency"),
            parameters: describe(&cfg),
        });

        let fit = rep.sigma_fit[k];
        let file = format!("fig7{}.csv", ["d", "e", "f"][k]);
        let rows = rep.versus_entropy_production.points.iter().map(|(s, q)| {
            vec![
                fmt_f64(*s),
                fmt_f64(q[k]),
                fmt_f64(fit.slope * s + fit.intercept),
            ]
        });
        write_csv(
            &out.join(&file),
            &[
                "sigma".to_string(),
                format!("qfi_{comp}"),
                format!("qfi_{comp}_linear_fit"),
            ],
            rows,
        )?;
        w.manifest.push(PanelRecord {
            file,
            panel: format!("fig7{}", ["d", "e", "f"][k]),
            content: format!(
                "qfi_{comp} versus entropy production; fit slope={} intercept={} r_squared={}",
                fmt_f64(fit.slope),
                fmt_f64(fit.intercept),
                fmt_f64(fit.r_squared)
            ),
            parameters: describe(&cfg),
        });
    }

    let manifest = w.manifest;
    write_csv(
        &out.join(MANIFEST_FILE),
        &["file", "panel", "content", "parameters"],
        manifest.iter().map(|p| {
            vec![
                p.file.clone(),
                p.panel.clone(),
                p.content.clone(),
                p.parameters.clone(),
            ]
        }),
    )?;
    Ok(FigureReport {
        directory: out.to_path_buf(),
        panels: manifest,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_configurations_are_deduplicated() {
        let configs = required_configs(&RunConfig::default());
        // z/0.5/Γ is shared by fig2a and both families; the 1.5 cm radius
        // point at s = 0.5 is the R_op = Γ/2 family member.
        assert_eq!(configs.len(), 2 + 2 + 4 + 3 * RADII_CM.len() - 1);
    }
}
