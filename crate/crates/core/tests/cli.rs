use std::fs;
use std::path::Path;
use std::process::Command;

use opm_thermo::cli::config::{parse_config_str, read_config_file, Axis, RunConfig, SweepVariable};
use opm_thermo::cli::run::{simulate, write_run, Summary, SUMMARY_FILE, TRAJECTORY_FILE};
use opm_thermo::cli::sweep::{sweep, AGGREGATE_FILE, FAILURES_FILE};
use opm_thermo::cli::{exit_code, SweepSpec};

fn short(t_end: f64) -> RunConfig {
    RunConfig {
        t_end_over_t_se: t_end,
        until_steady: false,
        sample_every: 200,
        ..Default::default()
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opm-thermo"))
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn config_file_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(
        &path,
        "# pump along x\npump_axis = x\ns_magnitude = 0.75 # comment\nradius_cm = 2\n",
    )
    .unwrap();
    let file = read_config_file(&path).unwrap();
    assert_eq!(file.run.pump_axis, Axis::X);
    assert_eq!(file.run.photon_spin(), [0.75, 0.0, 0.0]);
    assert_eq!(file.run.cell.radius, 2.0);
    let empty = dir.path().join("empty.cfg");
    fs::write(&empty, "").unwrap();
    assert_eq!(read_config_file(&empty).unwrap().run, RunConfig::default());
    assert!(read_config_file(&dir.path().join("missing.cfg")).is_err());
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = short(1.0);
    write_run(&simulate(&cfg).unwrap(), a.path()).unwrap();
    write_run(&simulate(&cfg).unwrap(), b.path()).unwrap();
    for name in ["rates.csv", TRAJECTORY_FILE, SUMMARY_FILE] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn file_schemas() {
    let dir = tempfile::tempdir().unwrap();
    write_run(&simulate(&short(0.5)).unwrap(), dir.path()).unwrap();

    let (header, rows) = read_rows(&dir.path().join(TRAJECTORY_FILE));
    assert_eq!(header.len(), 25);
    assert_eq!(&header[..3], ["t_s", "t_over_t_se", "entropy"]);
    assert_eq!(header[17], "pop_F2_m2");
    assert_eq!(header[24], "pop_F1_m-1");
    assert!(rows.iter().all(|r| r.len() == header.len()));
    // First row is the maximally mixed state.
    let pops: f64 = header
        .iter()
        .zip(&rows[0])
        .filter(|(h, _)| h.starts_with("pop_"))
        .map(|(_, v)| v.parse::<f64>().unwrap())
        .sum();
    assert!((pops - 1.0).abs() < 1e-10);
    assert_eq!(rows[0][11], "inf");

    let (header, rows) = read_rows(&dir.path().join(SUMMARY_FILE));
    assert_eq!(header, Summary::HEADER);
    assert_eq!(rows.len(), 1);

    let (header, rows) = read_rows(&dir.path().join("rates.csv"));
    assert_eq!(header.len(), 8);
    let gse = column(&header, &rows, "gamma_se_hz")[0];
    assert!(gse > 1e4 && gse < 2e4);
}

#[test]
fn unpumped_run_stays_unpolarized() {
    let cfg = RunConfig {
        r_op_over_gamma_se: 0.0,
        ..short(2.0)
    };
    let out = simulate(&cfg).unwrap();
    for (th, q) in out.thermo.iter().zip(&out.qfi) {
        assert_eq!(th.efficiency, 0.0);
        assert!((th.entropy - 8f64.ln()).abs() < 1e-10);
        assert!(q.qfi.iter().all(|&x| x.abs() < 1e-10));
    }
}

#[test]
fn sweep_aggregate_matches_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        variable: SweepVariable::S,
        values: vec![0.75, 0.25],
        base: short(0.5),
    };
    let report = sweep(&spec, dir.path(), Some(2)).unwrap();
    assert_eq!(report.failures(), 0);
    let (_, agg) = read_rows(&dir.path().join(AGGREGATE_FILE));
    assert_eq!(agg.len(), 2);
    for (row, s) in agg.iter().zip([0.25, 0.75]) {
        let single = simulate(&SweepVariable::S.apply(&spec.base, s)).unwrap();
        assert_eq!(row, &single.summary_record());
        let sub = dir.path().join(format!("s_{s}"));
        let (_, own) = read_rows(&sub.join(SUMMARY_FILE));
        assert_eq!(&own[0], row);
    }
    let (_, failures) = read_rows(&dir.path().join(FAILURES_FILE));
    assert!(failures.is_empty());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };

    let out = binary()
        .args(["rates", "--out"])
        .arg(dir.path().join("rates"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::OK));
    assert!(dir.path().join("rates/rates.csv").exists());

    let bad = cfg("bad.cfg", "radius = 2\n");
    let out = binary()
        .args(["run", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));

    let invalid = cfg("invalid.cfg", "s_magnitude = 2\n");
    let out = binary()
        .args(["run", "--config"])
        .arg(&invalid)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::CONFIG));

    let unstable = cfg(
        "unstable.cfg",
        "t_end_over_t_se = 1\nuntil_steady = false\ndt_over_t_se = 0.05\n",
    );
    let out = binary()
        .args(["run", "--config"])
        .arg(&unstable)
        .arg("--out")
        .arg(dir.path().join("unstable"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::PHYSICS));

    let ok = cfg("ok.cfg", "t_end_over_t_se = 0.2\nuntil_steady = false\n");
    let out = binary()
        .args(["run", "--config"])
        .arg(&ok)
        .arg("--out")
        .arg(dir.path().join("ok"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::OK));
    assert!(dir.path().join("ok").join(TRAJECTORY_FILE).exists());

    // R_op = 5000 Γ_SE is unstable at the fixed step, R_op = Γ_SE is not.
    let partial = cfg(
        "partial.cfg",
        "t_end_over_t_se = 0.2\nuntil_steady = false\ndt_over_t_se = 0.002\n\
         sweep_variable = r_op\nsweep_values = 5000, 1\n",
    );
    let out = binary()
        .args(["sweep", "--jobs", "1", "--config"])
        .arg(&partial)
        .arg("--out")
        .arg(dir.path().join("partial"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::PARTIAL_SWEEP));
    let (_, agg) = read_rows(&dir.path().join("partial").join(AGGREGATE_FILE));
    assert_eq!(agg.len(), 1);
    let (_, failures) = read_rows(&dir.path().join("partial").join(FAILURES_FILE));
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0][1], exit_code::PHYSICS.to_string());

    let no_sweep = cfg("nosweep.cfg", "");
    let out = binary()
        .args(["sweep", "--config"])
        .arg(&no_sweep)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::CONFIG));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let err = parse_config_str("radius_cm = 1\n\n# ok\ngarbage\n").unwrap_err();
    assert!(err.to_string().starts_with("line 4:"), "{err}");
}
