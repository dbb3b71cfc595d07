//! CSV serialization shared by every subcommand.

use std::fs::File;
use std::path::Path;

use super::CliError;

/// Twelve significant digits in scientific notation; `-0` prints as `0`
/// and infinities as `inf`/`-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes a header and rows to `path`, replacing any existing file.
pub fn write_csv<H, R>(
    path: &Path,
    header: &[H],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), CliError>
where
    H: AsRef<str>,
    R: IntoIterator,
    R::Item: AsRef<str>,
{
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header.iter().map(|h| h.as_ref()))
        .map_err(csv_err)?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(|f| f.as_ref().to_string()).collect();
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(1.0 / 3.0), "3.33333333333e-1");
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 1e-11);
    }
}
