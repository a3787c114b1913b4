//! Atomic artifact writes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use gencoupling::coupling::CoupledRun;

use crate::error::CliError;

pub const CSV_HEADER: [&str; 7] = ["t", "q", "U_x", "S_int", "cost", "ito_sum", "logweight"];

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per recorded time, floats with 17 significant digits.
pub fn run_csv<S>(run: &CoupledRun<S>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for i in 0..run.len() {
        let l = &run.ledger[i];
        w.write_record([
            sci(run.times[i]),
            sci(run.q[i]),
            sci(run.u_x[i]),
            sci(run.s_int[i]),
            sci(l.cost),
            sci(l.ito_sum),
            sci(l.logweight),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(sci(0.1), "1.0000000000000001e-1");
        assert_eq!(sci(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
