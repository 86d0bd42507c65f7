//! Artifact writers. Every file is written through a temporary in the target
//! directory and atomically renamed into place, and nothing is written at all
//! unless the whole run succeeded first.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;

use crate::error::CliError;

/// A named time series destined for `<name>.csv` with columns `t,<name>`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Everything a scenario run produces, held in memory until the run is known
/// to have succeeded.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: serde_json::Value,
    pub traces: Vec<Trace>,
    pub wigner: Option<Vec<(C64, f64)>>,
    /// Multiplier applied to the CSV time column (`g` for 1/g units, 1 for
    /// physical units).
    pub time_scale: f64,
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Validation(format!("cannot create file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::Validation(format!("cannot write {name}: {e}")))?;
    let path = dir.join(name);
    tmp.persist(&path)
        .map_err(|e| CliError::Validation(format!("cannot finalize {name}: {e}")))?;
    Ok(path)
}

pub fn write_outputs(dir: &Path, run: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();

    let mut summary = serde_json::to_string_pretty(&run.summary)
        .map_err(|e| CliError::Validation(format!("summary serialization: {e}")))?;
    summary.push('\n');
    written.push(write_atomic(dir, "summary.json", &summary)?);

    for trace in &run.traces {
        let mut body = format!("t,{}\n", trace.name);
        for (t, v) in trace.times.iter().zip(&trace.values) {
            body.push_str(&format!("{:.12e},{:.12e}\n", t * run.time_scale, v));
        }
        written.push(write_atomic(dir, &format!("{}.csv", trace.name), &body)?);
    }

    if let Some(points) = &run.wigner {
        let mut body = String::from("beta_re,beta_im,W\n");
        for (beta, w) in points {
            body.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", beta.re, beta.im, w));
        }
        written.push(write_atomic(dir, "wigner.csv", &body)?);
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_scaled_time_column() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunOutput {
            summary: serde_json::json!({"ok": true}),
            traces: vec![Trace {
                name: "P_e".into(),
                times: vec![0.0, 0.5],
                values: vec![1.0, 0.25],
            }],
            wigner: None,
            time_scale: 2.0,
        };
        let files = write_outputs(dir.path(), &run).unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(dir.path().join("P_e.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,P_e");
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        assert_eq!(row[0].parse::<f64>().unwrap(), 1.0);
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let make = || RunOutput {
            summary: serde_json::json!({"b": 1.0 / 3.0, "a": [1, 2]}),
            traces: vec![],
            wigner: Some(vec![(C64::new(0.1, -0.2), 0.636)]),
            time_scale: 1.0,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_outputs(d1.path(), &make()).unwrap();
        write_outputs(d2.path(), &make()).unwrap();
        for name in ["summary.json", "wigner.csv"] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }
}
