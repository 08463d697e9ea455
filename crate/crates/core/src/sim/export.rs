use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::SimResult;

fn state_labels(n: usize) -> Vec<String> {
    if n == 2 {
        vec!["dw".into(), "dpm".into()]
    } else {
        (0..n).map(|i| format!("x{i}")).collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::BadInput(format!("csv: {other:?}")),
    }
}

/// Writes one row per sample with header `t,dw,dpm,u,w` followed by
/// `dw_hat,dpm_hat` when estimates exist and `level` when levels exist. Values
/// are printed as `{:.16e}`, which round-trips `f64` exactly.
pub fn export_csv<T: Real>(r: &SimResult<T>, path: &Path) -> Result<()> {
    let n = r.states.first().map_or(2, Vec::len);
    let labels = state_labels(n);
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().cloned());
    header.extend(["u".to_string(), "w".to_string()]);
    let with_est = !r.estimates.is_empty();
    let with_level = !r.levels.is_empty();
    if with_est {
        header.extend(labels.iter().map(|l| format!("{l}_hat")));
    }
    if with_level {
        header.push("level".into());
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&header).map_err(csv_err)?;
    let fmt = |v: T| format!("{v:.16e}");
    for k in 0..r.len() {
        let mut row = vec![fmt(r.times[k])];
        row.extend(r.states[k].iter().map(|&v| fmt(v)));
        row.push(fmt(r.inputs[k]));
        row.push(fmt(r.disturbance[k]));
        if with_est {
            row.extend(r.estimates[k].iter().map(|&v| fmt(v)));
        }
        if with_level {
            row.push(fmt(r.levels[k]));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns of a CSV written by [`export_csv`].
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            col.push(field.parse::<f64>().map_err(|e| Error::BadInput(format!("csv field `{field}`: {e}")))?);
        }
    }
    Ok(CsvTable { header, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(k: usize) -> SimResult<f64> {
        let mut r = SimResult::<f64>::default();
        for i in 0..k {
            let t = i as f64 * 0.1;
            r.times.push(t);
            r.states.push(vec![(t * 3.0).sin() / 7.0, -t / 3.0]);
            r.inputs.push(0.05 * (t * 11.0).cos());
            r.demands.push(0.0);
            r.disturbance.push(-1.0 / 3.0);
        }
        r
    }

    #[test]
    fn header_only_for_empty_result() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        export_csv(&SimResult::<f64>::default(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,dw,dpm,u,w\n");
    }

    #[test]
    fn three_samples_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("three.csv");
        let r = synthetic(3);
        export_csv(&r, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
        let back = read_csv(&path).unwrap();
        assert_eq!(back.column("u").unwrap(), r.inputs.as_slice());
        let dw: Vec<f64> = r.states.iter().map(|x| x[0]).collect();
        assert_eq!(back.column("dw").unwrap(), dw.as_slice());
        assert_eq!(back.column("t").unwrap(), r.times.as_slice());
    }
}
