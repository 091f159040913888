//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! that every value round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mirrorlab::{LyapunovTrace, RunRecord, TraceKind};

use crate::error::{CliError, CliResult};

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_cell(column: &str, v: f64) -> String {
    if column == "k" {
        format!("{}", v as u64)
    } else {
        format_float(v)
    }
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

fn finish(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_trace(path: &Path, rec: &RunRecord) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(&rec.columns)
        .map_err(|e| csv_error(path, e))?;
    for row in &rec.rows {
        let cells = rec.columns.iter().zip(row).map(|(c, v)| format_cell(c, *v));
        w.write_record(cells).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// One line per Lyapunov value. Discrete traces leave the bound of the last
/// value empty, since bounds belong to transitions.
pub fn write_lyapunov(path: &Path, trace: &LyapunovTrace) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let axis = match trace.kind {
        TraceKind::Discrete => "k",
        TraceKind::Continuous => "t",
    };
    w.write_record([axis, "value", "certified_bound"])
        .map_err(|e| csv_error(path, e))?;
    for (i, (t, v)) in trace.times.iter().zip(&trace.values).enumerate() {
        let bound = trace
            .certified_bounds
            .get(i)
            .map(|b| format_float(*b))
            .unwrap_or_default();
        w.write_record([format_cell(axis, *t), format_float(*v), bound])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// Recorded iterates, one row per record row: `x_0..x_{n-1}` followed by
/// `y_0..y_{n-1}` when the scheme has secondary iterates.
pub fn write_iterates(path: &Path, rec: &RunRecord) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let axis = rec.columns[0];
    let n = rec.xs.first().map_or(0, |x| x.len());
    let with_y = !rec.ys.is_empty();
    let mut header = vec![axis.to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    if with_y {
        header.extend((0..n).map(|i| format!("y{i}")));
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, x) in rec.xs.iter().enumerate() {
        let mut cells = vec![format_cell(axis, rec.rows[i][0])];
        cells.extend(x.iter().map(|v| format_float(*v)));
        if with_y {
            cells.extend(rec.ys[i].iter().map(|v| format_float(*v)));
        }
        w.write_record(&cells).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    writeln!(w).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

/// A numeric CSV table; empty cells read as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|cell| {
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>().map_err(|_| {
                        CliError::Config(format!(
                            "{}: row {}: '{cell}' is not a number",
                            path.display(),
                            line + 1
                        ))
                    })
                }
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

/// Rebuilds a Lyapunov trace from a file written by [`write_lyapunov`].
pub fn read_lyapunov(path: &Path) -> CliResult<LyapunovTrace> {
    let table = read_table(path)?;
    let kind = match table.columns.first().map(String::as_str) {
        Some("k") => TraceKind::Discrete,
        Some("t") => TraceKind::Continuous,
        _ => {
            return Err(CliError::Config(format!(
                "{}: expected a Lyapunov file with a leading k or t column",
                path.display()
            )))
        }
    };
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column '{name}'", path.display())))
    };
    let mut trace = match kind {
        TraceKind::Discrete => LyapunovTrace::discrete(),
        TraceKind::Continuous => LyapunovTrace::continuous(),
    };
    trace.times = table.rows.iter().map(|r| r[0]).collect();
    trace.values = col("value")?;
    let mut bounds = col("certified_bound")?;
    if kind == TraceKind::Discrete {
        bounds.pop();
    }
    trace.certified_bounds = bounds;
    trace.validate()?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn lyapunov_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lyapunov.csv");
        let mut trace = LyapunovTrace::discrete();
        trace.times = vec![0.0, 1.0, 2.0];
        trace.values = vec![3.0, 2.0, 1.0 / 3.0];
        trace.certified_bounds = vec![-0.5, -0.25];
        write_lyapunov(&path, &trace).unwrap();
        assert_eq!(read_lyapunov(&path).unwrap(), trace);

        let mut cont = LyapunovTrace::continuous();
        cont.times = vec![0.5, 1.0];
        cont.values = vec![1.0, 0.9];
        cont.certified_bounds = vec![-0.1, -0.2];
        write_lyapunov(&path, &cont).unwrap();
        assert_eq!(read_lyapunov(&path).unwrap(), cont);
    }

    #[test]
    fn non_numeric_cells_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "k,value\n0,abc\n").unwrap();
        assert_eq!(read_table(&path).unwrap_err().exit_code(), 2);
    }
}
