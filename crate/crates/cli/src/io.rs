//! Matrix CSV input and output.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use symgl_core::detrend::TimeSeriesMatrix;

use crate::error::{CliError, CliResult};

/// How to read the rows of an input CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Rows are time points unless the first column holds labels.
    #[default]
    Auto,
    /// Rows are time points, the header names the columns.
    TimeByVariable,
    /// Rows are series; an optional leading column names them.
    VariableByTime,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_records(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

/// Parses a numeric table, naming every offending cell (1-based file line and column).
fn numeric_body(path: &Path, rows: &[Vec<String>], skip: usize, width: usize) -> CliResult<DMatrix<f64>> {
    let mut problems = Vec::new();
    let mut data = DMatrix::zeros(rows.len(), width);
    for (r, row) in rows.iter().enumerate() {
        let line = r + 2;
        if row.len() != width + skip {
            problems.push(format!("line {line}: {} fields, expected {}", row.len(), width + skip));
            continue;
        }
        for (c, cell) in row[skip..].iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => data[(r, c)] = v,
                Ok(_) => problems.push(format!("line {line}, column {}: non-finite value '{cell}'", c + skip + 1)),
                Err(_) => problems.push(format!("line {line}, column {}: not a number '{cell}'", c + skip + 1)),
            }
        }
    }
    if problems.is_empty() {
        Ok(data)
    } else {
        let shown: Vec<_> = problems.iter().take(20).cloned().collect();
        let more = problems.len().saturating_sub(shown.len());
        let mut msg = shown.join("; ");
        if more > 0 {
            msg.push_str(&format!("; and {more} more"));
        }
        Err(CliError::parse(path, msg))
    }
}

fn check_names(path: &Path, names: &[String]) -> CliResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if n.is_empty() {
            return Err(CliError::parse(path, "empty series name"));
        }
        if !seen.insert(n) {
            return Err(CliError::parse(path, format!("duplicate series name '{n}'")));
        }
    }
    Ok(())
}

/// Loads a `T x p` matrix with one name per series.
pub fn load_timeseries(path: &Path, orientation: Orientation) -> CliResult<TimeSeriesMatrix> {
    let (header, rows) = read_records(path)?;
    if rows.is_empty() {
        return Err(CliError::parse(path, "no data rows"));
    }
    let labelled_rows = rows[0].first().is_some_and(|c| c.parse::<f64>().is_err());
    let by_time = match orientation {
        Orientation::TimeByVariable => true,
        Orientation::VariableByTime => false,
        Orientation::Auto => !labelled_rows,
    };
    let ts = if by_time {
        check_names(path, &header)?;
        let data = numeric_body(path, &rows, 0, header.len())?;
        TimeSeriesMatrix::new(data, header)
    } else {
        let skip = usize::from(labelled_rows);
        let width = header.len() - skip;
        let data = numeric_body(path, &rows, skip, width)?;
        let names: Vec<String> = if labelled_rows {
            rows.iter().map(|r| r[0].clone()).collect()
        } else {
            (1..=rows.len()).map(|j| format!("x{j}")).collect()
        };
        check_names(path, &names)?;
        TimeSeriesMatrix::new(data.transpose(), names)
    };
    ts.map_err(|e| CliError::parse(path, e.to_string()))
}

/// Header of names, then one row per observation; values in shortest round-trip form.
pub fn matrix_csv(names: &[String], data: &DMatrix<f64>) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for r in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols()).map(|c| data[(r, c)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn both_orientations_agree() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.csv", "l1,l2,r1\n1,2,3\n4,5,6\n");
        let b = write(&dir, "b.csv", "roi,t1,t2\nl1,1,4\nl2,2,5\nr1,3,6\n");
        let x = load_timeseries(&a, Orientation::Auto).unwrap();
        let y = load_timeseries(&b, Orientation::Auto).unwrap();
        assert_eq!(x, y);
        assert_eq!((x.t(), x.p()), (2, 3));
        let c = write(&dir, "c.csv", "t1,t2\n1,4\n2,5\n3,6\n");
        let z = load_timeseries(&c, Orientation::VariableByTime).unwrap();
        assert_eq!(z.data(), x.data());
    }

    #[test]
    fn bad_cells_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "nan.csv", "a,b\n1,2\n3,NaN\n");
        let msg = load_timeseries(&p, Orientation::Auto).unwrap_err().to_string();
        assert!(msg.contains("line 3, column 2"), "{msg}");
        let p = write(&dir, "ragged.csv", "a,b\n1,2\n3\n");
        assert!(load_timeseries(&p, Orientation::Auto).unwrap_err().to_string().contains("line 3"));
        let p = write(&dir, "dup.csv", "a,a\n1,2\n");
        assert!(load_timeseries(&p, Orientation::Auto).unwrap_err().to_string().contains("duplicate"));
        let p = write(&dir, "text.csv", "a,b\n1,x\n");
        assert!(load_timeseries(&p, Orientation::Auto).unwrap_err().to_string().contains("not a number"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let data = DMatrix::from_row_slice(2, 2, &[0.1 + 0.2, -1e-300, 1.0 / 3.0, 12345.678]);
        let names = vec!["u".to_string(), "v".to_string()];
        let p = write(&dir, "m.csv", &matrix_csv(&names, &data));
        let back = load_timeseries(&p, Orientation::Auto).unwrap();
        assert_eq!(back.data(), &data);
    }
}
