//! Plain-text field and series output: one row per
//! interior x-index, comma-separated values over the interior y-indices.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl OutputError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Pressure,
    U,
    V,
    Stream,
    Vorticity,
}

impl FieldKind {
    pub fn stem(self) -> &'static str {
        match self {
            FieldKind::Pressure => "p",
            FieldKind::U => "u",
            FieldKind::V => "v",
            FieldKind::Stream => "stream",
            FieldKind::Vorticity => "vorticity",
        }
    }
}

/// Interior values of one field, indexed `values[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub kind: FieldKind,
    /// Time-step counter for animation frames; `None` for final results.
    pub cycle: Option<usize>,
    pub values: Vec<Vec<f64>>,
}

impl FieldSnapshot {
    pub fn from_field(kind: FieldKind, cycle: Option<usize>, field: &Field) -> Self {
        Self {
            kind,
            cycle,
            values: field.interior_columns(),
        }
    }

    /// `p000500.csv` for frames, `p.csv` for final results.
    pub fn file_name(&self) -> String {
        match self.cycle {
            Some(c) => format!("{}{:06}.csv", self.kind.stem(), c),
            None => format!("{}.csv", self.kind.stem()),
        }
    }
}

/// Rows of comma-separated values, shortest round-trip number formatting.
pub fn format_rows(values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in values {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Parses comma-separated rows. Whitespace around values is ignored and
/// Fortran `D` exponents are accepted; blank lines are skipped.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>, OutputError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let t = tok.trim().replace(['D', 'd'], "E");
                t.parse::<f64>().map_err(|e| OutputError::Parse {
                    line: lineno + 1,
                    message: format!("{:?}: {e}", tok.trim()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `snapshot` into `dir` and returns the file path.
pub fn write_snapshot(snapshot: &FieldSnapshot, dir: &Path) -> Result<PathBuf, OutputError> {
    let path = dir.join(snapshot.file_name());
    fs::write(&path, format_rows(&snapshot.values)).map_err(|e| OutputError::io(&path, e))?;
    Ok(path)
}

pub fn read_snapshot(path: &Path) -> Result<Vec<Vec<f64>>, OutputError> {
    let text = fs::read_to_string(path).map_err(|e| OutputError::io(path, e))?;
    parse_rows(&text)
}

/// Appends `time,u` lines as a run progresses.
pub struct MonitorWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MonitorWriter {
    pub fn create(path: &Path) -> Result<Self, OutputError> {
        let file = File::create(path).map_err(|e| OutputError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn record(&mut self, time: f64, value: f64) -> Result<(), OutputError> {
        writeln!(self.out, "{time:?},{value:?}").map_err(|e| OutputError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), OutputError> {
        self.out.flush().map_err(|e| OutputError::io(&self.path, e))
    }
}

/// Writes a whole monitor series as `time,u` lines.
pub fn write_monitor(series: &[(f64, f64)], path: &Path) -> Result<(), OutputError> {
    let mut w = MonitorWriter::create(path)?;
    for &(t, u) in series {
        w.record(t, u)?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_value_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = Field::filled(3, 3, 3.5);
        let path = write_snapshot(&FieldSnapshot::from_field(FieldKind::Pressure, None, &f), dir.path()).unwrap();
        assert_eq!(path.file_name().unwrap(), "p.csv");
        assert_eq!(fs::read_to_string(&path).unwrap(), "3.5\n");
    }

    #[test]
    fn two_by_two_has_one_comma_per_line() {
        let f = Field::from_fn(4, 4, |i, j| (10 * i + j) as f64);
        let text = format_rows(&f.interior_columns());
        assert_eq!(text, "11.0,12.0\n21.0,22.0\n");
        assert!(text.lines().all(|l| l.matches(',').count() == 1));
    }

    #[test]
    fn frame_names_are_zero_padded() {
        let s = FieldSnapshot {
            kind: FieldKind::U,
            cycle: Some(500),
            values: vec![],
        };
        assert_eq!(s.file_name(), "u000500.csv");
        let s = FieldSnapshot {
            kind: FieldKind::Vorticity,
            cycle: None,
            values: vec![],
        };
        assert_eq!(s.file_name(), "vorticity.csv");
    }

    #[test]
    fn reader_tolerates_fortran_layout() {
        let rows = parse_rows("   1.5000000000000000      ,  -2.0D-03\n\n 7 , 8\n").unwrap();
        assert_eq!(rows, vec![vec![1.5, -2.0e-3], vec![7.0, 8.0]]);
        assert!(matches!(parse_rows("1,x"), Err(OutputError::Parse { line: 1, .. })));
    }

    #[test]
    fn monitor_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("Time_U.csv");
        write_monitor(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
        write_monitor(&[(0.5, 0.0), (1.0, -0.25)], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "0.5,0.0\n1.0,-0.25\n");
    }

    #[test]
    fn unwritable_destination_names_the_path() {
        let err = write_snapshot(
            &FieldSnapshot::from_field(FieldKind::V, Some(1), &Field::zeros(3, 3)),
            Path::new("/nonexistent/dir"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/v000001.csv"));
    }

    proptest! {
        #[test]
        fn rows_round_trip_exactly(values in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 1..6), 1..6)) {
            let w = values[0].len();
            let values: Vec<Vec<f64>> = values.into_iter().map(|mut r| { r.resize(w, 0.0); r }).collect();
            let text = format_rows(&values);
            for line in text.lines() {
                prop_assert_eq!(line.matches(',').count(), w - 1);
            }
            let back = parse_rows(&text).unwrap();
            let bits = |v: &Vec<Vec<f64>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&values));
        }
    }
}
