//! Line-oriented text formats shared between the library and the CLI:
//! snapshot matrices, forecast matrices, error tables, and singular-value
//! spectra. Floats are printed with Rust's shortest round-trip formatting,
//! so write-then-read reproduces values exactly.

use std::io::{BufRead, Write};

use chrono::NaiveDate;
use thiserror::Error;

use crate::dmd::SpectrumReport;
use crate::eval::ErrorReport;
use crate::ingest::{IngestError, PlaceIndex, SnapshotMatrix};
use crate::linalg::RealMatrix;

pub const SNAPSHOT_HEADER: &str = "flowdmd-snapshot 1";
pub const FORECAST_HEADER: &str = "flowdmd-forecast 1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unexpected end of file")]
    UnexpectedEof,
    #[error("ingest error: {0}")]
    Ingest(#[from] IngestError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// Snapshot-matrix file:
///
/// ```text
/// flowdmd-snapshot 1
/// k <places>
/// m <weeks>
/// place <id>      (k lines, index order)
/// week <iso date> (m lines, chronological)
/// col <k*k space-separated values>  (m lines)
/// ```
pub fn write_snapshot<W: Write>(snapshots: &SnapshotMatrix, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{SNAPSHOT_HEADER}")?;
    writeln!(sink, "k {}", snapshots.k())?;
    writeln!(sink, "m {}", snapshots.num_weeks())?;
    for id in snapshots.place_index().ids() {
        writeln!(sink, "place {id}")?;
    }
    for label in snapshots.week_labels() {
        writeln!(sink, "week {}", label.format("%Y-%m-%d"))?;
    }
    for w in 0..snapshots.num_weeks() {
        write!(sink, "col")?;
        for value in snapshots.column(w) {
            write!(sink, " {value}")?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(source: R) -> Result<SnapshotMatrix, FormatError> {
    let mut lines = source.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String), FormatError> {
        match lines.next() {
            Some((i, Ok(line))) => Ok((i + 1, line)),
            Some((_, Err(e))) => Err(FormatError::Io(e)),
            None => Err(if expect.is_empty() {
                FormatError::UnexpectedEof
            } else {
                parse_err(0, format!("missing {expect}"))
            }),
        }
    };

    let (line_no, header) = next_line("header")?;
    if header.trim() != SNAPSHOT_HEADER {
        return Err(parse_err(line_no, format!("expected '{SNAPSHOT_HEADER}'")));
    }
    let k = parse_keyed_usize(&mut next_line, "k")?;
    let m = parse_keyed_usize(&mut next_line, "m")?;

    let mut ids = Vec::with_capacity(k);
    for _ in 0..k {
        let (line_no, line) = next_line("place line")?;
        let id = line
            .strip_prefix("place ")
            .ok_or_else(|| parse_err(line_no, "expected 'place <id>'"))?;
        ids.push(id.to_string());
    }
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let (line_no, line) = next_line("week line")?;
        let raw = line
            .strip_prefix("week ")
            .ok_or_else(|| parse_err(line_no, "expected 'week <date>'"))?;
        let date = NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
            .map_err(|e| parse_err(line_no, format!("bad date '{raw}': {e}")))?;
        labels.push(date);
    }

    let mut data = Vec::with_capacity(k * k * m);
    for _ in 0..m {
        let (line_no, line) = next_line("col line")?;
        let rest = line
            .strip_prefix("col")
            .ok_or_else(|| parse_err(line_no, "expected 'col <values>'"))?;
        let before = data.len();
        for token in rest.split_whitespace() {
            let value: f64 = token
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad number '{token}'")))?;
            data.push(value);
        }
        if data.len() - before != k * k {
            return Err(parse_err(
                line_no,
                format!("expected {} values, got {}", k * k, data.len() - before),
            ));
        }
    }

    let index = PlaceIndex::from_ids(ids.clone());
    if index.ids() != ids.as_slice() {
        return Err(parse_err(0, "place ids must be sorted and distinct"));
    }
    let matrix = RealMatrix::from_column_major(k * k, m, data);
    Ok(SnapshotMatrix::from_parts(matrix, labels, index)?)
}

fn parse_keyed_usize(
    next_line: &mut impl FnMut(&str) -> Result<(usize, String), FormatError>,
    key: &str,
) -> Result<usize, FormatError> {
    let (line_no, line) = next_line(key)?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| parse_err(line_no, format!("expected '{key} <value>'")))?;
    rest.trim()
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad {key} value '{}'", rest.trim())))
}

/// Forecast matrix with its time metadata; `columns` holds one forecast
/// per step, starting at the model's t0.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastFile {
    pub rank: usize,
    pub dt: f64,
    pub t0: NaiveDate,
    pub columns: RealMatrix,
}

pub fn write_forecast<W: Write>(forecast: &ForecastFile, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{FORECAST_HEADER}")?;
    writeln!(sink, "n {}", forecast.columns.rows())?;
    writeln!(sink, "horizon {}", forecast.columns.cols())?;
    writeln!(sink, "rank {}", forecast.rank)?;
    writeln!(sink, "dt {}", forecast.dt)?;
    writeln!(sink, "t0 {}", forecast.t0.format("%Y-%m-%d"))?;
    for j in 0..forecast.columns.cols() {
        write!(sink, "col")?;
        for value in forecast.columns.column(j) {
            write!(sink, " {value}")?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

pub fn read_forecast<R: BufRead>(source: R) -> Result<ForecastFile, FormatError> {
    let mut lines = source.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String), FormatError> {
        match lines.next() {
            Some((i, Ok(line))) => Ok((i + 1, line)),
            Some((_, Err(e))) => Err(FormatError::Io(e)),
            None => Err(parse_err(0, format!("missing {expect}"))),
        }
    };

    let (line_no, header) = next_line("header")?;
    if header.trim() != FORECAST_HEADER {
        return Err(parse_err(line_no, format!("expected '{FORECAST_HEADER}'")));
    }
    let n = parse_keyed_usize(&mut next_line, "n")?;
    let horizon = parse_keyed_usize(&mut next_line, "horizon")?;
    let rank = parse_keyed_usize(&mut next_line, "rank")?;
    let (line_no, line) = next_line("dt")?;
    let dt: f64 = line
        .strip_prefix("dt")
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(line_no, "expected 'dt <weeks>'"))?;
    let (line_no, line) = next_line("t0")?;
    let t0 = line
        .strip_prefix("t0 ")
        .and_then(|s| NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok())
        .ok_or_else(|| parse_err(line_no, "expected 't0 <date>'"))?;

    let mut data = Vec::with_capacity(n * horizon);
    for _ in 0..horizon {
        let (line_no, line) = next_line("col line")?;
        let rest = line
            .strip_prefix("col")
            .ok_or_else(|| parse_err(line_no, "expected 'col <values>'"))?;
        let before = data.len();
        for token in rest.split_whitespace() {
            let value: f64 = token
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad number '{token}'")))?;
            data.push(value);
        }
        if data.len() - before != n {
            return Err(parse_err(
                line_no,
                format!("expected {n} values, got {}", data.len() - before),
            ));
        }
    }
    Ok(ForecastFile { rank, dt, t0, columns: RealMatrix::from_column_major(n, horizon, data) })
}

/// Error table in the column order week label, truth norm, forecast norm,
/// relative L2 error, relative Linf error.
pub fn write_error_report<W: Write>(report: &ErrorReport, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "week,truth_l2,dmd_l2,rel_l2,rel_linf")?;
    for row in &report.rows {
        writeln!(
            sink,
            "{},{},{},{},{}",
            row.week_label.format("%Y-%m-%d"),
            row.truth_norm,
            row.pred_norm,
            row.rel_l2,
            row.rel_linf
        )?;
    }
    Ok(())
}

/// Two-column spectrum listing: one-based index, singular value.
pub fn write_spectrum<W: Write>(report: &SpectrumReport, mut sink: W) -> std::io::Result<()> {
    for (i, value) in report.singular_values.iter().enumerate() {
        writeln!(sink, "{} {}", i + 1, value)?;
    }
    Ok(())
}
