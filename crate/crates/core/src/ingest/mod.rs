//! Weekly O-D flow ingestion: CSV parsing, per-week O-D matrix assembly,
//! symmetrization, and vectorization into the snapshot data matrix.

mod csv_io;

pub use csv_io::{export_flow_csv, parse_flow_csv, ColumnMap};

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use thiserror::Error;

use crate::linalg::RealMatrix;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("mapped column '{0}' not found in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse '{value}' in column '{column}' as a number")]
    BadNumeric { row: u64, column: String, value: String },
    #[error("row {row}: cannot parse '{value}' as a week start date")]
    BadDate { row: u64, value: String },
    #[error("row {row}: negative flow {value}")]
    NegativeFlow { row: u64, value: f64 },
    #[error("row {row}: {message}")]
    BadRecord { row: u64, message: String },
    #[error("unknown place id '{0}'")]
    UnknownPlace(String),
    #[error("records span multiple weeks: {first} and {second}")]
    MixedWeeks { first: NaiveDate, second: NaiveDate },
    #[error("population flow needs pop_origin and a positive num_devices_origin")]
    MissingPopulationInputs,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("weeks out of order or duplicated at {0}")]
    OutOfOrderWeeks(NaiveDate),
    #[error("no records to ingest")]
    Empty,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One O-D observation for one week.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub origin_id: String,
    pub dest_id: String,
    pub week_start: NaiveDate,
    pub visitor_flow: f64,
    pub pop_origin: Option<f64>,
    pub num_devices_origin: Option<f64>,
}

/// Estimated population flow from the visitor flow and the
/// population-to-device ratio at the origin.
pub fn infer_pop_flow(record: &FlowRecord) -> Result<f64, IngestError> {
    match (record.pop_origin, record.num_devices_origin) {
        (Some(pop), Some(devices)) if devices > 0.0 => {
            Ok(record.visitor_flow * pop / devices)
        }
        _ => Err(IngestError::MissingPopulationInputs),
    }
}

/// Deterministic bijection between place identifiers and contiguous
/// indices `0..k`, ordered lexicographically by identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl PlaceIndex {
    pub fn from_ids<I: IntoIterator<Item = String>>(ids: I) -> Self {
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort();
        ids.dedup();
        let lookup = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Self { ids, lookup }
    }

    /// Index over every origin and destination id appearing in `records`.
    pub fn from_records(records: &[FlowRecord]) -> Self {
        Self::from_ids(
            records
                .iter()
                .flat_map(|r| [r.origin_id.clone(), r.dest_id.clone()]),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }
}

/// Nonnegative k x k weekly flow matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OdMatrix {
    pub week_index: usize,
    k: usize,
    entries: Vec<f64>,
}

impl OdMatrix {
    pub fn zeros(week_index: usize, k: usize) -> Self {
        assert!(k >= 1, "place count must be >= 1");
        Self { week_index, k, entries: vec![0.0; k * k] }
    }

    pub fn from_entries(week_index: usize, k: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), k * k, "entry count does not match k");
        Self { week_index, k, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, origin: usize, dest: usize) -> f64 {
        self.entries[dest * self.k + origin]
    }

    #[inline]
    pub fn add(&mut self, origin: usize, dest: usize, flow: f64) {
        self.entries[dest * self.k + origin] += flow;
    }

    #[inline]
    fn set(&mut self, origin: usize, dest: usize, value: f64) {
        self.entries[dest * self.k + origin] = value;
    }

    /// Column-major entries (equals row-major for symmetric matrices).
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn total_flow(&self) -> f64 {
        self.entries.iter().sum()
    }
}

/// Sums `records` for one week into the k x k origin-destination matrix.
/// Absent pairs stay zero; duplicate pairs accumulate.
pub fn build_od_matrix(
    records: &[FlowRecord],
    index: &PlaceIndex,
    week_index: usize,
) -> Result<OdMatrix, IngestError> {
    let mut matrix = OdMatrix::zeros(week_index, index.len().max(1));
    let mut week: Option<NaiveDate> = None;
    for record in records {
        match week {
            None => week = Some(record.week_start),
            Some(w) if w != record.week_start => {
                return Err(IngestError::MixedWeeks { first: w, second: record.week_start })
            }
            _ => {}
        }
        let origin = index
            .index_of(&record.origin_id)
            .ok_or_else(|| IngestError::UnknownPlace(record.origin_id.clone()))?;
        let dest = index
            .index_of(&record.dest_id)
            .ok_or_else(|| IngestError::UnknownPlace(record.dest_id.clone()))?;
        matrix.add(origin, dest, record.visitor_flow);
    }
    Ok(matrix)
}

/// `(A + A^T) / 2`. The result is exactly symmetric and the diagonal is
/// preserved bit for bit.
pub fn symmetrize(a: &OdMatrix) -> OdMatrix {
    let k = a.k;
    let mut s = OdMatrix::zeros(a.week_index, k);
    for i in 0..k {
        s.set(i, i, a.get(i, i));
        for j in (i + 1)..k {
            let avg = (a.get(i, j) + a.get(j, i)) / 2.0;
            s.set(i, j, avg);
            s.set(j, i, avg);
        }
    }
    s
}

/// The snapshot data matrix: one column per week, each column the
/// column-major vectorization of the symmetrized weekly O-D matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    k: usize,
    matrix: RealMatrix,
    week_labels: Vec<NaiveDate>,
    place_index: PlaceIndex,
}

impl SnapshotMatrix {
    /// Reassembles a snapshot matrix from stored parts, revalidating the
    /// shape and per-column symmetry invariants.
    pub fn from_parts(
        matrix: RealMatrix,
        week_labels: Vec<NaiveDate>,
        place_index: PlaceIndex,
    ) -> Result<Self, IngestError> {
        let k = place_index.len();
        if matrix.rows() != k * k {
            return Err(IngestError::ShapeMismatch(format!(
                "expected {} rows for k={}, got {}",
                k * k,
                k,
                matrix.rows()
            )));
        }
        if week_labels.len() != matrix.cols() {
            return Err(IngestError::ShapeMismatch(format!(
                "{} week labels for {} columns",
                week_labels.len(),
                matrix.cols()
            )));
        }
        for pair in week_labels.windows(2) {
            if pair[1] <= pair[0] {
                return Err(IngestError::OutOfOrderWeeks(pair[1]));
            }
        }
        for w in 0..matrix.cols() {
            let col = matrix.column(w);
            for i in 0..k {
                for j in (i + 1)..k {
                    if col[j * k + i] != col[i * k + j] {
                        return Err(IngestError::ShapeMismatch(format!(
                            "column {} is not symmetric at ({}, {})",
                            w, i, j
                        )));
                    }
                }
            }
        }
        Ok(Self { k, matrix, week_labels, place_index })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of weeks (columns).
    pub fn num_weeks(&self) -> usize {
        self.matrix.cols()
    }

    /// State dimension k^2.
    pub fn state_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn week_labels(&self) -> &[NaiveDate] {
        &self.week_labels
    }

    pub fn place_index(&self) -> &PlaceIndex {
        &self.place_index
    }

    /// Column for week `w` (zero-based).
    pub fn column(&self, w: usize) -> &[f64] {
        self.matrix.column(w)
    }

    /// Sub-matrix over the inclusive one-based week range `first..=last`.
    pub fn sub_weeks(&self, first: usize, last: usize) -> Result<SnapshotMatrix, IngestError> {
        if first == 0 || first > last || last > self.num_weeks() {
            return Err(IngestError::ShapeMismatch(format!(
                "week range {}:{} invalid for {} weeks",
                first,
                last,
                self.num_weeks()
            )));
        }
        Ok(SnapshotMatrix {
            k: self.k,
            matrix: self.matrix.columns_range(first - 1, last),
            week_labels: self.week_labels[first - 1..last].to_vec(),
            place_index: self.place_index.clone(),
        })
    }

    /// Symmetrized flow series for a place pair, one value per week.
    pub fn pair_series(&self, origin: usize, dest: usize) -> Vec<f64> {
        assert!(origin < self.k && dest < self.k, "place index out of range");
        let flat = dest * self.k + origin;
        (0..self.num_weeks()).map(|w| self.column(w)[flat]).collect()
    }

    /// Total symmetrized flow per week.
    pub fn weekly_totals(&self) -> Vec<f64> {
        (0..self.num_weeks()).map(|w| self.column(w).iter().sum()).collect()
    }
}

/// Vectorizes symmetrized weekly matrices into the snapshot data matrix.
/// `weeks[t]` is the raw (directed) O-D matrix; symmetrization happens
/// here. `labels` must be strictly increasing.
pub fn build_snapshot_matrix(
    weeks: &[OdMatrix],
    labels: &[NaiveDate],
    place_index: PlaceIndex,
) -> Result<SnapshotMatrix, IngestError> {
    if weeks.is_empty() {
        return Err(IngestError::Empty);
    }
    if weeks.len() != labels.len() {
        return Err(IngestError::ShapeMismatch(format!(
            "{} weeks but {} labels",
            weeks.len(),
            labels.len()
        )));
    }
    let k = place_index.len();
    for week in weeks {
        if week.k() != k {
            return Err(IngestError::ShapeMismatch(format!(
                "week {} has k={}, index has k={}",
                week.week_index,
                week.k(),
                k
            )));
        }
    }
    for pair in labels.windows(2) {
        if pair[1] <= pair[0] {
            return Err(IngestError::OutOfOrderWeeks(pair[1]));
        }
    }

    let mut data = Vec::with_capacity(k * k * weeks.len());
    for week in weeks {
        data.extend_from_slice(symmetrize(week).entries());
    }
    let matrix = RealMatrix::from_column_major(k * k, weeks.len(), data);
    Ok(SnapshotMatrix { k, matrix, week_labels: labels.to_vec(), place_index })
}

/// One-shot pipeline from raw records to the snapshot matrix: derive the
/// place index, group records by week start, build and symmetrize each
/// weekly matrix, and vectorize.
pub fn snapshot_from_records(records: &[FlowRecord]) -> Result<SnapshotMatrix, IngestError> {
    if records.is_empty() {
        return Err(IngestError::Empty);
    }
    let index = PlaceIndex::from_records(records);
    let mut by_week: BTreeMap<NaiveDate, Vec<&FlowRecord>> = BTreeMap::new();
    for record in records {
        by_week.entry(record.week_start).or_default().push(record);
    }
    let mut weeks = Vec::with_capacity(by_week.len());
    let mut labels = Vec::with_capacity(by_week.len());
    for (week_index, (label, group)) in by_week.iter().enumerate() {
        let mut matrix = OdMatrix::zeros(week_index, index.len());
        for record in group {
            let origin = index
                .index_of(&record.origin_id)
                .ok_or_else(|| IngestError::UnknownPlace(record.origin_id.clone()))?;
            let dest = index
                .index_of(&record.dest_id)
                .ok_or_else(|| IngestError::UnknownPlace(record.dest_id.clone()))?;
            matrix.add(origin, dest, record.visitor_flow);
        }
        weeks.push(matrix);
        labels.push(*label);
    }
    build_snapshot_matrix(&weeks, &labels, index)
}
