//! Train/test splitting by week ranges, relative forecast error metrics,
//! error-table generation, and the planted linear system used to verify
//! the engine against a known spectrum.

mod planted;

pub use planted::{PlantedData, PlantedSystem};

use chrono::NaiveDate;
use thiserror::Error;

use crate::dmd::{DmdError, DmdModel};
use crate::ingest::SnapshotMatrix;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("week range {first}:{last} is empty or inverted")]
    EmptyRange { first: usize, last: usize },
    #[error("train range must precede the test range without overlap")]
    RangesOverlap,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("truth vector has zero norm")]
    ZeroTruthNorm,
    #[error("test weeks {missing:?} not present (have {available} weeks)")]
    MissingTestWeeks { missing: Vec<usize>, available: usize },
    #[error("spectrum is not closed under conjugation: {0} has no partner")]
    NotConjugateClosed(String),
    #[error("planted system needs 1 <= q <= n, got q={q}, n={n}")]
    BadPlantedShape { q: usize, n: usize },
    #[error("initial state has wrong length: {got}, expected {expected}")]
    BadInitialState { got: usize, expected: usize },
    #[error("need at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error(transparent)]
    Dmd(#[from] DmdError),
    #[error("ingest error: {0}")]
    Ingest(#[from] crate::ingest::IngestError),
}

/// Inclusive one-based week ranges for training and testing. The train
/// range must end before the test range begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    train: (usize, usize),
    test: (usize, usize),
}

impl SplitSpec {
    pub fn new(train: (usize, usize), test: (usize, usize)) -> Result<Self, EvalError> {
        for (first, last) in [train, test] {
            if first == 0 || first > last {
                return Err(EvalError::EmptyRange { first, last });
            }
        }
        if train.1 >= test.0 {
            return Err(EvalError::RangesOverlap);
        }
        Ok(Self { train, test })
    }

    pub fn train_start(&self) -> usize {
        self.train.0
    }

    pub fn train_end(&self) -> usize {
        self.train.1
    }

    pub fn test_start(&self) -> usize {
        self.test.0
    }

    pub fn test_end(&self) -> usize {
        self.test.1
    }
}

/// Relative L2 error ||truth - pred||_2 / ||truth||_2 over the full
/// vectorized flow state.
pub fn relative_l2_error(truth: &[f64], pred: &[f64]) -> Result<f64, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    let norm: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(EvalError::ZeroTruthNorm);
    }
    let diff: f64 = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Relative max-abs error max|truth - pred| / max|truth|.
pub fn relative_linf_error(truth: &[f64], pred: &[f64]) -> Result<f64, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    let norm = truth.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 {
        return Err(EvalError::ZeroTruthNorm);
    }
    let diff = truth
        .iter()
        .zip(pred)
        .fold(0.0f64, |acc, (t, p)| acc.max((t - p).abs()));
    Ok(diff / norm)
}

/// One test-week row in the layout of the error tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub week_index: usize,
    pub week_label: NaiveDate,
    pub truth_norm: f64,
    pub pred_norm: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
}

/// Per-week forecast errors over a test range.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rank: usize,
    pub requested_rank: usize,
    pub rows: Vec<ErrorRow>,
}

/// Fits on the train range and scores every test week. Test week j is
/// forecast at t = (j - train_start) * dt, continuing the training clock.
pub fn evaluate_split(
    snapshots: &SnapshotMatrix,
    split: &SplitSpec,
    target_rank: usize,
    dt: f64,
) -> Result<ErrorReport, EvalError> {
    let available = snapshots.num_weeks();
    let missing: Vec<usize> = (split.test_start()..=split.test_end())
        .filter(|&w| w > available)
        .collect();
    if split.train_end() > available || !missing.is_empty() {
        return Err(EvalError::MissingTestWeeks { missing, available });
    }
    let train = snapshots.sub_weeks(split.train_start(), split.train_end())?;
    let model = DmdModel::fit(&train, target_rank, dt)?;

    let mut rows = Vec::with_capacity(split.test_end() - split.test_start() + 1);
    for week in split.test_start()..=split.test_end() {
        let t = (week - split.train_start()) as f64 * dt;
        let prediction = model.predict(t)?;
        rows.push(error_row(snapshots, week, &prediction.state)?);
    }
    Ok(ErrorReport { rank: model.rank(), requested_rank: model.requested_rank(), rows })
}

/// Scores an already-fitted model against truth snapshots over an
/// inclusive one-based test range. Time offsets are derived from the
/// calendar distance between each test week and the model's t0.
pub fn evaluate_model(
    model: &DmdModel,
    snapshots: &SnapshotMatrix,
    test: (usize, usize),
) -> Result<ErrorReport, EvalError> {
    let (first, last) = test;
    if first == 0 || first > last {
        return Err(EvalError::EmptyRange { first, last });
    }
    let available = snapshots.num_weeks();
    let missing: Vec<usize> = (first..=last).filter(|&w| w > available).collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingTestWeeks { missing, available });
    }

    let mut rows = Vec::with_capacity(last - first + 1);
    for week in first..=last {
        let label = snapshots.week_labels()[week - 1];
        let t = (label - model.t0_label()).num_days() as f64 / 7.0;
        let prediction = model.predict(t)?;
        rows.push(error_row(snapshots, week, &prediction.state)?);
    }
    Ok(ErrorReport { rank: model.rank(), requested_rank: model.requested_rank(), rows })
}

fn error_row(
    snapshots: &SnapshotMatrix,
    week: usize,
    pred: &[f64],
) -> Result<ErrorRow, EvalError> {
    let truth = snapshots.column(week - 1);
    Ok(ErrorRow {
        week_index: week,
        week_label: snapshots.week_labels()[week - 1],
        truth_norm: truth.iter().map(|v| v * v).sum::<f64>().sqrt(),
        pred_norm: pred.iter().map(|v| v * v).sum::<f64>().sqrt(),
        rel_l2: relative_l2_error(truth, pred)?,
        rel_linf: relative_linf_error(truth, pred)?,
    })
}
