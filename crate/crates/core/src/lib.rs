//! Modeling and forecasting of weekly origin-destination flow series.
//!
//! The pipeline: parse weekly O-D flow records, assemble symmetrized
//! snapshot matrices, fit rank-truncated DMD models from snapshot pairs,
//! forecast forward in time, and score forecasts against held-out weeks.
//!
//! - [`ingest`]: CSV parsing, O-D matrix assembly, symmetrization, and
//!   vectorization into the snapshot data matrix.
//! - [`dmd`]: exact DMD fitting, modal forecasting, singular-value
//!   spectra, and model persistence.
//! - [`eval`]: train/test splits, relative error metrics, error tables,
//!   and a planted-spectrum linear system for verification.
//! - [`linalg`]: the dense kernels underneath (reduced SVD, small real
//!   eigendecomposition, complex least squares).
//! - [`formats`]: the text file formats shared with the CLI.

pub mod dmd;
pub mod eval;
pub mod formats;
pub mod ingest;
pub mod linalg;

pub use dmd::{spectrum, DmdError, DmdModel, Prediction, SpectrumReport};
pub use eval::{
    evaluate_model, evaluate_split, relative_l2_error, relative_linf_error, ErrorReport,
    ErrorRow, EvalError, PlantedData, PlantedSystem, SplitSpec,
};
pub use ingest::{
    build_od_matrix, build_snapshot_matrix, infer_pop_flow, parse_flow_csv, snapshot_from_records,
    symmetrize, ColumnMap, FlowRecord, IngestError, OdMatrix, PlaceIndex, SnapshotMatrix,
};
pub use linalg::{ComplexMatrix, LinalgError, RealMatrix, SvdFactors};
