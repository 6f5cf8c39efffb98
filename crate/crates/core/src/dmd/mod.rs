//! Exact DMD: fit a low-rank linear propagator from snapshot pairs and
//! evaluate the modal forecast x(t) = modes * exp(diag(omega) t) * b.

mod persist;

pub use persist::{
    read_model, read_model_file, write_model, write_model_file, PersistError,
    MODEL_FORMAT_VERSION, MODEL_MAGIC,
};

use chrono::NaiveDate;
use num_complex::Complex64;
use thiserror::Error;

use crate::ingest::SnapshotMatrix;
use crate::linalg::{eig_dense, least_squares, reduced_svd, ComplexMatrix, LinalgError, RealMatrix};

/// Discrete eigenvalues at or below this magnitude have no continuous-time
/// counterpart and are dropped from the model.
pub const MODE_DROP_TOLERANCE: f64 = 1e-12;

/// exp() overflows past this exponent; predict reports the offending mode
/// instead of producing infinities.
const EXP_OVERFLOW_LIMIT: f64 = 709.0;

#[derive(Debug, Error)]
pub enum DmdError {
    #[error("need at least 2 snapshots to fit, got {0}")]
    InsufficientData(usize),
    #[error("target rank {requested} out of range 1..={max}")]
    RankOutOfRange { requested: usize, max: usize },
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("snapshot data is degenerate: {0}")]
    DegenerateData(String),
    #[error("time offset must be finite")]
    NonFiniteTime,
    #[error("time offset must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("forecast horizon must be >= 1")]
    EmptyHorizon,
    #[error("mode {mode} overflows: exp({exponent:.3e}) exceeds floating-point range")]
    Overflow { mode: usize, exponent: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Fitted DMD model.
///
/// Modes are ordered by decreasing eigenvalue magnitude (ties broken by
/// real then imaginary part, descending), so conjugate pairs sit next to
/// each other with the positive-imaginary member first.
#[derive(Debug, Clone, PartialEq)]
pub struct DmdModel {
    n: usize,
    rank: usize,
    requested_rank: usize,
    svd_rank: usize,
    modes: ComplexMatrix,
    discrete_eigs: Vec<Complex64>,
    cont_eigs: Vec<Complex64>,
    amplitudes: Vec<Complex64>,
    dt: f64,
    t0_label: NaiveDate,
}

/// Forecast for a single time offset, with the imaginary-residual
/// diagnostic of the complex mode sum.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub state: Vec<f64>,
    pub max_imag_abs: f64,
    pub max_real_abs: f64,
}

impl Prediction {
    /// max |Im| / max |Re|; ~0 for conjugate-consistent models.
    pub fn imag_ratio(&self) -> f64 {
        if self.max_real_abs == 0.0 {
            self.max_imag_abs
        } else {
            self.max_imag_abs / self.max_real_abs
        }
    }
}

/// Singular values of the shifted-out data matrix (all columns but the
/// last), in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub singular_values: Vec<f64>,
    pub first_week: NaiveDate,
    pub last_week: NaiveDate,
    pub num_snapshots: usize,
}

impl DmdModel {
    /// Fits an exact DMD model of the requested rank.
    ///
    /// The snapshot columns are split into x (columns 1..m-1) and
    /// x' (columns 2..m); the reduced SVD of x is truncated to the
    /// requested rank (silently reduced to the effective rank when the
    /// data is rank-deficient; compare [`DmdModel::was_truncated`]),
    /// the reduced operator u^T x' v sigma^-1 is eigendecomposed, and
    /// modes are lifted by x' v sigma^-1 w. Amplitudes solve the
    /// least-squares fit of the first snapshot.
    pub fn fit(snapshots: &SnapshotMatrix, target_rank: usize, dt: f64) -> Result<Self, DmdError> {
        Self::fit_matrix(snapshots.matrix(), snapshots.week_labels()[0], target_rank, dt)
    }

    /// [`DmdModel::fit`] on a raw state matrix (one snapshot per column)
    /// with an explicit date for the first column.
    pub fn fit_matrix(
        data: &RealMatrix,
        t0_label: NaiveDate,
        target_rank: usize,
        dt: f64,
    ) -> Result<Self, DmdError> {
        let m = data.cols();
        if m < 2 {
            return Err(DmdError::InsufficientData(m));
        }
        let n = data.rows();
        let max_rank = n.min(m - 1);
        if target_rank == 0 || target_rank > max_rank {
            return Err(DmdError::RankOutOfRange { requested: target_rank, max: max_rank });
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(DmdError::BadTimeStep(dt));
        }

        let x = data.columns_range(0, m - 1);
        let x_next = data.columns_range(1, m);

        let svd = reduced_svd(&x, target_rank)?;
        if svd.effective_rank == 0 {
            return Err(DmdError::DegenerateData("all singular values are zero".to_string()));
        }
        let svd_rank = target_rank.min(svd.effective_rank);

        let u = svd.u.columns_range(0, svd_rank);
        let v = svd.v.columns_range(0, svd_rank);
        let inv_sigma: Vec<f64> = svd.sigma[..svd_rank].iter().map(|s| 1.0 / s).collect();

        // x' v sigma^-1: shared by the reduced operator and the mode lift.
        let mut lifted = x_next.matmul(&v);
        lifted.scale_columns(&inv_sigma);
        let reduced_op = u.tr_matmul(&lifted);

        let (eigvals, eigvecs) = eig_dense(&reduced_op)?;
        let modes_all = lifted.matmul_complex(&eigvecs);

        let mut keep: Vec<usize> =
            (0..svd_rank).filter(|&i| eigvals[i].norm() > MODE_DROP_TOLERANCE).collect();
        if keep.is_empty() {
            return Err(DmdError::DegenerateData(
                "every eigenvalue is numerically zero".to_string(),
            ));
        }
        keep.sort_by(|&a, &b| {
            eigvals[b]
                .norm()
                .total_cmp(&eigvals[a].norm())
                .then(eigvals[b].re.total_cmp(&eigvals[a].re))
                .then(eigvals[b].im.total_cmp(&eigvals[a].im))
        });

        let discrete_eigs: Vec<Complex64> = keep.iter().map(|&i| eigvals[i]).collect();
        let modes = modes_all.select_columns(&keep);
        let cont_eigs: Vec<Complex64> =
            discrete_eigs.iter().map(|lambda| lambda.ln() / dt).collect();

        let first_snapshot: Vec<Complex64> =
            x.column(0).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let amplitudes = least_squares(&modes, &first_snapshot)?;

        Ok(Self {
            n,
            rank: keep.len(),
            requested_rank: target_rank,
            svd_rank,
            modes,
            discrete_eigs,
            cont_eigs,
            amplitudes,
            dt,
            t0_label,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    /// Retained mode count after dropping numerically zero eigenvalues.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn requested_rank(&self) -> usize {
        self.requested_rank
    }

    /// Rank actually used for the SVD truncation.
    pub fn svd_rank(&self) -> usize {
        self.svd_rank
    }

    /// True when the requested rank exceeded the effective rank of the
    /// training data and was silently reduced.
    pub fn was_truncated(&self) -> bool {
        self.svd_rank < self.requested_rank
    }

    /// Modes dropped for having |lambda| <= the drop tolerance.
    pub fn dropped_modes(&self) -> usize {
        self.svd_rank - self.rank
    }

    pub fn modes(&self) -> &ComplexMatrix {
        &self.modes
    }

    pub fn discrete_eigs(&self) -> &[Complex64] {
        &self.discrete_eigs
    }

    pub fn cont_eigs(&self) -> &[Complex64] {
        &self.cont_eigs
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Calendar date of the first training snapshot (t = 0).
    pub fn t0_label(&self) -> NaiveDate {
        self.t0_label
    }

    pub fn spectral_radius(&self) -> f64 {
        self.discrete_eigs.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    /// Forecast at `t` weeks past the first training snapshot.
    ///
    /// Returns the real part of the mode sum; the imaginary part is
    /// surfaced as a diagnostic. Output is not clamped to nonnegative
    /// values.
    pub fn predict(&self, t: f64) -> Result<Prediction, DmdError> {
        if !t.is_finite() {
            return Err(DmdError::NonFiniteTime);
        }
        if t < 0.0 {
            return Err(DmdError::NegativeTime(t));
        }
        let mut weights = Vec::with_capacity(self.rank);
        for (k, (omega, amp)) in self.cont_eigs.iter().zip(&self.amplitudes).enumerate() {
            let exponent = omega.re * t;
            if exponent > EXP_OVERFLOW_LIMIT {
                return Err(DmdError::Overflow { mode: k, exponent });
            }
            weights.push((omega * t).exp() * amp);
        }
        let combined = self.modes.matvec(&weights);
        let mut state = Vec::with_capacity(self.n);
        let mut max_imag_abs: f64 = 0.0;
        let mut max_real_abs: f64 = 0.0;
        for value in combined {
            max_imag_abs = max_imag_abs.max(value.im.abs());
            max_real_abs = max_real_abs.max(value.re.abs());
            state.push(value.re);
        }
        Ok(Prediction { state, max_imag_abs, max_real_abs })
    }

    /// Batch forecast over t = 0, dt, ..., (num_weeks-1) dt, one column
    /// per step.
    pub fn reconstruct(&self, num_weeks: usize) -> Result<RealMatrix, DmdError> {
        if num_weeks == 0 {
            return Err(DmdError::EmptyHorizon);
        }
        let mut out = RealMatrix::zeros(self.n, num_weeks);
        for j in 0..num_weeks {
            let prediction = self.predict(j as f64 * self.dt)?;
            out.column_mut(j).copy_from_slice(&prediction.state);
        }
        Ok(out)
    }
}

/// Singular-value spectrum of the shifted-out data matrix x
/// (snapshot columns 1..m-1), full list in decreasing order.
pub fn spectrum(snapshots: &SnapshotMatrix) -> Result<SpectrumReport, DmdError> {
    let m = snapshots.num_weeks();
    if m < 2 {
        return Err(DmdError::InsufficientData(m));
    }
    let x = snapshots.matrix().columns_range(0, m - 1);
    let full = x.rows().min(x.cols());
    let svd = reduced_svd(&x, full)?;
    Ok(SpectrumReport {
        singular_values: svd.sigma,
        first_week: snapshots.week_labels()[0],
        last_week: snapshots.week_labels()[m - 1],
        num_snapshots: m,
    })
}
