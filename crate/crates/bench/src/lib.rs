//! Shared fixtures for the pipeline benchmarks: synthetic snapshot
//! series at the weekly state-scale problem size.

use chrono::NaiveDate;
use flowdmd_core::eval::PlantedSystem;
use flowdmd_core::ingest::{PlaceIndex, SnapshotMatrix};
use flowdmd_core::linalg::RealMatrix;
use num_complex::Complex64;

/// Planted 52-place snapshot series (n = 2704) over `weeks` weeks.
pub fn state_scale_snapshots(weeks: usize) -> SnapshotMatrix {
    let mut spectrum = vec![Complex64::new(0.995, 0.0), Complex64::new(0.9, 0.0)];
    for (radius, angle) in [(0.98, 0.12), (0.95, 0.45), (0.9, 0.9), (0.85, 1.7)] {
        let pair = Complex64::from_polar(radius, angle);
        spectrum.push(pair);
        spectrum.push(pair.conj());
    }
    let system = PlantedSystem::new_symmetric(52, &spectrum, 0xbe7c4).unwrap();
    let data = system.generate(weeks, &system.excite_all()).unwrap();
    let start = NaiveDate::from_ymd_opt(2019, 1, 7).unwrap();
    let labels: Vec<NaiveDate> =
        (0..weeks).map(|w| start + chrono::Days::new(7 * w as u64)).collect();
    let ids: Vec<String> = (1..=52).map(|i| format!("{i:02}")).collect();
    SnapshotMatrix::from_parts(data.snapshots, labels, PlaceIndex::from_ids(ids)).unwrap()
}

/// Dense pseudo-random square matrix for the eigensolver benchmark.
pub fn dense_square(n: usize, seed: u64) -> RealMatrix {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let data: Vec<f64> = (0..n * n).map(|_| next()).collect();
    RealMatrix::from_column_major(n, n, data)
}
