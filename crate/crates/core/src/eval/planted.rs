//! Linear system with a known (planted) spectrum, used as an independent
//! oracle for the DMD engine: the fitted eigenvalues must reproduce the
//! planted ones on data this generator emits.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EvalError;
use crate::linalg::RealMatrix;

/// Real canonical block: a real eigenvalue, or a conjugate pair realized
/// as a 2x2 rotation-scaling block so generated data stays exactly real.
#[derive(Debug, Clone, PartialEq)]
enum Block {
    Real(f64),
    Pair { re: f64, im: f64 },
}

impl Block {
    fn width(&self) -> usize {
        match self {
            Block::Real(_) => 1,
            Block::Pair { .. } => 2,
        }
    }
}

/// Linear map x_{t+1} = B D B^T x_t with a planted conjugate-closed
/// spectrum D and a random orthonormal basis B drawn from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSystem {
    n: usize,
    spectrum: Vec<Complex64>,
    blocks: Vec<Block>,
    basis: RealMatrix,
    seed: u64,
}

/// Generated snapshots plus the indices of planted modes the initial
/// state failed to excite (those are unrecoverable from the data).
#[derive(Debug, Clone)]
pub struct PlantedData {
    pub snapshots: RealMatrix,
    pub unexcited_modes: Vec<usize>,
}

impl PlantedSystem {
    /// Builds the system. The spectrum must be closed under conjugation;
    /// it is reordered so conjugate pairs are adjacent (positive
    /// imaginary part first), matching the block layout.
    pub fn new(n: usize, spectrum: &[Complex64], seed: u64) -> Result<Self, EvalError> {
        let q = spectrum.len();
        if q == 0 || q > n {
            return Err(EvalError::BadPlantedShape { q, n });
        }
        let (canonical, blocks) = canonical_blocks(spectrum)?;
        let raw = random_gaussian(n, q, seed);
        let basis = orthonormalize(raw);
        Ok(Self { n, spectrum: canonical, blocks, basis, seed })
    }

    /// Like [`PlantedSystem::new`] but over k x k symmetric states: every
    /// basis column is the vectorization of a symmetric matrix, so the
    /// generated snapshots are valid (exactly symmetric) flow snapshots
    /// with n = k^2.
    pub fn new_symmetric(k: usize, spectrum: &[Complex64], seed: u64) -> Result<Self, EvalError> {
        let n = k * k;
        let q = spectrum.len();
        let sym_dim = k * (k + 1) / 2;
        if q == 0 || q > sym_dim {
            return Err(EvalError::BadPlantedShape { q, n });
        }
        let (canonical, blocks) = canonical_blocks(spectrum)?;
        // Symmetrized Gaussian draws stay exactly symmetric through
        // Gram-Schmidt: entries (i,j) and (j,i) see identical arithmetic.
        let mut raw = random_gaussian(n, q, seed);
        for col in 0..q {
            for i in 0..k {
                for j in (i + 1)..k {
                    let avg = (raw[(j * k + i, col)] + raw[(i * k + j, col)]) / 2.0;
                    raw[(j * k + i, col)] = avg;
                    raw[(i * k + j, col)] = avg;
                }
            }
        }
        let basis = orthonormalize(raw);
        Ok(Self { n, spectrum: canonical, blocks, basis, seed })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    /// Planted rank (number of eigenvalues).
    pub fn q(&self) -> usize {
        self.spectrum.len()
    }

    /// Spectrum in canonical order: pairs adjacent, +imaginary first.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn basis(&self) -> &RealMatrix {
        &self.basis
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An initial state with equal weight on every planted direction.
    pub fn excite_all(&self) -> Vec<f64> {
        self.basis.matvec(&vec![1.0; self.q()])
    }

    /// Snapshots of x_{t+1} = B D B^T x_t starting from `x0`. Column 0 is
    /// `x0` itself; any component of `x0` outside span(B) dies after one
    /// step (the map annihilates it).
    pub fn generate(&self, num_snapshots: usize, x0: &[f64]) -> Result<PlantedData, EvalError> {
        if num_snapshots < 2 {
            return Err(EvalError::TooFewSnapshots(num_snapshots));
        }
        if x0.len() != self.n {
            return Err(EvalError::BadInitialState { got: x0.len(), expected: self.n });
        }

        let q = self.q();
        // Coordinates of x0 in the planted basis.
        let mut z: Vec<f64> = (0..q)
            .map(|j| self.basis.column(j).iter().zip(x0).map(|(b, x)| b * x).sum())
            .collect();

        let x0_norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut unexcited_modes = Vec::new();
        let mut offset = 0;
        let mut mode_index = 0;
        for block in &self.blocks {
            let energy = match block {
                Block::Real(_) => z[offset].abs(),
                Block::Pair { .. } => (z[offset].powi(2) + z[offset + 1].powi(2)).sqrt(),
            };
            if energy <= 1e-12 * x0_norm.max(1e-300) {
                for k in 0..block.width() {
                    unexcited_modes.push(mode_index + k);
                }
            }
            offset += block.width();
            mode_index += block.width();
        }

        let mut snapshots = RealMatrix::zeros(self.n, num_snapshots);
        snapshots.column_mut(0).copy_from_slice(x0);
        for t in 1..num_snapshots {
            let mut offset = 0;
            for block in &self.blocks {
                match *block {
                    Block::Real(value) => {
                        z[offset] *= value;
                        offset += 1;
                    }
                    Block::Pair { re, im } => {
                        let (a, b) = (z[offset], z[offset + 1]);
                        z[offset] = re * a + im * b;
                        z[offset + 1] = -im * a + re * b;
                        offset += 2;
                    }
                }
            }
            let column = self.basis.matvec(&z);
            snapshots.column_mut(t).copy_from_slice(&column);
        }
        Ok(PlantedData { snapshots, unexcited_modes })
    }
}

/// Groups a conjugate-closed spectrum into real canonical blocks,
/// returning the spectrum reordered to match the blocks.
fn canonical_blocks(spectrum: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Block>), EvalError> {
    let mut blocks = Vec::new();
    let mut canonical = Vec::with_capacity(spectrum.len());
    let mut remaining: Vec<Complex64> = spectrum.to_vec();
    while let Some(value) = remaining.first().copied() {
        remaining.remove(0);
        let scale = 1.0 + value.norm();
        if value.im.abs() <= 1e-14 * scale {
            blocks.push(Block::Real(value.re));
            canonical.push(Complex64::new(value.re, 0.0));
        } else {
            let partner = Complex64::new(value.re, -value.im);
            let found = remaining
                .iter()
                .position(|c| (c - partner).norm() <= 1e-12 * scale)
                .ok_or_else(|| EvalError::NotConjugateClosed(value.to_string()))?;
            remaining.remove(found);
            let im = value.im.abs();
            blocks.push(Block::Pair { re: value.re, im });
            canonical.push(Complex64::new(value.re, im));
            canonical.push(Complex64::new(value.re, -im));
        }
    }
    Ok((canonical, blocks))
}

fn random_gaussian(n: usize, q: usize, seed: u64) -> RealMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = RealMatrix::zeros(n, q);
    for j in 0..q {
        for i in 0..n {
            raw[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    raw
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
fn orthonormalize(mut basis: RealMatrix) -> RealMatrix {
    let (n, q) = (basis.rows(), basis.cols());
    for j in 0..q {
        for _pass in 0..2 {
            for prev in 0..j {
                let dot: f64 =
                    basis.column(j).iter().zip(basis.column(prev)).map(|(a, b)| a * b).sum();
                for i in 0..n {
                    let correction = dot * basis[(i, prev)];
                    basis[(i, j)] -= correction;
                }
            }
        }
        let norm: f64 = basis.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        for value in basis.column_mut(j) {
            *value /= norm;
        }
    }
    basis
}
