use nalgebra::DMatrix;

use super::{LinalgError, RealMatrix, SvdFactors, RANK_CUTOFF};

const SVD_MAX_SWEEPS: usize = 1024;

/// Reduced SVD truncated to the leading `max_rank` singular triplets.
///
/// Column signs are canonicalized so that the largest-magnitude entry of
/// each left singular vector is positive, making results deterministic
/// across runs.
pub fn reduced_svd(x: &RealMatrix, max_rank: usize) -> Result<SvdFactors, LinalgError> {
    if !x.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let min_dim = x.rows().min(x.cols());
    if max_rank == 0 || max_rank > min_dim {
        return Err(LinalgError::RankOutOfRange { requested: max_rank, max: min_dim });
    }

    let m = DMatrix::from_column_slice(x.rows(), x.cols(), x.data());
    let svd = m
        .try_svd(true, true, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(LinalgError::NonConvergence { residual: f64::NAN })?;
    let u_full = svd.u.expect("u requested");
    let vt_full = svd.v_t.expect("v_t requested");
    let values = svd.singular_values;

    // Order triplets by decreasing singular value regardless of what the
    // backend returns.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut u = RealMatrix::zeros(x.rows(), max_rank);
    let mut v = RealMatrix::zeros(x.cols(), max_rank);
    let mut sigma = Vec::with_capacity(max_rank);
    for (dst, &src) in order.iter().take(max_rank).enumerate() {
        sigma.push(values[src]);
        for i in 0..x.rows() {
            u[(i, dst)] = u_full[(i, src)];
        }
        for i in 0..x.cols() {
            v[(i, dst)] = vt_full[(src, i)];
        }
    }

    for j in 0..max_rank {
        canonicalize_pair(&mut u, &mut v, j);
    }

    let cutoff = RANK_CUTOFF * sigma[0];
    let effective_rank = sigma.iter().filter(|&&s| s > cutoff).count();

    Ok(SvdFactors { u, sigma, v, effective_rank })
}

/// Flips the sign of u[:,j] and v[:,j] so the largest-magnitude entry of
/// u[:,j] (first on ties) is nonnegative.
fn canonicalize_pair(u: &mut RealMatrix, v: &mut RealMatrix, j: usize) {
    let col = u.column(j);
    let mut pivot = 0;
    let mut best = col[0].abs();
    for (i, &val) in col.iter().enumerate().skip(1) {
        if val.abs() > best {
            best = val.abs();
            pivot = i;
        }
    }
    if col[pivot] < 0.0 {
        for val in u.column_mut(j) {
            *val = -*val;
        }
        for val in v.column_mut(j) {
            *val = -*val;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: singular values via cyclic Jacobi eigenvalue
    /// iteration on the Gram matrix x^T x. Shares no code with the
    /// nalgebra-backed path above.
    fn gram_jacobi_singular_values(x: &RealMatrix) -> Vec<f64> {
        let c = x.cols();
        let mut g = vec![0.0; c * c];
        for i in 0..c {
            for j in 0..c {
                g[i * c + j] = x
                    .column(i)
                    .iter()
                    .zip(x.column(j))
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..c {
                for q in (p + 1)..c {
                    off = f64::max(off, g[p * c + q].abs());
                }
            }
            if off < 1e-300 || off < 1e-15 * (0..c).map(|i| g[i * c + i].abs()).fold(0.0, f64::max)
            {
                break;
            }
            for p in 0..c {
                for q in (p + 1)..c {
                    let apq = g[p * c + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (g[q * c + q] - g[p * c + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                    let cos = 1.0 / (1.0 + t * t).sqrt();
                    let sin = cos * t;
                    for k in 0..c {
                        let gkp = g[k * c + p];
                        let gkq = g[k * c + q];
                        g[k * c + p] = cos * gkp - sin * gkq;
                        g[k * c + q] = sin * gkp + cos * gkq;
                    }
                    for k in 0..c {
                        let gpk = g[p * c + k];
                        let gqk = g[q * c + k];
                        g[p * c + k] = cos * gpk - sin * gqk;
                        g[q * c + k] = sin * gpk + cos * gqk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..c).map(|i| g[i * c + i].max(0.0).sqrt()).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// Deterministic pseudo-random entries for fixtures.
    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> RealMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
        RealMatrix::from_column_major(rows, cols, data)
    }

    #[test]
    fn identity_case() {
        let x = RealMatrix::identity(2);
        let f = reduced_svd(&x, 2).unwrap();
        assert_relative_eq!(f.sigma[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.sigma[1], 1.0, max_relative = 1e-12);
        assert_eq!(f.effective_rank, 2);
        // Up to sign; canonicalization makes the pivots positive.
        for j in 0..2 {
            for i in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(f.u[(i, j)].abs(), expect, epsilon = 1e-12);
                assert_relative_eq!(f.v[(i, j)].abs(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_diagonal() {
        let x = RealMatrix::from_row_major(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let f = reduced_svd(&x, 2).unwrap();
        assert_relative_eq!(f.sigma[0], 3.0, max_relative = 1e-12);
        assert!(f.sigma[1].abs() <= 1e-12 * 3.0);
        assert_eq!(f.effective_rank, 1);
    }

    #[test]
    fn random_matrix_matches_gram_jacobi_oracle() {
        let x = lcg_matrix(6, 4, 0x5eed);
        let f = reduced_svd(&x, 4).unwrap();
        let oracle = gram_jacobi_singular_values(&x);
        for (got, want) in f.sigma.iter().zip(&oracle) {
            assert_relative_eq!(got, want, epsilon = 1e-10 * oracle[0].max(1.0));
        }
    }

    #[test]
    fn truncation_is_best_low_rank_approximation() {
        // Eckart-Young: || x - u s v^T ||_F^2 equals the sum of the squared
        // discarded singular values.
        let x = lcg_matrix(8, 5, 0xfeed);
        let all = gram_jacobi_singular_values(&x);
        for rank in 1..=4usize {
            let f = reduced_svd(&x, rank).unwrap();
            let mut us = f.u.clone();
            us.scale_columns(&f.sigma);
            let approx_x = us.matmul(&f.v.transpose());
            let mut err2 = 0.0;
            for j in 0..x.cols() {
                for i in 0..x.rows() {
                    let d = x[(i, j)] - approx_x[(i, j)];
                    err2 += d * d;
                }
            }
            let tail2: f64 = all[rank..].iter().map(|s| s * s).sum();
            assert_relative_eq!(err2, tail2, epsilon = 1e-9 * all[0] * all[0]);
        }
    }

    #[test]
    fn orthonormal_factors() {
        let x = lcg_matrix(7, 5, 42);
        let f = reduced_svd(&x, 5).unwrap();
        let utu = f.u.tr_matmul(&f.u);
        let vtv = f.v.tr_matmul(&f.v);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((utu[(i, j)] - expect).abs() < 1e-10);
                assert!((vtv[(i, j)] - expect).abs() < 1e-10);
            }
        }
        for w in f.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let x = RealMatrix::identity(3);
        assert!(matches!(reduced_svd(&x, 0), Err(LinalgError::RankOutOfRange { .. })));
        assert!(matches!(reduced_svd(&x, 4), Err(LinalgError::RankOutOfRange { .. })));
        let mut bad = RealMatrix::identity(2);
        bad[(0, 0)] = f64::NAN;
        assert!(matches!(reduced_svd(&bad, 1), Err(LinalgError::NonFinite)));
    }

    #[test]
    fn deterministic_across_calls() {
        let x = lcg_matrix(9, 6, 7);
        let a = reduced_svd(&x, 4).unwrap();
        let b = reduced_svd(&x, 4).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
        assert_eq!(a.sigma, b.sigma);
    }
}
