//! SVD-based complex least squares.
//!
//! The pseudoinverse is built from a one-sided Jacobi SVD: complex plane
//! rotations are applied to column pairs until all pairs are mutually
//! orthogonal, which gives `a * V = U * diag(sigma)` directly.

use num_complex::Complex64;

use super::{norm2_complex, ComplexMatrix, LinalgError, RANK_CUTOFF};

const MAX_SWEEPS: usize = 64;

/// One-sided Jacobi SVD of a complex matrix with `rows >= cols`.
///
/// Returns `(u, sigma, v)` with `a = u * diag(sigma) * v^H`, sigma
/// nonincreasing. Columns of `u` belonging to zero singular values are
/// left as zero vectors.
pub fn jacobi_svd_complex(
    a: &ComplexMatrix,
) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix), LinalgError> {
    if a.rows() < a.cols() {
        return Err(LinalgError::BadArgument(format!(
            "jacobi svd requires rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let cols = a.cols();
    let mut g = a.clone();
    let mut v = ComplexMatrix::identity(cols);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let gpp: f64 = g.column(p).iter().map(|x| x.norm_sqr()).sum();
                let gqq: f64 = g.column(q).iter().map(|x| x.norm_sqr()).sum();
                let gpq: Complex64 =
                    g.column(p).iter().zip(g.column(q)).map(|(x, y)| x.conj() * y).sum();
                let mag = gpq.norm();
                if mag <= f64::EPSILON * (gpp * gqq).sqrt() || mag == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotation angle that orthogonalizes the column pair.
                let tau = (gqq - gpp) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = cos * t;
                let phase = gpq / mag;
                rotate_columns(&mut g, p, q, cos, sin, phase);
                rotate_columns(&mut v, p, q, cos, sin, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        // Residual diagnostic: largest remaining normalized column coupling.
        let mut worst: f64 = 0.0;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let np = norm2_complex(g.column(p));
                let nq = norm2_complex(g.column(q));
                if np > 0.0 && nq > 0.0 {
                    let gpq: Complex64 =
                        g.column(p).iter().zip(g.column(q)).map(|(x, y)| x.conj() * y).sum();
                    worst = worst.max(gpq.norm() / (np * nq));
                }
            }
        }
        return Err(LinalgError::NonConvergence { residual: worst });
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| norm2_complex(g.column(j))).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = ComplexMatrix::zeros(a.rows(), cols);
    let mut v_sorted = ComplexMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            for (out, val) in u.column_mut(dst).iter_mut().zip(g.column(src)) {
                *out = val / s;
            }
        }
        for (out, val) in v_sorted.column_mut(dst).iter_mut().zip(v.column(src)) {
            *out = *val;
        }
    }
    Ok((u, sigma, v_sorted))
}

/// Applies the complex Jacobi rotation to columns `p` and `q` in place.
fn rotate_columns(
    m: &mut ComplexMatrix,
    p: usize,
    q: usize,
    cos: f64,
    sin: f64,
    phase: Complex64,
) {
    let rows = m.rows();
    for i in 0..rows {
        let xp = m[(i, p)];
        let xq = m[(i, q)];
        m[(i, p)] = cos * xp - sin * phase.conj() * xq;
        m[(i, q)] = sin * phase * xp + cos * xq;
    }
}

/// Minimum-norm least-squares solution of `a * b ~ y` via the SVD
/// pseudoinverse, truncating singular values at `RANK_CUTOFF * sigma[0]`.
pub fn least_squares(a: &ComplexMatrix, y: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    if a.rows() < a.cols() {
        return Err(LinalgError::BadArgument(format!(
            "least squares requires rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if y.len() != a.rows() {
        return Err(LinalgError::BadArgument(format!(
            "rhs length {} does not match {} rows",
            y.len(),
            a.rows()
        )));
    }
    if !a.is_finite() || y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LinalgError::NonFinite);
    }

    let (u, sigma, v) = jacobi_svd_complex(a)?;
    let cutoff = RANK_CUTOFF * sigma[0];
    let mut b = vec![Complex64::ZERO; a.cols()];
    for (j, &s) in sigma.iter().enumerate() {
        if s > cutoff {
            let proj: Complex64 = u.column(j).iter().zip(y).map(|(x, w)| x.conj() * w).sum();
            let coeff = proj / s;
            for (out, val) in b.iter_mut().zip(v.column(j)) {
                *out += coeff * val;
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lcg_complex_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data: Vec<Complex64> =
            (0..rows * cols).map(|_| Complex64::new(next(), next())).collect();
        ComplexMatrix::from_column_major(rows, cols, data)
    }

    fn lcg_complex_vec(len: usize, seed: u64) -> Vec<Complex64> {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        (0..len).map(|_| Complex64::new(next(), next())).collect()
    }

    /// Direct normal-equations solve (a^H a) b = a^H y via Gaussian
    /// elimination with partial pivoting: the independent oracle.
    fn normal_equations_solve(a: &ComplexMatrix, y: &[Complex64]) -> Vec<Complex64> {
        let c = a.cols();
        let mut gram = vec![Complex64::ZERO; c * c];
        for i in 0..c {
            for j in 0..c {
                gram[i * c + j] =
                    a.column(i).iter().zip(a.column(j)).map(|(x, w)| x.conj() * w).sum();
            }
        }
        let mut rhs = a.herm_matvec(y);
        for col in 0..c {
            let piv = (col..c)
                .max_by(|&i, &j| gram[i * c + col].norm().total_cmp(&gram[j * c + col].norm()))
                .unwrap();
            if piv != col {
                for j in 0..c {
                    gram.swap(col * c + j, piv * c + j);
                }
                rhs.swap(col, piv);
            }
            let diag = gram[col * c + col];
            for i in (col + 1)..c {
                let f = gram[i * c + col] / diag;
                for j in col..c {
                    let v = gram[col * c + j];
                    gram[i * c + j] -= f * v;
                }
                let v = rhs[col];
                rhs[i] -= f * v;
            }
        }
        let mut x = vec![Complex64::ZERO; c];
        for i in (0..c).rev() {
            let mut acc = rhs[i];
            for j in (i + 1)..c {
                acc -= gram[i * c + j] * x[j];
            }
            x[i] = acc / gram[i * c + i];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let a = ComplexMatrix::identity(4);
        let y = lcg_complex_vec(4, 11);
        let b = least_squares(&a, &y).unwrap();
        for (got, want) in b.iter().zip(&y) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn column_of_ones_gives_mean() {
        let a = ComplexMatrix::from_column_major(2, 1, vec![Complex64::ONE, Complex64::ONE]);
        let y = vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)];
        let b = least_squares(&a, &y).unwrap();
        assert_relative_eq!(b[0].re, 2.0, epsilon = 1e-12);
        assert!(b[0].im.abs() < 1e-12);
    }

    #[test]
    fn residual_orthogonal_to_columns_and_matches_normal_equations() {
        let a = lcg_complex_matrix(6, 3, 0xc0ffee);
        let y = lcg_complex_vec(6, 0xbeef);
        let b = least_squares(&a, &y).unwrap();

        let mut resid: Vec<Complex64> = a.matvec(&b);
        for (r, w) in resid.iter_mut().zip(&y) {
            *r -= w;
        }
        // a^H (a b - y) ~ 0
        for val in a.herm_matvec(&resid) {
            assert!(val.norm() < 1e-10, "normal equations residual {}", val.norm());
        }

        let oracle = normal_equations_solve(&a, &y);
        for (got, want) in b.iter().zip(&oracle) {
            assert!((got - want).norm() < 1e-9);
        }
    }

    #[test]
    fn svd_factors_reconstruct_input() {
        let a = lcg_complex_matrix(8, 5, 99);
        let (u, sigma, v) = jacobi_svd_complex(&a).unwrap();
        // u^H u = I on the nonzero part and sigma nonincreasing.
        for w in sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for i in 0..5 {
            for j in 0..5 {
                let dot: Complex64 =
                    u.column(i).iter().zip(u.column(j)).map(|(x, w)| x.conj() * w).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).norm() < 1e-10);
            }
        }
        // a v = u sigma
        for j in 0..5 {
            let av = a.matvec(v.column(j));
            for (ai, ui) in av.iter().zip(u.column(j)) {
                assert!((ai - ui * sigma[j]).norm() < 1e-10 * sigma[0].max(1.0));
            }
        }
    }

    #[test]
    fn rank_deficient_truncation() {
        // Two identical columns: pseudoinverse splits weight evenly.
        let col = lcg_complex_vec(5, 3);
        let mut data = col.clone();
        data.extend_from_slice(&col);
        let a = ComplexMatrix::from_column_major(5, 2, data);
        let y = lcg_complex_vec(5, 4);
        let b = least_squares(&a, &y).unwrap();
        assert!((b[0] - b[1]).norm() < 1e-10, "minimum-norm solution is symmetric");
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let y = vec![Complex64::ZERO; 2];
        assert!(matches!(least_squares(&a, &y), Err(LinalgError::BadArgument(_))));
        let a = ComplexMatrix::zeros(3, 2);
        assert!(matches!(least_squares(&a, &y), Err(LinalgError::BadArgument(_))));
    }

    #[test]
    fn zero_matrix_gives_zero_solution() {
        let a = ComplexMatrix::zeros(3, 2);
        let y = lcg_complex_vec(3, 5);
        let b = least_squares(&a, &y).unwrap();
        assert!(b.iter().all(|v| *v == Complex64::ZERO));
    }
}
