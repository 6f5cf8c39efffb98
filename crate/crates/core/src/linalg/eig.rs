//! Eigendecomposition of a small dense real matrix.
//!
//! Classic EISPACK path: Householder reduction to Hessenberg form
//! (`orthes`/`ortran`) followed by the Francis double-shift QR iteration
//! with eigenvector back-substitution (`hqr2`). The port follows the
//! public-domain JAMA translation of those routines.

use num_complex::Complex64;

use super::{norm2_complex, ComplexMatrix, LinalgError, RealMatrix};

const MAX_ITER_PER_EIGENVALUE: usize = 60;

/// Eigenvalues and unit-norm eigenvectors of a square real matrix.
///
/// Complex eigenvalues come in conjugate pairs with the positive-imaginary
/// member first. Each eigenvector is scaled to unit 2-norm with its
/// largest-magnitude entry rotated to be real and positive, so repeated
/// calls produce identical output.
pub fn eig_dense(a: &RealMatrix) -> Result<(Vec<Complex64>, ComplexMatrix), LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::BadArgument(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();

    let mut h = a.clone();
    let mut v = RealMatrix::identity(n);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    orthes(&mut h, &mut v, n);
    hqr2(&mut h, &mut v, &mut d, &mut e, n)?;

    // Assemble complex eigenpairs. For a conjugate pair (e[i] > 0, e[i+1] < 0)
    // the columns i and i+1 of `v` hold the real and imaginary parts.
    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        if e[i] == 0.0 {
            values.push(Complex64::new(d[i], 0.0));
            for row in 0..n {
                vectors[(row, i)] = Complex64::new(v[(row, i)], 0.0);
            }
            i += 1;
        } else {
            values.push(Complex64::new(d[i], e[i]));
            values.push(Complex64::new(d[i + 1], e[i + 1]));
            for row in 0..n {
                let re = v[(row, i)];
                let im = v[(row, i + 1)];
                vectors[(row, i)] = Complex64::new(re, im);
                vectors[(row, i + 1)] = Complex64::new(re, -im);
            }
            i += 2;
        }
    }

    for j in 0..n {
        normalize_column(&mut vectors, j);
    }

    Ok((values, vectors))
}

/// Unit 2-norm with the first largest-magnitude entry rotated real-positive.
fn normalize_column(m: &mut ComplexMatrix, j: usize) {
    let norm = norm2_complex(m.column(j));
    if norm == 0.0 {
        return;
    }
    let col = m.column(j);
    let mut pivot = 0;
    let mut best = col[0].norm();
    for (i, val) in col.iter().enumerate().skip(1) {
        if val.norm() > best {
            best = val.norm();
            pivot = i;
        }
    }
    let phase = col[pivot] / best;
    let scale = phase.conj() / norm;
    for val in m.column_mut(j) {
        *val *= scale;
    }
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal transform into `v`.
fn orthes(h: &mut RealMatrix, v: &mut RealMatrix, n: usize) {
    if n < 3 {
        return;
    }
    let low = 0;
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in (low + 1)..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale != 0.0 {
            let mut hsum = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[(i, m - 1)] / scale;
                hsum += ort[i] * ort[i];
            }
            let mut g = hsum.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            hsum -= ort[m] * g;
            ort[m] -= g;

            // Apply the similarity transform H <- (I - uu'/h) H (I - uu'/h).
            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[(i, j)];
                }
                f /= hsum;
                for i in m..=high {
                    h[(i, j)] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[(i, j)];
                }
                f /= hsum;
                for j in m..=high {
                    h[(i, j)] -= f * ort[j];
                }
            }

            ort[m] *= scale;
            h[(m, m - 1)] = scale * g;
        }
    }

    // Accumulate the transforms (ortran).
    for m in ((low + 1)..high).rev() {
        if h[(m, m - 1)] != 0.0 {
            for i in (m + 1)..=high {
                ort[i] = h[(i, m - 1)];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                // Double division avoids possible underflow.
                g = (g / ort[m]) / h[(m, m - 1)];
                for i in m..=high {
                    v[(i, j)] += g * ort[i];
                }
            }
        }
    }
}

/// Robust complex division (Smith's algorithm).
fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let dd = yr + r * yi;
        ((xr + r * xi) / dd, (xi - r * xr) / dd)
    } else {
        let r = yr / yi;
        let dd = r * yr + yi;
        ((r * xr + xi) / dd, (r * xi - xr) / dd)
    }
}

/// Francis double-shift QR on a Hessenberg matrix with eigenvector
/// back-substitution. On return `d`/`e` hold the real/imaginary parts of
/// the eigenvalues and `v` the (real-packed) eigenvectors.
///
/// Variables deliberately live at function scope and carry values across
/// loop iterations, as in the original EISPACK control flow.
#[allow(clippy::needless_range_loop, unused_assignments)]
fn hqr2(
    h: &mut RealMatrix,
    v: &mut RealMatrix,
    d: &mut [f64],
    e: &mut [f64],
    nn: usize,
) -> Result<(), LinalgError> {
    let low: isize = 0;
    let high: isize = nn as isize - 1;
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t, mut w, mut x, mut y): (f64, f64, f64, f64);

    let hm = |h: &RealMatrix, i: isize, j: isize| h[(i as usize, j as usize)];

    // Matrix 1-norm over the Hessenberg band.
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut n: isize = nn as isize - 1;
    let mut iter = 0usize;
    x = 0.0;
    while n >= low {
        // Look for a single small sub-diagonal element.
        let mut l = n;
        while l > low {
            s = hm(h, l - 1, l - 1).abs() + hm(h, l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if hm(h, l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            let nu = n as usize;
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            let nu = n as usize;
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];

            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                x = h[(nu, nu - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (nu - 1)..nn {
                    z = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in low as usize..=high as usize {
                    z = v[(i, nu - 1)];
                    v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
            } else {
                // Complex pair.
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet; form a shift.
            let nu = n as usize;
            x = h[(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }

            if iter == 10 {
                // Wilkinson's original ad hoc shift.
                exshift += x;
                for i in low as usize..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                // MATLAB's ad hoc shift.
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low as usize..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = 0.964;
                    w = 0.964;
                }
            }
            if iter >= MAX_ITER_PER_EIGENVALUE {
                return Err(LinalgError::NonConvergence {
                    residual: h[(nu, nu - 1)].abs(),
                });
            }
            iter += 1;

            // Look for two consecutive small sub-diagonal elements.
            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[(mu, mu)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - r - s;
                r = h[(mu + 2, mu + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(mu, mu - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=n {
                let iu = i as usize;
                h[(iu, iu - 2)] = 0.0;
                if i > m + 2 {
                    h[(iu, iu - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..n, columns m..n.
            for k in m..n {
                let ku = k as usize;
                let notlast = k != n - 1;
                if k != m {
                    p = h[(ku, ku - 1)];
                    q = h[(ku + 1, ku - 1)];
                    r = if notlast { h[(ku + 2, ku - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                if x == 0.0 {
                    break;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(ku, ku - 1)] = -s * x;
                    } else if l != m {
                        h[(ku, ku - 1)] = -h[(ku, ku - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    // Row modification.
                    for j in ku..nn {
                        p = h[(ku, j)] + q * h[(ku + 1, j)];
                        if notlast {
                            p += r * h[(ku + 2, j)];
                            h[(ku + 2, j)] -= p * z;
                        }
                        h[(ku, j)] -= p * x;
                        h[(ku + 1, j)] -= p * y;
                    }
                    // Column modification.
                    let upper = if (n as usize) < ku + 3 { n as usize } else { ku + 3 };
                    for i in 0..=upper {
                        p = x * h[(i, ku)] + y * h[(i, ku + 1)];
                        if notlast {
                            p += z * h[(i, ku + 2)];
                            h[(i, ku + 2)] -= p * r;
                        }
                        h[(i, ku)] -= p;
                        h[(i, ku + 1)] -= p * q;
                    }
                    // Accumulate transformations.
                    for i in low as usize..=high as usize {
                        p = x * v[(i, ku)] + y * v[(i, ku + 1)];
                        if notlast {
                            p += z * v[(i, ku + 2)];
                            v[(i, ku + 2)] -= p * r;
                        }
                        v[(i, ku)] -= p;
                        v[(i, ku + 1)] -= p * q;
                    }
                }
            }
        }
    }

    // Back-substitute to find vectors of the upper triangular form.
    if norm == 0.0 {
        return Ok(());
    }
    for n in (0..nn as isize).rev() {
        let nu = n as usize;
        p = d[nu];
        q = e[nu];

        if q == 0.0 {
            // Real vector.
            let mut l = n;
            h[(nu, nu)] = 1.0;
            for i in (0..n).rev() {
                let iu = i as usize;
                w = h[(iu, iu)] - p;
                r = 0.0;
                for j in l as usize..=nu {
                    r += h[(iu, j)] * h[(j, nu)];
                }
                if e[iu] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[iu] == 0.0 {
                        h[(iu, nu)] = if w != 0.0 { -r / w } else { -r / (eps * norm) };
                    } else {
                        // Solve the real 2x2 block equations.
                        x = h[(iu, iu + 1)];
                        y = h[(iu + 1, iu)];
                        q = (d[iu] - p) * (d[iu] - p) + e[iu] * e[iu];
                        t = (x * s - z * r) / q;
                        h[(iu, nu)] = t;
                        h[(iu + 1, nu)] = if x.abs() > z.abs() {
                            (-r - w * t) / x
                        } else {
                            (-s - y * t) / z
                        };
                    }
                    // Overflow control.
                    t = h[(iu, nu)].abs();
                    if (eps * t) * t > 1.0 {
                        for j in iu..=nu {
                            h[(j, nu)] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            // Complex vector (stored in columns n-1 and n).
            let mut l = n - 1;

            if h[(nu, nu - 1)].abs() > h[(nu - 1, nu)].abs() {
                h[(nu - 1, nu - 1)] = q / h[(nu, nu - 1)];
                h[(nu - 1, nu)] = -(h[(nu, nu)] - p) / h[(nu, nu - 1)];
            } else {
                let (cr, ci) = cdiv(0.0, -h[(nu - 1, nu)], h[(nu - 1, nu - 1)] - p, q);
                h[(nu - 1, nu - 1)] = cr;
                h[(nu - 1, nu)] = ci;
            }
            h[(nu, nu - 1)] = 0.0;
            h[(nu, nu)] = 1.0;
            for i in (0..=(n - 2)).rev() {
                let iu = i as usize;
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l as usize..=nu {
                    ra += h[(iu, j)] * h[(j, nu - 1)];
                    sa += h[(iu, j)] * h[(j, nu)];
                }
                w = h[(iu, iu)] - p;

                if e[iu] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[iu] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[(iu, nu - 1)] = cr;
                        h[(iu, nu)] = ci;
                    } else {
                        // Solve the complex 2x2 block equations.
                        x = h[(iu, iu + 1)];
                        y = h[(iu + 1, iu)];
                        let mut vr = (d[iu] - p) * (d[iu] - p) + e[iu] * e[iu] - q * q;
                        let vi = (d[iu] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = eps
                                * norm
                                * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[(iu, nu - 1)] = cr;
                        h[(iu, nu)] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[(iu + 1, nu - 1)] =
                                (-ra - w * h[(iu, nu - 1)] + q * h[(iu, nu)]) / x;
                            h[(iu + 1, nu)] =
                                (-sa - w * h[(iu, nu)] - q * h[(iu, nu - 1)]) / x;
                        } else {
                            let (cr, ci) =
                                cdiv(-r - y * h[(iu, nu - 1)], -s - y * h[(iu, nu)], z, q);
                            h[(iu + 1, nu - 1)] = cr;
                            h[(iu + 1, nu)] = ci;
                        }
                    }
                    // Overflow control.
                    t = f64::max(h[(iu, nu - 1)].abs(), h[(iu, nu)].abs());
                    if (eps * t) * t > 1.0 {
                        for j in iu..=nu {
                            h[(j, nu - 1)] /= t;
                            h[(j, nu)] /= t;
                        }
                    }
                }
            }
        }
    }

    // Back-transform to eigenvectors of the original matrix.
    for j in (low..=high).rev() {
        let ju = j as usize;
        for i in low as usize..=high as usize {
            z = 0.0;
            let upper = if ju < high as usize { ju } else { high as usize };
            for k in low as usize..=upper {
                z += v[(i, k)] * h[(k, ju)];
            }
            v[(i, ju)] = z;
        }
    }

    Ok(())
}
