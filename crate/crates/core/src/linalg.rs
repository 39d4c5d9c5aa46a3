//! Eigensolvers used by the quadrature and dynamics modules.
//!
//! * [`symtridiag_ql`]: implicit QL on a real symmetric tridiagonal matrix,
//!   carrying the first row of the eigenvector matrix along (Golub-Welsch).
//! * [`complex_symtridiag_ql`]: the same iteration for a complex symmetric
//!   tridiagonal matrix using complex orthogonal rotations (`QᵀQ = I`, no
//!   conjugation), so eigenvectors come out normalized under `vᵀv = 1`.
//! * [`eig_general`]: dense complex eigendecomposition from a Schur form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues (unsorted) and first eigenvector components of a real symmetric
/// tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
pub fn symtridiag_ql(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Config(format!(
            "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
            n,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::Eigen(format!(
                    "tridiagonal QL did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Eigenvalues and eigenvectors (columns) of the complex symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off`.
///
/// The accumulated transform is complex orthogonal, so each returned column
/// satisfies `vᵀv = 1` up to rounding.
pub fn complex_symtridiag_ql(
    diag: &[Complex64],
    off: &[Complex64],
) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Config(format!(
            "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
            n,
            off.len()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(zero);
    let mut z = DMatrix::<Complex64>::identity(n, n);
    let scale = diag
        .iter()
        .chain(off.iter())
        .map(|x| x.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd.max(f64::EPSILON * scale) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::Eigen(format!(
                    "complex symmetric QL did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
            let r0 = (g * g + one).sqrt();
            let denom = if (g + r0).norm() >= (g - r0).norm() {
                g + r0
            } else {
                g - r0
            };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c, mut p) = (one, one, zero);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                let r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r.norm() <= f64::EPSILON * (f.norm() + g.norm()) {
                    if f.norm() == 0.0 && g.norm() == 0.0 {
                        d[i + 1] -= p;
                        e[m] = zero;
                        underflow = true;
                        break;
                    }
                    return Err(Error::Eigen(
                        "complex orthogonal rotation broke down (f² + g² ≈ 0)".into(),
                    ));
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let rr = (d[i] - g) * s + c * b * 2.0;
                p = s * rr;
                d[i + 1] = g + p;
                g = c * rr - b;
                // Columns i and i + 1 are adjacent in column-major storage.
                let (zi, zf) = z.as_mut_slice()[i * n..(i + 2) * n].split_at_mut(n);
                for (a, b) in zi.iter_mut().zip(zf.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *b = s * x + c * y;
                    *a = c * x - s * y;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    Ok((d, z))
}

/// Eigenvalues and right eigenvectors (unit Euclidean columns) of a dense
/// complex matrix. Order follows the Schur form; callers sort.
pub fn eig_general(a: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Config("eigenproblem needs a square matrix".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000 * n.max(1))
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let lambda: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let tnorm = t.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let small = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lambda[k];
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -acc / den;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let nrm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            col /= Complex64::new(nrm, 0.0);
        }
    }
    Ok((lambda, v))
}

/// 2-norm condition number from singular values.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orders complex values by real part, ties broken by imaginary part.
pub fn cmp_complex(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_ql_matches_dense_solver() {
        let diag = [2.0, 4.0, 6.0, 8.0, 10.0];
        let off = [2f64.sqrt(), 6f64.sqrt(), 12f64.sqrt(), 20f64.sqrt()];
        let (mut vals, first) = symtridiag_ql(&diag, &off).unwrap();
        let n = diag.len();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
        }
        for i in 0..n - 1 {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
        let eig = SymmetricEigen::new(m);
        let mut pairs: Vec<(f64, f64)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ours: Vec<(f64, f64)> = vals.drain(..).zip(first.iter().map(|z| z * z)).collect();
        ours.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, b) in ours.iter().zip(&pairs) {
            assert!((a.0 - b.0).abs() < 1e-12);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn real_ql_one_by_one() {
        let (v, z) = symtridiag_ql(&[3.5], &[]).unwrap();
        assert_eq!(v, vec![3.5]);
        assert_eq!(z, vec![1.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(symtridiag_ql(&[1.0, 2.0], &[]).is_err());
        assert!(complex_symtridiag_ql(&[], &[]).is_err());
    }

    #[test]
    fn complex_ql_reproduces_matrix() {
        let diag = [c(0.0, -0.6), c(0.1, 0.1), c(-0.2, 0.05), c(0.0, 0.3)];
        let off = [c(0.6, 0.0), c(0.5, 0.1), c(0.45, -0.05)];
        let (vals, z) = complex_symtridiag_ql(&diag, &off).unwrap();
        let n = diag.len();
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = diag[i];
        }
        for i in 0..n - 1 {
            a[(i, i + 1)] = off[i];
            a[(i + 1, i)] = off[i];
        }
        // ZᵀZ = I and A Z = Z Λ
        let ztz = z.transpose() * &z;
        let az = &a * &z;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ztz[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
                assert!((az[(i, j)] - z[(i, j)] * vals[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn general_eig_reconstructs() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.5, 0.2),
                c(0.0, 0.0),
                c(0.1, 0.0),
                c(-1.0, -0.3),
                c(0.7, 0.0),
                c(0.0, 0.4),
                c(0.2, 0.0),
                c(2.0, -1.0),
            ],
        );
        let (vals, v) = eig_general(&a).unwrap();
        let av = &a * &v;
        for k in 0..3 {
            for i in 0..3 {
                assert!((av[(i, k)] - v[(i, k)] * vals[k]).norm() < 1e-12);
            }
        }
        assert!(condition_number(&v).is_finite());
    }
}
