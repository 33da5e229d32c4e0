use super::Matrix;
use crate::error::{GriError, Result};

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector `i` is column `i`.
    pub eigenvectors: Matrix,
}

const SYMMETRY_TOL: f64 = 1e-10;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm drops below `1e-12 * ‖s‖_F`.
pub fn sym_eig(s: &Matrix) -> Result<SpectrumResult> {
    let (values, vectors) = jacobi(s, true)?;
    let vectors = vectors.expect("vectors requested");
    let n = s.rows();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    // `vectors` holds eigenvectors as rows.
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = &vectors[src * n..(src + 1) * n];
        let pivot = v.iter().fold(0.0f64, |a, &x| if x.abs() > a.abs() { x } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (row, &x) in v.iter().enumerate() {
            eigenvectors[(row, col)] = sign * x;
        }
    }
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenvalues only; skips accumulating the rotations.
pub fn sym_eigvals(s: &Matrix) -> Result<Vec<f64>> {
    let (mut values, _) = jacobi(s, false)?;
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values)
}

fn jacobi(s: &Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if !s.is_square() {
        return Err(GriError::shape(
            "sym_eig",
            format!("{}x{} input is not square", s.rows(), s.cols()),
        ));
    }
    if !s.is_finite() {
        return Err(GriError::ContractViolation("sym_eig input has non-finite entries".into()));
    }
    let asym = s.max_asymmetry().unwrap_or(0.0);
    if asym > SYMMETRY_TOL * s.max_abs().max(1.0) {
        return Err(GriError::NotSymmetric { max_asymmetry: asym });
    }

    let n = s.rows();
    let mut a = s.data().to_vec();
    // Symmetrize exactly so the two triangles stay in lockstep.
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let mut v = want_vectors.then(|| Matrix::identity(n).into_data());

    let total = s.frobenius_norm();
    let target = OFF_DIAGONAL_TOL * total;
    let skip = 1e-14 * total / n.max(1) as f64;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_finite() {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    let new_p = c * akp - sn * akq;
                    let new_q = sn * akp + c * akq;
                    a[p * n + k] = new_p;
                    a[k * n + p] = new_p;
                    a[q * n + k] = new_q;
                    a[k * n + q] = new_q;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                if let Some(v) = v.as_mut() {
                    // rows of `v` are the eigenvectors being accumulated
                    let (head, tail) = v.split_at_mut(q * n);
                    let vp = &mut head[p * n..(p + 1) * n];
                    let vq = &mut tail[..n];
                    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                        let (xp, xq) = (*x, *y);
                        *x = c * xp - sn * xq;
                        *y = sn * xp + c * xq;
                    }
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a, n) > target {
        return Err(GriError::NoConvergence {
            routine: "sym_eig",
            iterations: MAX_SWEEPS,
        });
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, v))
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += a[i * n + j] * a[i * n + j];
        }
    }
    (2.0 * sum).sqrt()
}
