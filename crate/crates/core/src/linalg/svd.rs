use super::{dot, Matrix};
use crate::error::{GriError, Result};

/// Thin SVD `m = P · diag(sigma) · Qᵀ` with `sigma` descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, `rows x r` with `r = min(rows, cols)`.
    pub p: Matrix,
    pub sigma: Vec<f64>,
    /// Right singular vectors, `cols x r`.
    pub q: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        self.p.scale_columns(&self.sigma).matmul_t(&self.q)
    }

    pub fn rank(&self, tol: f64) -> usize {
        let cutoff = tol * self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > cutoff).count()
    }
}


/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns are orthogonalized by plane rotations until every pair is
/// orthogonal to working precision; the sweep cap is `100 * min(rows, cols)`.
/// Each left singular vector is signed so that its largest-magnitude entry
/// is non-negative (the matching right vector is flipped with it).
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(GriError::shape("svd", format!("empty {rows}x{cols} input")));
    }
    if !m.is_finite() {
        return Err(GriError::ContractViolation("svd input has non-finite entries".into()));
    }
    if rows < cols {
        // m = P Σ Qᵀ  <=>  mᵀ = Q Σ Pᵀ
        let t = svd_tall(&m.transpose())?;
        return Ok(fix_signs(SvdResult {
            p: t.q,
            sigma: t.sigma,
            q: t.p,
        }));
    }
    svd_tall(m).map(fix_signs)
}

fn svd_tall(m: &Matrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    // Work on columns stored contiguously: a[j] is column j.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    let max_sweeps = 100 * cols;
    let tol = (rows as f64).sqrt() * f64::EPSILON;
    // columns this small relative to the whole matrix are numerically null
    let negligible = (f64::EPSILON * m.frobenius_norm()).powi(2);
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || alpha.min(beta) <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GriError::NoConvergence {
            routine: "svd",
            iterations: max_sweeps,
        });
    }

    let mut order: Vec<(usize, f64)> = a.iter().map(|c| dot(c, c).sqrt()).enumerate().collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

    let sigma_max = order.first().map_or(0.0, |o| o.1);
    let null_cutoff = sigma_max * (rows.max(cols) as f64) * f64::EPSILON;

    let mut p_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut q_cols = Vec::with_capacity(cols);
    let mut pending_null = Vec::new();
    for &(j, s) in &order {
        if s > null_cutoff && s > 0.0 {
            p_cols.push(a[j].iter().map(|x| x / s).collect());
            sigma.push(s);
        } else {
            pending_null.push(p_cols.len());
            p_cols.push(Vec::new());
            sigma.push(0.0);
        }
        q_cols.push(v[j].clone());
    }
    // Left vectors for (numerically) zero singular values are arbitrary; pick
    // an orthonormal completion so that Pᵀ P = I still holds.
    for slot in pending_null {
        p_cols[slot] = orthonormal_completion(&p_cols, rows);
    }

    let p = Matrix::from_fn(rows, cols, |i, j| p_cols[j][i]);
    let q = Matrix::from_fn(cols, cols, |i, j| q_cols[j][i]);
    Ok(SvdResult { p, sigma, q })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// A unit vector orthogonal to every non-empty vector in `basis`.
fn orthonormal_completion(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let filled: Vec<&Vec<f64>> = basis.iter().filter(|b| !b.is_empty()).collect();
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        // Two Gram-Schmidt passes for stability.
        for _ in 0..2 {
            for b in &filled {
                let proj = dot(&e, b);
                for (x, y) in e.iter_mut().zip(b.iter()) {
                    *x -= proj * y;
                }
            }
        }
        let n = dot(&e, &e).sqrt();
        if n > best_norm {
            best_norm = n;
            best = Some(e);
        }
        if n > 0.5 {
            break;
        }
    }
    let mut e = best.expect("orthonormal completion needs dim > rank");
    for x in &mut e {
        *x /= best_norm;
    }
    e
}

fn fix_signs(mut r: SvdResult) -> SvdResult {
    for j in 0..r.sigma.len() {
        let mut pivot = 0.0f64;
        for i in 0..r.p.rows() {
            let x = r.p[(i, j)];
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        if pivot < 0.0 {
            for i in 0..r.p.rows() {
                r.p[(i, j)] = -r.p[(i, j)];
            }
            for i in 0..r.q.rows() {
                r.q[(i, j)] = -r.q[(i, j)];
            }
        }
    }
    r
}
