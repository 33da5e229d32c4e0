//! Relative-isomorphism diagnostics between two embedding spaces restricted
//! to seed translation pairs:
//!
//! * Pearson correlation between the pairwise cosine similarities of the
//!   seeds in one space and in the other (higher is more isomorphic);
//! * eigenvector similarity: squared distance between the leading
//!   Laplacian eigenvalues of each space's unweighted k-NN graph (lower is
//!   more isomorphic).

use std::collections::HashSet;

use serde::Serialize;

use crate::embeddings::Embeddings;
use crate::error::{GriError, Result};
use crate::lexicon::SeedPair;
use crate::linalg::{dot, norm, sym_eigvals, Matrix};

pub const DEFAULT_MAX_SEEDS: usize = 1000;
pub const DEFAULT_KNN: usize = 10;
/// Spectra are truncated before their cumulative sum reaches this share.
pub const SPECTRUM_MASS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryReport {
    pub pearson_r: f64,
    pub eigsim: f64,
    pub k_used: usize,
    pub k_nn: usize,
    pub n_seeds_used: usize,
}

/// Aligned seed matrices from the first `max_seeds` pairs covered by both
/// spaces. A pair is skipped when its source or target word was already
/// used, so every row is a distinct word on both sides.
pub fn seed_matrices(src: &Embeddings, trg: &Embeddings, pairs: &[SeedPair], max_seeds: usize) -> (Matrix, Matrix) {
    let mut used_s = HashSet::new();
    let mut used_t = HashSet::new();
    let mut si = Vec::new();
    let mut ti = Vec::new();
    for p in pairs {
        if si.len() == max_seeds {
            break;
        }
        let (Some(s), Some(t)) = (src.index_of(&p.source), trg.index_of(&p.target)) else { continue };
        if used_s.contains(&s) || used_t.contains(&t) {
            continue;
        }
        used_s.insert(s);
        used_t.insert(t);
        si.push(s);
        ti.push(t);
    }
    (src.matrix().select_rows(&si), trg.matrix().select_rows(&ti))
}

fn unit_rows(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let n = norm(out.row(i));
        if n == 0.0 {
            return Err(GriError::ZeroVector);
        }
        out.row_mut(i).iter_mut().for_each(|x| *x /= n);
    }
    Ok(out)
}

/// Pearson r between `cos(u_i, u_j)` and `cos(v_i, v_j)` over all `i < j`.
/// Rows of `u` and `v` are aligned seeds. Accumulated in one streaming pass.
pub fn pearson_isometry(u: &Matrix, v: &Matrix) -> Result<f64> {
    if u.rows() != v.rows() {
        return Err(GriError::shape("pearson_isometry", format!("{} vs {} seeds", u.rows(), v.rows())));
    }
    if u.rows() < 2 {
        return Err(GriError::InvalidConfig("pearson isometry needs at least 2 seed pairs".into()));
    }
    let u = unit_rows(u)?;
    let v = unit_rows(v)?;
    // Welford co-moment updates.
    let (mut n, mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..u.rows() {
        for j in i + 1..u.rows() {
            let x = dot(u.row(i), u.row(j));
            let y = dot(v.row(i), v.row(j));
            n += 1.0;
            let dx = x - mx;
            let dy = y - my;
            mx += dx / n;
            my += dy / n;
            sxx += dx * (x - mx);
            syy += dy * (y - my);
            sxy += dx * (y - my);
        }
    }
    let tiny = 1e-24 * n;
    if sxx <= tiny {
        return Err(GriError::UndefinedCorrelation { side: "source" });
    }
    if syy <= tiny {
        return Err(GriError::UndefinedCorrelation { side: "target" });
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Symmetrized unweighted k-NN graph by cosine similarity: `i ~ j` when
/// either is among the other's `k` nearest. Ties go to the lower index.
/// Returns sorted neighbour lists.
pub fn knn_graph(e: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = e.rows();
    if k == 0 || k >= n {
        return Err(GriError::InvalidConfig(format!("k-NN needs 0 < k < {n}, got {k}")));
    }
    let unit = unit_rows(e)?;
    let mut adj = vec![HashSet::new(); n];
    for i in 0..n {
        let mut sims: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dot(unit.row(i), unit.row(j)), j)).collect();
        sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, j) in sims.iter().take(k) {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    Ok(adj
        .into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect())
}

/// `L = D − A` of an unweighted graph.
pub fn laplacian(adj: &[Vec<usize>]) -> Matrix {
    let n = adj.len();
    let mut l = Matrix::zeros(n, n);
    for (i, nb) in adj.iter().enumerate() {
        l[(i, i)] = nb.len() as f64;
        for &j in nb {
            l[(i, j)] = -1.0;
        }
    }
    l
}

/// Largest `k` whose leading (ascending) eigenvalues sum to less than 90%
/// of the total.
fn truncation(spectrum: &[f64]) -> Result<usize> {
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return Err(GriError::DegenerateGraph("laplacian spectrum sums to zero (edgeless graph)".into()));
    }
    let mut acc = 0.0;
    let mut k = 0;
    for &l in spectrum {
        acc += l;
        if acc / total < SPECTRUM_MASS {
            k += 1;
        } else {
            break;
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSimilarity {
    pub score: f64,
    pub k_used: usize,
    pub src_spectrum: Vec<f64>,
    pub trg_spectrum: Vec<f64>,
}

pub fn eigenvector_similarity(u: &Matrix, v: &Matrix, k_nn: usize) -> Result<EigenSimilarity> {
    if u.rows() != v.rows() {
        return Err(GriError::shape("eigenvector_similarity", format!("{} vs {} seeds", u.rows(), v.rows())));
    }
    if u.rows() < 3 {
        return Err(GriError::InvalidConfig("eigenvector similarity needs at least 3 seed pairs".into()));
    }
    let su = sym_eigvals(&laplacian(&knn_graph(u, k_nn)?))?;
    let sv = sym_eigvals(&laplacian(&knn_graph(v, k_nn)?))?;
    let k_used = truncation(&su)?.min(truncation(&sv)?);
    let score = su.iter().zip(&sv).take(k_used).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(EigenSimilarity {
        score,
        k_used,
        src_spectrum: su,
        trg_spectrum: sv,
    })
}

pub fn isometry_report(src: &Embeddings, trg: &Embeddings, pairs: &[SeedPair], max_seeds: usize, k_nn: usize) -> Result<IsometryReport> {
    let (u, v) = seed_matrices(src, trg, pairs, max_seeds);
    let pearson_r = pearson_isometry(&u, &v)?;
    let k_nn = k_nn.min(u.rows().saturating_sub(1)).max(1);
    let eig = eigenvector_similarity(&u, &v, k_nn)?;
    Ok(IsometryReport {
        pearson_r,
        eigsim: eig.score,
        k_used: eig.k_used,
        k_nn,
        n_seeds_used: u.rows(),
    })
}
