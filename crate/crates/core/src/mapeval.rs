//! Supervised cross-lingual mapping and P@1 evaluation.
//!
//! Pipeline: length-normalize, mean-center and re-normalize each space;
//! whiten both seed-restricted spaces; solve the orthogonal alignment on the
//! whitened seeds; re-weight by the singular values raised to 0.5; de-whiten
//! each side with its own whitening; retrieve translations by cosine nearest
//! neighbour.

use std::collections::{HashMap, HashSet};
use std::thread;

use log::warn;
use serde::Serialize;

use crate::embeddings::Embeddings;
use crate::error::{GriError, Result};
use crate::lexicon::{SeedLexicon, SeedPair, Split};
use crate::linalg::{dot, norm, svd, Matrix};

pub const REWEIGHT_EXPONENT: f64 = 0.5;
pub const WHITENING_RIDGE: f64 = 1e-8;

/// Unit-normalize rows, center columns, unit-normalize rows again.
pub fn preprocess(e: &Embeddings) -> Result<Embeddings> {
    let mut m = e.matrix().clone();
    normalize_rows(&mut m, e, "unit normalization")?;
    let (rows, cols) = m.shape();
    let mut mean = vec![0.0; cols];
    for i in 0..rows {
        for (acc, &x) in mean.iter_mut().zip(m.row(i)) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= rows as f64);
    for i in 0..rows {
        for (x, &mu) in m.row_mut(i).iter_mut().zip(&mean) {
            *x -= mu;
        }
    }
    normalize_rows(&mut m, e, "mean centering")?;
    e.with_matrix(m)
}

fn normalize_rows(m: &mut Matrix, e: &Embeddings, stage: &'static str) -> Result<()> {
    let mut zero = Vec::new();
    for i in 0..m.rows() {
        let n = norm(m.row(i));
        // rows that cancel to rounding noise count as zero
        if n <= 1e-12 {
            zero.push(e.words()[i].clone());
            continue;
        }
        m.row_mut(i).iter_mut().for_each(|x| *x /= n);
    }
    if zero.is_empty() {
        Ok(())
    } else {
        Err(GriError::ZeroRows { stage, words: zero })
    }
}

#[derive(Debug, Clone)]
pub struct AlignmentModel {
    pub src_whitening: Matrix,
    pub trg_whitening: Matrix,
    pub src_rotation: Matrix,
    pub trg_rotation: Matrix,
    pub singular_values: Vec<f64>,
    pub reweight_exponent: f64,
    /// Whitening → rotation → re-weighting → de-whitening, composed.
    pub src_transform: Matrix,
    pub trg_transform: Matrix,
    /// Fewer seeds than dimensions or a rank-deficient seed matrix.
    pub degenerate: bool,
    pub n_seeds: usize,
}

struct Whitening {
    forward: Matrix,
    inverse: Matrix,
    regularized: bool,
}

/// `(Xᵀ X)^{-1/2}` and its inverse from the SVD of the covariance `Xᵀ X`.
fn whitening(x: &Matrix) -> Result<Whitening> {
    let cov = x.t_matmul(x);
    let dec = svd(&cov)?;
    let top = dec.sigma.first().copied().unwrap_or(0.0);
    let regularized = x.rows() < x.cols() || dec.sigma.iter().any(|&s| s <= 1e-12 * top.max(f64::MIN_POSITIVE));
    let ridge = if regularized { WHITENING_RIDGE } else { 0.0 };
    let inv_sqrt: Vec<f64> = dec.sigma.iter().map(|&s| 1.0 / (s + ridge).sqrt()).collect();
    let sqrt: Vec<f64> = dec.sigma.iter().map(|&s| (s + ridge).sqrt()).collect();
    // cov is symmetric PSD, so its right singular vectors diagonalize it.
    let q = &dec.q;
    Ok(Whitening {
        forward: q.scale_columns(&inv_sqrt).matmul_t(q),
        inverse: q.scale_columns(&sqrt).matmul_t(q),
        regularized,
    })
}

/// Fits the mapping on aligned seed rows `(src_row, trg_row)`.
pub fn align(src: &Matrix, trg: &Matrix, seeds: &[(usize, usize)]) -> Result<AlignmentModel> {
    if src.cols() != trg.cols() {
        return Err(GriError::shape("align", format!("source dim {} vs target dim {}", src.cols(), trg.cols())));
    }
    if seeds.is_empty() {
        return Err(GriError::InvalidConfig("alignment needs at least one seed pair".into()));
    }
    let x = src.select_rows(&seeds.iter().map(|s| s.0).collect::<Vec<_>>());
    let z = trg.select_rows(&seeds.iter().map(|s| s.1).collect::<Vec<_>>());

    let wx = whitening(&x)?;
    let wz = whitening(&z)?;
    let degenerate = wx.regularized || wz.regularized;
    if degenerate {
        warn!(
            "seed matrix is rank deficient ({} seeds, dim {}); using ridge-regularized whitening",
            seeds.len(),
            src.cols()
        );
    }

    let xw = x.matmul(&wx.forward);
    let zw = z.matmul(&wz.forward);
    let dec = svd(&xw.t_matmul(&zw))?;
    let (rx, rz) = (dec.p, dec.q);
    let weights: Vec<f64> = dec.sigma.iter().map(|s| s.powf(REWEIGHT_EXPONENT)).collect();

    let src_transform = wx
        .forward
        .matmul(&rx)
        .scale_columns(&weights)
        .matmul(&rx.t_matmul(&wx.inverse).matmul(&rx));
    let trg_transform = wz
        .forward
        .matmul(&rz)
        .scale_columns(&weights)
        .matmul(&rz.t_matmul(&wz.inverse).matmul(&rz));

    Ok(AlignmentModel {
        src_whitening: wx.forward,
        trg_whitening: wz.forward,
        src_rotation: rx,
        trg_rotation: rz,
        singular_values: dec.sigma,
        reweight_exponent: REWEIGHT_EXPONENT,
        src_transform,
        trg_transform,
        degenerate,
        n_seeds: seeds.len(),
    })
}

impl AlignmentModel {
    pub fn map_source(&self, e: &Embeddings) -> Result<Embeddings> {
        e.with_matrix(e.matrix().matmul(&self.src_transform))
    }

    pub fn map_target(&self, e: &Embeddings) -> Result<Embeddings> {
        e.with_matrix(e.matrix().matmul(&self.trg_transform))
    }
}

/// Row indices of the pairs whose words exist on both sides.
pub fn seed_indices(src: &Embeddings, trg: &Embeddings, pairs: &[SeedPair]) -> Vec<(usize, usize)> {
    pairs
        .iter()
        .filter_map(|p| Some((src.index_of(&p.source)?, trg.index_of(&p.target)?)))
        .collect()
}

pub fn align_embeddings(src: &Embeddings, trg: &Embeddings, pairs: &[SeedPair]) -> Result<AlignmentModel> {
    let seeds = seed_indices(src, trg, pairs);
    if seeds.is_empty() {
        return Err(GriError::VocabularyMismatch(format!(
            "none of the {} seed pairs is covered by both embeddings",
            pairs.len()
        )));
    }
    align(src.matrix(), trg.matrix(), &seeds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPrediction {
    pub source: String,
    pub predicted: String,
    pub gold: Vec<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub p_at_1: f64,
    /// Distinct source words in the test pairs.
    pub n_queries: usize,
    /// Queries without a source vector; excluded from the denominator.
    pub oov_queries: usize,
    pub correct: usize,
    #[serde(skip)]
    pub predictions: Vec<QueryPrediction>,
}

/// Rows scaled to unit length; zero rows stay zero.
fn unit_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let n = norm(out.row(i));
        if n > 0.0 {
            out.row_mut(i).iter_mut().for_each(|x| *x /= n);
        }
    }
    out
}

/// Index of the most cosine-similar row of `targets` (unit rows) to `q`;
/// ties go to the lowest index.
fn nearest(q: &[f64], targets: &Matrix) -> usize {
    let mut best = 0;
    let mut best_sim = f64::NEG_INFINITY;
    for j in 0..targets.rows() {
        let s = dot(q, targets.row(j));
        if s > best_sim {
            best_sim = s;
            best = j;
        }
    }
    best
}

fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    if workers <= 1 || items.len() < 64 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("retrieval worker panicked")).collect()
    })
}

/// Precision at 1 of cosine nearest-neighbour retrieval. A query is correct
/// when its prediction is any gold translation of the source word.
pub fn p_at_1(mapped_src: &Embeddings, mapped_trg: &Embeddings, test_pairs: &[SeedPair]) -> Result<EvalReport> {
    if test_pairs.is_empty() {
        return Err(GriError::EmptyTestSet);
    }
    if mapped_trg.is_empty() {
        return Err(GriError::VocabularyMismatch("target embedding is empty".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut gold: HashMap<&str, Vec<String>> = HashMap::new();
    for p in test_pairs {
        let entry = gold.entry(p.source.as_str()).or_insert_with(|| {
            order.push(p.source.as_str());
            Vec::new()
        });
        if !entry.contains(&p.target) {
            entry.push(p.target.clone());
        }
    }

    let (known, oov): (Vec<&str>, Vec<&str>) = order.iter().partition(|w| mapped_src.index_of(w).is_some());
    if known.is_empty() {
        return Err(GriError::NoEvaluableQueries { oov: oov.len() });
    }

    let targets = unit_rows(mapped_trg.matrix());
    let src_unit = unit_rows(mapped_src.matrix());
    let hits = parallel_map(&known, |w| {
        let q = src_unit.row(mapped_src.index_of(w).expect("known word"));
        nearest(q, &targets)
    });

    let mut predictions = Vec::with_capacity(known.len());
    let mut correct = 0;
    for (w, hit) in known.iter().zip(hits) {
        let predicted = mapped_trg.words()[hit].clone();
        let g = gold[w].clone();
        let ok = g.contains(&predicted);
        correct += ok as usize;
        predictions.push(QueryPrediction {
            source: w.to_string(),
            predicted,
            gold: g,
            correct: ok,
        });
    }
    Ok(EvalReport {
        p_at_1: correct as f64 / known.len() as f64,
        n_queries: order.len(),
        oov_queries: oov.len(),
        correct,
        predictions,
    })
}

/// Mechanical error breakdown: how many wrong predictions fall within the
/// `k` nearest target-space neighbours of a gold translation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborErrors {
    pub k: usize,
    pub errors: usize,
    pub within_k: usize,
}

pub fn neighbor_errors(report: &EvalReport, target: &Embeddings, k: usize) -> NeighborErrors {
    let unit = unit_rows(target.matrix());
    let mut errors = 0;
    let mut within_k = 0;
    for p in report.predictions.iter().filter(|p| !p.correct) {
        errors += 1;
        let Some(pred) = target.index_of(&p.predicted) else { continue };
        let hit = p.gold.iter().filter_map(|g| target.index_of(g)).any(|g| {
            let q = unit.row(g);
            let mut sims: Vec<(f64, usize)> = (0..unit.rows()).filter(|&j| j != g).map(|j| (dot(q, unit.row(j)), j)).collect();
            sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            sims.iter().take(k).any(|&(_, j)| j == pred)
        });
        within_k += hit as usize;
    }
    NeighborErrors { k, errors, within_k }
}

/// Preprocess both spaces, fit on the train split, evaluate on `split`.
pub fn evaluate(src: &Embeddings, trg: &Embeddings, lexicon: &SeedLexicon, split: Split) -> Result<(AlignmentModel, EvalReport)> {
    let src = preprocess(src)?;
    let trg = preprocess(trg)?;
    let model = align_embeddings(&src, &trg, &lexicon.split(Split::Train))?;
    let mapped_src = model.map_source(&src)?;
    let mapped_trg = model.map_target(&trg)?;
    let report = p_at_1(&mapped_src, &mapped_trg, &lexicon.split(split))?;
    Ok((model, report))
}

/// Words of `pairs` that are missing on either side, for diagnostics.
pub fn coverage_gaps(src: &Embeddings, trg: &Embeddings, pairs: &[SeedPair]) -> (Vec<String>, Vec<String>) {
    let mut s = HashSet::new();
    let mut t = HashSet::new();
    for p in pairs {
        if src.index_of(&p.source).is_none() {
            s.insert(p.source.clone());
        }
        if trg.index_of(&p.target).is_none() {
            t.insert(p.target.clone());
        }
    }
    let mut s: Vec<String> = s.into_iter().collect();
    let mut t: Vec<String> = t.into_iter().collect();
    s.sort();
    t.sort();
    (s, t)
}
