#![allow(dead_code)]

use gri_core::embeddings::Embeddings;
use gri_core::linalg::Matrix;
use gri_core::semgraph::{normalize_adjacency, NormalizedAdjacency, SemanticGraph};
use rand::Rng;

pub const H: f64 = 1e-5;

/// `‖a − n‖∞ / max(‖a‖∞, ‖n‖∞)`; zero when both vanish.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff = analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max);
    let scale = analytic.iter().chain(numeric).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_grad(x: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + H;
            let plus = f(x);
            x[i] = orig - H;
            let minus = f(x);
            x[i] = orig;
            (plus - minus) / (2.0 * H)
        })
        .collect()
}

pub fn words(n: usize, prefix: &str) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Semantic graph over `n` words with random vectors, thresholded at `thr`.
pub fn random_graph<R: Rng>(n: usize, dim: usize, thr: f64, rng: &mut R) -> (SemanticGraph, NormalizedAdjacency) {
    let w = words(n, "w");
    let e = Embeddings::new(w.clone(), Matrix::random_uniform(n, dim, 1.0, rng)).unwrap();
    let g = SemanticGraph::build(&w, &e, thr).unwrap();
    let a = normalize_adjacency(&g);
    (g, a)
}
