//! Semantic graph over target-side seed words.
//!
//! Every unordered pair of words covered by a pretrained embedding is scored
//! by cosine similarity; pairs scoring at least `thr` become undirected edges
//! whose weight is that score. The weights act as fixed attention in the
//! graph convolution and are never trained.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::embeddings::Embeddings;
use crate::error::{GriError, Result};
use crate::linalg::{dot, norm, Matrix};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GriError::shape("cosine", format!("dims {} and {}", a.len(), b.len())));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(GriError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Always `i < j`.
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SemanticGraph {
    nodes: Vec<String>,
    covered: Vec<bool>,
    edges: Vec<Edge>,
    thr: f64,
}

impl SemanticGraph {
    /// Scores all pairs of `target_words` found in `pretrained` and keeps the
    /// ones with cosine `>= thr`. Duplicates are dropped (first occurrence
    /// wins); words missing from `pretrained` stay as isolated nodes.
    pub fn build<S: AsRef<str>>(target_words: &[S], pretrained: &Embeddings, thr: f64) -> Result<Self> {
        if !thr.is_finite() || thr <= 0.0 {
            return Err(GriError::InvalidConfig(format!("graph threshold must be positive, got {thr}")));
        }
        let mut seen = HashSet::new();
        let nodes: Vec<String> = target_words
            .iter()
            .map(|w| w.as_ref())
            .filter(|w| seen.insert(*w))
            .map(str::to_string)
            .collect();

        let vectors: Vec<Option<&[f64]>> = nodes
            .iter()
            .map(|w| pretrained.vector(w).filter(|v| norm(v) > 0.0))
            .collect();
        let covered: Vec<bool> = vectors.iter().map(Option::is_some).collect();
        let n_covered = covered.iter().filter(|&&c| c).count();
        if n_covered == 0 && !nodes.is_empty() {
            warn!("no target word is covered by the pretrained embedding; graph is edgeless");
        } else if n_covered < nodes.len() {
            warn!("{} of {} target words lack pretrained vectors and stay isolated", nodes.len() - n_covered, nodes.len());
        }

        let mut edges = Vec::new();
        for i in 0..nodes.len() {
            let Some(a) = vectors[i] else { continue };
            for (j, b) in vectors.iter().enumerate().skip(i + 1) {
                let Some(b) = *b else { continue };
                let score = cosine(a, b)?;
                if score >= thr {
                    edges.push(Edge { i, j, weight: score });
                }
            }
        }
        Ok(SemanticGraph {
            nodes,
            covered,
            edges,
            thr,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn threshold(&self) -> f64 {
        self.thr
    }

    pub fn is_covered(&self, node: usize) -> bool {
        self.covered[node]
    }

    /// No node had a pretrained vector. The graph is still usable.
    pub fn is_degenerate(&self) -> bool {
        !self.covered.iter().any(|&c| c)
    }

    /// Symmetric neighbour lists, `(neighbour, weight)`.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.i].push((e.j, e.weight));
            adj[e.j].push((e.i, e.weight));
        }
        adj
    }

    /// Edge set keyed by word pairs in canonical (lexicographic) order.
    pub fn word_edges(&self) -> Vec<(String, String, f64)> {
        let mut out: Vec<(String, String, f64)> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (&self.nodes[e.i], &self.nodes[e.j]);
                if a <= b {
                    (a.clone(), b.clone(), e.weight)
                } else {
                    (b.clone(), a.clone(), e.weight)
                }
            })
            .collect();
        out.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        out
    }

    /// Debug export: `word1<TAB>word2<TAB>weight`, one edge per line.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{:.6}", self.nodes[e.i], self.nodes[e.j], e.weight)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Γ̃ = D̄^{-1/2} (Γ + I) D̄^{-1/2}` with `D̄` the degree matrix of `Γ + I`.
///
/// Stored sparsely by rows; the self-loop is included in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    nodes: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl NormalizedAdjacency {
    pub fn from_graph(g: &SemanticGraph) -> Self {
        let neighbors = g.neighbors();
        let degree: Vec<f64> = neighbors
            .iter()
            .map(|nb| 1.0 + nb.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
        let rows = neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| {
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(nb.len() + 1);
                row.push((i, inv_sqrt[i] * inv_sqrt[i]));
                row.extend(nb.iter().map(|&(j, w)| (j, inv_sqrt[i] * w * inv_sqrt[j])));
                row.sort_by_key(|&(j, _)| j);
                row
            })
            .collect();
        NormalizedAdjacency {
            nodes: g.nodes().to_vec(),
            rows,
        }
    }

    /// Self-loop-only adjacency (an edgeless graph): `Γ̃ = I`.
    pub fn identity(nodes: Vec<String>) -> Self {
        let rows = (0..nodes.len()).map(|i| vec![(i, 1.0)]).collect();
        NormalizedAdjacency { nodes, rows }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }

    /// `Γ̃ · x`
    pub fn apply(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.len(), "adjacency order {} vs {} rows", self.len(), x.rows());
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for (i, row) in self.rows.iter().enumerate() {
            let dst = out.row_mut(i);
            for &(j, w) in row {
                for (d, &s) in dst.iter_mut().zip(x.row(j)) {
                    *d += w * s;
                }
            }
        }
        out
    }

    /// Same operator with nodes reordered so that new node `k` is old node
    /// `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let rows = order
            .iter()
            .map(|&old| {
                let mut r: Vec<(usize, f64)> = self.rows[old].iter().map(|&(j, w)| (inverse[j], w)).collect();
                r.sort_by_key(|&(j, _)| j);
                r
            })
            .collect();
        NormalizedAdjacency {
            nodes: order.iter().map(|&o| self.nodes[o].clone()).collect(),
            rows,
        }
    }
}

pub fn build_graph<S: AsRef<str>>(target_words: &[S], pretrained: &Embeddings, thr: f64) -> Result<SemanticGraph> {
    SemanticGraph::build(target_words, pretrained, thr)
}

pub fn normalize_adjacency(g: &SemanticGraph) -> NormalizedAdjacency {
    NormalizedAdjacency::from_graph(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[(&str, &[f64])]) -> Embeddings {
        let words = rows.iter().map(|(w, _)| w.to_string()).collect();
        let m = Matrix::from_rows(&rows.iter().map(|(_, v)| v.to_vec()).collect::<Vec<_>>()).unwrap();
        Embeddings::new(words, m).unwrap()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0], &[2.0, 1.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(GriError::ZeroVector)));
    }

    #[test]
    fn single_edge_from_stub_scores() {
        // cos(good, great) = 0.8, cos(good, terrible) = 0.3, cos(great, terrible) < 0.5
        let e = emb(&[
            ("good", &[1.0, 0.0, 0.0]),
            ("great", &[0.8, 0.6, 0.0]),
            ("terrible", &[0.3, 0.0, 0.91f64.sqrt()]),
        ]);
        let g = SemanticGraph::build(&["good", "great", "terrible"], &e, 0.5).unwrap();
        assert_eq!(g.edges().len(), 1);
        let edge = g.edges()[0];
        assert_eq!((edge.i, edge.j), (0, 1));
        assert!((edge.weight - 0.8).abs() < 1e-12);
    }

    #[test]
    fn synonyms_form_a_triangle() {
        let e = emb(&[
            ("good", &[1.0, 0.1, 0.0]),
            ("great", &[0.9, 0.2, 0.1]),
            ("excellent", &[1.0, 0.0, 0.2]),
        ]);
        let g = SemanticGraph::build(&["good", "great", "excellent"], &e, 0.5).unwrap();
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn threshold_above_one_gives_no_edges() {
        let e = emb(&[("a", &[1.0, 0.0]), ("b", &[1.0, 0.0])]);
        assert_eq!(SemanticGraph::build(&["a", "b"], &e, 1.0).unwrap().edges().len(), 1);
        assert!(SemanticGraph::build(&["a", "b"], &e, 1.0 + 1e-9).unwrap().edges().is_empty());
        assert!(SemanticGraph::build(&["a", "b"], &e, 0.0).is_err());
    }

    #[test]
    fn uncovered_words_stay_isolated() {
        let e = emb(&[("a", &[1.0, 0.0]), ("b", &[1.0, 0.1])]);
        let g = SemanticGraph::build(&["a", "zz", "b", "a"], &e, 0.5).unwrap();
        assert_eq!(g.nodes(), &["a", "zz", "b"]);
        assert!(!g.is_covered(1));
        assert_eq!(g.edges().len(), 1);
        assert!(!g.is_degenerate());

        let g = SemanticGraph::build(&["x", "y"], &e, 0.5).unwrap();
        assert!(g.is_degenerate());
        assert!(g.edges().is_empty());
    }

    #[test]
    fn normalization_hand_cases() {
        let e = emb(&[("a", &[1.0, 0.0]), ("b", &[1.0, 0.0])]);
        let g = SemanticGraph::build(&["a"], &e, 0.5).unwrap();
        assert_eq!(normalize_adjacency(&g).to_dense().to_rows(), vec![vec![1.0]]);

        let g = SemanticGraph::build(&["a", "b"], &e, 0.5).unwrap();
        let m = normalize_adjacency(&g).to_dense();
        for x in m.data() {
            assert!((x - 0.5).abs() < 1e-15);
        }

        // cos = 0.6
        let e = emb(&[("a", &[1.0, 0.0]), ("b", &[0.6, 0.8])]);
        let g = SemanticGraph::build(&["a", "b"], &e, 0.5).unwrap();
        let m = normalize_adjacency(&g).to_dense();
        let want = [[0.625, 0.375], [0.375, 0.625]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let e = emb(&[("a", &[1.0, 0.0]), ("b", &[0.6, 0.8]), ("c", &[0.0, 1.0])]);
        let g = SemanticGraph::build(&["a", "b", "c"], &e, 0.5).unwrap();
        let adj = normalize_adjacency(&g);
        let x = Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let diff = adj.apply(&x).sub(&adj.to_dense().matmul(&x));
        assert!(diff.max_abs() < 1e-15);
    }

    #[test]
    fn tsv_export() {
        let e = emb(&[("a", &[1.0, 0.0]), ("b", &[0.6, 0.8])]);
        let g = SemanticGraph::build(&["a", "b"], &e, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.tsv");
        g.write_tsv(&p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "a\tb\t0.600000\n");
    }
}
