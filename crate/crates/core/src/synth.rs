//! Synthetic bilingual data for tests and demos.
//!
//! The source language is a first-order Markov chain over words grouped in
//! synonym classes: the next word follows a class-level transition most of
//! the time and a word-specific successor list otherwise, so synonyms share
//! most but not all of their contexts. The target language is a renaming of
//! the source tokens through a random bijection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embeddings::Embeddings;
use crate::error::{GriError, Result};
use crate::lexicon::{SeedLexicon, SeedPair};
use crate::linalg::{svd, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub vocab_size: usize,
    pub class_size: usize,
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Successor classes per class.
    pub class_fanout: usize,
    /// Word-specific successors per word.
    pub word_fanout: usize,
    /// Probability of following the word-specific successors.
    pub word_mixing: f64,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocab_size: 300,
            class_size: 5,
            sentences: 5000,
            min_len: 8,
            max_len: 20,
            class_fanout: 6,
            word_fanout: 4,
            word_mixing: 0.3,
            train_pairs: 150,
            test_pairs: 75,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GriError::InvalidConfig(format!("synth: {m}")));
        if self.vocab_size < 2 || self.class_size == 0 || !self.vocab_size.is_multiple_of(self.class_size) {
            return bad("vocab_size must be a positive multiple of class_size and at least 2");
        }
        if self.sentences == 0 || self.min_len < 2 || self.max_len < self.min_len {
            return bad("need sentences > 0 and 2 <= min_len <= max_len");
        }
        if self.class_fanout == 0 || self.word_fanout == 0 {
            return bad("fanouts must be positive");
        }
        if !(0.0..=1.0).contains(&self.word_mixing) {
            return bad("word_mixing must lie in [0, 1]");
        }
        if self.train_pairs + self.test_pairs > self.vocab_size {
            return bad("train_pairs + test_pairs exceeds vocab_size");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthBilingual {
    pub source_lines: Vec<String>,
    pub target_lines: Vec<String>,
    /// Train, then test, then dev pairs, in that order.
    pub pairs: Vec<SeedPair>,
    pub lexicon: SeedLexicon,
}

/// Weighted choice from `(item, weight)` lists.
fn pick<R: Rng + ?Sized>(items: &[(usize, f64)], rng: &mut R) -> usize {
    let total: f64 = items.iter().map(|x| x.1).sum();
    let mut r = rng.gen::<f64>() * total;
    for &(i, w) in items {
        if r < w {
            return i;
        }
        r -= w;
    }
    items[items.len() - 1].0
}

fn weighted_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<(usize, f64)> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k.min(n));
    all.into_iter().map(|i| (i, 0.2 + rng.gen::<f64>())).collect()
}

pub fn source_word(i: usize) -> String {
    format!("s{i}")
}

pub fn target_word(i: usize) -> String {
    format!("t{i}")
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthBilingual> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.vocab_size;
    let n_classes = n / cfg.class_size;
    let class_of = |w: usize| w / cfg.class_size;

    // within-class emission weights, skewed so frequencies vary
    let emission: Vec<Vec<(usize, f64)>> = (0..n_classes)
        .map(|c| {
            (0..cfg.class_size)
                .map(|k| (c * cfg.class_size + k, 1.0 / (1.0 + k as f64) + 0.2 * rng.gen::<f64>()))
                .collect()
        })
        .collect();
    let class_next: Vec<Vec<(usize, f64)>> = (0..n_classes).map(|_| weighted_subset(n_classes, cfg.class_fanout, &mut rng)).collect();
    let word_next: Vec<Vec<(usize, f64)>> = (0..n).map(|_| weighted_subset(n, cfg.word_fanout, &mut rng)).collect();

    let mut lines = Vec::with_capacity(cfg.sentences);
    for _ in 0..cfg.sentences {
        let len = rng.gen_range(cfg.min_len..=cfg.max_len);
        let mut w = pick(&emission[rng.gen_range(0..n_classes)], &mut rng);
        let mut toks = vec![w];
        while toks.len() < len {
            w = if rng.gen::<f64>() < cfg.word_mixing {
                pick(&word_next[w], &mut rng)
            } else {
                pick(&emission[pick(&class_next[class_of(w)], &mut rng)], &mut rng)
            };
            toks.push(w);
        }
        lines.push(toks);
    }

    let mut bijection: Vec<usize> = (0..n).collect();
    bijection.shuffle(&mut rng);
    let render = |toks: &[usize], f: &dyn Fn(usize) -> String| toks.iter().map(|&t| f(t)).collect::<Vec<_>>().join(" ");
    let source_lines = lines.iter().map(|t| render(t, &source_word)).collect();
    let target_lines = lines.iter().map(|t| render(t, &|i| target_word(bijection[i]))).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let pairs: Vec<SeedPair> = order.iter().map(|&i| SeedPair::new(source_word(i), target_word(bijection[i]))).collect();
    let lexicon = SeedLexicon::split_ordered(pairs.clone(), cfg.train_pairs, cfg.train_pairs + cfg.test_pairs)?;
    Ok(SynthBilingual {
        source_lines,
        target_lines,
        pairs,
        lexicon,
    })
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix from the polar factor of a Gaussian.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix> {
    let dec = svd(&gaussian_matrix(d, d, rng))?;
    Ok(dec.p.matmul_t(&dec.q))
}

#[derive(Debug, Clone)]
pub struct RotatedPair {
    pub source: Embeddings,
    pub target: Embeddings,
    pub rotation: Matrix,
    /// `s{i}` ↔ `t{i}` for every row, in shuffled order.
    pub pairs: Vec<SeedPair>,
}

/// Gaussian source space, target `= source · R + noise · N(0, 1)`.
pub fn rotated_spaces(words: usize, dim: usize, noise: f64, seed: u64) -> Result<RotatedPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = gaussian_matrix(words, dim, &mut rng);
    let rotation = random_orthogonal(dim, &mut rng)?;
    let mut v = u.matmul(&rotation);
    v.add_scaled(&gaussian_matrix(words, dim, &mut rng), noise);
    let mut order: Vec<usize> = (0..words).collect();
    order.shuffle(&mut rng);
    Ok(RotatedPair {
        source: Embeddings::new((0..words).map(source_word).collect(), u)?,
        target: Embeddings::new((0..words).map(target_word).collect(), v)?,
        rotation,
        pairs: order.into_iter().map(|i| SeedPair::new(source_word(i), target_word(i))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::lexicon::Split;

    #[test]
    fn bilingual_corpus_shape() {
        let cfg = SynthConfig {
            sentences: 400,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        assert_eq!(d.source_lines.len(), 400);
        assert_eq!(d.pairs.len(), 300);
        assert_eq!(d.lexicon.split(Split::Train).len(), 150);
        assert_eq!(d.lexicon.split(Split::Test).len(), 75);
        assert_eq!(d.lexicon.split(Split::Dev).len(), 75);
        for (s, t) in d.source_lines.iter().zip(&d.target_lines) {
            let s: Vec<&str> = s.split(' ').collect();
            let t: Vec<&str> = t.split(' ').collect();
            assert_eq!(s.len(), t.len());
            assert!((cfg.min_len..=cfg.max_len).contains(&s.len()));
        }
        // the lexicon is the token bijection
        let map: std::collections::HashMap<_, _> = d.pairs.iter().map(|p| (p.source.as_str(), p.target.as_str())).collect();
        let s0: Vec<&str> = d.source_lines[0].split(' ').collect();
        let t0: Vec<&str> = d.target_lines[0].split(' ').collect();
        for (a, b) in s0.iter().zip(&t0) {
            assert_eq!(map[a], *b);
        }
    }

    #[test]
    fn full_size_corpus_covers_vocabulary() {
        let d = generate(&SynthConfig::default()).unwrap();
        let v = Vocabulary::build(d.source_lines.iter(), 5).unwrap();
        assert_eq!(v.len(), 300);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig {
            sentences: 50,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.source_lines, b.source_lines);
        assert_eq!(a.pairs, b.pairs);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let r = rotated_spaces(50, 8, 0.0, 3).unwrap();
        assert!(r.rotation.orthogonality_error() < 1e-10);
        let diff = r.source.matrix().matmul(&r.rotation).sub(r.target.matrix());
        assert!(diff.max_abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SynthConfig { vocab_size: 301, ..SynthConfig::default() },
            SynthConfig { min_len: 1, ..SynthConfig::default() },
            SynthConfig { word_mixing: 1.5, ..SynthConfig::default() },
            SynthConfig { train_pairs: 290, ..SynthConfig::default() },
        ] {
            assert!(generate(&cfg).is_err());
        }
    }
}
