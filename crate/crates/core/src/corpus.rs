//! Vocabulary construction, skip-gram pair generation with frequent-word
//! subsampling, and unigram^0.75 negative sampling.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{GriError, Result};

/// Exponent applied to unigram counts for the noise distribution.
pub const NOISE_POWER: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    /// Counts whitespace-separated tokens and keeps those seen at least
    /// `min_count` times, ordered by descending count then lexicographically.
    pub fn build<I, S>(lines: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut raw: HashMap<String, u64> = HashMap::new();
        let mut seen_any = false;
        for line in lines {
            for tok in line.as_ref().split_whitespace() {
                seen_any = true;
                match raw.get_mut(tok) {
                    Some(c) => *c += 1,
                    None => {
                        raw.insert(tok.to_string(), 1);
                    }
                }
            }
        }
        if !seen_any {
            return Err(GriError::EmptyCorpus);
        }
        let mut kept: Vec<(String, u64)> = raw.into_iter().filter(|&(_, c)| c >= min_count).collect();
        if kept.is_empty() {
            return Err(GriError::EmptyVocabulary { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let (words, counts): (Vec<String>, Vec<u64>) = kept.into_iter().unzip();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Vocabulary {
            words,
            counts,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.id(word).map(|i| self.counts[i])
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Ids of the in-vocabulary tokens of `line`; unknown tokens are dropped.
    pub fn encode(&self, line: &str) -> Vec<u32> {
        line.split_whitespace()
            .filter_map(|t| self.id(t))
            .map(|i| i as u32)
            .collect()
    }

    /// Per-word keep probability `min(1, sqrt(t/f) + t/f)` where `f` is the
    /// corpus-relative frequency. `t <= 0` disables subsampling (all ones).
    pub fn keep_probabilities(&self, t: f64) -> Vec<f64> {
        let total = self.total_count() as f64;
        self.counts
            .iter()
            .map(|&c| {
                if t <= 0.0 {
                    return 1.0;
                }
                let r = t / (c as f64 / total);
                (r.sqrt() + r).min(1.0)
            })
            .collect()
    }
}

/// An encoded corpus: one id sequence per input line.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub vocab: Vocabulary,
    pub lines: Vec<Vec<u32>>,
}

impl Corpus {
    pub fn from_lines<S: AsRef<str>>(lines: &[S], min_count: u64) -> Result<Self> {
        let vocab = Vocabulary::build(lines.iter().map(|l| l.as_ref()), min_count)?;
        let lines = lines.iter().map(|l| vocab.encode(l.as_ref())).collect();
        Ok(Corpus { vocab, lines })
    }

    pub fn read(path: impl AsRef<std::path::Path>, min_count: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let lines: Vec<&str> = text.lines().collect();
        Self::from_lines(&lines, min_count)
    }

    pub fn token_count(&self) -> usize {
        self.lines.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrainingPair {
    pub center: u32,
    pub context: u32,
}

/// Skip-gram pair generator with a dynamic window.
#[derive(Debug, Clone)]
pub struct PairGenerator {
    window: usize,
    keep: Option<Vec<f64>>,
}

impl PairGenerator {
    /// `subsample_t <= 0` turns subsampling off.
    pub fn new(vocab: &Vocabulary, window: usize, subsample_t: f64) -> Result<Self> {
        if window == 0 {
            return Err(GriError::InvalidConfig("window must be at least 1".into()));
        }
        let keep = (subsample_t > 0.0).then(|| vocab.keep_probabilities(subsample_t));
        Ok(PairGenerator { window, keep })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Emits `(w_i, w_j)` for every retained position `i` and every other
    /// retained `j` with `|i - j| <= r`, `r ~ U{1..window}`.
    ///
    /// Random draws happen in a fixed order: one uniform per position for
    /// subsampling (when enabled), then one radius per retained position.
    pub fn generate<R: Rng + ?Sized>(&self, line: &[u32], rng: &mut R) -> Vec<TrainingPair> {
        let kept: Vec<u32> = match &self.keep {
            Some(keep) => line
                .iter()
                .copied()
                .filter(|&w| rng.gen::<f64>() < keep[w as usize])
                .collect(),
            None => line.to_vec(),
        };
        let mut pairs = Vec::new();
        for (i, &center) in kept.iter().enumerate() {
            let r = rng.gen_range(1..=self.window);
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(kept.len().saturating_sub(1));
            for (j, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    pairs.push(TrainingPair { center, context });
                }
            }
        }
        pairs
    }
}

/// Samples word ids with probability proportional to `count^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_counts(vocab.counts())
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(NOISE_POWER);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probability(&self, id: usize) -> f64 {
        let prev = if id == 0 { 0.0 } else { self.cumulative[id - 1] };
        (self.cumulative[id] - prev) / self.cumulative.last().copied().unwrap_or(1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty sampler");
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }

    /// `k` draws, none equal to `exclude` (collisions are redrawn).
    pub fn sample_negatives<R: Rng + ?Sized>(&self, k: usize, exclude: usize, rng: &mut R) -> Result<Vec<usize>> {
        let has_alternative = (0..self.len()).any(|i| i != exclude && self.probability(i) > 0.0);
        if !has_alternative {
            return Err(GriError::CannotExclude { exclude });
        }
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let id = self.sample(rng);
            if id != exclude {
                out.push(id);
            }
        }
        Ok(out)
    }
}
