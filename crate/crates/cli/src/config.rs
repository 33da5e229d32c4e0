//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gri_core::lexicon::{read_pairs, SeedLexicon};
use gri_core::trainer::{IsoBatch, TrainerConfig};
use gri_core::{GriError, IsoLossKind, Result};
use sha2::{Digest, Sha256};

/// Every accepted key with its default; an empty default means unset.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("source_corpus", "", "tokenized source-language text, one sentence per line"),
    ("target_corpus", "", "tokenized target-language text (synth output)"),
    ("target_embeddings", "", "target-language word2vec text file"),
    ("pretrained_embeddings", "", "embeddings scoring graph edges (defaults to target_embeddings)"),
    ("source_embeddings", "", "trained source embeddings to evaluate"),
    ("lexicon", "", "ordered seed pairs split by train_end / test_end"),
    ("train_lexicon", "", "train pairs, when splits come as separate files"),
    ("dev_lexicon", "", "dev pairs"),
    ("test_lexicon", "", "test pairs"),
    ("output_dir", "out", "directory for all artifacts"),
    ("train_end", "5000", "pairs [0, train_end) form the train split"),
    ("test_end", "6500", "pairs [train_end, test_end) form the test split, the rest dev"),
    ("min_count", "5", "minimum corpus count for a vocabulary word"),
    ("window", "5", "maximum skip-gram window radius"),
    ("subsample_t", "0.001", "frequent-word subsampling threshold (0 disables)"),
    ("alpha", "0.7", "weight of the skip-gram loss; 1 disables the isomorphism loss"),
    ("lr", "0.001", "Adam learning rate"),
    ("epochs", "5", "passes over the source corpus"),
    ("negatives", "10", "negative samples per pair"),
    ("batch_size", "512", "skip-gram pairs per optimizer step"),
    ("iso_batch", "auto", "seed rows per isomorphism step: auto, all or a count"),
    ("dim", "100", "embedding dimension"),
    ("hidden", "", "graph convolution hidden width (defaults to dim)"),
    ("kind", "proc", "isomorphism loss: l2, proc or proc_init"),
    ("use_gcn", "true", "apply the graph convolution before the isomorphism loss"),
    ("rng_seed", "1", "seed for all training randomness"),
    ("thr", "0.5", "cosine threshold for graph edges"),
    ("graph_splits", "all", "lexicon splits whose targets form graph nodes: all or train"),
    ("runs", "1", "repetitions with seeds rng_seed, rng_seed+1, ... (train)"),
    ("knn", "10", "k of the k-NN graphs for eigenvector similarity"),
    ("max_seeds", "1000", "seed pairs used by the isometry metrics"),
    ("neighbor_k", "5", "k for the nearest-neighbour error breakdown"),
    ("vocab_size", "300", "synth: words per language"),
    ("sentences", "5000", "synth: corpus lines"),
    ("synth_seed", "7", "synth: generator seed"),
    ("synth_train", "150", "synth: train pairs"),
    ("synth_test", "75", "synth: test pairs"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

fn invalid(msg: String) -> GriError {
    GriError::InvalidConfig(msg)
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        cfg.merge_str(&text, path)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn merge_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| GriError::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match self.values.get_mut(&key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(invalid(format!("unknown config key {key:?}"))),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key).ok_or_else(|| invalid(format!("missing required key {key:?}")))?;
        raw.parse().map_err(|e| invalid(format!("{key} = {raw:?}: {e}")))
    }

    /// Path of an existing input file.
    pub fn input(&self, key: &str) -> Result<PathBuf> {
        let p = PathBuf::from(self.get(key).ok_or_else(|| invalid(format!("missing required path {key:?}")))?);
        if !p.is_file() {
            return Err(invalid(format!("{key}: {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn output_dir(&self) -> Result<PathBuf> {
        let dir = PathBuf::from(self.get("output_dir").unwrap_or("out"));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// SHA-256 of the sorted `key=value` lines.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.values {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn trainer(&self) -> Result<TrainerConfig> {
        let use_gcn = match self.get("use_gcn").unwrap_or("true") {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(invalid(format!("use_gcn must be true or false, got {other:?}"))),
        };
        let cfg = TrainerConfig {
            alpha: self.parse("alpha")?,
            lr: self.parse("lr")?,
            epochs: self.parse("epochs")?,
            negatives: self.parse("negatives")?,
            iso_batch: self.parse::<IsoBatch>("iso_batch")?,
            dim: self.parse("dim")?,
            hidden: self.get("hidden").map(|_| self.parse("hidden")).transpose()?,
            kind: self.parse::<IsoLossKind>("kind")?,
            rng_seed: self.parse("rng_seed")?,
            window: self.parse("window")?,
            subsample_t: self.parse("subsample_t")?,
            batch_size: self.parse("batch_size")?,
            use_gcn,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Either one ordered `lexicon` file or separate split files.
    pub fn lexicon(&self) -> Result<SeedLexicon> {
        if self.get("lexicon").is_some() {
            let pairs = read_pairs(self.input("lexicon")?)?;
            return SeedLexicon::split_ordered(pairs, self.parse("train_end")?, self.parse("test_end")?);
        }
        let load = |key: &str| -> Result<Vec<_>> {
            match self.get(key) {
                Some(_) => read_pairs(self.input(key)?),
                None => Ok(Vec::new()),
            }
        };
        let lex = SeedLexicon::from_splits(load("train_lexicon")?, load("dev_lexicon")?, load("test_lexicon")?);
        if lex.is_empty() {
            return Err(invalid("no lexicon given: set lexicon or train/dev/test_lexicon".into()));
        }
        Ok(lex)
    }
}
