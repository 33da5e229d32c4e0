//! Bilingual seed lexicons: `source target` pairs, one per line.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GriError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPair {
    pub source: String,
    pub target: String,
}

impl SeedPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        SeedPair {
            source: source.into(),
            target: target.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = GriError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(GriError::InvalidConfig(format!("unknown split {other:?}"))),
        }
    }
}

/// Default MUSE-style boundaries: pairs `[0, 5000)` train, `[5000, 6500)`
/// test, `[6500, ..)` dev.
pub const MUSE_TRAIN_END: usize = 5000;
pub const MUSE_TEST_END: usize = 6500;

/// Ordered seed pairs with a train/dev/test label each. Order within the
/// lexicon is train, then dev, then test.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedLexicon {
    pairs: Vec<(SeedPair, Split)>,
}

impl SeedLexicon {
    pub fn from_splits(train: Vec<SeedPair>, dev: Vec<SeedPair>, test: Vec<SeedPair>) -> Self {
        let pairs = train
            .into_iter()
            .map(|p| (p, Split::Train))
            .chain(dev.into_iter().map(|p| (p, Split::Dev)))
            .chain(test.into_iter().map(|p| (p, Split::Test)))
            .collect();
        SeedLexicon { pairs }
    }

    /// Cuts one ordered pair list at `train_end` and `test_end`:
    /// `[0, train_end)` train, `[train_end, test_end)` test, the rest dev.
    pub fn split_ordered(pairs: Vec<SeedPair>, train_end: usize, test_end: usize) -> Result<Self> {
        if train_end > test_end {
            return Err(GriError::InvalidConfig(format!(
                "train_end {train_end} exceeds test_end {test_end}"
            )));
        }
        let mut train = Vec::new();
        let mut dev = Vec::new();
        let mut test = Vec::new();
        for (i, p) in pairs.into_iter().enumerate() {
            if i < train_end {
                train.push(p);
            } else if i < test_end {
                test.push(p);
            } else {
                dev.push(p);
            }
        }
        Ok(Self::from_splits(train, dev, test))
    }

    pub fn split_muse(pairs: Vec<SeedPair>) -> Self {
        Self::split_ordered(pairs, MUSE_TRAIN_END, MUSE_TEST_END).expect("constant bounds are ordered")
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SeedPair, Split)> {
        self.pairs.iter().map(|(p, s)| (p, *s))
    }

    pub fn split(&self, split: Split) -> Vec<SeedPair> {
        self.iter().filter(|&(_, s)| s == split).map(|(p, _)| p.clone()).collect()
    }

    /// Target words of the chosen splits, deduplicated, first occurrence order.
    pub fn target_words(&self, splits: &[Split]) -> Vec<String> {
        let mut seen = HashSet::new();
        self.iter()
            .filter(|(_, s)| splits.contains(s))
            .filter(|(p, _)| seen.insert(p.target.as_str()))
            .map(|(p, _)| p.target.clone())
            .collect()
    }
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<SeedPair>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut toks = line.split_whitespace();
        match (toks.next(), toks.next(), toks.next()) {
            (None, _, _) => continue,
            (Some(s), Some(t), None) => pairs.push(SeedPair::new(s, t)),
            _ => {
                return Err(GriError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected \"source target\", got {line:?}"),
                })
            }
        }
    }
    Ok(pairs)
}

pub fn write_pairs(path: impl AsRef<Path>, pairs: &[SeedPair]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    for p in pairs {
        writeln!(f, "{} {}", p.source, p.target)?;
    }
    f.flush()?;
    Ok(())
}
