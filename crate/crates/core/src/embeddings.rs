//! Word-indexed embedding matrices and the word2vec text format.
//!
//! The text format is a `count dim` header followed by one `word v1 … vd`
//! line per word. Values are written with 6 decimals, so a write/read
//! round trip is lossless at that precision.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{GriError, Result};
use crate::linalg::Matrix;

/// Decimals used when writing vectors.
pub const TEXT_PRECISION: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Matrix,
}

impl Embeddings {
    pub fn new(words: Vec<String>, matrix: Matrix) -> Result<Self> {
        if words.len() != matrix.rows() {
            return Err(GriError::shape(
                "Embeddings::new",
                format!("{} words for {} rows", words.len(), matrix.rows()),
            ));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(GriError::VocabularyMismatch(format!("duplicate word {w:?}")));
            }
        }
        Ok(Embeddings {
            words,
            index,
            matrix,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.matrix.row(i))
    }

    /// Same vocabulary, new vectors.
    pub fn with_matrix(&self, matrix: Matrix) -> Result<Self> {
        if matrix.rows() != self.len() {
            return Err(GriError::shape(
                "Embeddings::with_matrix",
                format!("{} rows for {} words", matrix.rows(), self.len()),
            ));
        }
        Ok(Embeddings {
            words: self.words.clone(),
            index: self.index.clone(),
            matrix,
        })
    }

    pub fn read_word2vec(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        Self::parse_word2vec(reader, path)
    }

    pub fn parse_word2vec<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| GriError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };

        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => return Err(parse_err(1, "missing \"count dim\" header".into())),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match fields.as_slice() {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) => (c, d),
                _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
            },
            _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
        };

        let mut words = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        let mut index = HashMap::with_capacity(count);
        for (offset, line) in lines.enumerate() {
            let lineno = offset + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line").to_string();
            let start = data.len();
            for tok in parts {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(parse_err(lineno, format!("non-finite value {tok:?}")));
                }
                data.push(v);
            }
            let got = data.len() - start;
            if got != dim {
                return Err(parse_err(lineno, format!("expected {dim} values for {word:?}, found {got}")));
            }
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(GriError::DuplicateWord {
                    path: path.to_path_buf(),
                    line: lineno,
                    word,
                });
            }
            words.push(word);
        }
        if words.len() != count {
            return Err(parse_err(1, format!("header announces {count} words, file has {}", words.len())));
        }
        let matrix = Matrix::from_vec(words.len(), dim, data)?;
        Ok(Embeddings {
            words,
            index,
            matrix,
        })
    }

    pub fn write_word2vec(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_word2vec_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_word2vec_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim())?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for &x in self.matrix.row(i) {
                // avoid "-0.000000"
                let x = if x.abs() < 0.5e-6 { 0.0 } else { x };
                write!(w, " {x:.prec$}", prec = TEXT_PRECISION)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
