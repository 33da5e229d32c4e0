//! Graph-based relative isomorphism for bilingual lexicon induction.
//!
//! Source-language skip-gram embeddings are trained jointly with an
//! isomorphism loss that pulls graph-convolved seed vectors towards their
//! target-language translations. The crate also provides the supervised
//! mapping and P@1 evaluation used to measure the result, and two
//! geometric isomorphism diagnostics.
//!
//! ```no_run
//! use gri_core::{corpus::Corpus, embeddings::Embeddings, lexicon, semgraph, trainer};
//!
//! # fn main() -> gri_core::Result<()> {
//! let corpus = Corpus::read("src.txt", 5)?;
//! let target = Embeddings::read_word2vec("trg.vec")?;
//! let lex = lexicon::SeedLexicon::split_muse(lexicon::read_pairs("pairs.txt")?);
//! let graph = semgraph::SemanticGraph::build(
//!     &lex.target_words(&[lexicon::Split::Train, lexicon::Split::Dev, lexicon::Split::Test]),
//!     &target,
//!     semgraph::DEFAULT_THRESHOLD,
//! )?;
//! let adj = semgraph::normalize_adjacency(&graph);
//! let out = trainer::train(&trainer::TrainerConfig::default(), &corpus, &lex, &target, &adj)?;
//! out.embeddings.write_word2vec("src.vec")?;
//! # Ok(())
//! # }
//! ```

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod gcn;
pub mod isoloss;
pub mod isometry;
pub mod lexicon;
pub mod linalg;
pub mod mapeval;
pub mod semgraph;
pub mod sgns;
pub mod synth;
pub mod trainer;

pub use embeddings::Embeddings;
pub use error::{GriError, Result};
pub use isoloss::IsoLossKind;
pub use lexicon::{SeedLexicon, SeedPair, Split};
pub use linalg::Matrix;
pub use trainer::{GriTrainer, TrainerConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
