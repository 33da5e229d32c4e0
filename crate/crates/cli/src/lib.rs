//! Batch front end for graph-based relative isomorphism training and
//! bilingual lexicon induction evaluation.

pub mod commands;
pub mod config;

pub use commands::{cmd_build_graph, cmd_build_vocab, cmd_eval, cmd_metrics, cmd_synth, cmd_train};
pub use config::RunConfig;

use gri_core::GriError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(e: &GriError) -> i32 {
    match e {
        GriError::InvalidConfig(_) => EXIT_CONFIG,
        e if e.is_numeric_failure() => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}
