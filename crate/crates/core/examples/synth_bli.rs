//! Baseline skip-gram vs. GRI on the synthetic bilingual corpus.
//!
//! cargo run --release -p gri-core --example synth_bli -- [runs] [dim] [epochs] [alpha] [kind] [graph] [lr] [mixing]
//!
//! `graph` is `train` (nodes from train-split targets) or `all`.

use std::time::Instant;

use gri_core::corpus::Corpus;
use gri_core::lexicon::Split;
use gri_core::mapeval::evaluate;
use gri_core::semgraph::{normalize_adjacency, SemanticGraph};
use gri_core::synth::{generate, SynthConfig};
use gri_core::trainer::{train, train_sgns, TrainerConfig};
use gri_core::IsoLossKind;

fn main() -> gri_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let runs: u64 = arg(0, "5").parse().unwrap();
    let dim: usize = arg(1, "16").parse().unwrap();
    let epochs: usize = arg(2, "5").parse().unwrap();
    let alpha: f64 = arg(3, "0.7").parse().unwrap();
    let kind: IsoLossKind = arg(4, "proc").parse()?;
    let graph_splits = match arg(5, "train").as_str() {
        "all" => vec![Split::Train, Split::Dev, Split::Test],
        _ => vec![Split::Train],
    };
    let lr: f64 = arg(6, "0.01").parse().unwrap();
    let mixing: f64 = arg(7, "0.3").parse().unwrap();

    let start = Instant::now();
    let data = generate(&SynthConfig { word_mixing: mixing, ..SynthConfig::default() })?;
    let src = Corpus::from_lines(&data.source_lines, 5)?;
    let trg = Corpus::from_lines(&data.target_lines, 5)?;
    let base = TrainerConfig { dim, epochs, alpha, kind, lr, ..TrainerConfig::default() };
    let target = train_sgns(&TrainerConfig { rng_seed: 1000, ..base.clone() }, &trg)?.embeddings;
    let graph = SemanticGraph::build(&data.lexicon.target_words(&graph_splits), &target, 0.5)?;
    println!("graph: {} nodes, {} edges ({:.1?})", graph.len(), graph.edges().len(), start.elapsed());
    let adj = normalize_adjacency(&graph);

    let (mut sb, mut sg) = (0.0, 0.0);
    for r in 0..runs {
        let cfg = TrainerConfig { rng_seed: r + 1, ..base.clone() };
        let b = train_sgns(&cfg, &src)?.embeddings;
        let g = train(&cfg, &src, &data.lexicon, &target, &adj)?;
        let pb = evaluate(&b, &target, &data.lexicon, Split::Test)?.1.p_at_1;
        let pg = evaluate(&g.embeddings, &target, &data.lexicon, Split::Test)?.1.p_at_1;
        let last = g.report.epochs.last().unwrap();
        println!("run {r}: baseline {:.3}  gri {:.3}  (iso {:.4}, sg {:.4}) {:.1?}", pb, pg, last.iso_loss, last.sg_loss, start.elapsed());
        sb += pb;
        sg += pg;
    }
    println!("mean: baseline {:.3} gri {:.3}", sb / runs as f64, sg / runs as f64);
    Ok(())
}
