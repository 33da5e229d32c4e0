use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gri_core::corpus::{Corpus, Vocabulary};
use gri_core::isometry::{isometry_report, IsometryReport};
use gri_core::lexicon::{write_pairs, SeedLexicon, Split};
use gri_core::mapeval::{align_embeddings, neighbor_errors, p_at_1, preprocess, EvalReport, NeighborErrors};
use gri_core::semgraph::{normalize_adjacency, SemanticGraph};
use gri_core::synth::{generate, SynthConfig};
use gri_core::trainer::{train, train_sgns, EpochStats, TrainOutcome, TrainerConfig};
use gri_core::{Embeddings, GriError, Result, VERSION};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: String,
    pub rng_seed: u64,
    pub config: &'a BTreeMap<String, String>,
}

fn metadata<'a>(cfg: &'a RunConfig, command: &'a str) -> Result<Metadata<'a>> {
    Ok(Metadata {
        tool: "gri",
        version: VERSION,
        command,
        config_hash: cfg.hash(),
        rng_seed: cfg.parse("rng_seed")?,
        config: cfg.values(),
    })
}

/// `#` comment line heading every TSV report.
fn provenance(cfg: &RunConfig, command: &str) -> Result<String> {
    let m = metadata(cfg, command)?;
    Ok(format!("# {} {} {} config_hash={} rng_seed={}", m.tool, m.version, m.command, m.config_hash, m.rng_seed))
}

fn json_err(e: serde_json::Error) -> GriError {
    GriError::Io(std::io::Error::other(e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(json_err)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(json_err)
}

fn graph_splits(cfg: &RunConfig) -> Result<Vec<Split>> {
    match cfg.get("graph_splits").unwrap_or("all") {
        "all" => Ok(vec![Split::Train, Split::Dev, Split::Test]),
        "train" => Ok(vec![Split::Train]),
        other => Err(GriError::InvalidConfig(format!("graph_splits must be all or train, got {other:?}"))),
    }
}

fn build_graph(cfg: &RunConfig, lexicon: &SeedLexicon, target: Option<&Embeddings>) -> Result<SemanticGraph> {
    let words = lexicon.target_words(&graph_splits(cfg)?);
    let thr: f64 = cfg.parse("thr")?;
    match cfg.get("pretrained_embeddings") {
        Some(_) => SemanticGraph::build(&words, &Embeddings::read_word2vec(cfg.input("pretrained_embeddings")?)?, thr),
        None => match target {
            Some(t) => SemanticGraph::build(&words, t, thr),
            None => SemanticGraph::build(&words, &Embeddings::read_word2vec(cfg.input("target_embeddings")?)?, thr),
        },
    }
}

pub fn cmd_build_vocab(cfg: &RunConfig) -> Result<Value> {
    let text = fs::read_to_string(cfg.input("source_corpus")?)?;
    let vocab = Vocabulary::build(text.lines(), cfg.parse("min_count")?)?;
    let dir = cfg.output_dir()?;
    let mut w = BufWriter::new(File::create(dir.join("vocab.tsv"))?);
    writeln!(w, "{}", provenance(cfg, "build-vocab")?)?;
    for (word, count) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(w, "{word}\t{count}")?;
    }
    w.flush()?;
    let summary = json!({ "words": vocab.len(), "tokens": vocab.total_count(), "min_count": vocab.min_count() });
    write_json(&dir.join("vocab.json"), &json!({ "meta": metadata(cfg, "build-vocab")?, "vocabulary": summary }))?;
    Ok(summary)
}

pub fn cmd_build_graph(cfg: &RunConfig) -> Result<Value> {
    let lexicon = cfg.lexicon()?;
    let graph = build_graph(cfg, &lexicon, None)?;
    let dir = cfg.output_dir()?;
    graph.write_tsv(dir.join("graph.tsv"))?;
    let covered = (0..graph.len()).filter(|&i| graph.is_covered(i)).count();
    let summary = json!({
        "nodes": graph.len(),
        "covered_nodes": covered,
        "edges": graph.edges().len(),
        "threshold": graph.threshold(),
        "degenerate": graph.is_degenerate(),
    });
    write_json(&dir.join("graph.json"), &json!({ "meta": metadata(cfg, "build-graph")?, "graph": summary }))?;
    Ok(summary)
}

/// Preprocess, align on the train split and score the test split.
fn evaluate(src: &Embeddings, trg: &Embeddings, lexicon: &SeedLexicon) -> Result<(EvalReport, Embeddings, bool, usize)> {
    let src = preprocess(src)?;
    let trg = preprocess(trg)?;
    let model = align_embeddings(&src, &trg, &lexicon.split(Split::Train))?;
    let mapped_trg = model.map_target(&trg)?;
    let report = p_at_1(&model.map_source(&src)?, &mapped_trg, &lexicon.split(Split::Test))?;
    Ok((report, mapped_trg, model.degenerate, model.n_seeds))
}

#[derive(Debug, Serialize)]
struct RunSummary {
    rng_seed: u64,
    checkpoint: PathBuf,
    epochs: Vec<EpochStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_at_1: Option<f64>,
}

fn train_once(cfg: &TrainerConfig, corpus: &Corpus, gri: Option<(&SeedLexicon, &Embeddings, &SemanticGraph)>) -> Result<TrainOutcome> {
    match gri {
        Some((lex, target, graph)) => train(cfg, corpus, lex, target, &normalize_adjacency(graph)),
        None => train_sgns(cfg, corpus),
    }
}

/// Trains source embeddings; with `runs > 1` every run is also evaluated
/// and the mean and standard deviation of P@1 are reported.
pub fn cmd_train(cfg: &RunConfig) -> Result<Value> {
    let trainer = cfg.trainer()?;
    let runs: u64 = cfg.parse("runs")?;
    if runs == 0 {
        return Err(GriError::InvalidConfig("runs must be positive".into()));
    }
    let corpus_path = cfg.input("source_corpus")?;
    let needs_target = trainer.alpha < 1.0 || runs > 1 || trainer.kind == gri_core::IsoLossKind::ProcInit;
    let target = if needs_target {
        Some(Embeddings::read_word2vec(cfg.input("target_embeddings")?)?)
    } else {
        None
    };
    let lexicon = if needs_target { Some(cfg.lexicon()?) } else { None };
    let dir = cfg.output_dir()?;

    let corpus = Corpus::read(&corpus_path, cfg.parse("min_count")?)?;
    info!("corpus: {} words, {} tokens", corpus.vocab.len(), corpus.token_count());
    let graph = match (&lexicon, &target) {
        (Some(l), Some(t)) if trainer.alpha < 1.0 || trainer.kind == gri_core::IsoLossKind::ProcInit => Some(build_graph(cfg, l, Some(t))?),
        _ => None,
    };
    let gri = match (&lexicon, &target, &graph) {
        (Some(l), Some(t), Some(g)) => Some((l, t, g)),
        _ => None,
    };

    let mut summaries = Vec::new();
    for k in 0..runs {
        let run_cfg = TrainerConfig {
            rng_seed: trainer.rng_seed + k,
            ..trainer.clone()
        };
        let out = train_once(&run_cfg, &corpus, gri)?;
        let checkpoint = if runs == 1 {
            dir.join("source.vec")
        } else {
            let sub = dir.join(format!("run{k}"));
            fs::create_dir_all(&sub)?;
            sub.join("source.vec")
        };
        out.embeddings.write_word2vec(&checkpoint)?;
        let p = match (runs > 1, &lexicon, &target) {
            (true, Some(l), Some(t)) => Some(evaluate(&out.embeddings, t, l)?.0.p_at_1),
            _ => None,
        };
        info!("run {k}: seed {} -> {}", run_cfg.rng_seed, checkpoint.display());
        summaries.push(RunSummary {
            rng_seed: run_cfg.rng_seed,
            checkpoint,
            epochs: out.report.epochs,
            p_at_1: p,
        });
    }

    let mut result = json!({ "runs": to_value(&summaries)? });
    if runs > 1 {
        let ps: Vec<f64> = summaries.iter().filter_map(|s| s.p_at_1).collect();
        let n = ps.len() as f64;
        let mean = ps.iter().sum::<f64>() / n;
        let std = (ps.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        result["p_at_1_mean"] = json!(mean);
        result["p_at_1_std"] = json!(std);
    }
    if let Some(g) = &graph {
        result["graph"] = json!({ "nodes": g.len(), "edges": g.edges().len() });
    }
    let mut file = json!({ "meta": metadata(cfg, "train")? });
    file["train"] = result.clone();
    write_json(&dir.join("train.json"), &file)?;
    Ok(result)
}

fn isometry(cfg: &RunConfig, src: &Embeddings, trg: &Embeddings, lexicon: &SeedLexicon) -> Result<IsometryReport> {
    let mut seeds = lexicon.split(Split::Train);
    if seeds.is_empty() {
        seeds = lexicon.iter().map(|(p, _)| p.clone()).collect();
    }
    isometry_report(src, trg, &seeds, cfg.parse("max_seeds")?, cfg.parse("knn")?)
}

/// Vocabulary gaps of the lexicon, listed explicitly.
fn check_coverage(src: &Embeddings, trg: &Embeddings, lexicon: &SeedLexicon) -> Result<()> {
    let all: Vec<_> = lexicon.iter().map(|(p, _)| p.clone()).collect();
    let (s, t) = gri_core::mapeval::coverage_gaps(src, trg, &all);
    if !s.is_empty() || !t.is_empty() {
        log::warn!("{} lexicon source words and {} target words lack vectors", s.len(), t.len());
        let show = |v: &[String]| v.iter().take(20).cloned().collect::<Vec<_>>().join(", ");
        if !s.is_empty() {
            log::warn!("missing source words: {}", show(&s));
        }
        if !t.is_empty() {
            log::warn!("missing target words: {}", show(&t));
        }
    }
    if lexicon.split(Split::Train).iter().all(|p| src.index_of(&p.source).is_none() || trg.index_of(&p.target).is_none()) {
        return Err(GriError::VocabularyMismatch(format!(
            "no train pair is covered by both embeddings (missing source words: {}; missing target words: {})",
            s.len(),
            t.len()
        )));
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<Value> {
    let src = Embeddings::read_word2vec(cfg.input("source_embeddings")?)?;
    let trg = Embeddings::read_word2vec(cfg.input("target_embeddings")?)?;
    let lexicon = cfg.lexicon()?;
    check_coverage(&src, &trg, &lexicon)?;
    let (report, mapped_trg, degenerate, n_seeds) = evaluate(&src, &trg, &lexicon)?;
    let errors: NeighborErrors = neighbor_errors(&report, &mapped_trg, cfg.parse("neighbor_k")?);
    let iso = isometry(cfg, &src, &trg, &lexicon)?;

    let dir = cfg.output_dir()?;
    let mut w = BufWriter::new(File::create(dir.join("predictions.tsv"))?);
    writeln!(w, "{}", provenance(cfg, "eval")?)?;
    writeln!(w, "source\tpredicted\tcorrect\tgold")?;
    for p in &report.predictions {
        writeln!(w, "{}\t{}\t{}\t{}", p.source, p.predicted, p.correct, p.gold.join(","))?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("eval.tsv"))?);
    writeln!(w, "{}", provenance(cfg, "eval")?)?;
    for (k, v) in [
        ("p_at_1", report.p_at_1),
        ("n_queries", report.n_queries as f64),
        ("oov_queries", report.oov_queries as f64),
        ("pearson_r", iso.pearson_r),
        ("eigsim", iso.eigsim),
        ("k_used", iso.k_used as f64),
        ("n_seeds_used", iso.n_seeds_used as f64),
    ] {
        writeln!(w, "{k}\t{v}")?;
    }
    w.flush()?;

    let result = json!({
        "eval": to_value(&report)?,
        "alignment": { "n_seeds": n_seeds, "degenerate": degenerate },
        "neighbor_errors": to_value(&errors)?,
        "isometry": to_value(&iso)?,
    });
    let mut file = json!({ "meta": metadata(cfg, "eval")? });
    file["report"] = result.clone();
    write_json(&dir.join("eval.json"), &file)?;
    Ok(result)
}

pub fn cmd_metrics(cfg: &RunConfig) -> Result<Value> {
    let src = Embeddings::read_word2vec(cfg.input("source_embeddings")?)?;
    let trg = Embeddings::read_word2vec(cfg.input("target_embeddings")?)?;
    let lexicon = cfg.lexicon()?;
    let iso = to_value(&isometry(cfg, &src, &trg, &lexicon)?)?;
    let dir = cfg.output_dir()?;
    write_json(&dir.join("metrics.json"), &json!({ "meta": metadata(cfg, "metrics")?, "isometry": iso }))?;
    Ok(iso)
}

/// Synthetic bilingual corpus, its lexicon, target embeddings and a
/// ready-to-use config for `train` and `eval`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Value> {
    let train_pairs: usize = cfg.parse("synth_train")?;
    let test_pairs: usize = cfg.parse("synth_test")?;
    let synth = SynthConfig {
        vocab_size: cfg.parse("vocab_size")?,
        sentences: cfg.parse("sentences")?,
        seed: cfg.parse("synth_seed")?,
        train_pairs,
        test_pairs,
        ..SynthConfig::default()
    };
    let data = generate(&synth)?;
    let dir = cfg.output_dir()?;
    fs::write(dir.join("source.txt"), data.source_lines.join("\n") + "\n")?;
    fs::write(dir.join("target.txt"), data.target_lines.join("\n") + "\n")?;
    write_pairs(dir.join("lexicon.txt"), &data.pairs)?;

    let trainer = TrainerConfig {
        rng_seed: synth.seed,
        ..cfg.trainer()?
    };
    let target = Corpus::from_lines(&data.target_lines, cfg.parse("min_count")?)?;
    let vectors = train_sgns(&trainer, &target)?.embeddings;
    vectors.write_word2vec(dir.join("target.vec"))?;

    let abs = |name: &str| fs::canonicalize(dir.join(name)).map(|p| p.display().to_string());
    let conf = format!(
        "source_corpus = {}\ntarget_embeddings = {}\nlexicon = {}\nsource_embeddings = {}\ntrain_end = {}\ntest_end = {}\ndim = {}\nlr = {}\nmin_count = {}\n",
        abs("source.txt")?,
        abs("target.vec")?,
        abs("lexicon.txt")?,
        fs::canonicalize(&dir)?.join("source.vec").display(),
        train_pairs,
        train_pairs + test_pairs,
        trainer.dim,
        trainer.lr,
        cfg.parse::<u64>("min_count")?,
    );
    fs::write(dir.join("synth.conf"), conf)?;
    let summary = json!({
        "sentences": data.source_lines.len(),
        "pairs": data.pairs.len(),
        "train_end": train_pairs,
        "test_end": train_pairs + test_pairs,
        "target_vocabulary": vectors.len(),
    });
    write_json(&dir.join("synth.json"), &json!({ "meta": metadata(cfg, "synth")?, "synth": summary }))?;
    Ok(summary)
}
