//! Joint training of source embeddings under `α · L_SG + (1 − α) · L_ISO`.
//!
//! Each step consumes one batch of skip-gram pairs and, unless `α = 1`, one
//! isomorphism step: the current source rows of the seed words are gathered
//! into `U`, pushed through the graph convolution, compared with the fixed
//! target seed matrix, and the gradient is propagated back to those rows and
//! to the convolution weights. All parameters then take one Adam step.
//! Embedding rows use lazy (sparse) Adam: only rows with a gradient in the
//! current step have their moments and values updated.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, NegativeSampler, PairGenerator, TrainingPair, Vocabulary};
use crate::embeddings::Embeddings;
use crate::error::{GriError, Result};
use crate::gcn::GcnParams;
use crate::isoloss::{gri_loss, iso_loss_grad, IsoLossKind};
use crate::lexicon::{SeedLexicon, Split};
use crate::linalg::Matrix;
use crate::semgraph::NormalizedAdjacency;

/// Above this many loss rows the iso step samples a mini-batch.
pub const FULL_ISO_BATCH_LIMIT: usize = 5000;
pub const SAMPLED_ISO_BATCH: usize = 1024;

/// Salt mixed into the seed of the RNG used by the isomorphism branch, so
/// that the skip-gram stream is identical with and without it.
const ISO_RNG_SALT: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsoBatch {
    /// All rows up to [`FULL_ISO_BATCH_LIMIT`], else [`SAMPLED_ISO_BATCH`].
    Auto,
    All,
    Sampled(usize),
}

impl fmt::Display for IsoBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoBatch::Auto => f.write_str("auto"),
            IsoBatch::All => f.write_str("all"),
            IsoBatch::Sampled(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for IsoBatch {
    type Err = GriError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(IsoBatch::Auto),
            "all" => Ok(IsoBatch::All),
            n => match n.parse::<usize>() {
                Ok(k) if k > 0 => Ok(IsoBatch::Sampled(k)),
                _ => Err(GriError::InvalidConfig(format!("iso_batch must be auto, all or a positive count, got {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub alpha: f64,
    pub lr: f64,
    pub epochs: usize,
    pub negatives: usize,
    pub iso_batch: IsoBatch,
    pub dim: usize,
    /// Hidden width of the graph convolution; `None` means `dim`.
    pub hidden: Option<usize>,
    pub kind: IsoLossKind,
    pub rng_seed: u64,
    pub window: usize,
    pub subsample_t: f64,
    /// Skip-gram (center, context) pairs per step.
    pub batch_size: usize,
    /// `false` skips the convolution (`U_m = U`), the "without graph" ablation.
    pub use_gcn: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            alpha: 0.7,
            lr: 0.001,
            epochs: 5,
            negatives: 10,
            iso_batch: IsoBatch::Auto,
            dim: 100,
            hidden: None,
            kind: IsoLossKind::Proc,
            rng_seed: 1,
            window: 5,
            subsample_t: 1e-3,
            batch_size: 512,
            use_gcn: true,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GriError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.dim == 0 || self.hidden == Some(0) {
            return bad("dim and hidden must be positive".into());
        }
        if self.negatives == 0 {
            return bad("negatives must be positive".into());
        }
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !self.subsample_t.is_finite() {
            return bad("subsample_t must be finite".into());
        }
        Ok(())
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden.unwrap_or(self.dim)
    }
}

/// Adam hyper-parameters (β1 = 0.9, β2 = 0.999, ε = 1e-8).
#[derive(Debug, Clone, Copy)]
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    #[inline]
    fn update(&self, t: u64, param: &mut [f64], m: &mut [f64], v: &mut [f64], grad: &[f64]) {
        let bc1 = 1.0 - self.beta1.powi(t as i32);
        let bc2 = 1.0 - self.beta2.powi(t as i32);
        for (((p, m), v), &g) in param.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(grad) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Matrix,
    v: Matrix,
}

impl Moments {
    fn like(x: &Matrix) -> Self {
        Moments {
            m: Matrix::zeros(x.rows(), x.cols()),
            v: Matrix::zeros(x.rows(), x.cols()),
        }
    }
}

/// Dense gradient buffer that remembers which rows were written.
#[derive(Debug, Clone)]
struct RowGrads {
    grad: Matrix,
    touched: Vec<bool>,
    rows: Vec<usize>,
}

impl RowGrads {
    fn new(rows: usize, cols: usize) -> Self {
        RowGrads {
            grad: Matrix::zeros(rows, cols),
            touched: vec![false; rows],
            rows: Vec::new(),
        }
    }

    fn add(&mut self, row: usize, g: &[f64], scale: f64) {
        if !self.touched[row] {
            self.touched[row] = true;
            self.rows.push(row);
        }
        for (d, &x) in self.grad.row_mut(row).iter_mut().zip(g) {
            *d += scale * x;
        }
    }

    fn apply(&mut self, adam: &Adam, t: u64, param: &mut Matrix, state: &mut Moments) {
        // sorted for a deterministic update order
        self.rows.sort_unstable();
        for &r in &self.rows {
            adam.update(t, param.row_mut(r), state.m.row_mut(r), state.v.row_mut(r), self.grad.row(r));
        }
    }

    fn clear(&mut self) {
        for &r in &self.rows {
            self.grad.row_mut(r).iter_mut().for_each(|x| *x = 0.0);
            self.touched[r] = false;
        }
        self.rows.clear();
    }

    fn is_finite(&self) -> bool {
        self.rows.iter().all(|&r| self.grad.row(r).iter().all(|x| x.is_finite()))
    }
}

/// Maps each graph node (a target seed word) to the source row that feeds
/// the convolution and the target row it is compared against.
#[derive(Debug, Clone)]
pub struct SeedAlignment {
    nodes: Vec<String>,
    source_rows: Vec<Option<usize>>,
    target_rows: Vec<Option<usize>>,
    loss_nodes: Vec<usize>,
    init_pairs: Vec<(usize, usize)>,
}

impl SeedAlignment {
    /// For every node the source word is taken from the first train pair
    /// with that target, else from the first pair of any split. Only nodes
    /// with a train pair and vectors on both sides enter the loss.
    pub fn build(nodes: &[String], lexicon: &SeedLexicon, vocab: &Vocabulary, target: &Embeddings) -> Result<Self> {
        let mut source_rows = Vec::with_capacity(nodes.len());
        let mut target_rows = Vec::with_capacity(nodes.len());
        let mut loss_nodes = Vec::new();
        for (k, node) in nodes.iter().enumerate() {
            let train_src = lexicon
                .iter()
                .find(|(p, s)| *s == Split::Train && p.target == *node)
                .map(|(p, _)| p.source.as_str());
            let any_src = lexicon.iter().find(|(p, _)| p.target == *node).map(|(p, _)| p.source.as_str());
            let src = train_src.or(any_src).and_then(|w| vocab.id(w));
            let trg = target.index_of(node);
            if train_src.is_some() && src.is_some() && trg.is_some() {
                loss_nodes.push(k);
            }
            source_rows.push(src);
            target_rows.push(trg);
        }
        if loss_nodes.is_empty() {
            return Err(GriError::VocabularyMismatch(
                "no train seed pair has vectors in both the source vocabulary and the target embedding".into(),
            ));
        }

        let mut init_pairs = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (p, s) in lexicon.iter() {
            if s != Split::Train {
                continue;
            }
            if let (Some(src), Some(trg)) = (vocab.id(&p.source), target.index_of(&p.target)) {
                if seen.insert(src) {
                    init_pairs.push((src, trg));
                }
            }
        }

        Ok(SeedAlignment {
            nodes: nodes.to_vec(),
            source_rows,
            target_rows,
            loss_nodes,
            init_pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn loss_nodes(&self) -> &[usize] {
        &self.loss_nodes
    }

    pub fn source_row(&self, node: usize) -> Option<usize> {
        self.source_rows[node]
    }

    /// `(source row, target row)` for each distinct source word of the train
    /// split, first translation wins.
    pub fn init_pairs(&self) -> &[(usize, usize)] {
        &self.init_pairs
    }

    fn target_matrix(&self, target: &Embeddings) -> Matrix {
        let mut v = Matrix::zeros(self.len(), target.dim());
        for (k, r) in self.target_rows.iter().enumerate() {
            if let Some(r) = r {
                v.row_mut(k).copy_from_slice(target.matrix().row(*r));
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
struct IsoBranch {
    alignment: SeedAlignment,
    v_seed: Matrix,
    gcn: Option<GcnParams>,
    w0_state: Option<Moments>,
    w1_state: Option<Moments>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub sg: f64,
    pub iso: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub steps: usize,
    pub pairs: usize,
    pub sg_loss: f64,
    pub iso_loss: f64,
    pub combined_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub steps: usize,
    /// Combined loss of every step, in order.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub embeddings: Embeddings,
    pub report: TrainReport,
}

#[derive(Debug, Clone)]
pub struct GriTrainer {
    config: TrainerConfig,
    vocab: Vocabulary,
    model: crate::sgns::SgnsModel,
    sampler: NegativeSampler,
    pairs: PairGenerator,
    rng: ChaCha8Rng,
    adam: Adam,
    t: u64,
    input_state: Moments,
    output_state: Moments,
    input_grads: RowGrads,
    output_grads: RowGrads,
    iso: Option<IsoBranch>,
}

impl GriTrainer {
    /// Skip-gram only.
    pub fn sgns_only(config: &TrainerConfig, vocab: &Vocabulary) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let model = crate::sgns::SgnsModel::new(vocab.len(), config.dim, &mut rng);
        Ok(GriTrainer {
            config: config.clone(),
            vocab: vocab.clone(),
            sampler: NegativeSampler::new(vocab),
            pairs: PairGenerator::new(vocab, config.window, config.subsample_t)?,
            rng,
            adam: Adam::new(config.lr),
            t: 0,
            input_state: Moments::like(&model.input),
            output_state: Moments::like(&model.output),
            input_grads: RowGrads::new(vocab.len(), config.dim),
            output_grads: RowGrads::new(vocab.len(), config.dim),
            model,
            iso: None,
        })
    }

    /// Full objective. `graph` must be ordered like the seed nodes; each node
    /// is a target word of `lexicon`. With `ProcInit` the train-seed source
    /// rows are initialized from their translations.
    pub fn new(
        config: &TrainerConfig,
        vocab: &Vocabulary,
        lexicon: &SeedLexicon,
        target: &Embeddings,
        graph: &NormalizedAdjacency,
    ) -> Result<Self> {
        let mut trainer = Self::sgns_only(config, vocab)?;
        if target.dim() != config.dim {
            return Err(GriError::InvalidConfig(format!(
                "target embedding dim {} differs from training dim {}",
                target.dim(),
                config.dim
            )));
        }
        let alignment = SeedAlignment::build(graph.nodes(), lexicon, vocab, target)?;
        let v_seed = alignment.target_matrix(target);
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ ISO_RNG_SALT);
        let gcn = config
            .use_gcn
            .then(|| GcnParams::new(graph.clone(), config.dim, config.hidden_width(), &mut rng));
        trainer.iso = Some(IsoBranch {
            w0_state: gcn.as_ref().map(|g| Moments::like(&g.w0)),
            w1_state: gcn.as_ref().map(|g| Moments::like(&g.w1)),
            alignment,
            v_seed,
            gcn,
            rng,
        });
        if config.kind == IsoLossKind::ProcInit {
            trainer.apply_proc_init(target)?;
        }
        Ok(trainer)
    }

    /// Copies each train seed's target vector into its source input row. The
    /// rows stay trainable.
    pub fn apply_proc_init(&mut self, target: &Embeddings) -> Result<()> {
        let iso = self
            .iso
            .as_ref()
            .ok_or_else(|| GriError::ContractViolation("proc-init needs seed alignment".into()))?;
        for &(src, trg) in iso.alignment.init_pairs() {
            self.model.input.row_mut(src).copy_from_slice(target.matrix().row(trg));
        }
        Ok(())
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn model(&self) -> &crate::sgns::SgnsModel {
        &self.model
    }

    pub fn gcn(&self) -> Option<&GcnParams> {
        self.iso.as_ref().and_then(|i| i.gcn.as_ref())
    }

    pub fn alignment(&self) -> Option<&SeedAlignment> {
        self.iso.as_ref().map(|i| &i.alignment)
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    fn iso_active(&self) -> bool {
        self.iso.is_some() && self.config.alpha < 1.0
    }

    /// One optimizer step on a batch of skip-gram pairs.
    pub fn step(&mut self, batch: &[TrainingPair]) -> Result<StepLosses> {
        let alpha = self.config.alpha;
        let mut sg = 0.0;
        if !batch.is_empty() {
            let scale = alpha / batch.len() as f64;
            for p in batch {
                let (center, context) = (p.center as usize, p.context as usize);
                let negatives = self.sampler.sample_negatives(self.config.negatives, context, &mut self.rng)?;
                sg += self.model.loss(center, context, &negatives);
                let g = self.model.grad(center, context, &negatives);
                self.input_grads.add(center, &g.center_grad, scale);
                for (row, grad) in &g.output_grads {
                    self.output_grads.add(*row, grad, scale);
                }
            }
            sg /= batch.len() as f64;
        }

        let mut iso_loss = 0.0;
        let mut weight_grads = None;
        if self.iso_active() {
            let (loss, wg) = self.iso_gradients(1.0 - alpha)?;
            iso_loss = loss;
            weight_grads = wg;
        }

        let combined = if self.iso_active() {
            gri_loss(sg, iso_loss, alpha)
        } else {
            sg
        };
        if !combined.is_finite() || !self.input_grads.is_finite() || !self.output_grads.is_finite() {
            return Err(GriError::NonFiniteLoss {
                step: self.t as usize,
                sg_loss: sg,
                iso_loss,
            });
        }

        self.t += 1;
        let t = self.t;
        self.input_grads.apply(&self.adam, t, &mut self.model.input, &mut self.input_state);
        self.output_grads.apply(&self.adam, t, &mut self.model.output, &mut self.output_state);
        self.input_grads.clear();
        self.output_grads.clear();
        if let (Some((d_w0, d_w1)), Some(iso)) = (weight_grads, self.iso.as_mut()) {
            let gcn = iso.gcn.as_mut().expect("weight grads imply a gcn");
            let s0 = iso.w0_state.as_mut().expect("state");
            self.adam.update(t, gcn.w0.data_mut(), s0.m.data_mut(), s0.v.data_mut(), d_w0.data());
            let s1 = iso.w1_state.as_mut().expect("state");
            self.adam.update(t, gcn.w1.data_mut(), s1.m.data_mut(), s1.v.data_mut(), d_w1.data());
        }

        Ok(StepLosses {
            sg,
            iso: iso_loss,
            combined,
        })
    }

    /// Current isomorphism loss without touching any state.
    pub fn iso_loss(&self) -> Result<Option<f64>> {
        let Some(iso) = self.iso.as_ref() else { return Ok(None) };
        let u = gather_rows(&self.model.input, &iso.alignment);
        let um = match &iso.gcn {
            Some(g) => g.forward(&u)?.0,
            None => u,
        };
        let rows = iso.alignment.loss_nodes();
        Ok(Some(iso_loss_grad(self.config.kind, &um.select_rows(rows), &iso.v_seed.select_rows(rows))?.loss))
    }

    /// Accumulates `weight · dL_ISO/dU` into the input-row gradients and
    /// returns the loss and the (scaled) convolution weight gradients.
    fn iso_gradients(&mut self, weight: f64) -> Result<(f64, Option<(Matrix, Matrix)>)> {
        let iso = self.iso.as_mut().expect("iso branch");
        let u = gather_rows(&self.model.input, &iso.alignment);
        let forward = match &iso.gcn {
            Some(g) => {
                let (um, tape) = g.forward(&u)?;
                (um, Some(tape))
            }
            None => (u.clone(), None),
        };
        let (um, tape) = forward;

        let all = iso.alignment.loss_nodes();
        let rows: Vec<usize> = match batch_size(self.config.iso_batch, all.len()) {
            Some(k) => {
                let mut picked: Vec<usize> = index::sample(&mut iso.rng, all.len(), k).into_iter().map(|i| all[i]).collect();
                picked.sort_unstable();
                picked
            }
            None => all.to_vec(),
        };
        let eval = iso_loss_grad(self.config.kind, &um.select_rows(&rows), &iso.v_seed.select_rows(&rows))?;

        let mut d_um = Matrix::zeros(um.rows(), um.cols());
        for (k, &node) in rows.iter().enumerate() {
            d_um.row_mut(node).copy_from_slice(eval.grad.row(k));
        }

        let (d_u, weights) = match (&iso.gcn, tape) {
            (Some(g), Some(tape)) => {
                let grads = g.backward(&tape, &u, &d_um)?;
                (grads.d_u, Some((grads.d_w0.scale(weight), grads.d_w1.scale(weight))))
            }
            _ => (d_um, None),
        };
        for k in 0..iso.alignment.len() {
            if let Some(r) = iso.alignment.source_row(k) {
                self.input_grads.add(r, d_u.row(k), weight);
            }
        }
        Ok((eval.loss, weights))
    }

    /// One pass over the corpus.
    pub fn train_epoch(&mut self, corpus: &Corpus, epoch: usize, trace: &mut Vec<f64>) -> Result<EpochStats> {
        let mut stats = EpochStats {
            epoch,
            ..Default::default()
        };
        let mut buffer: Vec<TrainingPair> = Vec::with_capacity(2 * self.config.batch_size);
        let mut sums = StepLosses::default();
        let mut flush = |this: &mut Self, batch: &[TrainingPair], stats: &mut EpochStats| -> Result<()> {
            let l = this.step(batch)?;
            sums.sg += l.sg;
            sums.iso += l.iso;
            sums.combined += l.combined;
            stats.steps += 1;
            stats.pairs += batch.len();
            trace.push(l.combined);
            Ok(())
        };
        for line in &corpus.lines {
            let pairs = self.pairs.generate(line, &mut self.rng);
            buffer.extend(pairs);
            while buffer.len() >= self.config.batch_size {
                let batch: Vec<TrainingPair> = buffer.drain(..self.config.batch_size).collect();
                flush(self, &batch, &mut stats)?;
            }
        }
        if !buffer.is_empty() {
            flush(self, &buffer, &mut stats)?;
        }
        if stats.steps > 0 {
            let n = stats.steps as f64;
            stats.sg_loss = sums.sg / n;
            stats.iso_loss = sums.iso / n;
            stats.combined_loss = sums.combined / n;
        }
        Ok(stats)
    }

    pub fn fit(&mut self, corpus: &Corpus) -> Result<TrainReport> {
        if corpus.vocab != self.vocab {
            return Err(GriError::VocabularyMismatch("corpus vocabulary differs from the trainer's".into()));
        }
        let mut report = TrainReport::default();
        for epoch in 0..self.config.epochs {
            let stats = self.train_epoch(corpus, epoch, &mut report.trace)?;
            log::info!(
                "epoch {epoch}: {} steps, sg {:.5}, iso {:.5}, combined {:.5}",
                stats.steps,
                stats.sg_loss,
                stats.iso_loss,
                stats.combined_loss
            );
            report.steps += stats.steps;
            report.epochs.push(stats);
        }
        Ok(report)
    }

    pub fn embeddings(&self) -> Embeddings {
        Embeddings::new(self.vocab.words().to_vec(), self.model.input.clone()).expect("vocabulary words are unique")
    }
}

/// Current input vectors of the seed nodes; nodes without a source word
/// stay zero.
fn gather_rows(input: &Matrix, alignment: &SeedAlignment) -> Matrix {
    let mut u = Matrix::zeros(alignment.len(), input.cols());
    for k in 0..alignment.len() {
        if let Some(r) = alignment.source_row(k) {
            u.row_mut(k).copy_from_slice(input.row(r));
        }
    }
    u
}

fn batch_size(setting: IsoBatch, available: usize) -> Option<usize> {
    match setting {
        IsoBatch::All => None,
        IsoBatch::Auto if available <= FULL_ISO_BATCH_LIMIT => None,
        IsoBatch::Auto => Some(SAMPLED_ISO_BATCH),
        IsoBatch::Sampled(k) if k >= available => None,
        IsoBatch::Sampled(k) => Some(k),
    }
}

/// Plain skip-gram training of `corpus`.
pub fn train_sgns(config: &TrainerConfig, corpus: &Corpus) -> Result<TrainOutcome> {
    let mut trainer = GriTrainer::sgns_only(config, &corpus.vocab)?;
    let report = trainer.fit(corpus)?;
    Ok(TrainOutcome {
        embeddings: trainer.embeddings(),
        report,
    })
}

/// Full GRI training of the source embeddings.
pub fn train(
    config: &TrainerConfig,
    corpus: &Corpus,
    lexicon: &SeedLexicon,
    target: &Embeddings,
    graph: &NormalizedAdjacency,
) -> Result<TrainOutcome> {
    let mut trainer = GriTrainer::new(config, &corpus.vocab, lexicon, target, graph)?;
    let report = trainer.fit(corpus)?;
    Ok(TrainOutcome {
        embeddings: trainer.embeddings(),
        report,
    })
}
