//! The event composition coherence model.
//!
//! An event is embedded as the concatenation `[verb; subj; dobj; pobj]` of
//! token embeddings (zeros for empty slots) and composed into a fixed-size
//! representation by a two-layer argument composition network. The pair
//! composition network reads `[context; target; extra]`, where `extra` is
//! the one-hot position of the candidate slot followed by the candidate's
//! encoded salience, and squashes a two-layer transform into a coherence
//! probability.
//!
//! Training minimizes, over batches of (context, positive, negative)
//! triples,
//!
//! ```text
//! (1/m) Σ [-ln coh(c, p) - ln(1 - coh(c, n))] + (l2/2) Σ ‖W‖²
//! ```
//!
//! with plain SGD. The penalty covers weight matrices only; biases and
//! embeddings are not regularized. Embeddings are fine-tuned sparsely: only
//! rows of tokens that occur in a batch change.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::info;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cloze::{encode_event, EncodedEvent, EncodedTriple};
use crate::corpus::{Entity, Event, Position, Vocabulary};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nn::{accumulate_outer, dense_forward, dot, matvec_transposed, sigmoid, Activation, Tensor};
use crate::rng::seeded;
use crate::salience::{encode_extra_features, SalienceFeatures, SalienceMask};

/// Probabilities are clamped into `[EPSILON, 1 - EPSILON]` inside the loss.
pub const EPSILON: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamId {
    Embeddings,
    ArgW1,
    ArgB1,
    ArgW2,
    ArgB2,
    PairW1,
    PairB1,
    PairW2,
    PairB2,
    OutW,
    OutB,
}

impl ParamId {
    pub const ALL: [ParamId; 11] = [
        ParamId::Embeddings,
        ParamId::ArgW1,
        ParamId::ArgB1,
        ParamId::ArgW2,
        ParamId::ArgB2,
        ParamId::PairW1,
        ParamId::PairB1,
        ParamId::PairW2,
        ParamId::PairB2,
        ParamId::OutW,
        ParamId::OutB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Embeddings => "embeddings",
            ParamId::ArgW1 => "arg_w1",
            ParamId::ArgB1 => "arg_b1",
            ParamId::ArgW2 => "arg_w2",
            ParamId::ArgB2 => "arg_b2",
            ParamId::PairW1 => "pair_w1",
            ParamId::PairB1 => "pair_b1",
            ParamId::PairW2 => "pair_w2",
            ParamId::PairB2 => "pair_b2",
            ParamId::OutW => "out_w",
            ParamId::OutB => "out_b",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamId> {
        ParamId::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Weight matrices carry the L2 penalty.
    pub fn is_weight(self) -> bool {
        matches!(
            self,
            ParamId::ArgW1 | ParamId::ArgW2 | ParamId::PairW1 | ParamId::PairW2 | ParamId::OutW
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub emb_dim: usize,
    pub arg_hidden: usize,
    pub event_dim: usize,
    pub pair_hidden: usize,
    pub pair_hidden2: usize,
}

impl Default for ModelDims {
    /// 300-d embeddings, argument layers 600/300, pair layers 400/200.
    fn default() -> Self {
        ModelDims {
            emb_dim: 300,
            arg_hidden: 600,
            event_dim: 300,
            pair_hidden: 400,
            pair_hidden2: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dims: ModelDims,
    pub activation: Activation,
    pub mask: SalienceMask,
    /// Feed salience counts unencoded.
    pub raw_salience: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dims: ModelDims::default(),
            activation: Activation::Tanh,
            mask: SalienceMask::all(),
            raw_salience: false,
        }
    }
}

impl ModelConfig {
    pub fn extra_width(&self) -> usize {
        self.mask.extra_width()
    }

    pub fn pair_input_width(&self) -> usize {
        2 * self.dims.event_dim + self.extra_width()
    }

    fn shape(&self, id: ParamId, vocab_len: usize) -> Vec<usize> {
        let d = &self.dims;
        match id {
            ParamId::Embeddings => vec![vocab_len, d.emb_dim],
            ParamId::ArgW1 => vec![d.arg_hidden, 4 * d.emb_dim],
            ParamId::ArgB1 => vec![d.arg_hidden],
            ParamId::ArgW2 => vec![d.event_dim, d.arg_hidden],
            ParamId::ArgB2 => vec![d.event_dim],
            ParamId::PairW1 => vec![d.pair_hidden, self.pair_input_width()],
            ParamId::PairB1 => vec![d.pair_hidden],
            ParamId::PairW2 => vec![d.pair_hidden2, d.pair_hidden],
            ParamId::PairB2 => vec![d.pair_hidden2],
            ParamId::OutW => vec![1, d.pair_hidden2],
            ParamId::OutB => vec![1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub freeze_embeddings: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.01,
            batch_size: 100,
            epochs: 20,
            l2: 0.01,
            seed: 0,
            freeze_embeddings: false,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || !(self.l2 >= 0.0) {
            return Err(Error::Config(
                "learning rate and batch size must be positive, l2 non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventCompModel {
    pub config: ModelConfig,
    params: Vec<Tensor>,
    vocab: Vocabulary,
}

/// Cached activations of one event composition.
#[derive(Clone, Debug)]
pub struct EventForward {
    pub input: Vec<f64>,
    hidden: Vec<f64>,
    pub repr: Vec<f64>,
}

/// Cached activations of one pair evaluation.
#[derive(Clone, Debug)]
pub struct PairForward {
    input: Vec<f64>,
    hidden: Vec<f64>,
    hidden2: Vec<f64>,
    pub logit: f64,
    pub coherence: f64,
}

/// Gradients of every parameter; embedding gradients are kept per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub dense: Vec<Tensor>,
    pub embeddings: BTreeMap<u32, Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &EventCompModel) -> Gradients {
        let mut dense: Vec<Tensor> = model.params.iter().map(|t| Tensor::zeros(&t.shape)).collect();
        dense[ParamId::Embeddings as usize] = Tensor::zeros(&[0]);
        Gradients {
            dense,
            embeddings: BTreeMap::new(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.dense[id as usize]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.dense[id as usize]
    }

    /// Gradient of one scalar parameter (`index` is flat within the tensor).
    pub fn value(&self, id: ParamId, index: usize, emb_dim: usize) -> f64 {
        match id {
            ParamId::Embeddings => self
                .embeddings
                .get(&((index / emb_dim) as u32))
                .map_or(0.0, |row| row[index % emb_dim]),
            _ => self.dense[id as usize].data[index],
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchLoss {
    /// Mean cross-entropy per triple, before regularization.
    pub data_loss: f64,
    pub l2_term: f64,
    pub grads: Gradients,
}

impl BatchLoss {
    pub fn total(&self) -> f64 {
        self.data_loss + self.l2_term
    }
}

impl EventCompModel {
    /// Builds a model. Weights are uniform in ±sqrt(6/(fan_in+fan_out)),
    /// biases zero; embeddings come from `init` when given.
    pub fn new(vocab: Vocabulary, config: ModelConfig, init: Option<&EmbeddingTable>, seed: u64) -> Result<EventCompModel> {
        let d = config.dims;
        if [d.emb_dim, d.arg_hidden, d.event_dim, d.pair_hidden, d.pair_hidden2].contains(&0) {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        let mut rng = seeded(seed);
        let mut params = Vec::with_capacity(ParamId::ALL.len());
        for id in ParamId::ALL {
            let shape = config.shape(id, vocab.len());
            let mut t = Tensor::zeros(&shape);
            match id {
                ParamId::Embeddings => match init {
                    Some(table) => {
                        if table.dim != d.emb_dim || table.len() != vocab.len() {
                            return Err(Error::Contract(format!(
                                "embedding table is {}x{}, model expects {}x{}",
                                table.len(),
                                table.dim,
                                vocab.len(),
                                d.emb_dim
                            )));
                        }
                        t.data = table.input.iter().map(|&x| x as f64).collect();
                    }
                    None => {
                        let scale = 0.5 / d.emb_dim as f64;
                        t.data.iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
                    }
                },
                _ if id.is_weight() => {
                    let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                    t.data.iter_mut().for_each(|x| *x = rng.gen_range(-limit..limit));
                }
                _ => {}
            }
            params.push(t);
        }
        Ok(EventCompModel { config, params, vocab })
    }

    /// Rebuilds a model from stored tensors, checking every shape.
    pub fn from_parts(vocab: Vocabulary, config: ModelConfig, params: Vec<Tensor>) -> Result<EventCompModel> {
        if params.len() != ParamId::ALL.len() {
            return Err(Error::Contract(format!("expected {} tensors, got {}", ParamId::ALL.len(), params.len())));
        }
        for (id, t) in ParamId::ALL.into_iter().zip(&params) {
            let expected = config.shape(id, vocab.len());
            if t.shape != expected || t.data.len() != expected.iter().product::<usize>() {
                return Err(Error::Contract(format!(
                    "{} has shape {:?}, expected {:?}",
                    id.name(),
                    t.shape,
                    expected
                )));
            }
        }
        Ok(EventCompModel { config, params, vocab })
    }

    /// Sets the output layer to zero so every coherence is exactly 0.5.
    pub fn with_zero_output(mut self) -> EventCompModel {
        self.params[ParamId::OutW as usize].data.fill(0.0);
        self.params[ParamId::OutB as usize].data.fill(0.0);
        self
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn param(&self, id: ParamId) -> &Tensor {
        &self.params[id as usize]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id as usize]
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(Tensor::is_finite)
    }

    pub fn encode(&self, event: &Event, entities: &[Entity]) -> EncodedEvent {
        encode_event(event, entities, &self.vocab)
    }

    /// `[verb; subj; dobj; pobj]` embeddings, zeros for empty slots.
    pub fn embed_event_inputs(&self, ids: &EncodedEvent) -> Vec<f64> {
        let dim = self.config.dims.emb_dim;
        let emb = self.param(ParamId::Embeddings);
        let mut x = vec![0.0; 4 * dim];
        for (slot, id) in ids.iter().enumerate() {
            if let Some(id) = id {
                x[slot * dim..(slot + 1) * dim].copy_from_slice(emb.row(*id as usize));
            }
        }
        x
    }

    pub fn compose_forward(&self, input: Vec<f64>) -> EventForward {
        let act = self.config.activation;
        let hidden = dense_forward(self.param(ParamId::ArgW1), self.param(ParamId::ArgB1), &input, Some(act));
        let repr = dense_forward(self.param(ParamId::ArgW2), self.param(ParamId::ArgB2), &hidden, Some(act));
        EventForward { input, hidden, repr }
    }

    /// Event representation from a `4 × emb_dim` input.
    pub fn compose_event(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != 4 * self.config.dims.emb_dim {
            return Err(Error::Contract(format!(
                "event input has width {}, expected {}",
                input.len(),
                4 * self.config.dims.emb_dim
            )));
        }
        Ok(self.compose_forward(input.to_vec()).repr)
    }

    pub fn represent(&self, ids: &EncodedEvent) -> Vec<f64> {
        self.compose_forward(self.embed_event_inputs(ids)).repr
    }

    /// Masked extra input for a candidate in `position`.
    pub fn extra_input(&self, position: Position, salience: &SalienceFeatures) -> Vec<f64> {
        encode_extra_features(position, salience, self.config.raw_salience).to_input(&self.config.mask)
    }

    pub fn pair_forward(&self, context: &[f64], target: &[f64], extra: &[f64]) -> PairForward {
        let act = self.config.activation;
        let mut input = Vec::with_capacity(context.len() + target.len() + extra.len());
        input.extend_from_slice(context);
        input.extend_from_slice(target);
        input.extend_from_slice(extra);
        let hidden = dense_forward(self.param(ParamId::PairW1), self.param(ParamId::PairB1), &input, Some(act));
        let hidden2 = dense_forward(self.param(ParamId::PairW2), self.param(ParamId::PairB2), &hidden, Some(act));
        let logit = self.param(ParamId::OutB).data[0] + dot(&self.param(ParamId::OutW).data, &hidden2);
        PairForward {
            input,
            hidden,
            hidden2,
            logit,
            coherence: sigmoid(logit),
        }
    }

    /// Coherence in (0, 1) of a target representation given a context.
    pub fn coherence(&self, target: &[f64], context: &[f64], extra: &[f64]) -> Result<f64> {
        let d = &self.config.dims;
        if target.len() != d.event_dim || context.len() != d.event_dim || extra.len() != self.config.extra_width() {
            return Err(Error::Contract(format!(
                "pair input widths ({}, {}, {}) do not match model ({}, {}, {})",
                context.len(),
                target.len(),
                extra.len(),
                d.event_dim,
                d.event_dim,
                self.config.extra_width()
            )));
        }
        Ok(self.pair_forward(context, target, extra).coherence)
    }

    fn pair_backward(&self, fwd: &PairForward, dlogit: f64, grads: &mut Gradients) -> (Vec<f64>, Vec<f64>) {
        let act = self.config.activation;
        let e = self.config.dims.event_dim;
        {
            let (ow, ob) = two_mut(&mut grads.dense, ParamId::OutW, ParamId::OutB);
            accumulate_outer(ow, ob, &[dlogit], &fwd.hidden2);
        }
        let dh2: Vec<f64> = self
            .param(ParamId::OutW)
            .data
            .iter()
            .zip(&fwd.hidden2)
            .map(|(w, y)| dlogit * w * act.derivative_from_output(*y))
            .collect();
        {
            let (w, b) = two_mut(&mut grads.dense, ParamId::PairW2, ParamId::PairB2);
            accumulate_outer(w, b, &dh2, &fwd.hidden);
        }
        let dh1: Vec<f64> = matvec_transposed(self.param(ParamId::PairW2), &dh2)
            .into_iter()
            .zip(&fwd.hidden)
            .map(|(g, y)| g * act.derivative_from_output(*y))
            .collect();
        {
            let (w, b) = two_mut(&mut grads.dense, ParamId::PairW1, ParamId::PairB1);
            accumulate_outer(w, b, &dh1, &fwd.input);
        }
        let dz = matvec_transposed(self.param(ParamId::PairW1), &dh1);
        (dz[..e].to_vec(), dz[e..2 * e].to_vec())
    }

    fn compose_backward(&self, fwd: &EventForward, ids: &EncodedEvent, drepr: &[f64], grads: &mut Gradients, train_embeddings: bool) {
        let act = self.config.activation;
        let da2: Vec<f64> = drepr
            .iter()
            .zip(&fwd.repr)
            .map(|(g, y)| g * act.derivative_from_output(*y))
            .collect();
        {
            let (w, b) = two_mut(&mut grads.dense, ParamId::ArgW2, ParamId::ArgB2);
            accumulate_outer(w, b, &da2, &fwd.hidden);
        }
        let da1: Vec<f64> = matvec_transposed(self.param(ParamId::ArgW2), &da2)
            .into_iter()
            .zip(&fwd.hidden)
            .map(|(g, y)| g * act.derivative_from_output(*y))
            .collect();
        {
            let (w, b) = two_mut(&mut grads.dense, ParamId::ArgW1, ParamId::ArgB1);
            accumulate_outer(w, b, &da1, &fwd.input);
        }
        if !train_embeddings {
            return;
        }
        let dim = self.config.dims.emb_dim;
        let dx = matvec_transposed(self.param(ParamId::ArgW1), &da1);
        for (slot, id) in ids.iter().enumerate() {
            if let Some(id) = id {
                let row = grads.embeddings.entry(*id).or_insert_with(|| vec![0.0; dim]);
                for (r, g) in row.iter_mut().zip(&dx[slot * dim..(slot + 1) * dim]) {
                    *r += g;
                }
            }
        }
    }

    fn l2_term(&self, l2: f64) -> f64 {
        ParamId::ALL
            .into_iter()
            .filter(|p| p.is_weight())
            .map(|p| self.param(p).sum_squares())
            .sum::<f64>()
            * l2
            / 2.0
    }

    /// Forward pass of one triple: (positive pair, negative pair).
    fn triple_forward(&self, t: &EncodedTriple) -> (EventForward, EventForward, EventForward, PairForward, PairForward) {
        let c = self.compose_forward(self.embed_event_inputs(&t.context));
        let p = self.compose_forward(self.embed_event_inputs(&t.positive));
        let n = self.compose_forward(self.embed_event_inputs(&t.negative));
        let pp = self.pair_forward(&c.repr, &p.repr, &self.extra_input(t.position, &t.pos_salience));
        let pn = self.pair_forward(&c.repr, &n.repr, &self.extra_input(t.neg_position, &t.neg_salience));
        (c, p, n, pp, pn)
    }

    /// Objective value only (mean cross-entropy plus L2).
    pub fn objective(&self, batch: &[EncodedTriple], l2: f64) -> f64 {
        let m = batch.len().max(1) as f64;
        let data: f64 = batch
            .iter()
            .map(|t| {
                let (_, _, _, pp, pn) = self.triple_forward(t);
                triple_loss(pp.coherence, pn.coherence)
            })
            .sum::<f64>();
        data / m + self.l2_term(l2)
    }

    /// Loss and gradients of every parameter over a batch.
    pub fn batch_loss(&self, batch: &[EncodedTriple], l2: f64) -> Result<BatchLoss> {
        let refs: Vec<&EncodedTriple> = batch.iter().collect();
        self.batch_loss_refs(&refs, l2, true)
    }

    fn batch_loss_refs(&self, batch: &[&EncodedTriple], l2: f64, train_embeddings: bool) -> Result<BatchLoss> {
        if batch.is_empty() {
            return Err(Error::Empty("empty batch".into()));
        }
        let m = batch.len() as f64;
        let mut grads = Gradients::zeros_like(self);
        let mut data_loss = 0.0;
        for t in batch {
            let (c, p, n, pp, pn) = self.triple_forward(t);
            data_loss += triple_loss(pp.coherence, pn.coherence);
            let dpos = if pp.coherence > EPSILON && pp.coherence < 1.0 - EPSILON {
                (pp.coherence - 1.0) / m
            } else {
                0.0
            };
            let dneg = if pn.coherence > EPSILON && pn.coherence < 1.0 - EPSILON {
                pn.coherence / m
            } else {
                0.0
            };
            let (mut dc, dp) = self.pair_backward(&pp, dpos, &mut grads);
            let (dc2, dn) = self.pair_backward(&pn, dneg, &mut grads);
            dc.iter_mut().zip(&dc2).for_each(|(a, b)| *a += b);
            self.compose_backward(&c, &t.context, &dc, &mut grads, train_embeddings);
            self.compose_backward(&p, &t.positive, &dp, &mut grads, train_embeddings);
            self.compose_backward(&n, &t.negative, &dn, &mut grads, train_embeddings);
        }
        for id in ParamId::ALL.into_iter().filter(|p| p.is_weight()) {
            let w = &self.params[id as usize];
            for (g, x) in grads.dense[id as usize].data.iter_mut().zip(&w.data) {
                *g += l2 * x;
            }
        }
        let out = BatchLoss {
            data_loss: data_loss / m,
            l2_term: self.l2_term(l2),
            grads,
        };
        if !out.total().is_finite() {
            return Err(Error::Numeric(format!("batch loss is {}", out.total())));
        }
        Ok(out)
    }

    fn apply_sgd(&mut self, grads: &Gradients, lr: f64) {
        for id in ParamId::ALL.into_iter().skip(1) {
            let g = &grads.dense[id as usize];
            for (p, d) in self.params[id as usize].data.iter_mut().zip(&g.data) {
                *p -= lr * d;
            }
        }
        let emb = &mut self.params[ParamId::Embeddings as usize];
        for (id, g) in &grads.embeddings {
            for (p, d) in emb.row_mut(*id as usize).iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
    }
}

fn two_mut(v: &mut [Tensor], a: ParamId, b: ParamId) -> (&mut Tensor, &mut Tensor) {
    let (a, b) = (a as usize, b as usize);
    debug_assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

/// `-ln coh(c, p) - ln(1 - coh(c, n))` with clamped probabilities.
pub fn triple_loss(pos: f64, neg: f64) -> f64 {
    let pos = pos.clamp(EPSILON, 1.0 - EPSILON);
    let neg = neg.clamp(EPSILON, 1.0 - EPSILON);
    -pos.ln() - (1.0 - neg).ln()
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: EventCompModel,
    /// Mean objective (cross-entropy plus L2) per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Plain SGD over shuffled mini-batches.
pub fn train(triples: &[EncodedTriple], params: &TrainParams, mut model: EventCompModel) -> Result<TrainOutcome> {
    params.validate()?;
    if triples.is_empty() {
        return Err(Error::Empty("no training triples".into()));
    }
    let mut rng = seeded(params.seed);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(params.batch_size) {
            let batch: Vec<&EncodedTriple> = chunk.iter().map(|&i| &triples[i]).collect();
            let loss = model.batch_loss_refs(&batch, params.l2, !params.freeze_embeddings)?;
            sum += loss.total();
            batches += 1;
            model.apply_sgd(&loss.grads, params.learning_rate);
        }
        if !model.is_finite() {
            return Err(Error::Numeric(format!("parameters diverged in epoch {epoch}")));
        }
        let mean = sum / batches as f64;
        info!("epoch {}: loss {mean:.6}", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome { model, epoch_losses })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters whose relative error exceeded the tolerance.
    pub failures: Vec<String>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "checked {} parameters, max relative error {:.3e}, {} failure(s)",
            self.checked,
            self.max_rel_error,
            self.failures.len()
        )?;
        for name in self.failures.iter().take(10) {
            write!(f, "\n  {name}")?;
        }
        Ok(())
    }
}

/// Both gradients below this magnitude count as agreeing zeros.
pub const ZERO_GRADIENT_TOLERANCE: f64 = 1e-10;

/// `|a - n| / max(|a|, |n|)`, or 0 when both are effectively zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < ZERO_GRADIENT_TOLERANCE {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Compares analytic gradients with central differences for every dense
/// parameter, every embedding row used by the batch and one unused row.
pub fn gradient_check(model: &EventCompModel, batch: &[EncodedTriple], l2: f64, step: f64, tolerance: f64) -> Result<GradCheckReport> {
    let grads = model.batch_loss(batch, l2)?.grads;
    Ok(gradient_check_against(model, batch, l2, step, tolerance, &grads))
}

/// Like [`gradient_check`] but against caller-supplied gradients.
pub fn gradient_check_against(
    model: &EventCompModel,
    batch: &[EncodedTriple],
    l2: f64,
    step: f64,
    tolerance: f64,
    grads: &Gradients,
) -> GradCheckReport {
    let dim = model.config.dims.emb_dim;
    let mut used: BTreeSet<u32> = BTreeSet::new();
    for t in batch {
        for ids in [&t.context, &t.positive, &t.negative] {
            used.extend(ids.iter().flatten());
        }
    }
    let unused = (0..model.vocab.len() as u32).find(|id| !used.contains(id));
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        failures: Vec::new(),
    };
    for id in ParamId::ALL {
        let indices: Vec<usize> = match id {
            ParamId::Embeddings => used
                .iter()
                .chain(unused.iter())
                .flat_map(|&row| (0..dim).map(move |k| row as usize * dim + k))
                .collect(),
            _ => (0..model.param(id).data.len()).collect(),
        };
        for i in indices {
            let original = probe.params[id as usize].data[i];
            probe.params[id as usize].data[i] = original + step;
            let plus = probe.objective(batch, l2);
            probe.params[id as usize].data[i] = original - step;
            let minus = probe.objective(batch, l2);
            probe.params[id as usize].data[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grads.value(id, i, dim);
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            report.max_rel_error = report.max_rel_error.max(err);
            if err >= tolerance || !err.is_finite() {
                let shape = &model.param(id).shape;
                let name = if shape.len() == 2 {
                    format!("{}[{},{}] analytic={analytic:.6e} numeric={numeric:.6e}", id.name(), i / shape[1], i % shape[1])
                } else {
                    format!("{}[{i}] analytic={analytic:.6e} numeric={numeric:.6e}", id.name())
                };
                report.failures.push(name);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloze::NegKind;
    use crate::corpus::build_vocabulary;
    use crate::fixtures::power_company_script;

    pub(crate) fn small_config() -> ModelConfig {
        ModelConfig {
            dims: ModelDims {
                emb_dim: 4,
                arg_hidden: 6,
                event_dim: 5,
                pair_hidden: 6,
                pair_hidden2: 3,
            },
            ..Default::default()
        }
    }

    fn vocab() -> Vocabulary {
        let s = power_company_script();
        build_vocabulary([&s], 1, 10).unwrap()
    }

    fn triple(vocab: &Vocabulary, ctx: &str, pos: &str, neg: &str) -> EncodedTriple {
        let sal = SalienceFeatures {
            first_loc: 1,
            head_count: 2,
            named: 1,
            nominal: 1,
            pronominal: 1,
            total: 3,
        };
        EncodedTriple {
            doc_id: "t".into(),
            context: [Some(vocab.id(ctx)), None, Some(vocab.id("company-subj")), None],
            positive: [Some(vocab.id(pos)), Some(vocab.id("company-subj")), None, None],
            negative: [Some(vocab.id(neg)), Some(vocab.id("customer-subj")), None, Some(0)],
            position: Position::Subj,
            neg_position: Position::Subj,
            pos_entity: 0,
            neg_entity: 1,
            neg_kind: NegKind::Replace,
            pos_salience: sal,
            neg_salience: SalienceFeatures { total: 2, nominal: 2, ..sal },
        }
    }

    #[test]
    fn shapes_follow_config() {
        let v = vocab();
        let m = EventCompModel::new(v.clone(), ModelConfig::default(), None, 1).unwrap();
        assert_eq!(m.param(ParamId::ArgW1).shape, vec![600, 1200]);
        assert_eq!(m.param(ParamId::PairW1).shape, vec![400, 609]);
        let x = m.embed_event_inputs(&[Some(1), None, None, None]);
        assert_eq!(x.len(), 1200);
        assert!(x[300..].iter().all(|&v| v == 0.0));
        assert_eq!(&x[..300], m.param(ParamId::Embeddings).row(1));
        assert_eq!(m.compose_event(&x).unwrap().len(), 300);
        assert!(m.compose_event(&x[..10]).is_err());

        let ablated = ModelConfig {
            mask: SalienceMask::ablating("mentions").unwrap(),
            ..ModelConfig::default()
        };
        let m = EventCompModel::new(v, ablated, None, 1).unwrap();
        assert_eq!(m.param(ParamId::PairW1).shape, vec![400, 605]);
    }

    #[test]
    fn zero_output_gives_half() {
        let v = vocab();
        let m = EventCompModel::new(v.clone(), small_config(), None, 2).unwrap().with_zero_output();
        let t = triple(&v, "build-pred", "supply-pred", "pay-pred");
        let r = m.represent(&t.context);
        let extra = m.extra_input(Position::Dobj, &t.pos_salience);
        assert_eq!(m.coherence(&r, &r, &extra).unwrap(), 0.5);
        let loss = m.batch_loss(&[t.clone(), t], 0.01).unwrap();
        assert!((loss.data_loss - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(loss.l2_term > 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let v = vocab();
        let m = EventCompModel::new(v.clone(), small_config(), None, 3).unwrap();
        let batch = vec![
            triple(&v, "build-pred", "supply-pred", "pay-pred"),
            triple(&v, "pay-pred", "generate-pred", "buy-pred"),
            triple(&v, "buy-pred", "build-pred", "supply-pred"),
        ];
        let report = gradient_check(&m, &batch, 0.01, 1e-5, 1e-4).unwrap();
        assert!(report.passed(), "{report}");

        let mut bad = m.batch_loss(&batch, 0.01).unwrap().grads;
        bad.get_mut(ParamId::PairW2).data[0] += 0.1;
        let report = gradient_check_against(&m, &batch, 0.01, 1e-5, 1e-4, &bad);
        assert!(!report.passed());
        assert!(report.failures[0].starts_with("pair_w2[0,0]"));
    }

    #[test]
    fn unused_bias_only_sees_no_l2() {
        let v = vocab();
        let m = EventCompModel::new(v.clone(), small_config(), None, 4).unwrap().with_zero_output();
        let batch = vec![triple(&v, "build-pred", "supply-pred", "pay-pred")];
        // with a zero output layer nothing upstream of it gets a data gradient
        let g = m.batch_loss(&batch, 0.5).unwrap().grads;
        assert!(g.get(ParamId::ArgB1).data.iter().all(|&x| x == 0.0));
        let w = m.param(ParamId::ArgW1);
        for (gw, x) in g.get(ParamId::ArgW1).data.iter().zip(&w.data) {
            assert!((gw - 0.5 * x).abs() < 1e-15);
        }
    }

    #[test]
    fn sparse_embedding_updates() {
        let v = vocab();
        let m = EventCompModel::new(v.clone(), small_config(), None, 5).unwrap();
        let batch = vec![triple(&v, "build-pred", "supply-pred", "pay-pred")];
        let params = TrainParams {
            batch_size: 1,
            epochs: 3,
            ..Default::default()
        };
        let out = train(&batch, &params, m.clone()).unwrap();
        let used: BTreeSet<u32> = [&batch[0].context, &batch[0].positive, &batch[0].negative]
            .into_iter()
            .flat_map(|ids| ids.iter().flatten().copied())
            .collect();
        let before = m.param(ParamId::Embeddings);
        let after = out.model.param(ParamId::Embeddings);
        for row in 0..v.len() {
            if used.contains(&(row as u32)) {
                assert_ne!(before.row(row), after.row(row));
            } else {
                assert_eq!(before.row(row), after.row(row));
            }
        }
        let frozen = train(&batch, &TrainParams { freeze_embeddings: true, ..params }, m.clone()).unwrap();
        assert_eq!(frozen.model.param(ParamId::Embeddings), before);
        assert!(train(&[], &TrainParams::default(), m).is_err());
    }
}
