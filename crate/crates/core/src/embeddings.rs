//! Event-based word embeddings: role-tagged pseudo-sentences and a
//! skip-gram with negative sampling trainer.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::corpus::{downsample_keep_probability, event_tokens, Entity, Event, Script, Vocabulary};
use crate::error::{Error, Result};
use crate::io::{atomic_write, open_lines};
use crate::rng::{derive_seed, seeded};

const BINARY_MAGIC: &[u8; 4] = b"EVW1";

/// One pseudo-sentence per script: every event's predicate token followed
/// by its non-empty argument tokens.
pub fn build_pseudo_sentence(script: &Script) -> Vec<String> {
    script
        .events
        .iter()
        .flat_map(|ev| event_tokens(ev, &script.entities).into_iter().map(|(_, t)| t))
        .collect()
}

/// Like [`build_pseudo_sentence`], but events of verbs counted above
/// `threshold` are kept with the down-sampling probability.
pub fn build_pseudo_sentence_sampled<R: Rng>(script: &Script, vocab: &Vocabulary, threshold: u64, rng: &mut R) -> Vec<String> {
    let mut out = Vec::new();
    for ev in &script.events {
        let keep = downsample_keep_probability(vocab.verb_count(&ev.verb), threshold);
        if keep < 1.0 && rng.gen::<f64>() >= keep {
            continue;
        }
        out.extend(event_tokens(ev, &script.entities).into_iter().map(|(_, t)| t));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub subsample_t: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub workers: usize,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams {
            dim: 300,
            window: 10,
            negatives: 10,
            subsample_t: 1e-4,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            workers: 1,
        }
    }
}

impl SgnsParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.workers == 0 {
            return Err(Error::Config("dim, window, negatives and workers must be positive".into()));
        }
        if !(self.subsample_t > 0.0 && self.subsample_t <= 1.0) {
            return Err(Error::Config(format!("subsample threshold {} outside (0, 1]", self.subsample_t)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Input (center) and output (context) vectors, one row per vocabulary id.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub tokens: Vec<String>,
    pub input: Vec<f32>,
    pub output: Vec<f32>,
}

impl EmbeddingTable {
    /// word2vec-style initialization: inputs uniform in ±0.5/dim, outputs zero.
    pub fn random(tokens: Vec<String>, dim: usize, seed: u64) -> EmbeddingTable {
        let mut rng = seeded(seed);
        let n = tokens.len();
        let input = (0..n * dim)
            .map(|_| ((rng.gen::<f64>() - 0.5) / dim as f64) as f32)
            .collect();
        EmbeddingTable {
            dim,
            tokens,
            input,
            output: vec![0.0; n * dim],
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn vector(&self, id: u32) -> &[f32] {
        let i = id as usize * self.dim;
        &self.input[i..i + self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            writeln!(w, "dim={} vocab={}", self.dim, self.len())?;
            for (i, tok) in self.tokens.iter().enumerate() {
                w.write_all(tok.as_bytes())?;
                for x in self.vector(i as u32) {
                    write!(w, " {x}")?;
                }
                w.write_all(b"\n")?;
            }
            Ok(())
        })
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            w.write_all(BINARY_MAGIC)?;
            w.write_all(&(self.dim as u32).to_le_bytes())?;
            w.write_all(&(self.len() as u32).to_le_bytes())?;
            for tok in &self.tokens {
                w.write_all(&(tok.len() as u32).to_le_bytes())?;
                w.write_all(tok.as_bytes())?;
            }
            for x in &self.input {
                w.write_all(&x.to_le_bytes())?;
            }
            Ok(())
        })
    }

    /// Loads either form, detected by the leading magic bytes. Output
    /// vectors are not persisted and load as zeros.
    pub fn load(path: &Path) -> Result<EmbeddingTable> {
        let mut head = [0u8; 4];
        let n = File::open(path)?.read(&mut head)?;
        if n == 4 && &head == BINARY_MAGIC {
            Self::load_binary(path)
        } else {
            Self::load_text(path)
        }
    }

    fn load_text(path: &Path) -> Result<EmbeddingTable> {
        let mut lines = open_lines(path)?;
        let header = lines
            .next()
            .ok_or_else(|| Error::Truncated("embedding file is empty".into()))??;
        let mut dim = None;
        let mut n = None;
        for part in header.split_whitespace() {
            if let Some(v) = part.strip_prefix("dim=") {
                dim = v.parse::<usize>().ok();
            } else if let Some(v) = part.strip_prefix("vocab=") {
                n = v.parse::<usize>().ok();
            }
        }
        let (dim, n) = match (dim, n) {
            (Some(d), Some(n)) => (d, n),
            _ => return Err(Error::format(1, "header", "expected `dim=<d> vocab=<n>`")),
        };
        let mut tokens = Vec::with_capacity(n);
        let mut input = Vec::with_capacity(n * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let mut parts = line.split(' ');
            let tok = parts.next().unwrap_or_default();
            let before = input.len();
            for p in parts {
                input.push(p.parse::<f32>().map_err(|e| Error::format(i + 2, "vector", e.to_string()))?);
            }
            if input.len() - before != dim {
                return Err(Error::format(i + 2, "vector", format!("expected {dim} values")));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != n {
            return Err(Error::Truncated(format!("expected {n} rows, found {}", tokens.len())));
        }
        Ok(EmbeddingTable {
            dim,
            tokens,
            input,
            output: vec![0.0; n * dim],
        })
    }

    fn load_binary(path: &Path) -> Result<EmbeddingTable> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let mut cur = ByteCursor { bytes: &bytes, pos: 4 };
        let dim = cur.u32()? as usize;
        let n = cur.u32()? as usize;
        let mut tokens = Vec::with_capacity(n);
        for _ in 0..n {
            let len = cur.u32()? as usize;
            let raw = cur.take(len)?;
            tokens.push(
                String::from_utf8(raw.to_vec()).map_err(|e| Error::format(0, "token", e.to_string()))?,
            );
        }
        let mut input = Vec::with_capacity(n * dim);
        for _ in 0..n * dim {
            input.push(f32::from_le_bytes(cur.take(4)?.try_into().unwrap()));
        }
        Ok(EmbeddingTable {
            dim,
            tokens,
            input,
            output: vec![0.0; n * dim],
        })
    }
}

pub(crate) struct ByteCursor<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated(format!(
                "needed {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Cosine similarity; zero vectors compare as 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

pub fn cosine_f32(a: &[f32], b: &[f32]) -> f64 {
    let a: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    cosine(&a, &b)
}

/// Sum of the input vectors of an event's predicate and argument tokens.
pub fn eventword2vec_repr(event: &Event, entities: &[Entity], vocab: &Vocabulary, table: &EmbeddingTable) -> Vec<f64> {
    let mut out = vec![0.0; table.dim];
    for (_, tok) in event_tokens(event, entities) {
        for (o, x) in out.iter_mut().zip(table.vector(vocab.id(&tok))) {
            *o += *x as f64;
        }
    }
    out
}

/// Maps token sentences to ids, dropping out-of-vocabulary tokens.
pub fn encode_sentences(sentences: &[Vec<String>], vocab: &Vocabulary) -> Vec<Vec<u32>> {
    sentences
        .iter()
        .map(|s| {
            s.iter()
                .map(|t| vocab.id(t))
                .filter(|&id| id != vocab.oov_id())
                .collect::<Vec<u32>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// Negative sampler over the unigram distribution raised to the 3/4 power.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
}

impl NegativeSampler {
    /// The OOV sentinel is never drawn.
    pub fn new(vocab: &Vocabulary) -> Result<NegativeSampler> {
        let weights = Self::weights(vocab);
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::Empty(format!("no tokens to sample: {e}")))?;
        Ok(NegativeSampler { dist })
    }

    pub fn weights(vocab: &Vocabulary) -> Vec<f64> {
        vocab
            .counts()
            .iter()
            .enumerate()
            .map(|(i, &c)| if i as u32 == vocab.oov_id() { 0.0 } else { (c as f64).powf(0.75) })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        self.dist.sample(rng) as u32
    }
}

/// Weight matrix shared between workers. Updates from concurrent workers
/// may interleave (lock-free, last writer wins per component).
struct SharedMatrix {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl SharedMatrix {
    fn new(values: &[f32], dim: usize) -> SharedMatrix {
        SharedMatrix {
            data: values.iter().map(|x| AtomicU32::new(x.to_bits())).collect(),
            dim,
        }
    }

    #[inline]
    fn read_row(&self, row: u32, out: &mut [f32]) {
        let base = row as usize * self.dim;
        for (o, a) in out.iter_mut().zip(&self.data[base..base + self.dim]) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn add_row(&self, row: u32, delta: &[f32]) {
        let base = row as usize * self.dim;
        for (d, a) in delta.iter().zip(&self.data[base..base + self.dim]) {
            let v = f32::from_bits(a.load(Ordering::Relaxed)) + d;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn to_vec(&self) -> Vec<f32> {
        self.data.iter().map(|a| f32::from_bits(a.load(Ordering::Relaxed))).collect()
    }
}

/// Epoch-at-a-time SGNS trainer. With one worker every run is bit-for-bit
/// reproducible for a fixed seed.
pub struct SgnsTrainer<'v> {
    params: SgnsParams,
    vocab: &'v Vocabulary,
    input: SharedMatrix,
    output: SharedMatrix,
    sampler: NegativeSampler,
    keep_prob: Vec<f64>,
    seed: u64,
    epoch: usize,
    total_words: u64,
    processed: AtomicU64,
}

impl<'v> SgnsTrainer<'v> {
    pub fn new(vocab: &'v Vocabulary, params: SgnsParams, seed: u64, sentences: &[Vec<u32>]) -> Result<SgnsTrainer<'v>> {
        params.validate()?;
        let init = EmbeddingTable::random(vocab.tokens().to_vec(), params.dim, seed);
        let total: u64 = vocab.counts().iter().skip(1).sum();
        let keep_prob = vocab
            .counts()
            .iter()
            .map(|&c| {
                if total == 0 || c == 0 {
                    return 1.0;
                }
                let f = c as f64 / total as f64;
                (params.subsample_t / f).sqrt().min(1.0)
            })
            .collect();
        let words: u64 = sentences.iter().map(|s| s.len() as u64).sum();
        Ok(SgnsTrainer {
            input: SharedMatrix::new(&init.input, params.dim),
            output: SharedMatrix::new(&init.output, params.dim),
            sampler: NegativeSampler::new(vocab)?,
            total_words: (words * params.epochs as u64).max(1),
            params,
            vocab,
            keep_prob,
            seed,
            epoch: 0,
            processed: AtomicU64::new(0),
        })
    }

    /// Probability that a token survives frequent-word subsampling.
    pub fn keep_probability(&self, id: u32) -> f64 {
        self.keep_prob[id as usize]
    }

    pub fn table(&self) -> EmbeddingTable {
        EmbeddingTable {
            dim: self.params.dim,
            tokens: self.vocab.tokens().to_vec(),
            input: self.input.to_vec(),
            output: self.output.to_vec(),
        }
    }

    pub fn run_epoch(&mut self, sentences: &[Vec<u32>]) {
        let workers = self.params.workers.min(sentences.len()).max(1);
        let epoch_seed = derive_seed(self.seed, &format!("sgns-epoch-{}", self.epoch));
        if workers == 1 {
            self.train_shard(sentences.iter(), epoch_seed);
        } else {
            let this = &*self;
            std::thread::scope(|scope| {
                for w in 0..workers {
                    let shard = sentences.iter().skip(w).step_by(workers);
                    let seed = derive_seed(epoch_seed, &format!("worker-{w}"));
                    scope.spawn(move || this.train_shard(shard, seed));
                }
            });
        }
        self.epoch += 1;
    }

    fn train_shard<'s>(&self, sentences: impl Iterator<Item = &'s Vec<u32>>, seed: u64) {
        let dim = self.params.dim;
        let p = &self.params;
        let mut rng = seeded(seed);
        let mut center = vec![0.0f32; dim];
        let mut grad = vec![0.0f32; dim];
        let mut target = vec![0.0f32; dim];
        let mut delta = vec![0.0f32; dim];
        let mut kept = Vec::new();
        for sentence in sentences {
            let done = self.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
            let progress = (done as f64 / self.total_words as f64).min(1.0);
            let lr = (p.learning_rate - (p.learning_rate - p.min_learning_rate) * progress).max(p.min_learning_rate) as f32;

            kept.clear();
            for &id in sentence {
                let keep = self.keep_prob[id as usize];
                if keep >= 1.0 || rng.gen::<f64>() < keep {
                    kept.push(id);
                }
            }
            for (i, &w) in kept.iter().enumerate() {
                let reduced = rng.gen_range(1..=p.window);
                let lo = i.saturating_sub(reduced);
                let hi = (i + reduced).min(kept.len() - 1);
                for (j, &ctx) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    self.input.read_row(w, &mut center);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=p.negatives {
                        let (t, label) = if k == 0 {
                            (ctx, 1.0f32)
                        } else {
                            let n = self.sampler.sample(&mut rng);
                            if n == ctx {
                                continue;
                            }
                            (n, 0.0)
                        };
                        self.output.read_row(t, &mut target);
                        let dot: f32 = center.iter().zip(&target).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid32(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * target[d];
                            delta[d] = g * center[d];
                        }
                        self.output.add_row(t, &delta);
                    }
                    self.input.add_row(w, &grad);
                }
            }
        }
    }

    /// Mean negative log-likelihood of `pairs` with fixed negatives.
    pub fn loss(&self, pairs: &[(u32, u32)], negatives: &[Vec<u32>]) -> f64 {
        let table = self.table();
        sgns_loss(&table, pairs, negatives)
    }

    pub fn finish(self) -> EmbeddingTable {
        self.table()
    }
}

#[inline]
fn sigmoid32(x: f32) -> f32 {
    if x > 6.0 {
        1.0
    } else if x < -6.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Mean of `-log σ(u_ctx·v_w) - Σ log σ(-u_neg·v_w)` over the given pairs.
pub fn sgns_loss(table: &EmbeddingTable, pairs: &[(u32, u32)], negatives: &[Vec<u32>]) -> f64 {
    let dim = table.dim;
    let out = |id: u32| &table.output[id as usize * dim..(id as usize + 1) * dim];
    let dot = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(x, y)| (*x as f64) * (*y as f64)).sum::<f64>();
    let log_sig = |x: f64| -(1.0 + (-x).exp()).ln();
    let mut total = 0.0;
    for ((w, c), negs) in pairs.iter().zip(negatives) {
        let v = table.vector(*w);
        total -= log_sig(dot(v, out(*c)));
        for n in negs {
            total -= log_sig(-dot(v, out(*n)));
        }
    }
    total / pairs.len().max(1) as f64
}

/// Trains SGNS embeddings over id sentences.
pub fn train_sgns(sentences: &[Vec<u32>], params: &SgnsParams, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable> {
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(Error::Empty("no training sentences".into()));
    }
    let mut trainer = SgnsTrainer::new(vocab, params.clone(), seed, sentences)?;
    for _ in 0..params.epochs {
        trainer.run_epoch(sentences);
    }
    let table = trainer.finish();
    if !table.is_finite() {
        return Err(Error::Numeric("embedding training produced non-finite values".into()));
    }
    Ok(table)
}
