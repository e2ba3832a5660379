//! Candidate scoring and selection, plus the Random, MostFreq and
//! EventWord2vec baselines.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cloze::ClozeInstance;
use crate::corpus::{Script, Vocabulary};
use crate::embeddings::{cosine, eventword2vec_repr, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eventcomp::EventCompModel;
use crate::io::atomic_write;
use crate::nn::sigmoid;
use crate::salience::extract_salience;

/// How pairwise coherences against the context events are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Max => "max",
            Aggregation::Sum => "sum",
        }
    }

    pub fn combine(self, scores: &[f64]) -> f64 {
        match self {
            Aggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Sum => scores.iter().sum(),
        }
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Aggregation> {
        match s {
            "max" => Ok(Aggregation::Max),
            "sum" => Ok(Aggregation::Sum),
            other => Err(Error::Config(format!("unknown aggregation {other:?} (expected max or sum)"))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub target_event: usize,
    pub position: crate::corpus::Position,
    pub gold: usize,
    /// (entity id, score), best first; ties go to the lower id.
    pub ranked: Vec<(usize, f64)>,
    pub chosen: usize,
    pub correct: bool,
}

impl Prediction {
    pub fn from_scores(instance: &ClozeInstance, mut ranked: Vec<(usize, f64)>) -> Result<Prediction> {
        if ranked.is_empty() {
            return Err(Error::Empty(format!(
                "{}: instance at event {} has no candidates",
                instance.doc_id, instance.target_event
            )));
        }
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let chosen = ranked[0].0;
        Ok(Prediction {
            doc_id: instance.doc_id.clone(),
            target_event: instance.target_event,
            position: instance.position,
            gold: instance.gold_entity,
            ranked,
            chosen,
            correct: chosen == instance.gold_entity,
        })
    }

    /// Rank (0 = best) of `entity`, if it was a candidate.
    pub fn rank_of(&self, entity: usize) -> Option<usize> {
        self.ranked.iter().position(|(e, _)| *e == entity)
    }

    pub fn to_tsv(&self, tag: &str) -> String {
        let ranked: Vec<String> = self.ranked.iter().map(|(e, s)| format!("{e}:{s:.6}")).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.doc_id,
            self.target_event,
            self.position,
            self.gold,
            self.chosen,
            ranked.join(","),
            tag
        )
    }
}

pub const PREDICTION_HEADER: &str = "#evpredictions\tv1\tdoc_id\tevent\tposition\tgold\tchosen\tranked\tmodel";

pub fn write_predictions(path: &Path, predictions: &[Prediction], tag: &str) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "{PREDICTION_HEADER}")?;
        for p in predictions {
            writeln!(w, "{}", p.to_tsv(tag))?;
        }
        Ok(())
    })
}

fn check_instance(script: &Script, instance: &ClozeInstance) -> Result<()> {
    if instance.target_event >= script.events.len() {
        return Err(Error::Contract(format!(
            "{}: target event {} out of range",
            instance.doc_id, instance.target_event
        )));
    }
    if script.events.len() < 2 {
        return Err(Error::Contract(format!(
            "{}: single-event script has no context events",
            instance.doc_id
        )));
    }
    if let Some(&c) = instance.candidates.iter().find(|&&c| c >= script.entities.len()) {
        return Err(Error::Contract(format!("{}: candidate {c} does not exist", instance.doc_id)));
    }
    Ok(())
}

fn context_indices(script: &Script, target: usize) -> impl Iterator<Item = usize> {
    (0..script.events.len()).filter(move |&i| i != target)
}

/// Pre-sigmoid pair scores, one row per candidate (in `instance.candidates`
/// order) and one column per context event. Context representations are
/// composed once and shared by every candidate.
pub fn pair_logits(script: &Script, instance: &ClozeInstance, model: &EventCompModel) -> Result<Vec<Vec<f64>>> {
    check_instance(script, instance)?;
    let contexts: Vec<Vec<f64>> = context_indices(script, instance.target_event)
        .map(|i| model.represent(&model.encode(&script.events[i], &script.entities)))
        .collect();
    Ok(instance
        .candidates
        .iter()
        .map(|&cand| {
            let target = model.represent(&model.encode(&instance.completed(script, cand), &script.entities));
            let extra = model.extra_input(instance.position, &extract_salience(&script.entities[cand]));
            contexts
                .iter()
                .map(|ctx| model.pair_forward(ctx, &target, &extra).logit)
                .collect()
        })
        .collect())
}

/// Narrative coherence of one candidate: the aggregate of its coherence with
/// every context event.
pub fn score_candidate(
    script: &Script,
    instance: &ClozeInstance,
    candidate: usize,
    model: &EventCompModel,
    aggregation: Aggregation,
) -> Result<f64> {
    if !instance.candidates.contains(&candidate) {
        return Err(Error::Contract(format!(
            "{}: entity {candidate} is not a candidate",
            instance.doc_id
        )));
    }
    check_instance(script, instance)?;
    let target = model.represent(&model.encode(&instance.completed(script, candidate), &script.entities));
    let extra = model.extra_input(instance.position, &extract_salience(&script.entities[candidate]));
    let pairs: Vec<f64> = context_indices(script, instance.target_event)
        .map(|i| {
            let ctx = model.represent(&model.encode(&script.events[i], &script.entities));
            model.pair_forward(&ctx, &target, &extra).coherence
        })
        .collect();
    Ok(aggregation.combine(&pairs))
}

pub fn predict(script: &Script, instance: &ClozeInstance, model: &EventCompModel, aggregation: Aggregation) -> Result<Prediction> {
    if instance.candidates.is_empty() {
        return Prediction::from_scores(instance, Vec::new());
    }
    let logits = pair_logits(script, instance, model)?;
    let ranked = instance
        .candidates
        .iter()
        .zip(&logits)
        .map(|(&c, row)| {
            let coh: Vec<f64> = row.iter().map(|&z| sigmoid(z)).collect();
            (c, aggregation.combine(&coh))
        })
        .collect();
    Prediction::from_scores(instance, ranked)
}

/// Uniform choice; the chosen candidate scores 1, the rest 0.
pub fn baseline_random<R: Rng>(instance: &ClozeInstance, rng: &mut R) -> Result<Prediction> {
    if instance.candidates.is_empty() {
        return Prediction::from_scores(instance, Vec::new());
    }
    let pick = rng.gen_range(0..instance.candidates.len());
    let ranked = instance
        .candidates
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, if i == pick { 1.0 } else { 0.0 }))
        .collect();
    Prediction::from_scores(instance, ranked)
}

/// The candidate with the most mentions.
pub fn baseline_mostfreq(script: &Script, instance: &ClozeInstance) -> Result<Prediction> {
    let ranked = instance
        .candidates
        .iter()
        .map(|&c| {
            script
                .entity(c)
                .map(|e| (c, e.mentions().len() as f64))
                .ok_or_else(|| Error::Contract(format!("{}: candidate {c} does not exist", instance.doc_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Prediction::from_scores(instance, ranked)
}

/// Cosine similarity between averaged token embeddings of the completed
/// target and each context event.
pub fn baseline_eventword2vec(
    script: &Script,
    instance: &ClozeInstance,
    table: &EmbeddingTable,
    vocab: &Vocabulary,
    aggregation: Aggregation,
) -> Result<Prediction> {
    if instance.candidates.is_empty() {
        return Prediction::from_scores(instance, Vec::new());
    }
    check_instance(script, instance)?;
    if table.len() != vocab.len() {
        return Err(Error::Contract(format!(
            "embedding table has {} rows for a vocabulary of {}",
            table.len(),
            vocab.len()
        )));
    }
    let contexts: Vec<Vec<f64>> = context_indices(script, instance.target_event)
        .map(|i| eventword2vec_repr(&script.events[i], &script.entities, vocab, table))
        .collect();
    let ranked = instance
        .candidates
        .iter()
        .map(|&c| {
            let target = eventword2vec_repr(&instance.completed(script, c), &script.entities, vocab, table);
            let sims: Vec<f64> = contexts.iter().map(|ctx| cosine(&target, ctx)).collect();
            (c, aggregation.combine(&sims))
        })
        .collect();
    Prediction::from_scores(instance, ranked)
}

/// Any of the cloze predictors.
#[derive(Clone, Copy, Debug)]
pub enum Predictor<'a> {
    Random,
    MostFreq,
    EventComp {
        model: &'a EventCompModel,
        aggregation: Aggregation,
    },
    EventWord2vec {
        table: &'a EmbeddingTable,
        vocab: &'a Vocabulary,
        aggregation: Aggregation,
    },
}

impl Predictor<'_> {
    pub fn tag(&self) -> &'static str {
        match self {
            Predictor::Random => "random",
            Predictor::MostFreq => "mostfreq",
            Predictor::EventComp { .. } => "eventcomp",
            Predictor::EventWord2vec { .. } => "eventword2vec",
        }
    }

    pub fn aggregation(&self) -> Option<Aggregation> {
        match self {
            Predictor::EventComp { aggregation, .. } | Predictor::EventWord2vec { aggregation, .. } => Some(*aggregation),
            _ => None,
        }
    }

    /// Whether predictions consume the random stream.
    pub fn uses_rng(&self) -> bool {
        matches!(self, Predictor::Random)
    }

    pub fn predict<R: Rng>(&self, script: &Script, instance: &ClozeInstance, rng: &mut R) -> Result<Prediction> {
        match self {
            Predictor::Random => baseline_random(instance, rng),
            Predictor::MostFreq => baseline_mostfreq(script, instance),
            Predictor::EventComp { model, aggregation } => predict(script, instance, model, *aggregation),
            Predictor::EventWord2vec {
                table,
                vocab,
                aggregation,
            } => baseline_eventword2vec(script, instance, table, vocab, *aggregation),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloze::generate_cloze_instances;
    use crate::corpus::{build_vocabulary, Position};
    use crate::eventcomp::{ModelConfig, ModelDims};
    use crate::fixtures::power_company_script;
    use crate::rng::seeded;

    fn model(seed: u64) -> EventCompModel {
        let s = power_company_script();
        let vocab = build_vocabulary([&s], 1, 10).unwrap();
        let config = ModelConfig {
            dims: ModelDims {
                emb_dim: 6,
                arg_hidden: 8,
                event_dim: 5,
                pair_hidden: 7,
                pair_hidden2: 4,
            },
            ..Default::default()
        };
        EventCompModel::new(vocab, config, None, seed).unwrap()
    }

    fn instance() -> ClozeInstance {
        ClozeInstance {
            doc_id: "fig1".into(),
            target_event: 1,
            position: Position::Pobj,
            gold_entity: 2,
            candidates: vec![0, 1, 2],
            preposition: Some("to".into()),
        }
    }

    #[test]
    fn batched_matches_pairwise() {
        let s = power_company_script();
        let m = model(7);
        for agg in [Aggregation::Max, Aggregation::Sum] {
            let p = predict(&s, &instance(), &m, agg).unwrap();
            for (c, score) in &p.ranked {
                assert_eq!(*score, score_candidate(&s, &instance(), *c, &m, agg).unwrap());
            }
        }
        assert!(score_candidate(&s, &instance(), 5, &m, Aggregation::Max).is_err());
    }

    #[test]
    fn single_context_and_errors() {
        let mut s = power_company_script();
        s.events.truncate(2);
        let m = model(1);
        let inst = instance();
        let max = score_candidate(&s, &inst, 0, &m, Aggregation::Max).unwrap();
        let sum = score_candidate(&s, &inst, 0, &m, Aggregation::Sum).unwrap();
        assert_eq!(max, sum);
        s.events.truncate(1);
        let inst = ClozeInstance { target_event: 0, ..instance() };
        assert!(predict(&s, &inst, &m, Aggregation::Max).is_err());
        let empty = ClozeInstance { candidates: vec![], ..instance() };
        assert!(baseline_mostfreq(&s, &empty).is_err());
        assert!(baseline_random(&empty, &mut seeded(0)).is_err());
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let s = power_company_script();
        let m = model(3).with_zero_output();
        let inst = ClozeInstance { candidates: vec![2, 0, 1], ..instance() };
        let p = predict(&s, &inst, &m, Aggregation::Max).unwrap();
        assert_eq!(p.chosen, 0);
        assert_eq!(p.ranked.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        let one = ClozeInstance { candidates: vec![2], ..instance() };
        assert!(predict(&s, &one, &m, Aggregation::Max).unwrap().correct);
    }

    #[test]
    fn mostfreq_picks_most_mentions() {
        let s = power_company_script();
        let p = baseline_mostfreq(&s, &instance()).unwrap();
        assert_eq!(p.chosen, 0);
        assert_eq!(p.ranked[0].1, 4.0);
    }

    #[test]
    fn random_is_seeded() {
        let s = power_company_script();
        let insts = generate_cloze_instances(&s, &mut seeded(0), None);
        let picks = |seed| {
            let mut rng = seeded(seed);
            insts
                .iter()
                .map(|i| baseline_random(i, &mut rng).unwrap().chosen)
                .collect::<Vec<_>>()
        };
        assert_eq!(picks(5), picks(5));
    }

    #[test]
    fn eventword2vec_identical_context_wins() {
        let mut s = power_company_script();
        // event 0 is build(x0, x2); make event 1 build(x0, _) so x2 restores it exactly
        s.events[1] = s.events[0].clone();
        let inst = ClozeInstance {
            target_event: 1,
            position: Position::Dobj,
            preposition: None,
            ..instance()
        };
        let vocab = build_vocabulary([&s], 1, 10).unwrap();
        let table = EmbeddingTable::random(vocab.tokens().to_vec(), 8, 3);
        let p = baseline_eventword2vec(&s, &inst, &table, &vocab, Aggregation::Max).unwrap();
        assert_eq!(p.chosen, 2);
        assert!((p.ranked[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tsv_line_has_six_decimals() {
        let p = Prediction::from_scores(&instance(), vec![(0, 0.25), (2, 0.5)]).unwrap();
        assert_eq!(p.to_tsv("m"), "fig1\t1\tpobj\t2\t2\t2:0.500000,0:0.250000\tm");
    }
}
