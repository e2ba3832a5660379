//! Cloze evaluation: accuracy with breakdowns by argument position, head
//! part of speech and entity frequency, plus salience ablation runs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloze::{ClozeInstance, EncodedTriple};
use crate::corpus::{Entity, MentionKind, Position, Script, Vocabulary};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eventcomp::{train, EventCompModel, ModelConfig, TrainParams};
use crate::inference::{Aggregation, Prediction, Predictor};
use crate::io::atomic_write;
use crate::rng::{seeded, Rng};
use crate::salience::{SalienceGroup, SalienceMask};

/// Upper bounds (inclusive) and labels of the entity frequency buckets.
pub const FREQUENCY_BUCKETS: [(usize, &str); 6] = [(2, "2"), (3, "3"), (4, "4"), (6, "5-6"), (9, "7-9"), (usize::MAX, "10+")];

/// Bucket label for an entity with `total` mentions (totals below 2 fall
/// into the first bucket).
pub fn frequency_bucket(total: usize) -> &'static str {
    FREQUENCY_BUCKETS
        .iter()
        .find(|(hi, _)| total <= *hi)
        .map(|(_, l)| *l)
        .expect("last bucket is unbounded")
}

pub const HEAD_POS_CLASSES: [&str; 3] = ["noun", "pronoun", "other"];

/// `pronoun` when every mention is pronominal, `noun` when the
/// representative mention is nominal or named, `other` otherwise.
pub fn head_pos_class(entity: &Entity) -> &'static str {
    let ms = entity.mentions();
    if ms.iter().all(|m| m.kind == MentionKind::Pronominal) {
        return "pronoun";
    }
    let rep = ms.iter().find(|m| m.head_lemma == entity.representative());
    match rep.map(|m| m.kind) {
        Some(MentionKind::Nominal) | Some(MentionKind::Named) => "noun",
        _ => "other",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketStat {
    pub label: String,
    pub correct: usize,
    pub total: usize,
}

impl BucketStat {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

fn buckets(labels: &[&str]) -> Vec<BucketStat> {
    labels
        .iter()
        .map(|l| BucketStat {
            label: l.to_string(),
            correct: 0,
            total: 0,
        })
        .collect()
}

fn bump(stats: &mut [BucketStat], label: &str, correct: bool) {
    let b = stats.iter_mut().find(|b| b.label == label).expect("declared bucket");
    b.total += 1;
    b.correct += usize::from(correct);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub aggregation: Option<Aggregation>,
    pub mask: Option<String>,
    /// Any further settings echoed by the caller.
    #[serde(default)]
    pub extra: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_tag: String,
    pub n_instances: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub mean_candidates: f64,
    /// Expected accuracy of uniform guessing, mean of 1/|candidates|.
    pub random_expectation: f64,
    pub by_position: Vec<BucketStat>,
    pub by_head_pos: Vec<BucketStat>,
    pub by_frequency: Vec<BucketStat>,
    pub config: ReportConfig,
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model\t{}", self.model_tag);
        let _ = writeln!(out, "seed\t{}", self.config.seed);
        if let Some(a) = self.config.aggregation {
            let _ = writeln!(out, "aggregation\t{a}");
        }
        if let Some(m) = &self.config.mask {
            let _ = writeln!(out, "salience\t{m}");
        }
        for (k, v) in &self.config.extra {
            let _ = writeln!(out, "{k}\t{v}");
        }
        let _ = writeln!(out, "instances\t{}", self.n_instances);
        let _ = writeln!(out, "mean_candidates\t{:.4}", self.mean_candidates);
        let _ = writeln!(out, "accuracy\t{:.4}", 100.0 * self.accuracy);
        out.push_str("\nbreakdown\tbucket\tcorrect\ttotal\taccuracy\n");
        for (name, stats) in self.breakdowns() {
            for b in stats {
                let acc = b.accuracy().map_or("-".to_string(), |a| format!("{:.4}", 100.0 * a));
                let _ = writeln!(out, "{name}\t{}\t{}\t{}\t{acc}", b.label, b.correct, b.total);
            }
        }
        out
    }

    pub fn breakdowns(&self) -> [(&'static str, &[BucketStat]); 3] {
        [
            ("position", &self.by_position),
            ("head_pos", &self.by_head_pos),
            ("frequency", &self.by_frequency),
        ]
    }

    /// Per-bucket CSV for external plotting.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("model,breakdown,bucket,correct,total,accuracy\n");
        for (name, stats) in self.breakdowns() {
            for b in stats {
                let _ = writeln!(
                    out,
                    "{},{name},{},{},{},{}",
                    self.model_tag,
                    b.label,
                    b.correct,
                    b.total,
                    b.accuracy().map_or(String::new(), |a| format!("{a:.6}"))
                );
            }
        }
        out
    }
}

/// Scripts and the cloze instances drawn from them.
#[derive(Clone, Debug, Default)]
pub struct EvalSet {
    pub scripts: Vec<Script>,
    pub instances: Vec<ClozeInstance>,
    index: HashMap<String, usize>,
}

impl EvalSet {
    pub fn new(scripts: Vec<Script>, instances: Vec<ClozeInstance>) -> Result<EvalSet> {
        let index: HashMap<String, usize> = scripts.iter().enumerate().map(|(i, s)| (s.doc_id.clone(), i)).collect();
        if let Some(inst) = instances.iter().find(|i| !index.contains_key(&i.doc_id)) {
            return Err(Error::Reference {
                line: 0,
                message: format!("cloze instance refers to unknown document {:?}", inst.doc_id),
            });
        }
        Ok(EvalSet {
            scripts,
            instances,
            index,
        })
    }

    /// Instances of every script, each capped at `per_doc_cap`.
    pub fn from_scripts(scripts: Vec<Script>, seed: u64, per_doc_cap: Option<usize>) -> Result<EvalSet> {
        let mut instances = Vec::new();
        for s in &scripts {
            let mut rng = seeded(crate::rng::derive_seed(seed, &s.doc_id));
            instances.extend(crate::cloze::generate_cloze_instances(s, &mut rng, per_doc_cap));
        }
        EvalSet::new(scripts, instances)
    }

    pub fn script(&self, doc_id: &str) -> Option<&Script> {
        self.index.get(doc_id).map(|&i| &self.scripts[i])
    }
}

/// Runs `predictor` over every instance. Model predictors are split across
/// `workers` threads; the random baseline always runs on one thread so its
/// picks follow the single seeded stream.
pub fn evaluate(set: &EvalSet, predictor: &Predictor<'_>, rng: &mut Rng, workers: usize) -> Result<(EvalReport, Vec<Prediction>)> {
    if set.instances.is_empty() {
        return Err(Error::Empty("no evaluation instances".into()));
    }
    let run = |insts: &[ClozeInstance], rng: &mut Rng| -> Result<Vec<Prediction>> {
        insts
            .iter()
            .map(|inst| {
                let script = set.script(&inst.doc_id).expect("checked at construction");
                predictor.predict(script, inst, rng)
            })
            .collect()
    };
    let predictions = if workers <= 1 || predictor.uses_rng() {
        run(&set.instances, rng)?
    } else {
        let chunk = set.instances.len().div_ceil(workers);
        let parts: Vec<Result<Vec<Prediction>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = set
                .instances
                .chunks(chunk)
                .map(|c| scope.spawn(move || run(c, &mut seeded(0))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("evaluation worker panicked")).collect()
        });
        let mut all = Vec::with_capacity(set.instances.len());
        for p in parts {
            all.extend(p?);
        }
        all
    };
    let report = summarize(set, &predictions, predictor.tag(), ReportConfig {
        seed: 0,
        aggregation: predictor.aggregation(),
        mask: match predictor {
            Predictor::EventComp { model, .. } => Some(model.config.mask.to_string()),
            _ => None,
        },
        extra: Vec::new(),
    })?;
    Ok((report, predictions))
}

/// Builds a report from finished predictions (aligned with `set.instances`).
pub fn summarize(set: &EvalSet, predictions: &[Prediction], tag: &str, config: ReportConfig) -> Result<EvalReport> {
    if predictions.is_empty() {
        return Err(Error::Empty("no predictions".into()));
    }
    let mut by_position = buckets(&["subj", "dobj", "pobj"]);
    let mut by_head_pos = buckets(&HEAD_POS_CLASSES);
    let freq_labels: Vec<&str> = FREQUENCY_BUCKETS.iter().map(|b| b.1).collect();
    let mut by_frequency = buckets(&freq_labels);
    let mut correct = 0;
    let mut cand_sum = 0.0;
    let mut inv_sum = 0.0;
    for (inst, p) in set.instances.iter().zip(predictions) {
        let script = set.script(&inst.doc_id).expect("checked at construction");
        let gold = &script.entities[inst.gold_entity];
        correct += usize::from(p.correct);
        cand_sum += inst.candidates.len() as f64;
        inv_sum += 1.0 / inst.candidates.len().max(1) as f64;
        bump(&mut by_position, Position::as_str(inst.position), p.correct);
        bump(&mut by_head_pos, head_pos_class(gold), p.correct);
        bump(&mut by_frequency, frequency_bucket(gold.mentions().len()), p.correct);
    }
    let n = predictions.len();
    Ok(EvalReport {
        model_tag: tag.to_string(),
        n_instances: n,
        correct,
        accuracy: correct as f64 / n as f64,
        mean_candidates: cand_sum / n as f64,
        random_expectation: inv_sum / n as f64,
        by_position,
        by_head_pos,
        by_frequency,
        config,
    })
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    atomic_write(path, |w| {
        if is_json {
            serde_json::to_writer_pretty(&mut *w, report)?;
            writeln!(w)?;
        } else {
            w.write_all(report.to_tsv().as_bytes())?;
        }
        Ok(())
    })
}

/// The five salience configurations of an ablation table: no salience at
/// all, each group removed in turn, and every group.
pub fn ablation_masks(groups: &[SalienceGroup]) -> Vec<(String, SalienceMask)> {
    let mut out = vec![("no salience".to_string(), SalienceMask::none())];
    for &g in groups {
        out.push((format!("-{}", g.name()), SalienceMask::all().without(g)));
    }
    out.push(("all salience".to_string(), SalienceMask::all()));
    out
}

#[derive(Clone, Debug)]
pub struct AblationSetup<'a> {
    pub vocab: &'a Vocabulary,
    pub base: ModelConfig,
    pub init: Option<&'a EmbeddingTable>,
    pub train: TrainParams,
    pub model_seed: u64,
    pub aggregation: Aggregation,
    pub workers: usize,
}

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub label: String,
    pub mask: SalienceMask,
    pub report: EvalReport,
    pub model: EventCompModel,
}

/// Trains and evaluates one model per mask.
pub fn ablation_run(
    setup: &AblationSetup<'_>,
    masks: &[(String, SalienceMask)],
    triples: &[EncodedTriple],
    eval: &EvalSet,
) -> Result<Vec<AblationRow>> {
    masks
        .iter()
        .map(|(label, mask)| {
            let config = ModelConfig { mask: *mask, ..setup.base };
            let model = EventCompModel::new(setup.vocab.clone(), config, setup.init, setup.model_seed)?;
            let model = train(triples, &setup.train, model)?.model;
            let predictor = Predictor::EventComp {
                model: &model,
                aggregation: setup.aggregation,
            };
            let (mut report, _) = evaluate(eval, &predictor, &mut seeded(setup.train.seed), setup.workers)?;
            report.config.seed = setup.train.seed;
            Ok(AblationRow {
                label: label.clone(),
                mask: *mask,
                report,
                model,
            })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::from("configuration\tsalience\taccuracy\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{:.4}", r.label, r.mask, 100.0 * r.report.accuracy);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Mention;
    use crate::fixtures::power_company_script;

    #[test]
    fn bucket_boundaries() {
        assert_eq!(frequency_bucket(2), "2");
        assert_eq!(frequency_bucket(5), "5-6");
        assert_eq!(frequency_bucket(6), "5-6");
        assert_eq!(frequency_bucket(9), "7-9");
        assert_eq!(frequency_bucket(37), "10+");
    }

    #[test]
    fn head_pos_classes() {
        let m = |lemma: &str, kind| Mention {
            sentence_index: 0,
            head_lemma: lemma.into(),
            kind,
        };
        let pron = Entity::new(0, vec![m("he", MentionKind::Pronominal), m("him", MentionKind::Pronominal)]).unwrap();
        assert_eq!(head_pos_class(&pron), "pronoun");
        let mixed = Entity::new(0, vec![m("he", MentionKind::Pronominal), m("man", MentionKind::Nominal)]).unwrap();
        assert_eq!(head_pos_class(&mixed), "noun");
    }

    #[test]
    fn breakdowns_recombine() {
        let s = power_company_script();
        let set = EvalSet::from_scripts(vec![s], 1, None).unwrap();
        let (report, preds) = evaluate(&set, &Predictor::MostFreq, &mut seeded(0), 1).unwrap();
        assert_eq!(preds.len(), set.instances.len());
        for (_, stats) in report.breakdowns() {
            assert_eq!(stats.iter().map(|b| b.total).sum::<usize>(), report.n_instances);
            assert_eq!(stats.iter().map(|b| b.correct).sum::<usize>(), report.correct);
        }
        assert!(report.to_tsv().contains("accuracy\t"));
        assert!(report.plot_csv().starts_with("model,breakdown"));
        let empty = EvalSet::new(vec![], vec![]).unwrap();
        assert!(evaluate(&empty, &Predictor::MostFreq, &mut seeded(0), 1).is_err());
    }

    #[test]
    fn ablation_has_five_rows() {
        let masks = ablation_masks(&SalienceGroup::ALL);
        assert_eq!(masks.len(), 5);
        assert_eq!(masks[1].0, "-mentions");
        assert_eq!(masks[0].1.extra_width(), 3);
    }
}
