//! Implicit arguments of nominal predicates: converting annotated
//! instances into the event format, deciding whether an open role has a
//! filler at all, choosing fillers with the coherence model, and scoring.

pub mod features;
pub mod fnf;
pub mod tree;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_record, Argument, Entity, Event, Filler, Mention, MentionKind, Position, RawDocument, Script};
use crate::error::{Error, Result};
use crate::eventcomp::EventCompModel;
use crate::inference::Aggregation;
use crate::salience::extract_salience;

pub use features::extract_fillnofill_features;
pub use fnf::{train_fillnofill, FillNoFillModel, FnfParams};

pub const GC_FORMAT: &str = "evgc";
pub const GC_VERSION: u32 = 1;
pub const MAPPING_MAGIC: &str = "#evgcmap";

/// The shipped mapping table for the ten nominal predicates.
pub const DEFAULT_MAPPINGS: &str = include_str!("../../data/gc_mappings.tsv");

/// Where a semantic role lands in the verbal event.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub position: Position,
    /// `None` for a bare `prep`.
    pub preposition: Option<String>,
}

impl Slot {
    pub fn parse(s: &str) -> Option<Slot> {
        let (position, preposition) = match s {
            "subj" => (Position::Subj, None),
            "dobj" => (Position::Dobj, None),
            "prep" => (Position::Pobj, None),
            _ => (Position::Pobj, Some(s.strip_prefix("prep_").filter(|p| !p.is_empty())?.to_string())),
        };
        Some(Slot { position, preposition })
    }

    pub fn label(&self) -> String {
        match (&self.position, &self.preposition) {
            (Position::Pobj, Some(p)) => format!("prep_{p}"),
            (Position::Pobj, None) => "prep".into(),
            (p, _) => p.as_str().into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateMapping {
    pub nominal: String,
    pub verbal: String,
    /// Slot of arg0..arg4; `None` where the role has no mapping.
    pub roles: [Option<Slot>; 5],
}

impl PredicateMapping {
    pub fn slot(&self, role: &str) -> Option<&Slot> {
        role_number(role).and_then(|n| self.roles.get(n)?.as_ref())
    }
}

/// `arg2` -> 2.
pub fn role_number(role: &str) -> Option<usize> {
    role.strip_prefix("arg")?.parse().ok().filter(|&n| n < 5)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingTable {
    by_nominal: BTreeMap<String, PredicateMapping>,
}

impl MappingTable {
    pub fn builtin() -> MappingTable {
        MappingTable::parse(DEFAULT_MAPPINGS).expect("shipped mapping table is valid")
    }

    pub fn load(path: &Path) -> Result<MappingTable> {
        MappingTable::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<MappingTable> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.split('\t').next() == Some(MAPPING_MAGIC) => {
                let version = l.split('\t').nth(1).unwrap_or("");
                if version != "v1" {
                    return Err(Error::Version {
                        found: version.trim_start_matches('v').parse().unwrap_or(0),
                        expected: 1,
                    });
                }
            }
            _ => return Err(Error::format(1, "header", format!("mapping table must start with {MAPPING_MAGIC}"))),
        }
        let mut by_nominal = BTreeMap::new();
        for (i, line) in lines {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols[0] == "nominal" {
                continue;
            }
            if cols.len() != 7 {
                return Err(Error::format(i + 1, "columns", format!("expected 7 columns, found {}", cols.len())));
            }
            let mut roles: [Option<Slot>; 5] = Default::default();
            for (k, c) in cols[2..].iter().enumerate() {
                if *c != "--" {
                    roles[k] = Some(
                        Slot::parse(c).ok_or_else(|| Error::format(i + 1, format!("arg{k}"), format!("bad slot {c:?}")))?,
                    );
                }
            }
            by_nominal.insert(
                cols[0].to_string(),
                PredicateMapping {
                    nominal: cols[0].to_string(),
                    verbal: cols[1].to_string(),
                    roles,
                },
            );
        }
        Ok(MappingTable { by_nominal })
    }

    pub fn get(&self, nominal: &str) -> Option<&PredicateMapping> {
        self.by_nominal.get(nominal)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredicateMapping> {
        self.by_nominal.values()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcSentence {
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub stems: Vec<String>,
    pub pos: Vec<String>,
    pub tree: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcPredicate {
    pub lemma: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcSpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub head: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<u32>,
}

/// An argument expressed locally on the predicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcLocalArg {
    pub role: String,
    pub lemma: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcRole {
    pub role: String,
    /// Acceptable fillers; several spans may be equally correct.
    pub gold: Vec<GcSpan>,
}

/// One enriched annotated predicate occurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcRecord {
    pub id: String,
    pub doc: RawDocument,
    pub sentences: Vec<GcSentence>,
    pub predicate: GcPredicate,
    #[serde(default)]
    pub local_args: Vec<GcLocalArg>,
    /// Implicit-role annotations; open roles without an entry have no filler.
    #[serde(default)]
    pub roles: Vec<GcRole>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenRole {
    pub role: String,
    pub slot: Slot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcInstance {
    pub id: String,
    pub nominal: String,
    pub verbal: String,
    /// Document script; the converted predicate is `events[target_event]`.
    pub script: Script,
    pub target_event: usize,
    pub sentences: Vec<GcSentence>,
    pub predicate: GcPredicate,
    pub open: Vec<OpenRole>,
    /// Acceptable entity ids per open role (aligned with `open`).
    pub gold: Vec<BTreeSet<usize>>,
    pub candidates: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Inspection record written by conversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvertedSummary {
    pub id: String,
    pub nominal: String,
    pub verbal: String,
    pub open: Vec<(String, String)>,
    pub gold: Vec<Vec<usize>>,
    pub candidates: usize,
    pub warnings: Vec<String>,
}

impl GcInstance {
    pub fn summary(&self) -> ConvertedSummary {
        ConvertedSummary {
            id: self.id.clone(),
            nominal: self.nominal.clone(),
            verbal: self.verbal.clone(),
            open: self.open.iter().map(|o| (o.role.clone(), o.slot.label())).collect(),
            gold: self.gold.iter().map(|g| g.iter().copied().collect()).collect(),
            candidates: self.candidates.len(),
            warnings: self.warnings.clone(),
        }
    }

    /// The converted event with `entity` in the slot of `open[role]`.
    pub fn completed(&self, role: usize, entity: usize) -> Event {
        let slot = &self.open[role].slot;
        let mut ev = self.script.events[self.target_event].clone();
        *ev.arg_mut(slot.position) = Argument {
            filler: Filler::Entity(entity),
            preposition: match slot.position {
                Position::Pobj => Some(slot.preposition.clone().unwrap_or_else(|| "prep".into())),
                _ => None,
            },
        };
        ev
    }
}

/// Converts an annotated nominal predicate into a verbal event with open
/// implicit positions. Gold spans not covered by a chain of two or more
/// mentions become one-mention candidates.
pub fn convert_instance(record: &GcRecord, mappings: &MappingTable) -> Result<GcInstance> {
    let nominal = record.predicate.lemma.to_lowercase();
    let mapping = mappings
        .get(&nominal)
        .ok_or_else(|| Error::UnmappedPredicate(nominal.clone()))?;
    if record.predicate.sentence >= record.sentences.len() {
        return Err(Error::Reference {
            line: 0,
            message: format!("{}: predicate sentence {} does not exist", record.id, record.predicate.sentence),
        });
    }
    let mut script = parse_record(&record.doc, 0)?;
    let chain_to_entity: HashMap<u32, usize> = record
        .doc
        .entities
        .iter()
        .filter(|c| c.mentions.len() >= 2)
        .enumerate()
        .map(|(i, c)| (c.id, i))
        .collect();
    let mut warnings = Vec::new();

    let mut event = Event::new(mapping.verbal.clone());
    let mut local: BTreeSet<usize> = BTreeSet::new();
    for arg in &record.local_args {
        let Some(slot) = mapping.slot(&arg.role) else {
            warnings.push(format!("local {} of {nominal} has no mapping; skipped", arg.role));
            continue;
        };
        if !event.arg(slot.position).is_empty() {
            warnings.push(format!("local {} collides in {}; skipped", arg.role, slot.label()));
            continue;
        }
        let filler = match arg.chain.and_then(|c| chain_to_entity.get(&c)) {
            Some(&id) => Filler::Entity(id),
            None => Filler::Lemma(arg.lemma.to_lowercase()),
        };
        *event.arg_mut(slot.position) = Argument {
            filler,
            preposition: (slot.position == Position::Pobj).then(|| slot.preposition.clone().unwrap_or_else(|| "prep".into())),
        };
        local.insert(role_number(&arg.role).expect("mapped roles are numbered"));
    }

    let mut open = Vec::new();
    for (n, slot) in mapping.roles.iter().enumerate() {
        if let Some(slot) = slot {
            if !local.contains(&n) {
                open.push(OpenRole {
                    role: format!("arg{n}"),
                    slot: slot.clone(),
                });
            }
        }
    }

    let mut promoted: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut gold = vec![BTreeSet::new(); open.len()];
    for r in &record.roles {
        let Some(k) = open.iter().position(|o| o.role == r.role) else {
            let why = if mapping.slot(&r.role).is_none() { "has no mapping" } else { "is filled locally" };
            warnings.push(format!("gold {} of {nominal} {why}; skipped", r.role));
            continue;
        };
        for span in &r.gold {
            let id = match span.chain.and_then(|c| chain_to_entity.get(&c)) {
                Some(&id) => id,
                None => *promoted.entry((span.sentence, span.start, span.end)).or_insert_with(|| {
                    let id = script.entities.len();
                    script.entities.push(Entity::singleton(
                        id,
                        Mention {
                            sentence_index: span.sentence,
                            head_lemma: span.head.to_lowercase(),
                            kind: MentionKind::Nominal,
                        },
                    ));
                    id
                }),
            };
            gold[k].insert(id);
        }
    }
    for w in &warnings {
        warn!("{}: {w}", record.id);
    }

    let target_event = script.events.len();
    script.events.push(event);
    let candidates = (0..script.entities.len()).collect();
    Ok(GcInstance {
        id: record.id.clone(),
        nominal,
        verbal: mapping.verbal.clone(),
        script,
        target_event,
        sentences: record.sentences.clone(),
        predicate: record.predicate.clone(),
        open,
        gold,
        candidates,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FillDecision {
    NoFill,
    Fill(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiArgOptions {
    pub threshold: f64,
    pub aggregation: Aggregation,
    /// Never give one entity two roles of the same predicate.
    pub exclusive: bool,
}

impl Default for MultiArgOptions {
    fn default() -> Self {
        MultiArgOptions {
            threshold: 0.5,
            aggregation: Aggregation::Max,
            exclusive: false,
        }
    }
}

/// Coherence of every candidate for one open role, best first.
pub fn rank_role(instance: &GcInstance, role: usize, model: &EventCompModel, aggregation: Aggregation) -> Result<Vec<(usize, f64)>> {
    let s = &instance.script;
    if s.events.len() < 2 {
        return Err(Error::Contract(format!("{}: no context events", instance.id)));
    }
    let contexts: Vec<Vec<f64>> = (0..s.events.len())
        .filter(|&i| i != instance.target_event)
        .map(|i| model.represent(&model.encode(&s.events[i], &s.entities)))
        .collect();
    let position = instance.open[role].slot.position;
    let mut ranked: Vec<(usize, f64)> = instance
        .candidates
        .iter()
        .map(|&c| {
            let target = model.represent(&model.encode(&instance.completed(role, c), &s.entities));
            let extra = model.extra_input(position, &extract_salience(&s.entities[c]));
            let coh: Vec<f64> = contexts.iter().map(|ctx| model.pair_forward(ctx, &target, &extra).coherence).collect();
            (c, aggregation.combine(&coh))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Per open role: no-fill when the classifier's fill probability is below
/// the threshold, otherwise the most coherent candidate.
pub fn multi_arg_predict(
    instance: &GcInstance,
    model: &EventCompModel,
    fill_probability: &dyn Fn(&GcInstance, usize) -> Result<f64>,
    opts: &MultiArgOptions,
) -> Result<Vec<FillDecision>> {
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(instance.open.len());
    for role in 0..instance.open.len() {
        if fill_probability(instance, role)? < opts.threshold {
            out.push(FillDecision::NoFill);
            continue;
        }
        let ranked = rank_role(instance, role, model, opts.aggregation)?;
        let pick = ranked
            .iter()
            .map(|r| r.0)
            .find(|c| !opts.exclusive || !used.contains(c));
        match pick {
            Some(c) => {
                used.insert(c);
                out.push(FillDecision::Fill(c));
            }
            None => out.push(FillDecision::NoFill),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub predicted: usize,
    pub correct: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No fills were predicted, so precision is reported as 0.
    pub precision_undefined: bool,
}

impl Prf {
    pub fn from_counts(predicted: usize, correct: usize, gold: usize) -> Prf {
        let precision = if predicted == 0 { 0.0 } else { correct as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { correct as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            predicted,
            correct,
            gold,
            precision,
            recall,
            f1,
            precision_undefined: predicted == 0,
        }
    }
}

/// Precision over predicted fills, recall over roles with a gold filler.
/// `decisions[i][r]` is judged against the acceptable set `gold[i][r]`.
pub fn score_prf(decisions: &[Vec<FillDecision>], gold: &[Vec<BTreeSet<usize>>]) -> Prf {
    let mut predicted = 0;
    let mut correct = 0;
    let mut gold_filled = 0;
    for (ds, gs) in decisions.iter().zip(gold) {
        for (d, g) in ds.iter().zip(gs) {
            gold_filled += usize::from(!g.is_empty());
            if let FillDecision::Fill(e) = d {
                predicted += 1;
                correct += usize::from(g.contains(e));
            }
        }
    }
    Prf::from_counts(predicted, correct, gold_filled)
}

/// Fill/no-fill training examples of one instance, one per open role.
pub fn fnf_examples(instance: &GcInstance) -> Result<Vec<(Vec<String>, bool)>> {
    (0..instance.open.len())
        .map(|r| Ok((extract_fillnofill_features(instance, r)?, !instance.gold[r].is_empty())))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcReport {
    pub protocol: String,
    pub overall: Prf,
    pub per_predicate: BTreeMap<String, Prf>,
}

impl GcReport {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# {}\npredicate\tpredicted\tcorrect\tgold\tP\tR\tF1\n", self.protocol);
        let row = |out: &mut String, name: &str, p: &Prf| {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
                p.predicted,
                p.correct,
                p.gold,
                100.0 * p.precision,
                100.0 * p.recall,
                100.0 * p.f1
            );
        };
        for (name, p) in &self.per_predicate {
            row(&mut out, name, p);
        }
        row(&mut out, "all", &self.overall);
        out
    }
}

fn report(protocol: String, instances: &[GcInstance], decisions: &[Vec<FillDecision>]) -> GcReport {
    let gold: Vec<Vec<BTreeSet<usize>>> = instances.iter().map(|i| i.gold.clone()).collect();
    let mut per_predicate = BTreeMap::new();
    let names: BTreeSet<&str> = instances.iter().map(|i| i.nominal.as_str()).collect();
    for name in names {
        let idx: Vec<usize> = (0..instances.len()).filter(|&i| instances[i].nominal == name).collect();
        let d: Vec<_> = idx.iter().map(|&i| decisions[i].clone()).collect();
        let g: Vec<_> = idx.iter().map(|&i| gold[i].clone()).collect();
        per_predicate.insert(name.to_string(), score_prf(&d, &g));
    }
    GcReport {
        protocol,
        overall: score_prf(decisions, &gold),
        per_predicate,
    }
}

/// Leave-one-predicate-out evaluation: the fill/no-fill classifier for each
/// predicate is trained on the other predicates' instances.
pub fn cross_validate(
    instances: &[GcInstance],
    model: &EventCompModel,
    params: &FnfParams,
    opts: &MultiArgOptions,
) -> Result<(GcReport, Vec<Vec<FillDecision>>)> {
    let examples: Vec<Vec<(Vec<String>, bool)>> = instances.iter().map(fnf_examples).collect::<Result<_>>()?;
    let predicates: BTreeSet<&str> = instances.iter().map(|i| i.nominal.as_str()).collect();
    let mut decisions = vec![Vec::new(); instances.len()];
    for &held in &predicates {
        let train: Vec<(Vec<String>, bool)> = instances
            .iter()
            .zip(&examples)
            .filter(|(i, _)| i.nominal != held)
            .flat_map(|(_, e)| e.iter().cloned())
            .collect();
        let fnf = train_fillnofill(&train, params)?;
        for (k, inst) in instances.iter().enumerate().filter(|(_, i)| i.nominal == held) {
            let ex = &examples[k];
            let prob = |_: &GcInstance, role: usize| Ok(fnf.probability(&ex[role].0));
            decisions[k] = multi_arg_predict(inst, model, &prob, opts)?;
        }
    }
    let protocol = format!(
        "leave-one-predicate-out, {} folds, threshold {}, aggregation {}, exclusive {}",
        predicates.len(),
        opts.threshold,
        opts.aggregation,
        opts.exclusive
    );
    Ok((report(protocol, instances, &decisions), decisions))
}

/// Evaluation with a fixed classifier (no cross-validation).
pub fn evaluate_with(
    instances: &[GcInstance],
    model: &EventCompModel,
    fnf: &FillNoFillModel,
    opts: &MultiArgOptions,
) -> Result<(GcReport, Vec<Vec<FillDecision>>)> {
    let prob = |inst: &GcInstance, role: usize| Ok(fnf.probability(&extract_fillnofill_features(inst, role)?));
    let decisions = instances
        .iter()
        .map(|i| multi_arg_predict(i, model, &prob, opts))
        .collect::<Result<Vec<_>>>()?;
    let protocol = format!("fixed classifier, threshold {}, aggregation {}", opts.threshold, opts.aggregation);
    Ok((report(protocol, instances, &decisions), decisions))
}
