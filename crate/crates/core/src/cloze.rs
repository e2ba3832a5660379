//! Argument cloze instances and (context, positive, negative) training
//! triples.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    argument_token, downsample_keep_probability, predicate_token, Argument, Entity, Event, Filler, Position, Script,
    Vocabulary,
};
use crate::salience::{extract_salience, SalienceFeatures};

pub const CLOZE_FORMAT: &str = "evcloze";
pub const TRIPLE_FORMAT: &str = "evtriples";
pub const FORMAT_VERSION: u32 = 1;

/// One removed entity argument and the candidates to restore it from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeInstance {
    pub doc_id: String,
    pub target_event: usize,
    pub position: Position,
    pub gold_entity: usize,
    pub candidates: Vec<usize>,
    /// Preposition of the removed prepositional object, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preposition: Option<String>,
}

impl ClozeInstance {
    /// The target event with the candidate filled into the removed slot.
    pub fn completed(&self, script: &Script, candidate: usize) -> Event {
        replace_argument(
            &script.events[self.target_event],
            self.position,
            candidate,
            self.preposition.as_deref(),
        )
    }

    /// The target event with the slot emptied.
    pub fn removed(&self, script: &Script) -> Event {
        let mut ev = script.events[self.target_event].clone();
        *ev.arg_mut(self.position) = Argument::empty();
        ev
    }
}

/// Copy of `event` with `position` holding `entity_id`. A prepositional slot
/// keeps its preposition, or takes `fallback_prep` when it was empty.
pub fn replace_argument(event: &Event, position: Position, entity_id: usize, fallback_prep: Option<&str>) -> Event {
    let mut out = event.clone();
    let slot = out.arg_mut(position);
    let prep = match position {
        Position::Pobj => slot
            .preposition
            .clone()
            .or_else(|| fallback_prep.map(str::to_string))
            .or_else(|| Some("prep".to_string())),
        _ => None,
    };
    *slot = Argument {
        filler: Filler::Entity(entity_id),
        preposition: prep,
    };
    out
}

/// Whether `entity` still shows up somewhere once the slot is removed: in
/// another argument slot, or through a further mention of its chain.
fn remains_elsewhere(script: &Script, event_index: usize, position: Position, entity: usize) -> bool {
    let other_arg = script.events.iter().enumerate().any(|(ei, ev)| {
        ev.args()
            .any(|(p, a)| a.entity_id() == Some(entity) && (ei != event_index || p != position))
    });
    other_arg || script.entities[entity].mentions().len() >= 2
}

/// All eligible slots, or a uniform sample of `per_doc_cap` of them in
/// document order.
pub fn generate_cloze_instances<R: Rng>(script: &Script, rng: &mut R, per_doc_cap: Option<usize>) -> Vec<ClozeInstance> {
    if script.events.len() < 2 || script.entities.len() < 2 {
        return Vec::new();
    }
    let candidates: Vec<usize> = (0..script.entities.len()).collect();
    let mut slots = Vec::new();
    for (ei, ev) in script.events.iter().enumerate() {
        for (pos, arg) in ev.args() {
            if let Some(x) = arg.entity_id() {
                if remains_elsewhere(script, ei, pos, x) {
                    slots.push(ClozeInstance {
                        doc_id: script.doc_id.clone(),
                        target_event: ei,
                        position: pos,
                        gold_entity: x,
                        candidates: candidates.clone(),
                        preposition: arg.preposition.clone(),
                    });
                }
            }
        }
    }
    match per_doc_cap {
        Some(cap) if cap < slots.len() => {
            let mut picked = index::sample(rng, slots.len(), cap).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| slots[i].clone()).collect()
        }
        _ => slots,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegKind {
    /// The argument at `position` replaced by another entity.
    Replace,
    /// The argument at `position` moved to `move_to` in the same event.
    Move,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingTriple {
    pub context_index: usize,
    pub positive_index: usize,
    pub context: Event,
    pub positive: Event,
    pub negative: Event,
    pub position: Position,
    pub pos_entity: usize,
    pub neg_entity: usize,
    pub neg_kind: NegKind,
    pub move_to: Option<Position>,
}

impl TrainingTriple {
    /// Slot whose candidate the negative event describes.
    pub fn negative_position(&self) -> Position {
        self.move_to.unwrap_or(self.position)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleOptions {
    pub multi_arg: bool,
    pub negatives_per_pair: usize,
    /// Maximum (context, positive) pairs per document.
    pub per_doc_cap: Option<usize>,
    /// Verbs counted above this are down-sampled.
    pub downsample_threshold: u64,
}

impl Default for TripleOptions {
    fn default() -> Self {
        TripleOptions {
            multi_arg: false,
            negatives_per_pair: 1,
            per_doc_cap: Some(20),
            downsample_threshold: 100_000,
        }
    }
}

/// Relocates the argument at `from` to `to`; the previous occupant of `to`
/// is dropped and `from` is left empty.
pub fn move_argument(event: &Event, from: Position, to: Position) -> Event {
    let mut out = event.clone();
    let moved = out.arg(from).filler.clone();
    let prep = match to {
        Position::Pobj => out.pobj.preposition.clone(),
        _ => None,
    };
    *out.arg_mut(from) = Argument::empty();
    *out.arg_mut(to) = Argument {
        filler: moved,
        preposition: prep,
    };
    out
}

/// Destinations a `move` negative may use: a different slot that does not
/// already hold the same filler. Prepositional slots are only targets when
/// they carry a preposition to reuse.
fn move_destinations(event: &Event, from: Position) -> Vec<Position> {
    let filler = &event.arg(from).filler;
    Position::ALL
        .into_iter()
        .filter(|&to| to != from)
        .filter(|&to| &event.arg(to).filler != filler)
        .filter(|&to| to != Position::Pobj || event.pobj.preposition.is_some())
        .collect()
}

pub fn generate_triples<R: Rng>(script: &Script, rng: &mut R, opts: &TripleOptions, vocab: &Vocabulary) -> Vec<TrainingTriple> {
    let n_events = script.events.len();
    if n_events < 2 || script.entities.len() < 2 {
        return Vec::new();
    }
    let mut positives: Vec<usize> = Vec::new();
    for (i, ev) in script.events.iter().enumerate() {
        if ev.entity_positions().is_empty() {
            continue;
        }
        let keep = downsample_keep_probability(vocab.verb_count(&ev.verb), opts.downsample_threshold);
        if keep < 1.0 && rng.gen::<f64>() >= keep {
            continue;
        }
        positives.push(i);
    }
    if let Some(cap) = opts.per_doc_cap {
        if cap < positives.len() {
            let mut picked = index::sample(rng, positives.len(), cap).into_vec();
            picked.sort_unstable();
            positives = picked.into_iter().map(|i| positives[i]).collect();
        }
    }

    let mut out = Vec::new();
    for p in positives {
        let positive = &script.events[p];
        let mut c = rng.gen_range(0..n_events - 1);
        if c >= p {
            c += 1;
        }
        let positions = positive.entity_positions();
        let position = positions[rng.gen_range(0..positions.len())];
        let pos_entity = positive.arg(position).entity_id().expect("entity-filled position");

        for _ in 0..opts.negatives_per_pair.max(1) {
            let mut neg_entity = rng.gen_range(0..script.entities.len() - 1);
            if neg_entity >= pos_entity {
                neg_entity += 1;
            }
            out.push(TrainingTriple {
                context_index: c,
                positive_index: p,
                context: script.events[c].clone(),
                positive: positive.clone(),
                negative: replace_argument(positive, position, neg_entity, None),
                position,
                pos_entity,
                neg_entity,
                neg_kind: NegKind::Replace,
                move_to: None,
            });
        }
        if opts.multi_arg {
            let dests = move_destinations(positive, position);
            if !dests.is_empty() {
                let to = dests[rng.gen_range(0..dests.len())];
                out.push(TrainingTriple {
                    context_index: c,
                    positive_index: p,
                    context: script.events[c].clone(),
                    positive: positive.clone(),
                    negative: move_argument(positive, position, to),
                    position,
                    pos_entity,
                    neg_entity: pos_entity,
                    neg_kind: NegKind::Move,
                    move_to: Some(to),
                });
            }
        }
    }
    out
}

/// Token ids of an event: predicate, subj, dobj, pobj (`None` when empty).
pub type EncodedEvent = [Option<u32>; 4];

pub fn encode_event(event: &Event, entities: &[Entity], vocab: &Vocabulary) -> EncodedEvent {
    let mut ids = [None; 4];
    ids[0] = Some(vocab.id(&predicate_token(&event.verb)));
    for (pos, arg) in event.args() {
        if !arg.is_empty() {
            ids[1 + pos.index()] = argument_token(arg, pos, entities).ok().map(|t| vocab.id(&t));
        }
    }
    ids
}

/// A training triple as stored on disk: token ids plus the salience of the
/// positive and negative candidates, so training needs no script access.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedTriple {
    pub doc_id: String,
    pub context: EncodedEvent,
    pub positive: EncodedEvent,
    pub negative: EncodedEvent,
    pub position: Position,
    pub neg_position: Position,
    pub pos_entity: usize,
    pub neg_entity: usize,
    pub neg_kind: NegKind,
    pub pos_salience: SalienceFeatures,
    pub neg_salience: SalienceFeatures,
}

pub fn encode_triple(script: &Script, triple: &TrainingTriple, vocab: &Vocabulary) -> EncodedTriple {
    let ents = &script.entities;
    EncodedTriple {
        doc_id: script.doc_id.clone(),
        context: encode_event(&triple.context, ents, vocab),
        positive: encode_event(&triple.positive, ents, vocab),
        negative: encode_event(&triple.negative, ents, vocab),
        position: triple.position,
        neg_position: triple.negative_position(),
        pos_entity: triple.pos_entity,
        neg_entity: triple.neg_entity,
        neg_kind: triple.neg_kind,
        pos_salience: extract_salience(&ents[triple.pos_entity]),
        neg_salience: extract_salience(&ents[triple.neg_entity]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rng::seeded;

    #[test]
    fn prep_to_instance_of_the_plant() {
        let script = fixtures::power_company_script();
        let mut rng = seeded(1);
        let all = generate_cloze_instances(&script, &mut rng, None);
        let inst = all
            .iter()
            .find(|i| i.target_event == 1 && i.position == Position::Pobj)
            .expect("prep_to slot of e1");
        assert_eq!(inst.gold_entity, 2);
        assert_eq!(inst.candidates, vec![0, 1, 2]);
        assert_eq!(inst.preposition.as_deref(), Some("to"));
        assert_eq!(inst.completed(&script, inst.gold_entity), script.events[1]);
        // lemma fillers are never removed
        assert!(all.iter().all(|i| script.events[i.target_event].arg(i.position).entity_id().is_some()));
    }

    #[test]
    fn single_entity_yields_nothing() {
        let mut script = fixtures::power_company_script();
        script.entities.truncate(1);
        for ev in &mut script.events {
            for p in Position::ALL {
                if ev.arg(p).entity_id().is_some_and(|x| x > 0) {
                    *ev.arg_mut(p) = Argument::lemma("thing");
                }
            }
        }
        let mut rng = seeded(3);
        assert!(generate_cloze_instances(&script, &mut rng, None).is_empty());
        let vocab = Vocabulary::parse_text("#evvocab\tv1\toov=<oov>\tprepositions=\n<oov>\t0\t0\n").unwrap();
        assert!(generate_triples(&script, &mut rng, &TripleOptions::default(), &vocab).is_empty());
    }

    #[test]
    fn cap_limits_instances() {
        let script = fixtures::power_company_script();
        let all = generate_cloze_instances(&script, &mut seeded(0), None);
        let capped = generate_cloze_instances(&script, &mut seeded(0), Some(2));
        assert_eq!(capped.len(), 2);
        assert!(capped.iter().all(|c| all.contains(c)));
    }

    #[test]
    fn replace_round_trip() {
        let mut ev = Event::new("sell");
        ev.subj = Argument::entity(1);
        ev.pobj = Argument::entity(2).with_preposition("to");
        let filled = replace_argument(&ev, Position::Dobj, 0, None);
        assert_eq!(filled.dobj, Argument::entity(0));
        assert_eq!(filled.subj, ev.subj);
        assert_eq!(filled.pobj, ev.pobj);

        let changed = replace_argument(&ev, Position::Pobj, 0, None);
        assert_eq!(changed.pobj.preposition.as_deref(), Some("to"));
        assert_eq!(replace_argument(&changed, Position::Pobj, 2, None), ev);

        let empty_subj = replace_argument(&Event::new("go"), Position::Subj, 4, None);
        assert_eq!(empty_subj.subj, Argument::entity(4));
    }

    #[test]
    fn move_matches_invest_example() {
        let mut ev = Event::new("invest");
        ev.subj = Argument::entity(1);
        ev.dobj = Argument::lemma("money");
        ev.pobj = Argument::entity(4).with_preposition("in");
        let moved = move_argument(&ev, Position::Pobj, Position::Dobj);
        assert_eq!(moved.verb, "invest");
        assert_eq!(moved.subj, Argument::entity(1));
        assert_eq!(moved.dobj, Argument::entity(4));
        assert!(moved.pobj.is_empty());
        assert_eq!(moved.pobj.preposition, None);
    }

    #[test]
    fn replace_and_move_triples_for_one_pair() {
        let script = fixtures::power_company_script();
        let vocab = crate::corpus::build_vocabulary([&script], 1, 50).unwrap();
        let triples = generate_triples(&script, &mut seeded(9), &TripleOptions::default(), &vocab);
        assert!(!triples.is_empty());
        for t in &triples {
            assert_ne!(t.context_index, t.positive_index);
            assert_eq!(t.neg_kind, NegKind::Replace);
            assert_ne!(t.pos_entity, t.neg_entity);
            assert_eq!(t.negative.verb, t.positive.verb);
            for p in Position::ALL {
                if p != t.position {
                    assert_eq!(t.negative.arg(p), t.positive.arg(p));
                }
            }
            assert_eq!(t.negative.arg(t.position).entity_id(), Some(t.neg_entity));
        }
    }
}
