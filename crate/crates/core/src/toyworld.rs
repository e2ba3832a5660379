//! Synthetic corpora with a known answer, used to check that the models
//! learn what they should.
//!
//! * selectional: each verb deterministically takes one entity type per
//!   slot, and every script carries distractor entities of a type its verbs
//!   never select, so the gold filler is the only type-compatible candidate.
//! * salience: event semantics are random and the gold filler is always the
//!   most-mentioned entity, so only salience features can find it.
//! * random scripts: unconstrained documents for property tests.
//! * planted co-occurrence sentences for checking skip-gram training.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Argument, Entity, Event, Filler, Mention, MentionKind, Position, Script};
use crate::rng::seeded;

pub const TYPE_NAMES: [&str; 4] = ["animal", "person", "tool", "place"];
pub const SELECTIONAL_VERBS: [&str; 8] = ["feed", "chase", "hire", "visit", "sharpen", "carry", "paint", "inspect"];
const VERB_PREPOSITIONS: [&str; 8] = ["with", "at", "for", "in", "on", "to", "with", "from"];
const PRONOUNS: [&str; 4] = ["he", "she", "it", "they"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyKind {
    Selectional,
    Salience,
}

impl ToyKind {
    pub fn parse(s: &str) -> Option<ToyKind> {
        match s {
            "selectional" => Some(ToyKind::Selectional),
            "salience" => Some(ToyKind::Salience),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyConfig {
    pub scripts: usize,
    pub min_events: usize,
    pub max_events: usize,
    /// Distractor entities per script (inclusive range).
    pub min_distractors: usize,
    pub max_distractors: usize,
}

impl ToyConfig {
    pub fn selectional() -> ToyConfig {
        ToyConfig {
            scripts: 2000,
            min_events: 4,
            max_events: 8,
            min_distractors: 3,
            max_distractors: 9,
        }
    }

    pub fn salience() -> ToyConfig {
        ToyConfig {
            scripts: 2000,
            min_events: 4,
            max_events: 8,
            min_distractors: 3,
            max_distractors: 7,
        }
    }

    pub fn for_kind(kind: ToyKind) -> ToyConfig {
        match kind {
            ToyKind::Selectional => ToyConfig::selectional(),
            ToyKind::Salience => ToyConfig::salience(),
        }
    }
}

pub fn generate(kind: ToyKind, config: &ToyConfig, seed: u64) -> Vec<Script> {
    match kind {
        ToyKind::Selectional => selectional_world(config, seed),
        ToyKind::Salience => salience_world(config, seed),
    }
}

pub fn type_lemma(t: usize, i: usize) -> String {
    format!("{}{}", TYPE_NAMES[t], i)
}

/// Type of a lemma produced by [`type_lemma`].
pub fn lemma_type(lemma: &str) -> Option<usize> {
    TYPE_NAMES.iter().position(|t| {
        lemma
            .strip_prefix(t)
            .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
    })
}

/// The scene a verb belongs to; scene `s` never uses type `s`.
pub fn verb_scene(verb: usize) -> usize {
    verb / 2
}

/// Entity type each slot (subj, dobj, pobj) of a selectional verb takes.
pub fn verb_selection(verb: usize) -> [usize; 3] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
    let scene = verb_scene(verb);
    let used: Vec<usize> = (0..4).filter(|&t| t != scene).collect();
    let perm = PERMS[verb % 6];
    [used[perm[0]], used[perm[1]], used[perm[2]]]
}

fn random_mentions<R: Rng>(rng: &mut R, lemma: &str, total: usize, sentences: usize) -> Vec<Mention> {
    (0..total)
        .map(|_| Mention {
            sentence_index: rng.gen_range(0..sentences),
            head_lemma: lemma.to_string(),
            kind: if rng.gen_bool(0.5) {
                MentionKind::Named
            } else {
                MentionKind::Nominal
            },
        })
        .collect()
}

/// Shuffles entity ids so that no role is tied to a fixed id.
fn finish_script(doc_id: String, sentences: usize, mut events: Vec<Event>, mentions: Vec<Vec<Mention>>, rng: &mut impl Rng) -> Script {
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.shuffle(rng);
    let mut new_id = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    for ev in &mut events {
        for pos in Position::ALL {
            if let Filler::Entity(id) = &mut ev.arg_mut(pos).filler {
                *id = new_id[*id];
            }
        }
    }
    let mut mentions: Vec<Option<Vec<Mention>>> = mentions.into_iter().map(Some).collect();
    let entities = order
        .iter()
        .enumerate()
        .map(|(new, &old)| Entity::new(new, mentions[old].take().unwrap()).expect("toy entities have two mentions"))
        .collect();
    Script {
        doc_id,
        sentence_count: sentences,
        events,
        entities,
    }
}

pub fn selectional_world(config: &ToyConfig, seed: u64) -> Vec<Script> {
    let mut rng = seeded(seed);
    (0..config.scripts)
        .map(|d| {
            let scene = rng.gen_range(0..4);
            let n_events = rng.gen_range(config.min_events..=config.max_events);
            let sentences = n_events + 2;
            // participants 0..3 indexed by type (the scene's own type unused)
            let mut mentions: Vec<Vec<Mention>> = Vec::new();
            let mut participant = [usize::MAX; 4];
            for t in (0..4).filter(|&t| t != scene) {
                let lemma = type_lemma(t, rng.gen_range(0..10));
                let total = rng.gen_range(2..=6);
                participant[t] = mentions.len();
                mentions.push(random_mentions(&mut rng, &lemma, total, sentences));
            }
            let n_distractors = rng.gen_range(config.min_distractors..=config.max_distractors);
            for i in rand::seq::index::sample(&mut rng, 10, n_distractors.min(10)) {
                let total = rng.gen_range(2..=6);
                mentions.push(random_mentions(&mut rng, &type_lemma(scene, i), total, sentences));
            }
            let events = (0..n_events)
                .map(|_| {
                    let verb = 2 * scene + rng.gen_range(0..2);
                    let sel = verb_selection(verb);
                    let mut ev = Event::new(SELECTIONAL_VERBS[verb]);
                    ev.subj = Argument::entity(participant[sel[0]]);
                    ev.dobj = Argument::entity(participant[sel[1]]);
                    ev.pobj = Argument::entity(participant[sel[2]]).with_preposition(VERB_PREPOSITIONS[verb]);
                    ev
                })
                .collect();
            finish_script(format!("sel{d:05}"), sentences, events, mentions, &mut rng)
        })
        .collect()
}

/// One protagonist fills exactly one event slot; every other slot holds a
/// plain lemma or is empty. The protagonist has 7-12 mentions, distractors
/// 2-5, and head counts and first locations are drawn from the same ranges
/// for everyone.
pub fn salience_world(config: &ToyConfig, seed: u64) -> Vec<Script> {
    let mut rng = seeded(seed);
    let verbs: Vec<String> = (0..8).map(|i| format!("act{i}")).collect();
    let preps = ["in", "on", "with", "to"];
    (0..config.scripts)
        .map(|d| {
            let n_events = rng.gen_range(config.min_events..=config.max_events);
            let sentences = n_events + 4;
            let n_entities = 1 + rng.gen_range(config.min_distractors..=config.max_distractors);
            let mut lemmas: Vec<usize> = rand::seq::index::sample(&mut rng, 12, n_entities).into_vec();
            lemmas.shuffle(&mut rng);
            let mut mentions = Vec::with_capacity(n_entities);
            for (k, &l) in lemmas.iter().enumerate() {
                let lemma = format!("thing{l}");
                let head = rng.gen_range(2..=5);
                let total = if k == 0 { rng.gen_range(7..=12) } else { head };
                let mut ms: Vec<Mention> = (0..total)
                    .map(|i| Mention {
                        sentence_index: rng.gen_range(0..sentences),
                        head_lemma: if i < head {
                            lemma.clone()
                        } else {
                            PRONOUNS[rng.gen_range(0..PRONOUNS.len())].to_string()
                        },
                        kind: if i < head {
                            MentionKind::Nominal
                        } else {
                            MentionKind::Pronominal
                        },
                    })
                    .collect();
                ms.shuffle(&mut rng);
                mentions.push(ms);
            }
            let filler = |rng: &mut crate::rng::Rng| Argument::lemma(format!("stuff{}", rng.gen_range(0..12)));
            let mut events: Vec<Event> = (0..n_events)
                .map(|_| {
                    let mut ev = Event::new(verbs[rng.gen_range(0..verbs.len())].clone());
                    ev.subj = filler(&mut rng);
                    if rng.gen_bool(0.7) {
                        ev.dobj = filler(&mut rng);
                    }
                    if rng.gen_bool(0.5) {
                        ev.pobj = filler(&mut rng).with_preposition(preps[rng.gen_range(0..preps.len())]);
                    }
                    ev
                })
                .collect();
            let target = rng.gen_range(0..n_events);
            let pos = Position::ALL[rng.gen_range(0..3)];
            let prep = preps[rng.gen_range(0..preps.len())];
            let slot = events[target].arg_mut(pos);
            *slot = Argument::entity(0);
            if pos == Position::Pobj {
                *slot = slot.clone().with_preposition(prep);
            }
            finish_script(format!("sal{d:05}"), sentences, events, mentions, &mut rng)
        })
        .collect()
}

/// Train/held-out split of a toy corpus (first 80% train).
pub fn split(scripts: Vec<Script>) -> (Vec<Script>, Vec<Script>) {
    let mut train = scripts;
    let held = train.split_off(train.len() * 4 / 5);
    (train, held)
}

/// An unconstrained but valid script: empty, lemma and entity slots,
/// known and unknown prepositions, negated verbs, mixed mention kinds.
pub fn random_script<R: Rng>(rng: &mut R, doc_id: &str) -> Script {
    const VERBS: [&str; 6] = ["go", "see", "give", "take", "not_make", "put_up"];
    const LEMMAS: [&str; 6] = ["box", "man", "city", "idea", "car", "he"];
    // "prep" is what ingestion records for an unknown preposition
    const PREPS: [&str; 5] = ["in", "to", "from", "by", "prep"];
    let n_entities = rng.gen_range(0..7);
    let sentences = rng.gen_range(1..10);
    let entities: Vec<Entity> = (0..n_entities)
        .map(|id| {
            let n = rng.gen_range(2..8);
            let mentions = (0..n)
                .map(|_| Mention {
                    sentence_index: rng.gen_range(0..sentences),
                    head_lemma: LEMMAS[rng.gen_range(0..LEMMAS.len())].to_string(),
                    kind: [MentionKind::Named, MentionKind::Nominal, MentionKind::Pronominal][rng.gen_range(0..3)],
                })
                .collect();
            Entity::new(id, mentions).expect("two or more mentions")
        })
        .collect();
    let n_events = rng.gen_range(0..9);
    let events = (0..n_events)
        .map(|_| {
            let mut ev = Event::new(VERBS[rng.gen_range(0..VERBS.len())]);
            for pos in Position::ALL {
                let r: f64 = rng.gen();
                let mut arg = if r < 0.3 {
                    Argument::empty()
                } else if r < 0.55 || n_entities == 0 {
                    Argument::lemma(LEMMAS[rng.gen_range(0..LEMMAS.len())])
                } else {
                    Argument::entity(rng.gen_range(0..n_entities))
                };
                if pos == Position::Pobj && !arg.is_empty() {
                    arg = arg.with_preposition(PREPS[rng.gen_range(0..PREPS.len())]);
                }
                *ev.arg_mut(pos) = arg;
            }
            ev
        })
        .collect();
    Script {
        doc_id: doc_id.to_string(),
        sentence_count: sentences,
        events,
        entities,
    }
}

/// Sentences for skip-gram checks. Each cluster `i` has a planted pair
/// `pa{i}`/`pb{i}`; a sentence mixes one member of a cluster with that
/// cluster's context words and some global noise, so the two members of a
/// pair share their contexts without ever co-occurring.
pub fn planted_cooccurrence_corpus(clusters: usize, sentences: usize, seed: u64) -> (Vec<Vec<String>>, Vec<(String, String)>) {
    let mut rng = seeded(seed);
    let out = (0..sentences)
        .map(|_| {
            let c = rng.gen_range(0..clusters);
            let head = if rng.gen_bool(0.5) { format!("pa{c}") } else { format!("pb{c}") };
            let mut s: Vec<String> = (0..6).map(|_| format!("ctx{c}_{}", rng.gen_range(0..4))).collect();
            s.extend((0..2).map(|_| format!("noise{}", rng.gen_range(0..30))));
            s.shuffle(&mut rng);
            s.insert(rng.gen_range(0..=s.len()), head);
            s
        })
        .collect();
    let pairs = (0..clusters).map(|c| (format!("pa{c}"), format!("pb{c}"))).collect();
    (out, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloze::generate_cloze_instances;
    use crate::salience::extract_salience;

    #[test]
    fn selection_uses_scene_types() {
        for v in 0..8 {
            let sel = verb_selection(v);
            assert!(!sel.contains(&verb_scene(v)));
            assert!(sel[0] != sel[1] && sel[1] != sel[2] && sel[0] != sel[2]);
        }
        assert_ne!(verb_selection(0), verb_selection(1));
        assert_eq!(lemma_type("tool7"), Some(2));
        assert_eq!(lemma_type("toolbox"), None);
    }

    #[test]
    fn selectional_gold_is_only_type_match() {
        let scripts = selectional_world(&ToyConfig { scripts: 50, ..ToyConfig::selectional() }, 3);
        let mut rng = seeded(0);
        for s in &scripts {
            s.validate().unwrap();
            assert!((6..=12).contains(&s.entities.len()));
            for inst in generate_cloze_instances(s, &mut rng, None) {
                let verb = SELECTIONAL_VERBS.iter().position(|v| *v == s.events[inst.target_event].verb).unwrap();
                let want = verb_selection(verb)[inst.position.index()];
                let matching: Vec<usize> = inst
                    .candidates
                    .iter()
                    .copied()
                    .filter(|&c| lemma_type(s.entities[c].representative()) == Some(want))
                    .collect();
                assert_eq!(matching, vec![inst.gold_entity]);
            }
        }
    }

    #[test]
    fn salience_gold_is_most_mentioned() {
        let scripts = salience_world(&ToyConfig { scripts: 50, ..ToyConfig::salience() }, 4);
        let mut rng = seeded(0);
        for s in &scripts {
            s.validate().unwrap();
            let inst = generate_cloze_instances(s, &mut rng, None);
            assert_eq!(inst.len(), 1);
            let totals: Vec<u32> = s.entities.iter().map(|e| extract_salience(e).total).collect();
            let best = totals[inst[0].gold_entity];
            assert!(totals.iter().enumerate().all(|(i, &t)| i == inst[0].gold_entity || t < best));
        }
    }

    #[test]
    fn generators_are_seeded() {
        let c = ToyConfig { scripts: 20, ..ToyConfig::selectional() };
        assert_eq!(selectional_world(&c, 9), selectional_world(&c, 9));
        assert_ne!(selectional_world(&c, 9), selectional_world(&c, 10));
        let mut a = seeded(1);
        let mut b = seeded(1);
        for i in 0..100 {
            let s = random_script(&mut a, &i.to_string());
            s.validate().unwrap();
            assert_eq!(s, random_script(&mut b, &i.to_string()));
        }
    }
}
