//! Documents, events and entities, plus ingestion of pre-parsed corpus
//! records and the frequency-thresholded vocabulary.
//!
//! A corpus file holds one JSON document record per line. Each record
//! carries coreference chains (with mention sentence indices, head lemmas
//! and mention kinds) and raw event records as produced by an upstream
//! dependency parser. Ingestion normalizes verbs (negation, particles,
//! passive voice), keeps at most one prepositional object per event and
//! promotes only chains with at least two mentions to entities.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{atomic_write, open_lines};

/// Prefix marking a negated predicate.
pub const NEGATION_PREFIX: &str = "not_";
/// Sentinel token for everything outside the vocabulary.
pub const OOV_TOKEN: &str = "<oov>";

const VOCAB_MAGIC: &str = "#evvocab";
const VOCAB_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Named,
    Nominal,
    Pronominal,
}

impl MentionKind {
    /// Unknown kinds count as nominal.
    pub fn parse(kind: &str) -> MentionKind {
        match kind.to_ascii_lowercase().as_str() {
            "named" | "proper" | "ne" => MentionKind::Named,
            "pronominal" | "pronoun" | "pron" => MentionKind::Pronominal,
            _ => MentionKind::Nominal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MentionKind::Named => "named",
            MentionKind::Nominal => "nominal",
            MentionKind::Pronominal => "pronominal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mention {
    pub sentence_index: usize,
    pub head_lemma: String,
    pub kind: MentionKind,
}

/// A coreference chain with at least two mentions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    pub id: usize,
    mentions: Vec<Mention>,
    representative: String,
}

impl Entity {
    /// Builds an entity, sorting mentions by sentence (stable).
    pub fn new(id: usize, mut mentions: Vec<Mention>) -> Result<Entity> {
        if mentions.len() < 2 {
            return Err(Error::Contract(format!(
                "entity {id} has {} mention(s), at least 2 required",
                mentions.len()
            )));
        }
        if let Some(m) = mentions.iter().find(|m| m.head_lemma.is_empty()) {
            return Err(Error::Contract(format!(
                "entity {id} has a mention with an empty head lemma in sentence {}",
                m.sentence_index
            )));
        }
        mentions.sort_by_key(|m| m.sentence_index);
        let representative = representative_lemma(&mentions);
        Ok(Entity {
            id,
            mentions,
            representative,
        })
    }

    /// A one-mention candidate, for annotated fillers that no chain covers.
    pub fn singleton(id: usize, mention: Mention) -> Entity {
        let representative = mention.head_lemma.clone();
        Entity {
            id,
            mentions: vec![mention],
            representative,
        }
    }

    pub fn mentions(&self) -> &[Mention] {
        &self.mentions
    }

    /// The surface lemma used for embedding lookups.
    pub fn representative(&self) -> &str {
        &self.representative
    }
}

/// Most frequent non-pronominal head lemma, ties by earliest mention;
/// all-pronominal chains fall back to the first mention's lemma.
fn representative_lemma(mentions: &[Mention]) -> String {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for m in mentions.iter().filter(|m| m.kind != MentionKind::Pronominal) {
        match counts.iter_mut().find(|(l, _)| *l == m.head_lemma) {
            Some(entry) => entry.1 += 1,
            None => counts.push((&m.head_lemma, 1)),
        }
    }
    // `counts` is in first-occurrence order, so the first maximum wins ties.
    let mut best: Option<(&str, usize)> = None;
    for &(lemma, n) in &counts {
        if best.map_or(true, |(_, b)| n > b) {
            best = Some((lemma, n));
        }
    }
    match best {
        Some((lemma, _)) => lemma.to_string(),
        None => mentions[0].head_lemma.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Subj,
    Dobj,
    Pobj,
}

impl Position {
    pub const ALL: [Position; 3] = [Position::Subj, Position::Dobj, Position::Pobj];

    pub fn index(self) -> usize {
        match self {
            Position::Subj => 0,
            Position::Dobj => 1,
            Position::Pobj => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Position> {
        Position::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Position::Subj => "subj",
            Position::Dobj => "dobj",
            Position::Pobj => "pobj",
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Filler {
    Entity(usize),
    Lemma(String),
    Empty,
}

/// One argument slot. The position is implied by the slot of the owning
/// event; `preposition` is only set on non-empty prepositional objects.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Argument {
    pub filler: Filler,
    pub preposition: Option<String>,
}

impl Argument {
    pub fn empty() -> Argument {
        Argument {
            filler: Filler::Empty,
            preposition: None,
        }
    }

    pub fn entity(id: usize) -> Argument {
        Argument {
            filler: Filler::Entity(id),
            preposition: None,
        }
    }

    pub fn lemma(lemma: impl Into<String>) -> Argument {
        Argument {
            filler: Filler::Lemma(lemma.into()),
            preposition: None,
        }
    }

    pub fn with_preposition(mut self, prep: impl Into<String>) -> Argument {
        self.preposition = Some(prep.into());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.filler == Filler::Empty
    }

    pub fn entity_id(&self) -> Option<usize> {
        match self.filler {
            Filler::Entity(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub verb: String,
    pub subj: Argument,
    pub dobj: Argument,
    pub pobj: Argument,
}

impl Event {
    pub fn new(verb: impl Into<String>) -> Event {
        Event {
            verb: verb.into(),
            subj: Argument::empty(),
            dobj: Argument::empty(),
            pobj: Argument::empty(),
        }
    }

    pub fn arg(&self, position: Position) -> &Argument {
        match position {
            Position::Subj => &self.subj,
            Position::Dobj => &self.dobj,
            Position::Pobj => &self.pobj,
        }
    }

    pub fn arg_mut(&mut self, position: Position) -> &mut Argument {
        match position {
            Position::Subj => &mut self.subj,
            Position::Dobj => &mut self.dobj,
            Position::Pobj => &mut self.pobj,
        }
    }

    pub fn args(&self) -> impl Iterator<Item = (Position, &Argument)> {
        Position::ALL.into_iter().map(move |p| (p, self.arg(p)))
    }

    /// Positions filled by an entity reference.
    pub fn entity_positions(&self) -> Vec<Position> {
        self.args()
            .filter(|(_, a)| a.entity_id().is_some())
            .map(|(p, _)| p)
            .collect()
    }
}

/// One document's ordered events and its entities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script {
    pub doc_id: String,
    pub sentence_count: usize,
    pub events: Vec<Event>,
    pub entities: Vec<Entity>,
}

impl Script {
    pub fn entity(&self, id: usize) -> Option<&Entity> {
        self.entities.get(id)
    }

    /// Checks that every entity reference resolves and ids are dense.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entities.iter().enumerate() {
            if e.id != i {
                return Err(Error::Contract(format!(
                    "{}: entity at index {i} has id {}",
                    self.doc_id, e.id
                )));
            }
        }
        for (ei, ev) in self.events.iter().enumerate() {
            if ev.verb.is_empty() {
                return Err(Error::Contract(format!("{}: event {ei} has an empty verb", self.doc_id)));
            }
            for (pos, arg) in ev.args() {
                if let Some(id) = arg.entity_id() {
                    if id >= self.entities.len() {
                        return Err(Error::Contract(format!(
                            "{}: event {ei} {pos} references missing entity {id}",
                            self.doc_id
                        )));
                    }
                }
                if arg.is_empty() && arg.preposition.is_some() {
                    return Err(Error::Contract(format!(
                        "{}: event {ei} {pos} is empty but carries a preposition",
                        self.doc_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the corpus record form. Parsing the result yields an
    /// identical script.
    pub fn to_record(&self) -> RawDocument {
        let entities = self
            .entities
            .iter()
            .map(|e| RawChain {
                id: e.id as u32,
                mentions: e
                    .mentions
                    .iter()
                    .map(|m| RawMention {
                        sent: m.sentence_index,
                        head_lemma: m.head_lemma.clone(),
                        kind: m.kind.as_str().to_string(),
                    })
                    .collect(),
            })
            .collect();
        let events = self
            .events
            .iter()
            .map(|ev| {
                let raw_arg = |a: &Argument| -> Option<RawArg> {
                    let (lemma, chain) = match &a.filler {
                        Filler::Empty => return None,
                        Filler::Lemma(l) => (l.clone(), None),
                        Filler::Entity(id) => (self.entities[*id].representative.clone(), Some(*id as u32)),
                    };
                    Some(RawArg {
                        lemma,
                        chain,
                        prep: a.preposition.clone(),
                        dist: None,
                    })
                };
                RawEventRecord {
                    verb: ev.verb.clone(),
                    negated: false,
                    particle: None,
                    passive: false,
                    subj: raw_arg(&ev.subj),
                    dobj: raw_arg(&ev.dobj),
                    pobj: raw_arg(&ev.pobj).into_iter().collect(),
                }
            })
            .collect();
        RawDocument {
            doc_id: self.doc_id.clone(),
            sentences_count: self.sentence_count,
            entities,
            events,
        }
    }
}

// ---------------------------------------------------------------------------
// Ingestion records

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawMention {
    pub sent: usize,
    pub head_lemma: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawChain {
    pub id: u32,
    pub mentions: Vec<RawMention>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawArg {
    pub lemma: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<String>,
    /// Token distance from the predicate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<u32>,
}

impl RawArg {
    pub fn new(lemma: impl Into<String>) -> RawArg {
        RawArg {
            lemma: lemma.into(),
            chain: None,
            prep: None,
            dist: None,
        }
    }

    pub fn chain(mut self, chain: u32) -> RawArg {
        self.chain = Some(chain);
        self
    }

    pub fn prep(mut self, prep: impl Into<String>, dist: u32) -> RawArg {
        self.prep = Some(prep.into());
        self.dist = Some(dist);
        self
    }
}

/// An event as extracted upstream, before normalization. In passive
/// records `subj` is the passive subject and the agent is the `pobj`
/// candidate with preposition `by`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawEventRecord {
    pub verb: String,
    #[serde(default)]
    pub negated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<String>,
    #[serde(default)]
    pub passive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subj: Option<RawArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dobj: Option<RawArg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pobj: Vec<RawArg>,
}

impl RawEventRecord {
    pub fn new(verb: impl Into<String>) -> RawEventRecord {
        RawEventRecord {
            verb: verb.into(),
            negated: false,
            particle: None,
            passive: false,
            subj: None,
            dobj: None,
            pobj: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    #[serde(default)]
    pub sentences_count: usize,
    #[serde(default)]
    pub entities: Vec<RawChain>,
    #[serde(default)]
    pub events: Vec<RawEventRecord>,
}

fn raw_to_argument(raw: &RawArg, keep_prep: bool) -> Argument {
    let filler = match raw.chain {
        Some(chain) => Filler::Entity(chain as usize),
        None => Filler::Lemma(raw.lemma.to_lowercase()),
    };
    let preposition = keep_prep.then(|| raw.prep.as_deref().unwrap_or("prep").to_lowercase());
    Argument { filler, preposition }
}

/// Normalized verb plus the raw argument chosen for each slot.
fn select_slots(raw: &RawEventRecord) -> (String, [Option<&RawArg>; 3]) {
    let mut verb = raw.verb.trim().to_lowercase();
    if let Some(particle) = raw.particle.as_deref().filter(|p| !p.is_empty()) {
        verb = format!("{verb}_{}", particle.to_lowercase());
    }
    if raw.negated {
        verb = format!("{NEGATION_PREFIX}{verb}");
    }

    let mut preps: Vec<&RawArg> = raw.pobj.iter().collect();
    let (subj, dobj) = if raw.passive {
        let agent = preps
            .iter()
            .position(|a| a.prep.as_deref().is_some_and(|p| p.eq_ignore_ascii_case("by")))
            .map(|i| preps.remove(i));
        (agent, raw.subj.as_ref().or(raw.dobj.as_ref()))
    } else {
        (raw.subj.as_ref(), raw.dobj.as_ref())
    };

    // closest to the predicate wins; missing distances sort last, input order breaks ties
    let pobj = preps
        .iter()
        .enumerate()
        .min_by_key(|(i, a)| (a.dist.unwrap_or(u32::MAX), *i))
        .map(|(_, a)| *a);
    (verb, [subj, dobj, pobj])
}

/// Normalizes a raw event. Entity fillers carry the raw chain id; callers
/// map chain ids to entity ids afterwards.
pub fn normalize_event(raw: &RawEventRecord) -> Event {
    let (verb, slots) = select_slots(raw);
    let mut event = Event::new(verb);
    for pos in Position::ALL {
        if let Some(a) = slots[pos.index()] {
            *event.arg_mut(pos) = raw_to_argument(a, pos == Position::Pobj);
        }
    }
    event
}

/// Builds a script from a parsed record. `line` is used for diagnostics.
pub fn parse_record(record: &RawDocument, line: usize) -> Result<Script> {
    if record.doc_id.is_empty() {
        return Err(Error::format(line, "doc_id", "empty document id"));
    }
    let mut chain_lengths: HashMap<u32, usize> = HashMap::new();
    for (ci, chain) in record.entities.iter().enumerate() {
        if chain_lengths.insert(chain.id, chain.mentions.len()).is_some() {
            return Err(Error::format(line, format!("entities[{ci}].id"), format!("duplicate chain id {}", chain.id)));
        }
        for (mi, m) in chain.mentions.iter().enumerate() {
            if m.head_lemma.trim().is_empty() {
                return Err(Error::format(
                    line,
                    format!("entities[{ci}].mentions[{mi}].head_lemma"),
                    "empty head lemma",
                ));
            }
        }
    }

    let mut chain_to_entity: HashMap<u32, usize> = HashMap::new();
    let mut entities = Vec::new();
    for chain in record.entities.iter().filter(|c| c.mentions.len() >= 2) {
        let id = entities.len();
        chain_to_entity.insert(chain.id, id);
        let mentions = chain
            .mentions
            .iter()
            .map(|m| Mention {
                sentence_index: m.sent,
                head_lemma: m.head_lemma.to_lowercase(),
                kind: MentionKind::parse(&m.kind),
            })
            .collect();
        entities.push(Entity::new(id, mentions)?);
    }

    let mut events = Vec::with_capacity(record.events.len());
    for (ei, raw) in record.events.iter().enumerate() {
        if raw.verb.trim().is_empty() {
            return Err(Error::format(line, format!("events[{ei}].verb"), "empty verb lemma"));
        }
        let slots = raw.subj.iter().chain(raw.dobj.iter()).chain(raw.pobj.iter());
        for arg in slots {
            if arg.lemma.trim().is_empty() {
                return Err(Error::format(line, format!("events[{ei}]"), "argument with empty lemma"));
            }
            if let Some(chain) = arg.chain {
                if !chain_lengths.contains_key(&chain) {
                    return Err(Error::Reference {
                        line,
                        message: format!("events[{ei}] references unknown chain {chain}"),
                    });
                }
            }
        }
        let (_, slots) = select_slots(raw);
        let mut event = normalize_event(raw);
        for pos in Position::ALL {
            let (Some(raw_arg), arg) = (slots[pos.index()], event.arg_mut(pos)) else {
                continue;
            };
            if let Some(chain) = raw_arg.chain {
                arg.filler = match chain_to_entity.get(&chain) {
                    Some(&id) => Filler::Entity(id),
                    None => Filler::Lemma(raw_arg.lemma.to_lowercase()),
                };
            }
        }
        events.push(event);
    }

    Ok(Script {
        doc_id: record.doc_id.clone(),
        sentence_count: record.sentences_count,
        events,
        entities,
    })
}

/// Parses one corpus line.
pub fn parse_document(line_text: &str, line: usize) -> Result<Script> {
    let record: RawDocument =
        serde_json::from_str(line_text).map_err(|e| Error::format(line, json_field(&e), e.to_string()))?;
    parse_record(&record, line)
}

fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    // serde reports "missing field `x`" / "unknown field `x`"; surface the name
    msg.split('`').nth(1).unwrap_or("record").to_string()
}

pub fn read_corpus(path: &Path) -> Result<Vec<Script>> {
    let mut scripts = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        scripts.push(parse_document(&line, i + 1)?);
    }
    Ok(scripts)
}

pub fn write_corpus(path: &Path, scripts: &[Script]) -> Result<()> {
    atomic_write(path, |w| {
        for s in scripts {
            serde_json::to_writer(&mut *w, &s.to_record())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Tokens

pub fn predicate_token(verb: &str) -> String {
    format!("{verb}-pred")
}

/// Role-lemma token for a non-empty argument, e.g. `plant-prep_to`.
pub fn argument_token(arg: &Argument, position: Position, entities: &[Entity]) -> Result<String> {
    let lemma = match &arg.filler {
        Filler::Empty => {
            return Err(Error::Contract(format!("argument_token called on an empty {position} slot")));
        }
        Filler::Lemma(l) => l.as_str(),
        Filler::Entity(id) => entities
            .get(*id)
            .ok_or_else(|| Error::Contract(format!("entity {id} does not exist")))?
            .representative(),
    };
    let role = match position {
        Position::Subj => "subj".to_string(),
        Position::Dobj => "dobj".to_string(),
        Position::Pobj => format!("prep_{}", arg.preposition.as_deref().unwrap_or("prep")),
    };
    Ok(format!("{lemma}-{role}"))
}

/// Tokens of an event in slot order: predicate, then non-empty arguments.
pub fn event_tokens(event: &Event, entities: &[Entity]) -> Vec<(Option<Position>, String)> {
    let mut out = vec![(None, predicate_token(&event.verb))];
    for (pos, arg) in event.args() {
        if !arg.is_empty() {
            if let Ok(tok) = argument_token(arg, pos, entities) {
                out.push((Some(pos), tok));
            }
        }
    }
    out
}

fn token_preposition(token: &str) -> Option<&str> {
    token.rsplit_once("-prep_").map(|(_, p)| p)
}

// ---------------------------------------------------------------------------
// Vocabulary

/// Count tables for vocabulary building; shards merge deterministically.
#[derive(Clone, Debug, Default)]
pub struct VocabCounter {
    tokens: HashMap<String, u64>,
    prepositions: HashMap<String, u64>,
}

impl VocabCounter {
    pub fn add_script(&mut self, script: &Script) {
        for event in &script.events {
            for (_, tok) in event_tokens(event, &script.entities) {
                *self.tokens.entry(tok).or_default() += 1;
            }
            if let Some(p) = &event.pobj.preposition {
                if !event.pobj.is_empty() {
                    *self.prepositions.entry(p.clone()).or_default() += 1;
                }
            }
        }
    }

    /// Counts arbitrary tokens, e.g. plain-text sentences for skip-gram.
    pub fn add_tokens<'a>(&mut self, tokens: impl IntoIterator<Item = &'a String>) {
        for t in tokens {
            *self.tokens.entry(t.clone()).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: VocabCounter) {
        for (k, v) in other.tokens {
            *self.tokens.entry(k).or_default() += v;
        }
        for (k, v) in other.prepositions {
            *self.prepositions.entry(k).or_default() += v;
        }
    }

    pub fn finish(self, verb_arg_threshold: u64, prep_top_k: usize) -> Result<Vocabulary> {
        if verb_arg_threshold == 0 || prep_top_k == 0 {
            return Err(Error::Config("vocabulary thresholds must be positive".into()));
        }
        let mut preps: Vec<(String, u64)> = self.prepositions.into_iter().collect();
        preps.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        preps.truncate(prep_top_k);
        let prepositions: Vec<String> = preps.into_iter().map(|(p, _)| p).collect();

        let mut oov_count = 0;
        let mut kept: Vec<(String, u64)> = Vec::new();
        for (tok, count) in self.tokens {
            let prep_ok = token_preposition(&tok).map_or(true, |p| prepositions.iter().any(|q| q == p));
            if count > verb_arg_threshold && prep_ok {
                kept.push((tok, count));
            } else {
                oov_count += count;
            }
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut tokens = vec![OOV_TOKEN.to_string()];
        let mut counts = vec![oov_count];
        for (t, c) in kept {
            tokens.push(t);
            counts.push(c);
        }
        Ok(Vocabulary::from_parts(tokens, counts, prepositions))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    prepositions: Vec<String>,
}

impl Vocabulary {
    /// The OOV sentinel always sits at id 0.
    pub const OOV_ID: u32 = 0;

    fn from_parts(tokens: Vec<String>, counts: Vec<u64>, prepositions: Vec<String>) -> Vocabulary {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary {
            tokens,
            counts,
            index,
            prepositions,
        }
    }

    pub fn oov_id(&self) -> u32 {
        Self::OOV_ID
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(Self::OOV_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token) && token != OOV_TOKEN
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn prepositions(&self) -> &[String] {
        &self.prepositions
    }

    /// Occurrence count of a verb's predicate token (0 when out of vocabulary).
    pub fn verb_count(&self, verb: &str) -> u64 {
        self.index
            .get(&predicate_token(verb))
            .map_or(0, |&id| self.counts[id as usize])
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{VOCAB_MAGIC}\tv{VOCAB_VERSION}\toov={OOV_TOKEN}\tprepositions={}\n",
            self.prepositions.join(",")
        );
        for (i, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            out.push_str(&format!("{t}\t{c}\t{i}\n"));
        }
        out
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn parse_text(text: &str) -> Result<Vocabulary> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Truncated("vocabulary file is empty".into()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&VOCAB_MAGIC) {
            return Err(Error::format(1, "header", "missing vocabulary magic"));
        }
        let version = fields
            .get(1)
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| Error::format(1, "version", "unreadable version"))?;
        if version != VOCAB_VERSION {
            return Err(Error::Version {
                found: version,
                expected: VOCAB_VERSION,
            });
        }
        let prepositions = fields
            .iter()
            .find_map(|f| f.strip_prefix("prepositions="))
            .map(|p| p.split(',').filter(|s| !s.is_empty()).map(String::from).collect())
            .unwrap_or_default();

        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::format(lineno, "row", "expected token<TAB>count<TAB>id"));
            }
            let count = cols[1]
                .parse::<u64>()
                .map_err(|e| Error::format(lineno, "count", e.to_string()))?;
            let id = cols[2]
                .parse::<usize>()
                .map_err(|e| Error::format(lineno, "id", e.to_string()))?;
            if id != tokens.len() {
                return Err(Error::format(lineno, "id", format!("expected dense id {}, got {id}", tokens.len())));
            }
            tokens.push(cols[0].to_string());
            counts.push(count);
        }
        if tokens.first().map(String::as_str) != Some(OOV_TOKEN) {
            return Err(Error::format(2, "token", "first row must be the OOV sentinel"));
        }
        Ok(Vocabulary::from_parts(tokens, counts, prepositions))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_text();
        atomic_write(path, |w| Ok(w.write_all(text.as_bytes())?))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let mut text = String::new();
        for line in open_lines(path)? {
            text.push_str(&line?);
            text.push('\n');
        }
        Vocabulary::parse_text(&text)
    }
}

/// Counts tokens over `scripts` and keeps those above the thresholds.
pub fn build_vocabulary<'a>(
    scripts: impl IntoIterator<Item = &'a Script>,
    verb_arg_threshold: u64,
    prep_top_k: usize,
) -> Result<Vocabulary> {
    let mut counter = VocabCounter::default();
    for s in scripts {
        counter.add_script(s);
    }
    counter.finish(verb_arg_threshold, prep_top_k)
}

/// Keep-probability for events of very frequent verbs.
pub fn downsample_keep_probability(verb_count: u64, threshold: u64) -> f64 {
    if verb_count <= threshold {
        1.0
    } else {
        threshold as f64 / verb_count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mention(sent: usize, lemma: &str, kind: MentionKind) -> Mention {
        Mention {
            sentence_index: sent,
            head_lemma: lemma.into(),
            kind,
        }
    }

    #[test]
    fn passive_is_normalized() {
        let mut raw = RawEventRecord::new("sell");
        raw.passive = true;
        raw.subj = Some(RawArg::new("unit").chain(3));
        raw.pobj = vec![RawArg::new("firm").chain(1).prep("by", 2)];
        let ev = normalize_event(&raw);
        assert_eq!(ev.verb, "sell");
        assert_eq!(ev.subj.filler, Filler::Entity(1));
        assert_eq!(ev.subj.preposition, None);
        assert_eq!(ev.dobj.filler, Filler::Entity(3));
        assert!(ev.pobj.is_empty());
    }

    #[test]
    fn particle_and_negation() {
        let mut raw = RawEventRecord::new("Break");
        raw.particle = Some("out".into());
        raw.subj = Some(RawArg::new("war").chain(0));
        assert_eq!(normalize_event(&raw).verb, "break_out");
        raw.negated = true;
        assert_eq!(normalize_event(&raw).verb, "not_break_out");
    }

    #[test]
    fn closest_preposition_is_kept() {
        let mut raw = RawEventRecord::new("transfer");
        raw.pobj = vec![RawArg::new("january").prep("in", 7), RawArg::new("funds").prep("to", 3)];
        let ev = normalize_event(&raw);
        assert_eq!(ev.pobj.filler, Filler::Lemma("funds".into()));
        assert_eq!(ev.pobj.preposition.as_deref(), Some("to"));
    }

    #[test]
    fn representative_prefers_content_words() {
        let e = Entity::new(
            0,
            vec![
                mention(2, "it", MentionKind::Pronominal),
                mention(0, "plant", MentionKind::Nominal),
                mention(1, "it", MentionKind::Pronominal),
                mention(3, "facility", MentionKind::Nominal),
            ],
        )
        .unwrap();
        assert_eq!(e.representative(), "plant");
        assert_eq!(e.mentions()[0].sentence_index, 0);

        let pron = Entity::new(1, vec![mention(0, "it", MentionKind::Pronominal), mention(1, "it", MentionKind::Pronominal)]).unwrap();
        assert_eq!(pron.representative(), "it");
        let arg = Argument::entity(0);
        assert_eq!(argument_token(&arg, Position::Subj, &[pron.clone()]).unwrap(), "it-subj");
    }

    #[test]
    fn argument_tokens() {
        let plant = Entity::new(0, vec![mention(0, "plant", MentionKind::Nominal), mention(2, "plant", MentionKind::Nominal)]).unwrap();
        let ents = [plant];
        assert_eq!(
            argument_token(&Argument::lemma("electricity"), Position::Dobj, &ents).unwrap(),
            "electricity-dobj"
        );
        assert_eq!(
            argument_token(&Argument::entity(0).with_preposition("to"), Position::Pobj, &ents).unwrap(),
            "plant-prep_to"
        );
        assert!(matches!(
            argument_token(&Argument::empty(), Position::Subj, &ents),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn singleton_chain_is_demoted() {
        let line = r#"{"doc_id":"d","sentences_count":2,
            "entities":[{"id":7,"mentions":[{"sent":0,"head_lemma":"Bank","kind":"named"}]},
                        {"id":9,"mentions":[{"sent":0,"head_lemma":"man","kind":"nominal"},{"sent":1,"head_lemma":"he","kind":"pronominal"}]}],
            "events":[{"verb":"rob","subj":{"lemma":"man","chain":9},"dobj":{"lemma":"Bank","chain":7}}]}"#;
        let s = parse_document(line, 1).unwrap();
        assert_eq!(s.entities.len(), 1);
        assert_eq!(s.events[0].subj.filler, Filler::Entity(0));
        assert_eq!(s.events[0].dobj.filler, Filler::Lemma("bank".into()));
    }

    #[test]
    fn empty_events_keep_entities() {
        let line = r#"{"doc_id":"d","sentences_count":2,"entities":[{"id":1,"mentions":[{"sent":0,"head_lemma":"a","kind":"named"},{"sent":1,"head_lemma":"a","kind":"named"}]}],"events":[]}"#;
        let s = parse_document(line, 4).unwrap();
        assert!(s.events.is_empty());
        assert_eq!(s.entities.len(), 1);
    }

    #[test]
    fn errors_name_line_and_field() {
        let err = parse_document(r#"{"doc_id":"d","events":[{"verb":""}]}"#, 12).unwrap_err();
        match err {
            Error::Format { line, field, .. } => {
                assert_eq!(line, 12);
                assert_eq!(field, "events[0].verb");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_document(r#"{"doc_id":"d","events":[{"verb":"go","subj":{"lemma":"x","chain":4}}]}"#, 3).unwrap_err();
        assert!(matches!(err, Error::Reference { line: 3, .. }));
        let err = parse_document(r#"{"events":[]}"#, 5).unwrap_err();
        match err {
            Error::Format { line, field, .. } => {
                assert_eq!(line, 5);
                assert_eq!(field, "doc_id");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn script_with_verbs(verbs: &[(&str, usize)]) -> Script {
        let mut events = Vec::new();
        for (v, n) in verbs {
            for _ in 0..*n {
                events.push(Event::new(*v));
            }
        }
        Script {
            doc_id: "v".into(),
            sentence_count: 1,
            events,
            entities: vec![],
        }
    }

    #[test]
    fn vocabulary_threshold_and_tiebreak() {
        let s = script_with_verbs(&[("run", 501), ("jog", 12), ("walk", 600), ("swim", 600)]);
        let v = build_vocabulary([&s], 500, 50).unwrap();
        assert!(v.contains("run-pred"));
        assert!(!v.contains("jog-pred"));
        assert_eq!(v.id("jog-pred"), v.oov_id());
        // equal counts: lexicographically smaller token gets the smaller id
        assert!(v.id("swim-pred") < v.id("walk-pred"));
        assert!(v.id("walk-pred") < v.id("run-pred"));
        assert_eq!(v.verb_count("run"), 501);
    }

    #[test]
    fn empty_stream_gives_sentinel_only() {
        let v = build_vocabulary(std::iter::empty::<&Script>(), 500, 50).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.token(v.oov_id()), OOV_TOKEN);
        assert!(build_vocabulary(std::iter::empty::<&Script>(), 0, 50).is_err());
    }

    #[test]
    fn top_k_prepositions() {
        let mut events = Vec::new();
        for (p, n) in [("to", 5), ("in", 3), ("at", 3), ("by", 1)] {
            for _ in 0..n {
                let mut e = Event::new("go");
                e.pobj = Argument::lemma("place").with_preposition(p);
                events.push(e);
            }
        }
        let s = Script {
            doc_id: "p".into(),
            sentence_count: 1,
            events,
            entities: vec![],
        };
        let v = build_vocabulary([&s], 1, 2).unwrap();
        assert_eq!(v.prepositions(), &["to".to_string(), "at".to_string()]);
        assert!(v.contains("place-prep_to"));
        assert!(v.contains("place-prep_at"));
        // count 3 > 1 but the preposition was not retained
        assert!(!v.contains("place-prep_in"));
    }

    #[test]
    fn vocabulary_text_round_trip() {
        let s = script_with_verbs(&[("run", 5), ("jog", 3)]);
        let v = build_vocabulary([&s], 1, 5).unwrap();
        let back = Vocabulary::parse_text(&v.to_text()).unwrap();
        assert_eq!(v, back);
        assert_eq!(v.hash(), back.hash());
        assert!(Vocabulary::parse_text("#evvocab\tv9\toov=<oov>\n").is_err());
    }

    #[test]
    fn downsampling() {
        assert_eq!(downsample_keep_probability(100_000, 100_000), 1.0);
        assert_eq!(downsample_keep_probability(400_000, 100_000), 0.25);
        assert_eq!(downsample_keep_probability(50, 100_000), 1.0);
    }
}
