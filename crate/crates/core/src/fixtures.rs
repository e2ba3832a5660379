//! Small hand-built documents used by tests, examples and the Python smoke
//! test.

use crate::corpus::{parse_record, RawArg, RawChain, RawDocument, RawEventRecord, RawMention, Script};
use crate::gc::tree::Tree;
use crate::gc::{GcLocalArg, GcPredicate, GcRecord, GcRole, GcSentence, GcSpan};

fn mention(sent: usize, lemma: &str, kind: &str) -> RawMention {
    RawMention {
        sent,
        head_lemma: lemma.into(),
        kind: kind.into(),
    }
}

/// A five-event news snippet about a power company, a plant and its
/// customers: entities x0 (company), x1 (customer), x2 (plant); the
/// arguments "electricity" and "energy" stay plain lemmas (the latter has a
/// singleton chain that is demoted).
///
/// ```text
/// e0 build(subj x0, dobj x2)
/// e1 supply(subj x0, dobj electricity, prep_to x2)
/// e2 generate(subj x0, dobj energy)          [passive in the raw record]
/// e3 buy(subj x1, dobj energy, prep_from x0)
/// e4 pay(subj x1, prep_to x0)
/// ```
pub fn power_company_record() -> RawDocument {
    let company = 10;
    let customer = 11;
    let plant = 12;
    let energy = 13;
    let mut e0 = RawEventRecord::new("build");
    e0.subj = Some(RawArg::new("company").chain(company));
    e0.dobj = Some(RawArg::new("plant").chain(plant));

    let mut e1 = RawEventRecord::new("supply");
    e1.subj = Some(RawArg::new("it").chain(company));
    e1.dobj = Some(RawArg::new("electricity"));
    e1.pobj = vec![
        RawArg::new("plant").chain(plant).prep("to", 2),
        RawArg::new("week").prep("during", 6),
    ];

    let mut e2 = RawEventRecord::new("generate");
    e2.passive = true;
    e2.subj = Some(RawArg::new("energy").chain(energy));
    e2.pobj = vec![RawArg::new("company").chain(company).prep("by", 2)];

    let mut e3 = RawEventRecord::new("buy");
    e3.subj = Some(RawArg::new("customer").chain(customer));
    e3.dobj = Some(RawArg::new("energy"));
    e3.pobj = vec![RawArg::new("company").chain(company).prep("from", 3)];

    let mut e4 = RawEventRecord::new("pay");
    e4.subj = Some(RawArg::new("they").chain(customer));
    e4.pobj = vec![RawArg::new("company").chain(company).prep("to", 1)];

    RawDocument {
        doc_id: "fig1".into(),
        sentences_count: 4,
        entities: vec![
            RawChain {
                id: company,
                mentions: vec![
                    mention(0, "company", "named"),
                    mention(1, "it", "pronominal"),
                    mention(2, "company", "named"),
                    mention(3, "company", "nominal"),
                ],
            },
            RawChain {
                id: customer,
                mentions: vec![mention(3, "customer", "nominal"), mention(3, "they", "pronominal")],
            },
            RawChain {
                id: plant,
                mentions: vec![mention(0, "plant", "nominal"), mention(1, "plant", "nominal")],
            },
            RawChain {
                id: energy,
                mentions: vec![mention(2, "energy", "nominal")],
            },
        ],
        events: vec![e0, e1, e2, e3, e4],
    }
}

pub fn power_company_script() -> Script {
    parse_record(&power_company_record(), 1).expect("fixture is well formed")
}

// ---------------------------------------------------------------------------
// Implicit-argument fixture

fn gc_sentence(tree: &str, lemmas: &str) -> GcSentence {
    let t = Tree::parse(tree, 0).expect("fixture tree is well formed");
    let lemmas: Vec<String> = lemmas.split_whitespace().map(str::to_string).collect();
    assert_eq!(lemmas.len(), t.len(), "fixture lemmas for {tree}");
    GcSentence {
        tokens: t.words().iter().map(|w| w.to_string()).collect(),
        pos: (0..t.len()).map(|i| t.label(t.preterminal(i)).to_string()).collect(),
        stems: lemmas.iter().map(|l| l.to_lowercase()).collect(),
        lemmas,
        tree: tree.into(),
    }
}

fn chain(id: u32, mentions: &[(usize, &str, &str)]) -> RawChain {
    RawChain {
        id,
        mentions: mentions.iter().map(|&(s, l, k)| mention(s, l, k)).collect(),
    }
}

fn span(sentence: usize, start: usize, end: usize, head: &str, chain: Option<u32>) -> GcSpan {
    GcSpan {
        sentence,
        start,
        end,
        head: head.into(),
        chain,
    }
}

fn role(role: &str, gold: Vec<GcSpan>) -> GcRole {
    GcRole { role: role.into(), gold }
}

fn event(verb: &str, subj: Option<RawArg>, dobj: Option<RawArg>, pobj: Vec<RawArg>) -> RawEventRecord {
    let mut e = RawEventRecord::new(verb);
    e.subj = subj;
    e.dobj = dobj;
    e.pobj = pobj;
    e
}

/// Five annotated nominal predicates, one document each:
///
/// ```text
/// investment  open subj, dobj, prep_in; all three have gold fillers
/// sale        arg1 local ("of the unit"); arg2 filler has no chain; 3 occurrences
/// cost        arg0 has no mapping, so its annotation is dropped
/// investor    left sibling "many"; arg1 filler has no chain
/// loss        only arg0 is filled; the other roles are true no-fills
/// ```
pub fn gc_fixture_records() -> Vec<GcRecord> {
    let investment = GcRecord {
        id: "investment-1".into(),
        doc: RawDocument {
            doc_id: "gc-investment".into(),
            sentences_count: 3,
            entities: vec![
                chain(1, &[(0, "participant", "nominal"), (2, "they", "pronominal")]),
                chain(2, &[(0, "fund", "nominal"), (1, "fund", "nominal")]),
                chain(3, &[(0, "money", "nominal"), (2, "money", "nominal")]),
            ],
            events: vec![
                event(
                    "transfer",
                    Some(RawArg::new("participant").chain(1)),
                    Some(RawArg::new("money").chain(3)),
                    vec![RawArg::new("fund").chain(2).prep("to", 2)],
                ),
                {
                    let mut e = event("limit", Some(RawArg::new("choice")), None, vec![RawArg::new("fund").chain(2).prep("to", 2)]);
                    e.passive = true;
                    e
                },
                event(
                    "keep",
                    Some(RawArg::new("they").chain(1)),
                    Some(RawArg::new("money").chain(3)),
                    vec![RawArg::new("plan").prep("in", 2)],
                ),
            ],
        },
        sentences: vec![
            gc_sentence(
                "(S (NP (NNS Participants)) (VP (MD will) (VP (VB be) (ADJP (JJ able) (S (VP (TO to) (VP (VB transfer) \
                 (NP (NN money)) (PP (TO to) (NP (JJ other) (NN investment) (NNS funds))))))))) (. .))",
                "participant will be able to transfer money to other investment fund .",
            ),
            gc_sentence(
                "(S (NP (DT The) (NN investment) (NNS choices)) (VP (VBP are) (VP (VBN limited) (PP (TO to) \
                 (NP (NP (DT a) (NN stock) (NN fund)) (CC and) (NP (DT a) (NN money-market) (NN fund)))))) (. .))",
                "the investment choice be limit to a stock fund and a money-market fund .",
            ),
            gc_sentence(
                "(S (NP (PRP They)) (VP (MD can) (ADVP (RB also)) (VP (VB keep) (NP (NN money)) (PP (IN in) (NP (DT the) (NN plan))))) (. .))",
                "they can also keep money in the plan .",
            ),
        ],
        predicate: GcPredicate {
            lemma: "investment".into(),
            sentence: 1,
            start: 1,
            end: 2,
        },
        local_args: vec![],
        roles: vec![
            role("arg0", vec![span(0, 0, 1, "participant", Some(1))]),
            role("arg1", vec![span(0, 6, 7, "money", Some(3))]),
            role("arg2", vec![span(0, 8, 11, "fund", Some(2)), span(1, 6, 13, "fund", Some(2))]),
        ],
    };

    let sale = GcRecord {
        id: "sale-1".into(),
        doc: RawDocument {
            doc_id: "gc-sale".into(),
            sentences_count: 4,
            entities: vec![
                chain(1, &[(0, "company", "nominal"), (3, "it", "pronominal")]),
                chain(2, &[(0, "unit", "nominal")]),
            ],
            events: vec![
                event("announce", Some(RawArg::new("company").chain(1)), Some(RawArg::new("sale")), vec![]),
                {
                    let mut e = event("approve", Some(RawArg::new("sale")), None, vec![RawArg::new("regulator").prep("by", 1)]);
                    e.passive = true;
                    e
                },
                event("welcome", Some(RawArg::new("buyer")), Some(RawArg::new("sale")), vec![]),
                event("expect", Some(RawArg::new("it").chain(1)), Some(RawArg::new("profit")), vec![]),
            ],
        },
        sentences: vec![
            gc_sentence(
                "(S (NP (DT The) (NN company)) (VP (VBD announced) (NP (NP (DT the) (NN sale)) (PP (IN of) (NP (DT the) (NN unit))))) (. .))",
                "the company announce the sale of the unit .",
            ),
            gc_sentence(
                "(S (NP (DT The) (NN sale)) (VP (VBD was) (VP (VBN approved) (PP (IN by) (NP (NNS regulators))))) (. .))",
                "the sale be approve by regulator .",
            ),
            gc_sentence(
                "(S (NP (NNS Buyers)) (VP (VBD welcomed) (NP (DT the) (NN sale))) (. .))",
                "buyer welcome the sale .",
            ),
            gc_sentence(
                "(S (NP (PRP It)) (VP (VBZ expects) (NP (DT a) (NN profit))) (. .))",
                "it expect a profit .",
            ),
        ],
        predicate: GcPredicate {
            lemma: "sale".into(),
            sentence: 0,
            start: 4,
            end: 5,
        },
        local_args: vec![GcLocalArg {
            role: "arg1".into(),
            lemma: "unit".into(),
            chain: Some(2),
        }],
        roles: vec![
            role("arg0", vec![span(0, 0, 2, "company", Some(1))]),
            role("arg2", vec![span(2, 0, 1, "buyer", None)]),
        ],
    };

    let cost = GcRecord {
        id: "cost-1".into(),
        doc: RawDocument {
            doc_id: "gc-cost".into(),
            sentences_count: 3,
            entities: vec![
                chain(1, &[(0, "repair", "nominal"), (1, "them", "pronominal")]),
                chain(2, &[(1, "owner", "nominal"), (2, "they", "pronominal")]),
            ],
            events: vec![
                event("rise", Some(RawArg::new("cost")), None, vec![]),
                event(
                    "pay",
                    Some(RawArg::new("owner").chain(2)),
                    None,
                    vec![RawArg::new("them").chain(1).prep("for", 1)],
                ),
                event("complain", Some(RawArg::new("they").chain(2)), None, vec![]),
            ],
        },
        sentences: vec![
            gc_sentence(
                "(S (NP (NP (DT The) (NN cost)) (PP (IN of) (NP (DT the) (NNS repairs)))) (VP (VBD rose) (ADVP (RB sharply))) (. .))",
                "the cost of the repair rise sharply .",
            ),
            gc_sentence(
                "(S (NP (DT The) (NNS owners)) (VP (VBD paid) (PP (IN for) (NP (PRP them)))) (. .))",
                "the owner pay for them .",
            ),
            gc_sentence("(S (NP (PRP They)) (VP (VBD complained)) (. .))", "they complain ."),
        ],
        predicate: GcPredicate {
            lemma: "cost".into(),
            sentence: 0,
            start: 1,
            end: 2,
        },
        local_args: vec![GcLocalArg {
            role: "arg1".into(),
            lemma: "repair".into(),
            chain: Some(1),
        }],
        roles: vec![
            role("arg0", vec![span(1, 0, 2, "owner", Some(2))]),
            role("arg3", vec![span(1, 0, 2, "owner", Some(2))]),
        ],
    };

    let investor = GcRecord {
        id: "investor-1".into(),
        doc: RawDocument {
            doc_id: "gc-investor".into(),
            sentences_count: 2,
            entities: vec![chain(1, &[(0, "fund", "nominal"), (1, "fund", "nominal")])],
            events: vec![
                event(
                    "buy",
                    Some(RawArg::new("investor")),
                    Some(RawArg::new("share")),
                    vec![RawArg::new("fund").chain(1).prep("of", 1)],
                ),
                event("grow", Some(RawArg::new("fund").chain(1)), None, vec![]),
            ],
        },
        sentences: vec![
            gc_sentence(
                "(S (NP (JJ Many) (NNS investors)) (VP (VBD bought) (NP (NP (NNS shares)) (PP (IN of) (NP (DT the) (NN fund))))) (. .))",
                "many investor buy share of the fund .",
            ),
            gc_sentence("(S (NP (DT The) (NN fund)) (VP (VBD grew)) (. .))", "the fund grow ."),
        ],
        predicate: GcPredicate {
            lemma: "investor".into(),
            sentence: 0,
            start: 1,
            end: 2,
        },
        local_args: vec![GcLocalArg {
            role: "arg0".into(),
            lemma: "investor".into(),
            chain: None,
        }],
        roles: vec![
            role("arg1", vec![span(0, 3, 4, "share", None)]),
            role("arg2", vec![span(0, 5, 8, "fund", Some(1))]),
        ],
    };

    let loss = GcRecord {
        id: "loss-1".into(),
        doc: RawDocument {
            doc_id: "gc-loss".into(),
            sentences_count: 2,
            entities: vec![chain(1, &[(0, "firm", "nominal"), (1, "it", "pronominal")])],
            events: vec![
                event("report", Some(RawArg::new("firm").chain(1)), Some(RawArg::new("loss")), vec![]),
                event("blame", Some(RawArg::new("it").chain(1)), Some(RawArg::new("weather")), vec![]),
            ],
        },
        sentences: vec![
            gc_sentence(
                "(S (NP (DT The) (NN firm)) (VP (VBD reported) (NP (DT a) (NN loss))) (. .))",
                "the firm report a loss .",
            ),
            gc_sentence(
                "(S (NP (PRP It)) (VP (VBD blamed) (NP (DT the) (NN weather))) (. .))",
                "it blame the weather .",
            ),
        ],
        predicate: GcPredicate {
            lemma: "loss".into(),
            sentence: 0,
            start: 4,
            end: 5,
        },
        local_args: vec![],
        roles: vec![role("arg0", vec![span(0, 0, 2, "firm", Some(1))])],
    };

    vec![investment, sale, cost, investor, loss]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Argument, Filler, Position};

    #[test]
    fn power_company_parses() {
        let s = power_company_script();
        assert_eq!(s.events.len(), 5);
        assert_eq!(s.entities.len(), 3);
        let reps: Vec<&str> = s.entities.iter().map(|e| e.representative()).collect();
        assert_eq!(reps, ["company", "customer", "plant"]);
        assert_eq!(s.events[1].dobj.filler, Filler::Lemma("electricity".into()));
        assert_eq!(s.events[1].pobj, Argument::entity(2).with_preposition("to"));
        // passive record normalized, singleton chain demoted
        assert_eq!(s.events[2].verb, "generate");
        assert_eq!(s.events[2].subj, Argument::entity(0));
        assert_eq!(s.events[2].dobj.filler, Filler::Lemma("energy".into()));
        assert_eq!(s.events[3].dobj.filler, Filler::Lemma("energy".into()));
        assert_eq!(s.events[4].entity_positions(), vec![Position::Subj, Position::Pobj]);
    }
}
