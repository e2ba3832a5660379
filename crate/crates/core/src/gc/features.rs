//! The fourteen shallow fill/no-fill features. Every feature conjoined with
//! the predicate is written `name=p&value`.

use super::tree::{base_label, Tree};
use super::GcInstance;
use crate::error::{Error, Result};

/// Checked longest first.
pub const SUFFIXES: [&str; 13] = [
    "ment", "tion", "sion", "ance", "ence", "ness", "ity", "ure", "age", "ing", "al", "er", "or",
];

pub const QUANTIFIERS: [&str; 17] = [
    "many", "most", "all", "some", "few", "several", "each", "every", "any", "no", "both", "half", "much", "more",
    "less", "fewer", "numerous",
];

pub const WINDOWS: [usize; 3] = [1, 2, 3];

pub fn suffix(lemma: &str) -> &'static str {
    SUFFIXES
        .iter()
        .copied()
        .filter(|s| lemma.len() > s.len() && lemma.ends_with(s))
        .max_by_key(|s| s.len())
        .unwrap_or("none")
}

pub fn frequency_bucket(count: usize) -> &'static str {
    match count {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5..=9 => "5-9",
        _ => "10+",
    }
}

fn is_content_pos(pos: &str) -> bool {
    ["NN", "VB", "JJ", "RB"].iter().any(|p| pos.starts_with(p))
}

fn is_noun_projection(label: &str) -> bool {
    matches!(base_label(label), "NP" | "NX" | "NML")
}

/// Parses the predicate's sentence tree and checks it against the tokens.
pub fn predicate_tree(instance: &GcInstance) -> Result<Tree> {
    let si = instance.predicate.sentence;
    let sent = &instance.sentences[si];
    let tree = Tree::parse(&sent.tree, si)?;
    if tree.len() != sent.tokens.len() {
        return Err(Error::TreeParse {
            sentence: si,
            message: format!("tree has {} leaves but the sentence has {} tokens", tree.len(), sent.tokens.len()),
        });
    }
    Ok(tree)
}

/// Feature strings for open role `role` of `instance`.
pub fn extract_fillnofill_features(instance: &GcInstance, role: usize) -> Result<Vec<String>> {
    let tree = predicate_tree(instance)?;
    let pred = &instance.predicate;
    let sent = &instance.sentences[pred.sentence];
    if pred.start >= pred.end || pred.end > sent.tokens.len() {
        return Err(Error::Contract(format!("{}: bad predicate span {}..{}", instance.id, pred.start, pred.end)));
    }
    let p = instance.nominal.as_str();
    let n = instance.open[role].role.trim_start_matches("arg");
    let lower = |i: usize| sent.lemmas[i].to_lowercase();
    let mut out = vec![
        format!("p={p}"),
        format!("p&suffix={p}&{}", suffix(p)),
        format!("p&iarg={p}&{n}"),
        format!("verb&iarg={}&{n}", instance.verbal),
    ];

    let count = instance
        .sentences
        .iter()
        .flat_map(|s| &s.lemmas)
        .filter(|l| l.eq_ignore_ascii_case(p))
        .count();
    out.push(format!("freq={}", frequency_bucket(count)));

    for k in WINDOWS {
        let lo = pred.start.saturating_sub(k);
        let hi = (pred.end + k).min(sent.tokens.len());
        let mut stems: Vec<String> = (lo..pred.start)
            .chain(pred.end..hi)
            .filter(|&i| is_content_pos(&sent.pos[i]))
            .map(|i| sent.stems[i].to_lowercase())
            .collect();
        stems.sort();
        stems.dedup();
        out.extend(stems.into_iter().map(|s| format!("win{k}={p}&{s}")));
    }

    let head = tree.preterminal(pred.end - 1);
    let passives: Vec<usize> = (0..tree.len()).filter(|&i| tree.is_passive_verb(tree.preterminal(i))).collect();
    out.push(format!("before_passive={p}&{}", passives.iter().any(|&i| i >= pred.end)));

    // the phrase right of the predicate, climbing noun projections it ends
    let mut node = head;
    let right = loop {
        if let Some(r) = tree.right_sibling(node) {
            break Some(r);
        }
        match tree.parent(node) {
            Some(up) if is_noun_projection(tree.label(up)) => node = up,
            _ => break None,
        }
    };
    let pp_obj = right
        .filter(|&r| base_label(tree.label(r)) == "PP")
        .and_then(|r| tree.nodes[r].children.iter().copied().find(|&c| is_noun_projection(tree.label(c))))
        .map(|np| lower(tree.nodes[tree.head(np)].span.0))
        .unwrap_or_else(|| "none".into());
    out.push(format!("pp_obj={p}&{pp_obj}"));

    let nearest = passives
        .iter()
        .copied()
        .filter(|i| !(pred.start..pred.end).contains(i))
        .min_by_key(|&i| (i.abs_diff(pred.end - 1), i));
    let path = nearest
        .map(|i| tree.path(head, tree.preterminal(i)).0)
        .unwrap_or_else(|| "none".into());
    out.push(format!("path_passive={p}&{path}"));

    let parent_pos = tree
        .parent(head)
        .map(|up| tree.label(tree.head(up)).to_string())
        .unwrap_or_else(|| "none".into());
    out.push(format!("parent_head_pos={p}&{parent_pos}"));

    let right_word = right
        .map(|r| sent.tokens[tree.nodes[r].span.1 - 1].to_lowercase())
        .unwrap_or_else(|| "none".into());
    out.push(format!("right_sib={p}&{right_word}"));

    let mut node = head;
    let left = loop {
        if let Some(l) = tree.left_sibling(node) {
            break Some(l);
        }
        match tree.parent(node) {
            Some(up) if is_noun_projection(tree.label(up)) => node = up,
            _ => break None,
        }
    };
    let quant = left.is_some_and(|l| {
        let w = tree.word(tree.last_preterminal(l)).to_lowercase();
        QUANTIFIERS.contains(&w.as_str())
    });
    out.push(format!("left_quant={quant}"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_and_buckets() {
        assert_eq!(suffix("investment"), "ment");
        assert_eq!(suffix("investor"), "or");
        assert_eq!(suffix("sale"), "none");
        assert_eq!(frequency_bucket(3), "3");
        assert_eq!(frequency_bucket(7), "5-9");
        assert_eq!(frequency_bucket(12), "10+");
    }
}
