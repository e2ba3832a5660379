//! Bracketed constituency trees, e.g. `(S (NP (DT the) (NN sale)) (VP ...))`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub label: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Token index for word leaves.
    pub token: Option<usize>,
    /// Token span `[start, end)` covered by the node.
    pub span: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub root: usize,
    /// Leaf node of each token.
    leaves: Vec<usize>,
}

const BE_FORMS: [&str; 9] = ["be", "is", "are", "was", "were", "been", "being", "am", "'s"];

impl Tree {
    /// Parses one bracketed tree. `sentence` is only used in errors. An
    /// unlabeled outer wrapper `( (S ...) )` is accepted.
    pub fn parse(text: &str, sentence: usize) -> Result<Tree> {
        let err = |message: String| Error::TreeParse { sentence, message };
        let tokens = lex(text);
        let mut nodes: Vec<Node> = Vec::new();
        let mut leaves = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut root = None;
        let mut i = 0;
        while i < tokens.len() {
            match tokens[i] {
                "(" => {
                    let label = match tokens.get(i + 1) {
                        Some(&t) if t != "(" && t != ")" => {
                            i += 1;
                            t.to_string()
                        }
                        _ => String::new(),
                    };
                    if root.is_some() && stack.is_empty() {
                        return Err(err("more than one tree".into()));
                    }
                    let id = nodes.len();
                    nodes.push(Node {
                        label,
                        parent: stack.last().copied(),
                        children: Vec::new(),
                        token: None,
                        span: (leaves.len(), leaves.len()),
                    });
                    if let Some(&p) = stack.last() {
                        nodes[p].children.push(id);
                    } else {
                        root = Some(id);
                    }
                    stack.push(id);
                }
                ")" => {
                    let id = stack.pop().ok_or_else(|| err(format!("unbalanced ')' at token {i}")))?;
                    if nodes[id].children.is_empty() {
                        return Err(err(format!("constituent {:?} has no children", nodes[id].label)));
                    }
                    nodes[id].span.1 = leaves.len();
                }
                word => {
                    let parent = *stack.last().ok_or_else(|| err(format!("word {word:?} outside brackets")))?;
                    let id = nodes.len();
                    nodes.push(Node {
                        label: word.to_string(),
                        parent: Some(parent),
                        children: Vec::new(),
                        token: Some(leaves.len()),
                        span: (leaves.len(), leaves.len() + 1),
                    });
                    nodes[parent].children.push(id);
                    leaves.push(id);
                }
            }
            i += 1;
        }
        if !stack.is_empty() {
            return Err(err(format!("{} unclosed bracket(s)", stack.len())));
        }
        let mut root = root.ok_or_else(|| err("empty tree".into()))?;
        while nodes[root].label.is_empty() && nodes[root].children.len() == 1 {
            root = nodes[root].children[0];
            nodes[root].parent = None;
        }
        Ok(Tree { nodes, root, leaves })
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.leaves.iter().map(|&l| self.nodes[l].label.as_str()).collect()
    }

    /// Preterminal (POS node) above token `i`.
    pub fn preterminal(&self, i: usize) -> usize {
        self.nodes[self.leaves[i]].parent.expect("leaves have parents")
    }

    pub fn is_preterminal(&self, n: usize) -> bool {
        let c = &self.nodes[n].children;
        c.len() == 1 && self.nodes[c[0]].token.is_some()
    }

    pub fn word(&self, preterminal: usize) -> &str {
        &self.nodes[self.nodes[preterminal].children[0]].label
    }

    pub fn label(&self, n: usize) -> &str {
        &self.nodes[n].label
    }

    pub fn parent(&self, n: usize) -> Option<usize> {
        self.nodes[n].parent
    }

    pub fn left_sibling(&self, n: usize) -> Option<usize> {
        let p = self.nodes[n].parent?;
        let sibs = &self.nodes[p].children;
        let k = sibs.iter().position(|&c| c == n)?;
        k.checked_sub(1).map(|j| sibs[j])
    }

    pub fn right_sibling(&self, n: usize) -> Option<usize> {
        let p = self.nodes[n].parent?;
        let sibs = &self.nodes[p].children;
        let k = sibs.iter().position(|&c| c == n)?;
        sibs.get(k + 1).copied()
    }

    /// Preterminal of the last token under `n`.
    pub fn last_preterminal(&self, n: usize) -> usize {
        self.preterminal(self.nodes[n].span.1 - 1)
    }

    /// Head preterminal of `n` by a small head-rule table.
    pub fn head(&self, n: usize) -> usize {
        if self.is_preterminal(n) {
            return n;
        }
        let kids = &self.nodes[n].children;
        let label = base_label(self.label(n));
        let pick = |pred: &dyn Fn(&str) -> bool, from_right: bool| -> Option<usize> {
            let mut it: Box<dyn Iterator<Item = &usize>> = if from_right {
                Box::new(kids.iter().rev())
            } else {
                Box::new(kids.iter())
            };
            it.find(|&&c| pred(base_label(self.label(c)))).copied()
        };
        let chosen = match label {
            "NP" | "NX" | "NML" => pick(&|l| l.starts_with("NN") || l == "PRP" || l == "CD", true)
                .or_else(|| pick(&|l| l == "NP", false)),
            "VP" => pick(&|l| l.starts_with("VB") || l == "MD" || l == "TO", false).or_else(|| pick(&|l| l == "VP", false)),
            "PP" => pick(&|l| l == "IN" || l == "TO", false),
            "S" | "SINV" | "SQ" => pick(&|l| l == "VP", false),
            "SBAR" => pick(&|l| l.starts_with('S'), false),
            "ADJP" => pick(&|l| l.starts_with("JJ"), false),
            "ADVP" => pick(&|l| l.starts_with("RB"), true),
            _ => None,
        };
        self.head(chosen.unwrap_or(kids[0]))
    }

    /// Past participles governed by a form of "be": a VBN heading a VP
    /// whose parent VP is headed by a be-verb.
    pub fn is_passive_verb(&self, preterminal: usize) -> bool {
        if self.label(preterminal) != "VBN" {
            return false;
        }
        let Some(vp) = self.parent(preterminal).filter(|&p| base_label(self.label(p)) == "VP") else {
            return false;
        };
        let Some(upper) = self.parent(vp).filter(|&p| base_label(self.label(p)) == "VP") else {
            return false;
        };
        let h = self.head(upper);
        self.label(h).starts_with("VB") && BE_FORMS.contains(&self.word(h).to_lowercase().as_str())
    }

    pub fn ancestors(&self, n: usize) -> Vec<usize> {
        let mut out = vec![n];
        let mut cur = n;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Label path from `a` up to the lowest common ancestor and down to
    /// `b`, e.g. `NN^NP^S!VP!VP!VBN`; also returns its length in edges.
    pub fn path(&self, a: usize, b: usize) -> (String, usize) {
        let up = self.ancestors(a);
        let down = self.ancestors(b);
        let lca_up = up.iter().position(|n| down.contains(n)).expect("same tree");
        let lca = up[lca_up];
        let lca_down = down.iter().position(|&n| n == lca).unwrap();
        let mut s = String::new();
        for (k, &n) in up[..=lca_up].iter().enumerate() {
            if k > 0 {
                s.push('^');
            }
            s.push_str(self.label(n));
        }
        for &n in down[..lca_down].iter().rev() {
            s.push('!');
            s.push_str(self.label(n));
        }
        (s, lca_up + lca_down)
    }
}

/// `NP-SBJ` -> `NP`; `-NONE-` is left alone.
pub fn base_label(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    label.split(['-', '=']).next().unwrap_or(label)
}

fn lex(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | ')' => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
                out.push(&text[i..i + 1]);
            }
            c if c.is_whitespace() => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
            }
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const S1: &str = "(S (NP (DT The) (NN investment) (NNS choices)) (VP (VBP are) (VP (VBN limited) \
                      (PP (TO to) (NP (DT a) (NN fund))))) (. .))";

    #[test]
    fn parses_and_spans() {
        let t = Tree::parse(S1, 0).unwrap();
        assert_eq!(t.words(), ["The", "investment", "choices", "are", "limited", "to", "a", "fund", "."]);
        assert_eq!(t.label(t.preterminal(1)), "NN");
        assert_eq!(t.nodes[t.root].span, (0, 9));
        let wrapped = Tree::parse(&format!("( {S1} )"), 0).unwrap();
        assert_eq!(wrapped.label(wrapped.root), "S");
    }

    #[test]
    fn heads_passives_paths() {
        let t = Tree::parse(S1, 0).unwrap();
        let np = t.parent(t.preterminal(1)).unwrap();
        assert_eq!(t.word(t.head(np)), "choices");
        assert_eq!(t.word(t.head(t.root)), "are");
        let limited = t.preterminal(4);
        assert!(t.is_passive_verb(limited));
        assert!(!t.is_passive_verb(t.preterminal(3)));
        let (path, len) = t.path(t.preterminal(1), limited);
        assert_eq!(path, "NN^NP^S!VP!VP!VBN");
        assert_eq!(len, 5);
    }

    #[test]
    fn malformed_trees() {
        for bad in ["(S (NP x)", "(S (NP x)))", "", "(S ())", "x (S y)", "(S a) (S b)"] {
            match Tree::parse(bad, 3) {
                Err(Error::TreeParse { sentence: 3, .. }) => {}
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }
}
