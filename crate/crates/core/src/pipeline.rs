//! Corpus-level drivers shared by the command line and the tests. Every
//! document draws from its own stream, seeded from the global seed and its
//! id, so results do not depend on document order or worker count.

use crate::cloze::{encode_triple, generate_triples, EncodedTriple, TripleOptions};
use crate::corpus::{Script, Vocabulary};
use crate::embeddings::{build_pseudo_sentence_sampled, encode_sentences, train_sgns, EmbeddingTable, SgnsParams};
use crate::error::Result;
use crate::rng::{derive_seed, seeded};

/// One pseudo-sentence per script, with frequent-verb down-sampling.
pub fn pseudo_sentences(scripts: &[Script], vocab: &Vocabulary, downsample_threshold: u64, seed: u64) -> Vec<Vec<String>> {
    scripts
        .iter()
        .map(|s| {
            let mut rng = seeded(derive_seed(seed, &format!("sentence:{}", s.doc_id)));
            build_pseudo_sentence_sampled(s, vocab, downsample_threshold, &mut rng)
        })
        .collect()
}

pub fn train_embeddings(scripts: &[Script], vocab: &Vocabulary, params: &SgnsParams, seed: u64) -> Result<EmbeddingTable> {
    let sentences = pseudo_sentences(scripts, vocab, u64::MAX, seed);
    train_sgns(&encode_sentences(&sentences, vocab), params, vocab, seed)
}

/// Encoded training triples for every script, in script order.
pub fn build_triples(scripts: &[Script], vocab: &Vocabulary, opts: &TripleOptions, seed: u64) -> Vec<EncodedTriple> {
    scripts
        .iter()
        .flat_map(|s| {
            let mut rng = seeded(derive_seed(seed, &format!("triples:{}", s.doc_id)));
            generate_triples(s, &mut rng, opts, vocab)
                .into_iter()
                .map(|t| encode_triple(s, &t, vocab))
                .collect::<Vec<_>>()
        })
        .collect()
}
