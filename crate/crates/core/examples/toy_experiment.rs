//! Trains on a toy world and prints held-out cloze accuracy.
//!
//! cargo run --release -p evcomp --example toy_experiment -- selectional

use std::time::Instant;

use evcomp::cloze::TripleOptions;
use evcomp::corpus::build_vocabulary;
use evcomp::embeddings::SgnsParams;
use evcomp::evalx::{evaluate, EvalSet};
use evcomp::eventcomp::{train, EventCompModel, ModelConfig, ModelDims, TrainParams};
use evcomp::inference::{Aggregation, Predictor};
use evcomp::pipeline::{build_triples, train_embeddings};
use evcomp::rng::seeded;
use evcomp::salience::SalienceMask;
use evcomp::toyworld::{generate, split, ToyConfig, ToyKind};

fn env<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() {
    let kind = std::env::args().nth(1).unwrap_or_else(|| "selectional".into());
    let kind = ToyKind::parse(&kind).expect("selectional or salience");
    let start = Instant::now();
    let scripts = generate(kind, &ToyConfig::for_kind(kind), 1);
    let (train_set, held) = split(scripts);
    let vocab = build_vocabulary(&train_set, 1, 10).unwrap();
    let emb_dim = env("EMB", 24);
    let sgns = SgnsParams {
        dim: emb_dim,
        window: 5,
        negatives: 5,
        epochs: env("SGNS_EPOCHS", 5),
        ..Default::default()
    };
    let table = train_embeddings(&train_set, &vocab, &sgns, 2).unwrap();
    let opts = TripleOptions {
        negatives_per_pair: env("NEG", 1),
        ..Default::default()
    };
    let triples = build_triples(&train_set, &vocab, &opts, 3);
    println!("{} triples, vocab {}, {:?}", triples.len(), vocab.len(), start.elapsed());
    let mask = match std::env::var("MASK").as_deref() {
        Ok("none") => SalienceMask::none(),
        Ok("all") => SalienceMask::all(),
        Ok(list) => SalienceMask::ablating(list).unwrap(),
        Err(_) => SalienceMask::all(),
    };
    let config = ModelConfig {
        dims: ModelDims {
            emb_dim,
            arg_hidden: env("ARG_H", 48),
            event_dim: env("EV", 24),
            pair_hidden: env("PAIR_H", 32),
            pair_hidden2: env("PAIR_H2", 16),
        },
        mask,
        ..Default::default()
    };
    let params = TrainParams {
        learning_rate: env("LR", 0.01),
        batch_size: env("BATCH", 100),
        epochs: env("EPOCHS", 20),
        l2: env("L2", 0.01),
        seed: 4,
        freeze_embeddings: false,
    };
    let model = EventCompModel::new(vocab.clone(), config, Some(&table), 5).unwrap();
    let out = train(&triples, &params, model).unwrap();
    println!("losses {:?}", out.epoch_losses);
    let eval = EvalSet::from_scripts(held, 6, None).unwrap();
    for predictor in [
        Predictor::Random,
        Predictor::MostFreq,
        Predictor::EventWord2vec { table: &table, vocab: &vocab, aggregation: Aggregation::Max },
        Predictor::EventComp { model: &out.model, aggregation: Aggregation::Max },
    ] {
        let (report, _) = evaluate(&eval, &predictor, &mut seeded(7), 1).unwrap();
        println!("{:<14} {:.4} (n={}, cand {:.2})", report.model_tag, report.accuracy, report.n_instances, report.mean_candidates);
    }
    println!("elapsed {:?}", start.elapsed());
}
