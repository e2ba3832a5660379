use std::io::Write;
use std::path::Path;

use log::{info, warn};

use evcomp::checkpoint::{load_checkpoint, save_checkpoint, Manifest};
use evcomp::cloze::{ClozeInstance, EncodedTriple, TripleOptions, CLOZE_FORMAT, FORMAT_VERSION, TRIPLE_FORMAT};
use evcomp::corpus::{build_vocabulary, parse_document, read_corpus, write_corpus, Script, Vocabulary};
use evcomp::embeddings::{EmbeddingTable, SgnsParams};
use evcomp::evalx::{ablation_masks, ablation_run, ablation_table, evaluate, write_report, AblationSetup, EvalSet};
use evcomp::eventcomp::{gradient_check, EventCompModel, ModelConfig, ModelDims, TrainParams};
use evcomp::gc::{
    convert_instance, cross_validate, evaluate_with, fnf_examples, train_fillnofill, FillNoFillModel, FnfParams,
    GcInstance, GcRecord, MappingTable, MultiArgOptions, GC_FORMAT, GC_VERSION,
};
use evcomp::inference::{write_predictions, Aggregation, Predictor};
use evcomp::io::{atomic_write, open_lines, read_jsonl, write_jsonl};
use evcomp::nn::Activation;
use evcomp::pipeline::{build_triples, pseudo_sentences, train_embeddings};
use evcomp::rng::{derive_seed, seeded};
use evcomp::salience::{SalienceGroup, SalienceMask};
use evcomp::toyworld::{generate, random_script, split, ToyConfig, ToyKind};

use crate::config::{Failure, Outcome, Settings};
use crate::{
    AblateArgs, Cli, Command, EvaluateArgs, FnfArgs, GcConvertArgs, GcEvaluateArgs, GcInputArgs, GcTrainFnfArgs,
    GenClozeArgs, GenTriplesArgs, GradientCheckArgs, IngestArgs, ModelArgs, PredictArgs, PredictorArgs,
    SentencesArgs, ToyWorldArgs, TrainArgs, TrainEmbeddingsArgs, TrainModelArgs, VocabArgs,
};

pub const CONVERTED_FORMAT: &str = "evgc-converted";

/// Seed and worker count shared by every command.
struct Common {
    seed: u64,
    workers: usize,
}

pub fn run(cli: Cli, mut s: Settings) -> Outcome<()> {
    let seed = s.get("seed", cli.seed, 0u64)?;
    let workers = s.get("workers", cli.workers, 1usize)?;
    if workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let c = Common { seed, workers };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a, &mut s),
        Command::Vocab(a) => vocab(a, &mut s),
        Command::Sentences(a) => sentences(a, &mut s, &c),
        Command::TrainEmbeddings(a) => train_embeddings_cmd(a, &mut s, &c),
        Command::GenTriples(a) => gen_triples(a, &mut s, &c),
        Command::TrainModel(a) => train_model(a, &mut s, &c),
        Command::GenCloze(a) => gen_cloze(a, &mut s, &c),
        Command::Predict(a) => predict(a, &mut s, &c),
        Command::Evaluate(a) => evaluate_cmd(a, &mut s, &c),
        Command::Ablate(a) => ablate(a, &mut s, &c),
        Command::GcConvert(a) => gc_convert(a, &mut s),
        Command::GcTrainFnf(a) => gc_train_fnf(a, &mut s, &c),
        Command::GcEvaluate(a) => gc_evaluate(a, &mut s, &c),
        Command::GradientCheck(a) => gradient_check_cmd(a, &mut s, &c),
        Command::ToyWorld(a) => toy_world(a, &mut s, &c),
    };
    s.warn_unused();
    result
}

fn load_corpus(path: &Path) -> Outcome<Vec<Script>> {
    let scripts = read_corpus(path)?;
    info!("read {} documents from {}", scripts.len(), path.display());
    Ok(scripts)
}

fn cap(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

fn ingest(a: IngestArgs, s: &mut Settings) -> Outcome<()> {
    let input = s.input("input", a.input)?;
    let output = s.output("output", a.output)?;
    let skip = s.switch("skip-invalid", a.skip_invalid)?;
    let mut scripts = Vec::new();
    let mut skipped = 0;
    for (i, line) in open_lines(&input).map_err(Failure::from)?.enumerate() {
        let line = line.map_err(|e| Failure::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_document(&line, i + 1) {
            Ok(script) => scripts.push(script),
            Err(e) if skip => {
                warn!("skipping: {e}");
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_corpus(&output, &scripts)?;
    info!("wrote {} documents ({skipped} skipped)", scripts.len());
    Ok(())
}

fn vocab(a: VocabArgs, s: &mut Settings) -> Outcome<()> {
    let corpus = s.input("corpus", a.corpus)?;
    let output = s.output("output", a.output)?;
    let min_count = s.get("min-count", a.min_count, 1u64)?;
    let top_k = s.get("prep-top-k", a.prep_top_k, 10usize)?;
    let scripts = load_corpus(&corpus)?;
    let v = build_vocabulary(&scripts, min_count, top_k)?;
    v.save(&output)?;
    info!("vocabulary of {} tokens", v.len());
    Ok(())
}

fn sentences(a: SentencesArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let corpus = s.input("corpus", a.corpus)?;
    let vocab = s.input("vocab", a.vocab)?;
    let output = s.output("output", a.output)?;
    let threshold = s.get("downsample-threshold", a.downsample_threshold, 100_000u64)?;
    let scripts = load_corpus(&corpus)?;
    let v = Vocabulary::load(&vocab)?;
    let sents = pseudo_sentences(&scripts, &v, threshold, c.seed);
    atomic_write(&output, |w| {
        for sent in &sents {
            writeln!(w, "{}", sent.join(" "))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn sgns_params(a: crate::SgnsArgs, s: &mut Settings, c: &Common) -> Outcome<SgnsParams> {
    let d = SgnsParams::default();
    let p = SgnsParams {
        dim: s.get("dim", a.dim, d.dim)?,
        window: s.get("window", a.window, d.window)?,
        negatives: s.get("negatives", a.negatives, d.negatives)?,
        subsample_t: s.get("subsample", a.subsample, d.subsample_t)?,
        epochs: s.get("sgns-epochs", a.sgns_epochs, d.epochs)?,
        learning_rate: s.get("sgns-lr", a.sgns_lr, d.learning_rate)?,
        min_learning_rate: d.min_learning_rate,
        workers: c.workers,
    };
    p.validate()?;
    Ok(p)
}

fn train_embeddings_cmd(a: TrainEmbeddingsArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let corpus = s.input("corpus", a.corpus)?;
    let vocab = s.input("vocab", a.vocab)?;
    let output = s.output("output", a.output)?;
    let params = sgns_params(a.sgns, s, c)?;
    let scripts = load_corpus(&corpus)?;
    let v = Vocabulary::load(&vocab)?;
    let table = train_embeddings(&scripts, &v, &params, c.seed)?;
    if !table.is_finite() {
        return Err(Failure::Numeric("embeddings diverged".into()));
    }
    if output.extension().is_some_and(|e| e == "txt") {
        table.save_text(&output)?;
    } else {
        table.save_binary(&output)?;
    }
    Ok(())
}

fn gen_triples(a: GenTriplesArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let corpus = s.input("corpus", a.corpus)?;
    let vocab = s.input("vocab", a.vocab)?;
    let output = s.output("output", a.output)?;
    let d = TripleOptions::default();
    let opts = TripleOptions {
        multi_arg: s.switch("multi-arg", a.multi_arg)?,
        negatives_per_pair: s.get("negatives-per-pair", a.negatives_per_pair, d.negatives_per_pair)?,
        per_doc_cap: cap(s.get("per-doc-cap", a.per_doc_cap, d.per_doc_cap.unwrap_or(0))?),
        downsample_threshold: s.get("downsample-threshold", a.downsample_threshold, d.downsample_threshold)?,
    };
    let scripts = load_corpus(&corpus)?;
    let v = Vocabulary::load(&vocab)?;
    let triples = build_triples(&scripts, &v, &opts, c.seed);
    write_jsonl(&output, TRIPLE_FORMAT, FORMAT_VERSION, &triples)?;
    info!("wrote {} triples", triples.len());
    Ok(())
}

fn parse_aggregation(s: &mut Settings, flag: Option<String>) -> Outcome<Aggregation> {
    let text = s.get("aggregation", flag, "max".to_string())?;
    Ok(text.parse()?)
}

fn model_config(a: ModelArgs, s: &mut Settings, emb_dim: Option<usize>) -> Outcome<ModelConfig> {
    let d = ModelDims::default();
    let from_table = emb_dim;
    let emb = s.get("emb-dim", a.emb_dim, from_table.unwrap_or(d.emb_dim))?;
    if let Some(t) = from_table {
        if t != emb {
            return Err(Failure::Usage(format!("--emb-dim {emb} differs from the embeddings' dimension {t}")));
        }
    }
    let dims = ModelDims {
        emb_dim: emb,
        arg_hidden: s.get("arg-hidden", a.arg_hidden, d.arg_hidden)?,
        event_dim: s.get("event-dim", a.event_dim, d.event_dim)?,
        pair_hidden: s.get("pair-hidden", a.pair_hidden, d.pair_hidden)?,
        pair_hidden2: s.get("pair-hidden2", a.pair_hidden2, d.pair_hidden2)?,
    };
    let act = s.get("activation", a.activation, "tanh".to_string())?;
    let activation = Activation::parse(&act).ok_or_else(|| Failure::Usage(format!("unknown activation {act:?}")))?;
    let ablate = s.get("ablate", a.ablate, String::new())?;
    Ok(ModelConfig {
        dims,
        activation,
        mask: SalienceMask::ablating(&ablate)?,
        raw_salience: s.switch("raw-salience", a.raw_salience)?,
    })
}

fn train_params(a: TrainArgs, s: &mut Settings, c: &Common) -> Outcome<TrainParams> {
    let d = TrainParams::default();
    let p = TrainParams {
        learning_rate: s.get("lr", a.lr, d.learning_rate)?,
        batch_size: s.get("batch", a.batch, d.batch_size)?,
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        l2: s.get("l2", a.l2, d.l2)?,
        seed: derive_seed(c.seed, "train"),
        freeze_embeddings: s.switch("freeze-embeddings", a.freeze_embeddings)?,
    };
    p.validate()?;
    Ok(p)
}

fn load_embeddings(path: &Option<std::path::PathBuf>) -> Outcome<Option<EmbeddingTable>> {
    match path {
        Some(p) => Ok(Some(EmbeddingTable::load(p)?)),
        None => Ok(None),
    }
}

fn train_model(a: TrainModelArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let triples_path = s.input("triples", a.triples)?;
    let vocab = s.input("vocab", a.vocab)?;
    let emb_path = s.opt_input("embeddings", a.embeddings)?;
    let output = s.output("output", a.output)?;
    let table = load_embeddings(&emb_path)?;
    let config = model_config(a.model, s, table.as_ref().map(|t| t.dim))?;
    let params = train_params(a.train, s, c)?;
    let v = Vocabulary::load(&vocab)?;
    let triples: Vec<EncodedTriple> = read_jsonl(&triples_path, TRIPLE_FORMAT, FORMAT_VERSION)?;
    let model = EventCompModel::new(v, config, table.as_ref(), derive_seed(c.seed, "model"))?;
    let out = evcomp::eventcomp::train(&triples, &params, model)?;
    s.record("command", "train-model");
    let manifest = Manifest::new(&out.model, Some(params), s.effective().clone());
    save_checkpoint(&out.model, &manifest, &output)?;
    if let Some(l) = out.epoch_losses.last() {
        info!("final epoch loss {l:.6}");
    }
    Ok(())
}

fn gen_cloze(a: GenClozeArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let corpus = s.input("corpus", a.corpus)?;
    let output = s.output("output", a.output)?;
    let per_doc = cap(s.get("per-doc-cap", a.per_doc_cap, 0usize)?);
    let set = EvalSet::from_scripts(load_corpus(&corpus)?, c.seed, per_doc)?;
    write_jsonl(&output, CLOZE_FORMAT, FORMAT_VERSION, &set.instances)?;
    info!("wrote {} cloze instances", set.instances.len());
    Ok(())
}

/// Everything a predictor borrows from.
struct Loaded {
    set: EvalSet,
    kind: String,
    model: Option<EventCompModel>,
    table: Option<EmbeddingTable>,
    vocab: Option<Vocabulary>,
    aggregation: Aggregation,
}

impl Loaded {
    fn predictor(&self) -> Predictor<'_> {
        match self.kind.as_str() {
            "random" => Predictor::Random,
            "mostfreq" => Predictor::MostFreq,
            "eventword2vec" => Predictor::EventWord2vec {
                table: self.table.as_ref().expect("loaded"),
                vocab: self.vocab.as_ref().expect("loaded"),
                aggregation: self.aggregation,
            },
            _ => Predictor::EventComp {
                model: self.model.as_ref().expect("loaded"),
                aggregation: self.aggregation,
            },
        }
    }
}

fn load_predictor(a: PredictorArgs, s: &mut Settings) -> Outcome<Loaded> {
    let corpus = s.input("corpus", a.corpus)?;
    let cloze = s.input("cloze", a.cloze)?;
    let kind = s
        .opt::<String>("model", a.model)?
        .ok_or_else(|| Failure::Usage("missing required --model".into()))?;
    let aggregation = parse_aggregation(s, a.aggregation)?;
    let force = s.switch("force", a.force)?;
    let mut loaded = Loaded {
        set: EvalSet::default(),
        kind: kind.clone(),
        model: None,
        table: None,
        vocab: None,
        aggregation,
    };
    match kind.as_str() {
        "random" | "mostfreq" => {}
        "eventword2vec" => {
            let emb = s.input("embeddings", a.embeddings)?;
            let vocab = s.input("vocab", a.vocab)?;
            loaded.table = Some(EmbeddingTable::load(&emb)?);
            loaded.vocab = Some(Vocabulary::load(&vocab)?);
        }
        path => {
            let path = Path::new(path);
            if !path.exists() {
                return Err(Failure::Data(format!(
                    "model {} is neither a baseline name nor an existing checkpoint",
                    path.display()
                )));
            }
            let vocab = Vocabulary::load(&s.input("vocab", a.vocab)?)?;
            loaded.model = Some(load_checkpoint(path, &vocab, force)?.0);
        }
    }
    let scripts = load_corpus(&corpus)?;
    let instances: Vec<ClozeInstance> = read_jsonl(&cloze, CLOZE_FORMAT, FORMAT_VERSION)?;
    loaded.set = EvalSet::new(scripts, instances)?;
    Ok(loaded)
}

fn predict(a: PredictArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let loaded = load_predictor(a.predictor, s)?;
    let output = s.output("output", a.output)?;
    let predictor = loaded.predictor();
    let (_, preds) = evaluate(&loaded.set, &predictor, &mut seeded(derive_seed(c.seed, "predict")), c.workers)?;
    write_predictions(&output, &preds, predictor.tag())?;
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let loaded = load_predictor(a.predictor, s)?;
    let output = s.output("output", a.output)?;
    let preds_path = s.opt_path("predictions", a.predictions);
    let plot = s.opt_path("emit-plot-data", a.emit_plot_data);
    let predictor = loaded.predictor();
    let (mut report, preds) = evaluate(&loaded.set, &predictor, &mut seeded(derive_seed(c.seed, "predict")), c.workers)?;
    report.config.seed = c.seed;
    s.record("command", "evaluate");
    report.config.extra = s.effective().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    write_report(&output, &report)?;
    if let Some(p) = preds_path {
        write_predictions(&p, &preds, predictor.tag())?;
    }
    if let Some(p) = plot {
        let csv = report.plot_csv();
        atomic_write(&p, |w| Ok(w.write_all(csv.as_bytes())?))?;
    }
    info!("{} accuracy {:.4} over {} instances", report.model_tag, report.accuracy, report.n_instances);
    Ok(())
}

fn ablate(a: AblateArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let triples_path = s.input("triples", a.triples)?;
    let vocab = s.input("vocab", a.vocab)?;
    let emb_path = s.opt_input("embeddings", a.embeddings)?;
    let corpus = s.input("corpus", a.corpus)?;
    let cloze = s.input("cloze", a.cloze)?;
    let output = s.output("output", a.output)?;
    let model_dir = s.opt_path("model-dir", a.model_dir);
    let groups_text = s.get("groups", a.groups, "mentions,head_count,1st_loc".to_string())?;
    let groups = groups_text
        .split(',')
        .filter(|g| !g.trim().is_empty())
        .map(|g| g.trim().parse::<SalienceGroup>())
        .collect::<Result<Vec<_>, _>>()?;
    let aggregation = parse_aggregation(s, a.aggregation)?;
    let table = load_embeddings(&emb_path)?;
    let base = model_config(a.model, s, table.as_ref().map(|t| t.dim))?;
    let train = train_params(a.train, s, c)?;
    let v = Vocabulary::load(&vocab)?;
    let triples: Vec<EncodedTriple> = read_jsonl(&triples_path, TRIPLE_FORMAT, FORMAT_VERSION)?;
    let instances: Vec<ClozeInstance> = read_jsonl(&cloze, CLOZE_FORMAT, FORMAT_VERSION)?;
    let eval = EvalSet::new(load_corpus(&corpus)?, instances)?;
    let setup = AblationSetup {
        vocab: &v,
        base,
        init: table.as_ref(),
        train: train.clone(),
        model_seed: derive_seed(c.seed, "model"),
        aggregation,
        workers: c.workers,
    };
    let rows = ablation_run(&setup, &ablation_masks(&groups), &triples, &eval)?;
    s.record("command", "ablate");
    if let Some(dir) = model_dir {
        std::fs::create_dir_all(&dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
        for r in &rows {
            let mut settings = s.effective().clone();
            settings.insert("ablation".into(), r.label.clone());
            settings.insert("salience".into(), r.mask.to_string());
            let name = r.label.replace(' ', "_").trim_start_matches('-').to_string();
            let manifest = Manifest::new(&r.model, Some(train.clone()), settings);
            save_checkpoint(&r.model, &manifest, &dir.join(format!("{name}.bin")))?;
        }
    }
    let mut text = String::new();
    for (k, v) in s.effective() {
        text.push_str(&format!("# {k}={v}\n"));
    }
    text.push_str(&ablation_table(&rows));
    atomic_write(&output, |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(())
}

fn gc_inputs(a: GcInputArgs, s: &mut Settings) -> Outcome<Vec<GcInstance>> {
    let input = s.input("input", a.input)?;
    let mappings = match s.opt_input("mappings", a.mappings)? {
        Some(p) => MappingTable::load(&p)?,
        None => MappingTable::builtin(),
    };
    let records: Vec<GcRecord> = read_jsonl(&input, GC_FORMAT, GC_VERSION)?;
    let instances = records
        .iter()
        .map(|r| convert_instance(r, &mappings))
        .collect::<Result<Vec<_>, _>>()?;
    info!("converted {} instances", instances.len());
    Ok(instances)
}

fn gc_convert(a: GcConvertArgs, s: &mut Settings) -> Outcome<()> {
    let instances = gc_inputs(a.gc, s)?;
    let output = s.output("output", a.output)?;
    let summaries: Vec<_> = instances.iter().map(GcInstance::summary).collect();
    write_jsonl(&output, CONVERTED_FORMAT, GC_VERSION, &summaries)?;
    Ok(())
}

fn fnf_params(a: FnfArgs, s: &mut Settings, c: &Common) -> Outcome<FnfParams> {
    let d = FnfParams::default();
    Ok(FnfParams {
        l2: s.get("fnf-l2", a.fnf_l2, d.l2)?,
        epochs: s.get("fnf-epochs", a.fnf_epochs, d.epochs)?,
        learning_rate: s.get("fnf-lr", a.fnf_lr, d.learning_rate)?,
        seed: derive_seed(c.seed, "fnf"),
    })
}

fn gc_train_fnf(a: GcTrainFnfArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let instances = gc_inputs(a.gc, s)?;
    let output = s.output("output", a.output)?;
    let params = fnf_params(a.fnf, s, c)?;
    let mut examples = Vec::new();
    for inst in &instances {
        examples.extend(fnf_examples(inst)?);
    }
    let model = train_fillnofill(&examples, &params)?;
    model.save(&output)?;
    info!("fill/no-fill model with {} features", model.features.len());
    Ok(())
}

fn gc_evaluate(a: GcEvaluateArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let instances = gc_inputs(a.gc, s)?;
    let model_path = s.input("model", a.model)?;
    let vocab = Vocabulary::load(&s.input("vocab", a.vocab)?)?;
    let force = s.switch("force", a.force)?;
    let fnf_path = s.opt_input("fnf", a.fnf)?;
    let output = s.output("output", a.output)?;
    let opts = MultiArgOptions {
        threshold: s.get("threshold", a.threshold, 0.5)?,
        aggregation: parse_aggregation(s, a.aggregation)?,
        exclusive: s.switch("exclusive", a.exclusive)?,
    };
    let (model, _) = load_checkpoint(&model_path, &vocab, force)?;
    let (report, _) = match fnf_path {
        Some(p) => evaluate_with(&instances, &model, &FillNoFillModel::load(&p)?, &opts)?,
        None => {
            let params = fnf_params(a.fnf_params, s, c)?;
            cross_validate(&instances, &model, &params, &opts)?
        }
    };
    s.record("command", "gc-evaluate");
    if output.extension().is_some_and(|e| e == "json") {
        let doc = serde_json::json!({ "config": s.effective(), "report": report });
        atomic_write(&output, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc)?;
            writeln!(w)?;
            Ok(())
        })?;
    } else {
        let mut text = String::new();
        for (k, v) in s.effective() {
            text.push_str(&format!("# {k}={v}\n"));
        }
        text.push_str(&report.to_tsv());
        atomic_write(&output, |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    info!(
        "P {:.2} R {:.2} F1 {:.2}",
        100.0 * report.overall.precision,
        100.0 * report.overall.recall,
        100.0 * report.overall.f1
    );
    Ok(())
}

fn gradient_check_cmd(a: GradientCheckArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let models = s.get("models", a.models, 10usize)?;
    let batch = s.get("batch", a.batch, 3usize)?;
    let step = s.get("step", a.step, 1e-5)?;
    let tolerance = s.get("tolerance", a.tolerance, 1e-4)?;
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for m in 0..models {
        let seed = derive_seed(c.seed, &format!("gradcheck:{m}"));
        let (model, triples) = random_model(seed, batch)?;
        let report = gradient_check(&model, &triples, 0.01, step, tolerance)?;
        let _ = writeln!(out, "model {m}: {report}");
        failed += usize::from(!report.passed());
    }
    if failed > 0 {
        return Err(Failure::Numeric(format!("{failed} of {models} models failed the gradient check")));
    }
    Ok(())
}

/// A small random model and `batch` triples drawn from random scripts.
fn random_model(seed: u64, batch: usize) -> Outcome<(EventCompModel, Vec<EncodedTriple>)> {
    let mut rng = seeded(seed);
    let scripts: Vec<Script> = (0..20).map(|i| random_script(&mut rng, &format!("r{i}"))).collect();
    let v = build_vocabulary(&scripts, 1, 4)?;
    let mut triples = build_triples(&scripts, &v, &TripleOptions { multi_arg: true, ..Default::default() }, seed);
    if triples.len() < batch {
        return Err(Failure::Data(format!("only {} triples for a batch of {batch}", triples.len())));
    }
    triples.truncate(batch);
    let config = ModelConfig {
        dims: ModelDims {
            emb_dim: 6,
            arg_hidden: 8,
            event_dim: 5,
            pair_hidden: 7,
            pair_hidden2: 4,
        },
        ..ModelConfig::default()
    };
    Ok((EventCompModel::new(v, config, None, seed)?, triples))
}

fn toy_world(a: ToyWorldArgs, s: &mut Settings, c: &Common) -> Outcome<()> {
    let kind_text = s
        .opt::<String>("kind", a.kind)?
        .ok_or_else(|| Failure::Usage("missing required --kind (selectional or salience)".into()))?;
    let kind = ToyKind::parse(&kind_text).ok_or_else(|| Failure::Usage(format!("unknown toy world {kind_text:?}")))?;
    let mut config = ToyConfig::for_kind(kind);
    config.scripts = s.get("scripts", a.scripts, config.scripts)?;
    let output = s.output("output", a.output)?;
    let heldout = s.opt_path("heldout", a.heldout);
    let scripts = generate(kind, &config, c.seed);
    match heldout {
        Some(h) => {
            let (train, held) = split(scripts);
            write_corpus(&output, &train)?;
            write_corpus(&h, &held)?;
        }
        None => write_corpus(&output, &scripts)?,
    }
    Ok(())
}

