mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clap::error::ErrorKind;

use config::Settings;

/// Event composition models for implicit argument prediction.
#[derive(Parser, Debug)]
#[command(name = "evcomp", version, about)]
pub struct Cli {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: 1, fully deterministic].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate and normalize a raw document corpus.
    Ingest(IngestArgs),
    /// Build the role-lemma vocabulary.
    Vocab(VocabArgs),
    /// Write one event pseudo-sentence per document.
    Sentences(SentencesArgs),
    /// Train skip-gram embeddings on event pseudo-sentences.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Generate encoded training triples.
    GenTriples(GenTriplesArgs),
    /// Train the event composition model.
    TrainModel(TrainModelArgs),
    /// Generate argument cloze instances.
    GenCloze(GenClozeArgs),
    /// Write per-instance predictions.
    Predict(PredictArgs),
    /// Score a predictor on cloze instances.
    Evaluate(EvaluateArgs),
    /// Train and evaluate one model per salience ablation.
    Ablate(AblateArgs),
    /// Convert annotated nominal predicates into events with open roles.
    GcConvert(GcConvertArgs),
    /// Train the fill/no-fill classifier.
    GcTrainFnf(GcTrainFnfArgs),
    /// Precision/recall/F1 of implicit argument filling.
    GcEvaluate(GcEvaluateArgs),
    /// Compare analytic and numeric gradients on random models.
    GradientCheck(GradientCheckArgs),
    /// Write a synthetic corpus.
    ToyWorld(ToyWorldArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Raw documents, one JSON record per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Normalized corpus.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Drop malformed lines with a warning instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Args, Debug)]
pub struct VocabArgs {
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Vocabulary file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Keep verb and argument tokens seen at least this often [default: 1].
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Number of prepositions kept as distinct roles [default: 10].
    #[arg(long)]
    pub prep_top_k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SentencesArgs {
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Vocabulary file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// One pseudo-sentence per line.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Events of verbs counted above this are down-sampled [default: 100000].
    #[arg(long)]
    pub downsample_threshold: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SgnsArgs {
    /// [default: 300]
    #[arg(long)]
    pub dim: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub window: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Sub-sampling threshold t [default: 0.0001].
    #[arg(long)]
    pub subsample: Option<f64>,
    /// [default: 5]
    #[arg(long)]
    pub sgns_epochs: Option<usize>,
    /// Initial learning rate, decayed linearly [default: 0.025].
    #[arg(long)]
    pub sgns_lr: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainEmbeddingsArgs {
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Vocabulary file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// `.txt` for the text form, anything else binary.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub sgns: SgnsArgs,
}

#[derive(Args, Debug)]
pub struct GenTriplesArgs {
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Vocabulary file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Triples, one JSON object per line.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also emit argument-relocation negatives.
    #[arg(long)]
    pub multi_arg: bool,
    /// [default: 1]
    #[arg(long)]
    pub negatives_per_pair: Option<usize>,
    /// Maximum (context, positive) pairs per document, 0 for no cap [default: 20].
    #[arg(long)]
    pub per_doc_cap: Option<usize>,
    /// [default: 100000]
    #[arg(long)]
    pub downsample_threshold: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Embedding size; taken from --embeddings when given [default: 300].
    #[arg(long)]
    pub emb_dim: Option<usize>,
    /// [default: 600]
    #[arg(long)]
    pub arg_hidden: Option<usize>,
    /// [default: 300]
    #[arg(long)]
    pub event_dim: Option<usize>,
    /// [default: 400]
    #[arg(long)]
    pub pair_hidden: Option<usize>,
    /// [default: 200]
    #[arg(long)]
    pub pair_hidden2: Option<usize>,
    /// tanh or relu [default: tanh].
    #[arg(long)]
    pub activation: Option<String>,
    /// Salience groups to remove: mentions, head_count, 1st_loc, or all.
    #[arg(long)]
    pub ablate: Option<String>,
    /// Feed salience counts without log encoding.
    #[arg(long)]
    pub raw_salience: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 100]
    #[arg(long)]
    pub batch: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 0.01]
    #[arg(long)]
    pub l2: Option<f64>,
    /// Keep the initial embeddings fixed.
    #[arg(long)]
    pub freeze_embeddings: bool,
}

#[derive(Args, Debug)]
pub struct TrainModelArgs {
    /// Training triples.
    #[arg(long)]
    pub triples: Option<PathBuf>,
    /// Vocabulary file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Pretrained embeddings used to initialize the model.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// `.json` for the JSON form, anything else binary.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Args, Debug)]
pub struct GenClozeArgs {
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Cloze instances, one JSON object per line.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Maximum instances per document, 0 for no cap [default: 0].
    #[arg(long)]
    pub per_doc_cap: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictorArgs {
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Cloze instances.
    #[arg(long)]
    pub cloze: Option<PathBuf>,
    /// random, mostfreq, eventword2vec, or a model checkpoint path.
    #[arg(long)]
    pub model: Option<String>,
    /// Vocabulary file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Needed by eventword2vec.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// max or sum [default: max].
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Load a checkpoint even if its vocabulary hash differs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Per-instance predictions, tab-separated.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// `.json` for the structured report, anything else tab-separated.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write per-instance predictions here.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Per-bucket CSV for plotting.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Training triples.
    #[arg(long)]
    pub triples: Option<PathBuf>,
    /// Vocabulary file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Pretrained embeddings.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Normalized corpus, one document per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Cloze instances.
    #[arg(long)]
    pub cloze: Option<PathBuf>,
    /// Groups removed one at a time [default: mentions,head_count,1st_loc].
    #[arg(long)]
    pub groups: Option<String>,
    /// max or sum [default: max].
    #[arg(long)]
    pub aggregation: Option<String>,
    /// One row per ablation configuration.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Save every trained model here, named after its configuration.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Args, Debug)]
pub struct GcInputArgs {
    /// Annotated predicate records.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Nominal-to-verbal mapping table [default: built in].
    #[arg(long)]
    pub mappings: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GcConvertArgs {
    #[command(flatten)]
    pub gc: GcInputArgs,
    /// Converted events with their open roles.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FnfArgs {
    /// [default: 0.001]
    #[arg(long)]
    pub fnf_l2: Option<f64>,
    /// [default: 50]
    #[arg(long)]
    pub fnf_epochs: Option<usize>,
    /// [default: 0.5]
    #[arg(long)]
    pub fnf_lr: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GcTrainFnfArgs {
    #[command(flatten)]
    pub gc: GcInputArgs,
    /// Classifier as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub fnf: FnfArgs,
}

#[derive(Args, Debug)]
pub struct GcEvaluateArgs {
    #[command(flatten)]
    pub gc: GcInputArgs,
    /// Model checkpoint.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Vocabulary the checkpoint was trained with.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Load the checkpoint even if its vocabulary hash differs.
    #[arg(long)]
    pub force: bool,
    /// A trained classifier; without it, leave-one-predicate-out folds.
    #[arg(long)]
    pub fnf: Option<PathBuf>,
    /// Fill when the classifier probability reaches this [default: 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Never give one entity two roles of a predicate.
    #[arg(long)]
    pub exclusive: bool,
    /// max or sum [default: max].
    #[arg(long)]
    pub aggregation: Option<String>,
    /// `.json` for the structured report, anything else tab-separated.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub fnf_params: FnfArgs,
}

#[derive(Args, Debug)]
pub struct GradientCheckArgs {
    /// [default: 10]
    #[arg(long)]
    pub models: Option<usize>,
    /// Triples per batch [default: 3].
    #[arg(long)]
    pub batch: Option<usize>,
    /// Central difference step [default: 0.00001].
    #[arg(long)]
    pub step: Option<f64>,
    /// Largest accepted relative error [default: 0.0001].
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ToyWorldArgs {
    /// selectional or salience.
    #[arg(long)]
    pub kind: Option<String>,
    /// Number of scripts [default: 2000].
    #[arg(long)]
    pub scripts: Option<usize>,
    /// All scripts, or the training part when --heldout is given.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the last fifth of the scripts here.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let settings = match &cli.config {
        Some(p) => Settings::load(p),
        None => Ok(Settings::empty()),
    };
    match settings.and_then(|s| commands::run(cli, s)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("evcomp: error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}

