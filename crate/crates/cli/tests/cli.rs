use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evcomp::fixtures::gc_fixture_records;
use evcomp::gc::{GC_FORMAT, GC_VERSION};
use evcomp::io::write_jsonl;

const SUBCOMMANDS: [&str; 15] = [
    "ingest",
    "vocab",
    "sentences",
    "train-embeddings",
    "gen-triples",
    "train-model",
    "gen-cloze",
    "predict",
    "evaluate",
    "ablate",
    "gc-convert",
    "gc-train-fnf",
    "gc-evaluate",
    "gradient-check",
    "toy-world",
];

const SMALL_MODEL: [&str; 14] = [
    "--emb-dim", "8", "--arg-hidden", "10", "--event-dim", "6", "--pair-hidden", "8", "--pair-hidden2", "4", "--lr",
    "0.1", "--epochs", "2",
];

fn evcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evcomp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = evcomp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    evcomp(args).status.code().expect("exited")
}

struct Work {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Work {
    fn new() -> Work {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Work { _dir: dir, root }
    }

    fn p(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }
}

fn read(p: &str) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

/// Toy corpus, vocabulary, triples, small model and cloze set.
fn pipeline(w: &Work) {
    ok(&["toy-world", "--kind", "selectional", "--scripts", "60", "--seed", "3", "--output", &w.p("train.jsonl"), "--heldout", &w.p("held.jsonl")]);
    ok(&["vocab", "--corpus", &w.p("train.jsonl"), "--output", &w.p("vocab.txt")]);
    ok(&["gen-triples", "--corpus", &w.p("train.jsonl"), "--vocab", &w.p("vocab.txt"), "--output", &w.p("triples.jsonl"), "--seed", "4"]);
    let mut args = vec![
        "train-model",
        "--triples",
        &w.p("triples.jsonl"),
        "--vocab",
        &w.p("vocab.txt"),
        "--output",
        &w.p("model.bin"),
        "--seed",
        "5",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    args.extend(SMALL_MODEL.iter().map(|s| s.to_string()));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    ok(&["gen-cloze", "--corpus", &w.p("held.jsonl"), "--output", &w.p("cloze.jsonl"), "--seed", "6"]);
}

#[test]
fn every_subcommand_has_help() {
    for sub in SUBCOMMANDS {
        let out = ok(&[sub, "--help"]);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("--seed") && text.contains("--config"), "{sub}");
    }
    let text = String::from_utf8(ok(&["train-model", "--help"]).stdout).unwrap();
    for flag in ["--lr", "--batch", "--epochs", "--l2", "--ablate", "--embeddings", "--freeze-embeddings"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn exit_codes() {
    let w = Work::new();
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["vocab", "--bogus"]), 1);
    assert_eq!(code(&["toy-world", "--kind", "selectional"]), 1);
    assert_eq!(code(&["toy-world", "--kind", "weird", "--output", &w.p("x")]), 1);
    assert_eq!(code(&["vocab", "--corpus", &w.p("missing.jsonl"), "--output", &w.p("v.txt")]), 2);
    std::fs::write(w.p("bad.jsonl"), "{\"doc_id\": \"d\", \"events\": [{\"verb\": \"\"}]}\n").unwrap();
    let out = evcomp(&["ingest", "--input", &w.p("bad.jsonl"), "--output", &w.p("out.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().filter(|l| l.starts_with("evcomp: error:")).count(), 1);
    assert!(!Path::new(&w.p("out.jsonl")).exists());
    ok(&["ingest", "--input", &w.p("bad.jsonl"), "--output", &w.p("out.jsonl"), "--skip-invalid"]);
    assert_eq!(code(&["gradient-check", "--models", "1", "--tolerance", "0"]), 3);
}

#[test]
fn gradient_check_passes() {
    let out = ok(&["gradient-check", "--models", "3"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

#[test]
fn ingest_normalizes_the_power_company_document() {
    let w = Work::new();
    let line = serde_json::to_string(&evcomp::fixtures::power_company_record()).unwrap();
    std::fs::write(w.p("raw.jsonl"), format!("{line}\n\n")).unwrap();
    ok(&["ingest", "--input", &w.p("raw.jsonl"), "--output", &w.p("corpus.jsonl")]);
    let scripts = evcomp::corpus::read_corpus(Path::new(&w.p("corpus.jsonl"))).unwrap();
    assert_eq!(scripts, vec![evcomp::fixtures::power_company_script()]);
}

#[test]
fn full_pipeline_is_deterministic() {
    let w = Work::new();
    pipeline(&w);
    let files = ["train.jsonl", "held.jsonl", "vocab.txt", "triples.jsonl", "model.bin", "cloze.jsonl"];
    let first: Vec<Vec<u8>> = files.iter().map(|f| read(&w.p(f))).collect();
    // checkpoints echo their input paths, so rerun in place
    pipeline(&w);
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&read(&w.p(f)), bytes, "{f}");
    }

    ok(&["sentences", "--corpus", &w.p("train.jsonl"), "--vocab", &w.p("vocab.txt"), "--output", &w.p("s.txt")]);
    assert_eq!(String::from_utf8(read(&w.p("s.txt"))).unwrap().lines().count(), 48);
    ok(&["train-embeddings", "--corpus", &w.p("train.jsonl"), "--vocab", &w.p("vocab.txt"), "--output", &w.p("emb.bin"), "--dim", "8", "--sgns-epochs", "1"]);
    ok(&["train-embeddings", "--corpus", &w.p("train.jsonl"), "--vocab", &w.p("vocab.txt"), "--output", &w.p("emb2.bin"), "--dim", "8", "--sgns-epochs", "1"]);
    assert_eq!(read(&w.p("emb.bin")), read(&w.p("emb2.bin")));

    let eval = |model: &str, out: &str| {
        ok(&[
            "evaluate", "--corpus", &w.p("held.jsonl"), "--cloze", &w.p("cloze.jsonl"), "--vocab", &w.p("vocab.txt"),
            "--embeddings", &w.p("emb.bin"), "--model", model, "--output", &w.p(out), "--seed", "7",
        ]);
        String::from_utf8(read(&w.p(out))).unwrap()
    };
    let a = eval("random", "r1.tsv");
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("output\t")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&eval("random", "r2.tsv")));
    assert!(a.contains("model\trandom") && a.contains("seed\t7"));
    assert!(eval("mostfreq", "m.tsv").contains("accuracy\t"));
    assert!(eval("eventword2vec", "w.tsv").contains("model\teventword2vec"));
    let m = eval(&w.p("model.bin"), "e.tsv");
    assert!(m.contains("model\teventcomp") && m.contains("breakdown\tbucket"));

    ok(&[
        "evaluate", "--corpus", &w.p("held.jsonl"), "--cloze", &w.p("cloze.jsonl"), "--vocab", &w.p("vocab.txt"),
        "--model", &w.p("model.bin"), "--output", &w.p("e.json"), "--emit-plot-data", &w.p("plot.csv"),
        "--predictions", &w.p("p.tsv"), "--workers", "3",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&read(&w.p("e.json"))).unwrap();
    assert_eq!(report["model_tag"], "eventcomp");
    assert!(read(&w.p("plot.csv")).len() > 10);

    ok(&[
        "predict", "--corpus", &w.p("held.jsonl"), "--cloze", &w.p("cloze.jsonl"), "--vocab", &w.p("vocab.txt"),
        "--model", &w.p("model.bin"), "--output", &w.p("p1.tsv"),
    ]);
    assert_eq!(read(&w.p("p1.tsv")), read(&w.p("p.tsv")));
}

#[test]
fn config_file_values_are_overridden_and_echoed() {
    let w = Work::new();
    pipeline(&w);
    std::fs::write(w.p("run.conf"), "lr = 0.5\nepochs = 1\nl2 = 0.002\nemb-dim = 8\narg_hidden = 10\n").unwrap();
    ok(&[
        "train-model", "--config", &w.p("run.conf"), "--lr", "0.05", "--triples", &w.p("triples.jsonl"), "--vocab",
        &w.p("vocab.txt"), "--output", &w.p("m.json"), "--event-dim", "6", "--pair-hidden", "8", "--pair-hidden2",
        "4", "--ablate", "head_count",
    ]);
    let ckpt: serde_json::Value = serde_json::from_slice(&read(&w.p("m.json"))).unwrap();
    let m = &ckpt["manifest"];
    assert_eq!(m["train"]["learning_rate"], 0.05);
    assert_eq!(m["train"]["epochs"], 1);
    assert_eq!(m["train"]["l2"], 0.002);
    assert_eq!(m["settings"]["lr"], "0.05");
    assert_eq!(m["settings"]["arg-hidden"], "10");
    assert_eq!(m["settings"]["ablate"], "head_count");
    assert_eq!(m["config"]["mask"]["head_count"], false);
}

#[test]
fn ablation_has_five_rows() {
    let w = Work::new();
    pipeline(&w);
    let mut args: Vec<String> = [
        "ablate", "--triples", &w.p("triples.jsonl"), "--vocab", &w.p("vocab.txt"), "--corpus", &w.p("held.jsonl"),
        "--cloze", &w.p("cloze.jsonl"), "--groups", "mentions,head_count,1st_loc", "--output", &w.p("abl.tsv"),
        "--model-dir", &w.p("models"),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(SMALL_MODEL.iter().map(|s| s.to_string()));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let text = String::from_utf8(read(&w.p("abl.tsv"))).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("no salience") && rows[4].starts_with("all salience"));
    assert_eq!(std::fs::read_dir(w.p("models")).unwrap().count(), 5);
}

#[test]
fn gc_commands() {
    let w = Work::new();
    pipeline(&w);
    write_jsonl(Path::new(&w.p("gc.jsonl")), GC_FORMAT, GC_VERSION, &gc_fixture_records()).unwrap();
    ok(&["gc-convert", "--input", &w.p("gc.jsonl"), "--output", &w.p("conv.jsonl")]);
    let conv = String::from_utf8(read(&w.p("conv.jsonl"))).unwrap();
    assert_eq!(conv.lines().count(), 6);
    assert!(conv.lines().nth(1).unwrap().contains("prep_in"));

    ok(&["gc-train-fnf", "--input", &w.p("gc.jsonl"), "--output", &w.p("fnf.json")]);
    let common = ["--input", &w.p("gc.jsonl"), "--model", &w.p("model.bin"), "--vocab", &w.p("vocab.txt")];
    let mut cv = vec!["gc-evaluate"];
    cv.extend(common.iter().copied());
    let cv_out = w.p("cv.tsv");
    cv.extend(["--output", &cv_out]);
    ok(&cv);
    let text = String::from_utf8(read(&cv_out)).unwrap();
    assert!(text.contains("leave-one-predicate-out"));
    assert!(text.lines().any(|l| l.starts_with("all\t")));

    let mut fixed = vec!["gc-evaluate"];
    fixed.extend(common.iter().copied());
    let fnf = w.p("fnf.json");
    let out = w.p("fixed.json");
    fixed.extend(["--fnf", &fnf, "--output", &out, "--exclusive"]);
    ok(&fixed);
    let report: serde_json::Value = serde_json::from_slice(&read(&out)).unwrap();
    assert_eq!(report["config"]["exclusive"], "true");
    assert_eq!(report["report"]["per_predicate"].as_object().unwrap().len(), 5);
}
