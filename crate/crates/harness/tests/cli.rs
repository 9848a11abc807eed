mod support;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lfa::manifest::manifest_bytes;
use serde_json::Value;

fn lfa(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfa")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = lfa(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_record(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).unwrap()
}

fn toy(dir: &Path) {
    fs::write(dir.join("toy.jsonl"), manifest_bytes(&support::toy_corpus())).unwrap();
}

#[test]
fn trials_on_toy_corpus_are_clean() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    ok(&["trials", "--corpus", "toy.jsonl", "--policy", "hard", "--seed", "7", "--out", "tr"], dir.path());
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("tr/validation.json")).unwrap()).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    let header: Value =
        serde_json::from_str(fs::read_to_string(dir.path().join("tr/trials.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(header["counts"]["positives"], 2);
    assert_eq!(header["counts"]["negatives"], 2);
    assert_eq!(header["reference_counts"]["total"], 1944);
    let runs = fs::read_to_string(dir.path().join("tr/runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 1);
    assert!(!dir.path().join("tr/.lfa.lock").exists());
}

#[test]
fn content_attack_writes_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth-corpus", "--speakers", "6", "--convs-per-speaker", "2", "--topics", "3", "--utts-per-conv", "16", "--pool-size", "8", "--seed", "3", "--out", "syn"], d);
    ok(&["trials", "--corpus", "syn/corpus.jsonl", "--seed", "3", "--out", "tr"], d);
    ok(&["attack", "--corpus", "syn/corpus.jsonl", "--trials", "tr/trials.jsonl", "--channel", "content", "--ks", "1,2,4,8,16,32,64", "--out", "at"], d);
    let csv = fs::read_to_string(d.join("at/attack_content.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,eer,n_pos,n_neg");
    assert_eq!(lines.len(), 8);
    let ks: Vec<usize> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ks, [1, 2, 4, 8, 16, 32, 64]);
}

#[test]
fn full_pipeline_through_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth-corpus", "--speakers", "6", "--convs-per-speaker", "2", "--topics", "3", "--utts-per-conv", "12", "--pool-size", "8", "--seed", "4", "--out", "syn"], d);
    ok(&["trials", "--corpus", "syn/corpus.jsonl", "--seed", "4", "--max-negatives", "6", "--out", "tr"], d);
    ok(&["anonymize", "--corpus", "syn/corpus.jsonl", "--trials", "tr/trials.jsonl", "--pool", "syn/pool.jsonl", "--strategy", "voice_and_content", "--seed", "4", "--out", "an"], d);
    for name in ["anonymized.jsonl", "alignments.jsonl", "pseudo_speakers.json"] {
        assert!(d.join("an").join(name).exists(), "{name}");
    }
    ok(&["utility", "--original", "syn/corpus.jsonl", "--anonymized", "an/anonymized.jsonl", "--system", "mock", "--out", "ut"], d);
    let csv = fs::read_to_string(d.join("ut/utility.csv")).unwrap();
    assert!(csv.starts_with("conv_id,gas,dtw_sim,mean_utt_len,naturalness\n"));
    ok(&["detect", "--original", "syn/corpus.jsonl", "--anonymized", "an/anonymized.jsonl", "--detector", "text", "--ks", "1,4", "--out", "dt"], d);
    let det = fs::read_to_string(d.join("dt/detect_text.csv")).unwrap();
    assert!(det.lines().skip(1).all(|l| l.ends_with(",text")));
    let table = ok(&["report", "ut/results.jsonl"], d);
    assert!(table.contains("mock"));
    assert!(table.contains("UTMOS:"));
}

#[test]
fn report_renders_paraphraser_table() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/paraphraser_records.jsonl");
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["report", fixture.to_str().unwrap(), "--out", "rep"], dir.path());
    assert!(out.contains("GPT5             0.699    0.739            5.55"), "{out}");
    assert!(out.ends_with("UTMOS: 3.14 anonymized vs 2.09 original\n"));
    assert_eq!(fs::read_to_string(dir.path().join("rep/table.txt")).unwrap(), out);
}

#[test]
fn errors_carry_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    fs::write(d.join("bad.jsonl"), "{\"id\":\"c\",\"speaker\":\"s\",\"utterances\":[]}\n").unwrap();
    let out = lfa(&["ingest", "bad.jsonl", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "config");
    assert!(rec["message"].as_str().unwrap().contains("topic"));

    let single = lfa::manifest::records_bytes([serde_json::json!({
        "id": "c", "speaker": "s", "topic": "t", "utterances": [{"index": 0, "text": "hi"}]
    }), serde_json::json!({
        "id": "d", "speaker": "r", "topic": "t", "utterances": [{"index": 0, "text": "hi"}]
    })]);
    fs::write(d.join("one.jsonl"), single).unwrap();
    let out = lfa(&["trials", "--corpus", "one.jsonl", "--out", "y"], d);
    assert_eq!(out.status.code(), Some(4));

    toy(d);
    ok(&["trials", "--corpus", "toy.jsonl", "--out", "tr"], d);
    let out = Command::new(env!("CARGO_BIN_EXE_lfa"))
        .args(["anonymize", "--corpus", "toy.jsonl", "--trials", "tr/trials.jsonl", "--strategy", "content_only", "--no-cache", "--out", "an"])
        .env("LFA_ASR_URL", "http://127.0.0.1:9")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"], "backend");

    let out = lfa(&["anonymize", "--corpus", "toy.jsonl", "--trials", "tr/trials.jsonl", "--strategy", "audio_only", "--out", "an2"], d);
    assert_eq!(out.status.code(), Some(2), "audio_only without a pool");

    let out = lfa(&["attack", "--corpus", "toy.jsonl", "--trials", "tr/trials.jsonl", "--channel", "smell", "--out", "z"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    fs::create_dir(dir.path().join("tr")).unwrap();
    fs::write(dir.path().join("tr/.lfa.lock"), "1").unwrap();
    let out = lfa(&["trials", "--corpus", "toy.jsonl", "--out", "tr"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("locked"));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d);
    fs::write(d.join("lfa.toml"), "seed = 11\ncontext_size = 2\n[policy]\nconserve_fraction = 1.0\n").unwrap();
    ok(&["trials", "--config", "lfa.toml", "--corpus", "toy.jsonl", "--out", "tr"], d);
    ok(&["anonymize", "--config", "lfa.toml", "--seed", "12", "--corpus", "toy.jsonl", "--trials", "tr/trials.jsonl", "--strategy", "content_only", "--out", "an"], d);
    let run: Value = serde_json::from_str(fs::read_to_string(d.join("an/runs.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(run["seed"], 12);
    assert_eq!(run["config"]["context_size"], 2);
    assert_eq!(run["decisions"]["context_source"], "original");
    assert_eq!(run["decisions"]["dtw_normalization"], "optimal-path-length");
    assert!(run["backends"]["paraphraser"]["backend_id"].as_str().unwrap().len() == 16);
    let outputs: Vec<&str> = run["outputs"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert!(outputs.iter().any(|p| p.ends_with("anonymized.jsonl")));

    fs::write(d.join("broken.toml"), "seed = \"many\"\n").unwrap();
    let out = lfa(&["trials", "--config", "broken.toml", "--corpus", "toy.jsonl", "--out", "tr2"], d);
    assert_eq!(out.status.code(), Some(2));
}
