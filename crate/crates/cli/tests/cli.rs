use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

#[path = "../../core/tests/support/stub.rs"]
mod stub;

fn dialeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialeval"))
        .args(args)
        .env_remove("DIALEVAL_ENDPOINT")
        .env_remove("DIALEVAL_SCORER")
        .env_remove("DIALEVAL_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dialeval(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn taskoriented_fixture(dir: &Path, n: usize) -> PathBuf {
    let mut text = String::new();
    for i in 0..n {
        let rec = json!({
            "dialog_id": format!("mwz-{i:03}"),
            "turns": [
                {"speaker": "user", "text": "I would like an expensive chinese restaurant."},
                {"speaker": "system", "text": "sure, which area do you prefer ?",
                 "belief": {"restaurant": {"food": "chinese", "pricerange": "expensive"}}},
                {"speaker": "user", "text": "Bellevue downtown."},
                {"speaker": "system", "text": format!("peony kitchen is a great chinese restaurant, call {i}."),
                 "database": "restaurant 2 matches"}
            ],
            "goal": {"domain": "restaurant", "constraints": {"food": "chinese"},
                     "requested": ["phone"], "gold_entities": ["peony kitchen"]}
        });
        text.push_str(&rec.to_string());
        text.push('\n');
    }
    let path = dir.join("raw.jsonl");
    fs::write(&path, text).unwrap();
    path
}

fn db_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("db.json");
    let db = json!({"restaurant": [
        {"name": "peony kitchen", "slots": {"food": "chinese", "phone": "4255550101"}},
        {"name": "golden wok", "slots": {"food": "chinese", "phone": "4255550199"}}
    ]});
    fs::write(&path, db.to_string()).unwrap();
    path
}

fn ingest(dir: &Path, n: usize) -> PathBuf {
    let raw = taskoriented_fixture(dir, n);
    let out = dir.join("ingested");
    ok(&["ingest", "--adapter", "taskoriented", "--in", p(&raw), "--out", p(&out)]);
    out.join("corpus.jsonl")
}

/// Identity outputs: every hypothesis is the gold response.
fn identity_outputs(corpus: &Path, path: &Path) {
    let mut text = String::new();
    for d in read_jsonl(corpus) {
        let turns = d["turns"].as_array().unwrap();
        for (i, t) in turns.iter().enumerate() {
            if t["speaker"] == "system" && i > 0 {
                let o = json!({
                    "instance_id": format!("{}:{i}", d["dialog_id"].as_str().unwrap()),
                    "hypothesis": t["text"],
                    "reference": t["text"],
                    "knowledge": ["peony kitchen is a great chinese restaurant"],
                });
                text.push_str(&o.to_string());
                text.push('\n');
            }
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn ingest_writes_corpus_report_and_manifest() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 3);
    let out = corpus.parent().unwrap();
    assert_eq!(read_jsonl(&corpus).len(), 3);
    assert_eq!(fs::read_to_string(out.join("violations.jsonl")).unwrap(), "");
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "ingest");
    assert_eq!(manifest["inputs"]["in"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"]["corpus.jsonl"].is_string());
}

#[test]
fn malformed_input_exits_2_naming_the_record() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("bad.jsonl");
    fs::write(&raw, "{\"dialog_id\": \"a\", \"turns\": []}\n{\"dialog_id\": \"b\"}\n").unwrap();
    let out = dialeval(&["ingest", "--adapter", "taskoriented", "--in", p(&raw), "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("record 1"), "{stderr}");
}

#[test]
fn ingest_with_filter_prints_stats() {
    let dir = TempDir::new().unwrap();
    let raw = taskoriented_fixture(dir.path(), 4);
    let policy = dir.path().join("policy.toml");
    fs::write(&policy, "block_words = [\"call 2\"]\nmax_turn_chars = 500\n").unwrap();
    let out = dir.path().join("o");
    let stdout = ok(&["ingest", "--adapter", "taskoriented", "--in", p(&raw), "--out", p(&out), "--filter", p(&policy)]);
    assert!(stdout.contains("block word"), "{stdout}");
    let stats: Value = serde_json::from_str(&fs::read_to_string(out.join("filter_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["block_word"], 1);
    assert_eq!(stats["kept_dialogs"], 3);
    assert_eq!(read_jsonl(&out.join("corpus.jsonl")).len(), 3);
}

#[test]
fn sample_is_deterministic_and_checks_k() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 20);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["sample", "--corpus", p(&corpus), "--k", "5", "--seed", "11", "--out", p(&a)]);
    ok(&["sample", "--corpus", p(&corpus), "--k", "5", "--seed", "11", "--out", p(&b)]);
    let sa = fs::read(a.join("corpus.jsonl")).unwrap();
    assert_eq!(sa, fs::read(b.join("corpus.jsonl")).unwrap());
    assert_eq!(read_jsonl(&a.join("corpus.jsonl")).len(), 5);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["sample"], 11);

    let out = dialeval(&["sample", "--corpus", p(&corpus), "--k", "21", "--out", p(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 20);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 11\nk = 5\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["--config", p(&cfg), "sample", "--corpus", p(&corpus), "--out", p(&a)]);
    ok(&["sample", "--corpus", p(&corpus), "--k", "5", "--seed", "11", "--out", p(&b)]);
    assert_eq!(fs::read(a.join("corpus.jsonl")).unwrap(), fs::read(b.join("corpus.jsonl")).unwrap());
    let c = dir.path().join("c");
    ok(&["--config", p(&cfg), "sample", "--corpus", p(&corpus), "--k", "3", "--out", p(&c)]);
    assert_eq!(read_jsonl(&c.join("corpus.jsonl")).len(), 3);

    fs::write(&cfg, "sede = 1\n").unwrap();
    let out = dialeval(&["--config", p(&cfg), "sample", "--corpus", p(&corpus), "--out", p(&c)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn serialize_writes_one_line_per_instance() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 2);
    let out = dir.path().join("s");
    ok(&["serialize", "--corpus", p(&corpus), "--out", p(&out)]);
    let train = fs::read_to_string(out.join("train.txt")).unwrap();
    let ids = fs::read_to_string(out.join("ids.txt")).unwrap();
    assert_eq!(train.lines().count(), 4);
    assert_eq!(ids.lines().collect::<Vec<_>>(), ["mwz-000:1", "mwz-000:3", "mwz-001:1", "mwz-001:3"]);
    assert!(train.lines().next().unwrap().starts_with("User : I would like"));
    assert!(train.contains("<|environment|> restaurant food=chinese pricerange=expensive =>"), "{train}");
}

#[test]
fn combined_reproduces_table_arithmetic() {
    let out = ok(&["combined", "--inform", "60.60", "--success", "22.50", "--bleu", "4.31"]);
    assert_eq!(out.trim(), "45.86");
    let bad = dialeval(&["combined", "--inform", "160", "--success", "1", "--bleu", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evaluate_identity_outputs_scores_one() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 4);
    let outputs = dir.path().join("outputs.jsonl");
    identity_outputs(&corpus, &outputs);
    let db = db_fixture(dir.path());
    let out = dir.path().join("e");
    let stdout = ok(&["evaluate", "--outputs", p(&outputs), "--corpus", p(&corpus), "--db", p(&db), "--out", p(&out)]);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for m in ["bleu", "f1", "chrf", "inform"] {
        assert_eq!(report["corpus"][m], 1.0, "{m}");
    }
    // the gold responses never give the requested phone number
    assert_eq!(report["corpus"]["success"], 0.0);
    assert!(stdout.contains("Combined"), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("system") && l.contains("100.00")));
}

#[test]
fn evaluate_against_baseline_emits_p_values() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 6);
    let good = dir.path().join("good.jsonl");
    identity_outputs(&corpus, &good);
    let bad = dir.path().join("bad.jsonl");
    let degraded: String = read_jsonl(&good)
        .into_iter()
        .map(|mut o| {
            o["hypothesis"] = json!("i am not sure about that");
            o.to_string() + "\n"
        })
        .collect();
    fs::write(&bad, degraded).unwrap();
    let out = dir.path().join("e");
    ok(&[
        "evaluate", "--outputs", p(&good), "--corpus", p(&corpus), "--baseline", p(&bad), "--resamples", "200",
        "--seed", "3", "--out", p(&out),
    ]);
    let cmp: Value = serde_json::from_str(&fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["paired"], 12);
    assert!(cmp["ttest"]["f1"]["p"].as_f64().unwrap() < 0.05);
    assert!(cmp["bootstrap"]["bleu"]["p"].as_f64().unwrap() < 0.05);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["bootstrap"], 3);
}

/// Replies with the last context turn, reversed word by word.
fn echo_stub() -> stub::Stub {
    stub::serve(|body| {
        let v: Value = serde_json::from_str(body).unwrap();
        let last = v["instance"]["context"].as_array().unwrap().last().unwrap()["text"]
            .as_str()
            .unwrap()
            .split_whitespace()
            .rev()
            .collect::<Vec<_>>()
            .join(" ");
        (200, json!({"text": last, "model_tag": "echo"}).to_string())
    })
}

#[test]
fn generate_against_stub_then_evaluate() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 3);
    let endpoint = echo_stub();
    let out = dir.path().join("g");
    ok(&["generate", "--corpus", p(&corpus), "--endpoint", &endpoint.url, "--out", p(&out)]);
    let outs = read_jsonl(&out.join("outputs.jsonl"));
    assert_eq!(outs.len(), 6);
    assert_eq!(outs[0]["hypothesis"], "restaurant. chinese expensive an like would I");
    assert_eq!(outs[0]["reference"], "sure, which area do you prefer ?");
    let e = dir.path().join("e");
    ok(&["evaluate", "--outputs", p(&out.join("outputs.jsonl")), "--corpus", p(&corpus), "--out", p(&e)]);
}

#[test]
fn generate_exits_3_when_service_is_down() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 1);
    // bind then drop to find a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let out = dialeval(&[
        "generate", "--corpus", p(&corpus), "--endpoint", &format!("http://127.0.0.1:{port}/g"), "--retries", "0",
        "--out", p(&dir.path().join("g")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let missing = dialeval(&["generate", "--corpus", p(&corpus), "--out", p(&dir.path().join("g"))]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn evaluate_survives_unreachable_scorer() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 2);
    let outputs = dir.path().join("outputs.jsonl");
    identity_outputs(&corpus, &outputs);
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let out = dialeval(&[
        "evaluate", "--outputs", p(&outputs), "--corpus", p(&corpus), "--scorer",
        &format!("http://127.0.0.1:{port}/score"), "--out", p(&dir.path().join("e")),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scorer skipped"));
}

fn write_ratings(path: &Path, rows: &[(&str, &str, &str, f64)]) {
    let text: String = rows
        .iter()
        .map(|(task, rater, q, r)| {
            json!({"task_id": task, "rater_id": rater, "question": q, "rating": r}).to_string() + "\n"
        })
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn build_tasks_then_analyze() {
    let dir = TempDir::new().unwrap();
    let corpus = ingest(dir.path(), 3);
    let a = dir.path().join("a.jsonl");
    identity_outputs(&corpus, &a);
    let b = dir.path().join("b.jsonl");
    let other: String = read_jsonl(&a)
        .into_iter()
        .map(|mut o| {
            o["hypothesis"] = json!("no idea");
            o.to_string() + "\n"
        })
        .collect();
    fs::write(&b, other).unwrap();
    let t = dir.path().join("t");
    ok(&["build-tasks", "--corpus", p(&corpus), "--system-a", p(&a), "--system-b", p(&b), "--seed", "5", "--out", p(&t)]);
    let tasks = read_jsonl(&t.join("tasks.jsonl"));
    let keys = read_jsonl(&t.join("keys.jsonl"));
    assert_eq!(tasks.len(), 6);
    assert!(tasks[0].get("instance_id").is_none(), "payloads are blind");

    // two raters who always prefer system A, whichever side it is on
    let mut rows = Vec::new();
    for k in &keys {
        let r = if k["left"] == "A" { 1.0 } else { 5.0 };
        for rater in ["r1", "r2"] {
            for q in ["extrinsic", "intrinsic", "safety"] {
                rows.push((k["task_id"].as_str().unwrap().to_owned(), rater, q, r));
            }
        }
    }
    let rows: Vec<(&str, &str, &str, f64)> = rows.iter().map(|(t, a, b, c)| (t.as_str(), *a, *b, *c)).collect();
    let ratings = dir.path().join("ratings.jsonl");
    write_ratings(&ratings, &rows);

    let out = dir.path().join("an");
    let eval = dir.path().join("e");
    ok(&["evaluate", "--outputs", p(&a), "--corpus", p(&corpus), "--out", p(&eval)]);
    let stdout = ok(&[
        "analyze", "--ratings", p(&ratings), "--keys", p(&t.join("keys.jsonl")), "--report",
        p(&eval.join("report.json")), "--out", p(&out),
    ]);
    let analysis: Value = serde_json::from_str(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(analysis["wtl"]["extrinsic"]["win"], 12);
    assert!(stdout.contains("Dataset"));
    assert!(stdout.contains("100.00"));
}

#[test]
fn analyze_perfect_agreement_and_small_overlap() {
    let dir = TempDir::new().unwrap();
    let ratings = dir.path().join("ratings.jsonl");
    write_ratings(
        &ratings,
        &[
            ("t1", "r1", "extrinsic", 2.0),
            ("t1", "r2", "extrinsic", 2.0),
            ("t2", "r1", "extrinsic", 4.0),
            ("t2", "r2", "extrinsic", 4.0),
        ],
    );
    let out = dir.path().join("an");
    let stdout = ok(&["analyze", "--ratings", p(&ratings), "--out", p(&out)]);
    let row = stdout.lines().find(|l| l.starts_with("ratings")).unwrap();
    assert!(row.contains("1.000"), "{stdout}");

    let keys = dir.path().join("keys.jsonl");
    fs::write(
        &keys,
        "{\"task_id\":\"t1\",\"instance_id\":\"x:1\",\"left\":\"A\"}\n{\"task_id\":\"t2\",\"instance_id\":\"y:1\",\"left\":\"B\"}\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    fs::write(
        &report,
        json!({"per_example": {"x:1": {"f1": 0.5}, "y:1": {"f1": 0.2}}, "corpus": {}, "scale": "fraction"}).to_string(),
    )
    .unwrap();
    let res = dialeval(&["analyze", "--ratings", p(&ratings), "--keys", p(&keys), "--report", p(&report), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("overlapping"));
}

#[test]
fn report_prints_side_by_side_tables() {
    let dir = TempDir::new().unwrap();
    let r = dir.path().join("r.json");
    fs::write(
        &r,
        json!({"per_example": {}, "corpus": {"bleu": 0.1281, "inform": 0.676, "success": 0.461, "combined": 0.6966, "f1": 0.4}, "scale": "fraction"}).to_string(),
    )
    .unwrap();
    let arg = format!("godel={}", p(&r));
    let stdout = ok(&["report", &arg]);
    assert!(stdout.contains("Model   BLEU  Inform  Success  Combined"), "{stdout}");
    assert!(stdout.contains("godel  12.81   67.60    46.10     69.66"), "{stdout}");
}
