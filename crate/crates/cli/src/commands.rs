use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use dialeval::client::{self, ClientConfig, DecodeConfig};
use dialeval::evaluate::{compare, evaluate};
use dialeval::ingest::{self, AdapterKind, AdapterSchema, FewShotSpec, FilterPolicy, DEFAULT_FEWSHOT_K};
use dialeval::lexical::TokenizationConfig;
use dialeval::model::validate_corpus;
use dialeval::serialize::serialize_instance;
use dialeval::stats::{
    analysis, build_pairwise_tasks, metric_human_correlation, RatingRecord, TaskKey,
    DEFAULT_RESAMPLES,
};
use dialeval::task::{self, EntityDatabase};
use dialeval::{io, tables, Error, MetricReport, SystemOutput};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::config::{pick, FileConfig};
use crate::manifest::ManifestBuilder;
use crate::{
    AnalyzeArgs, BuildTasksArgs, Cli, Command, CombinedArgs, EvaluateArgs, FilterArgs, GenerateArgs, IngestArgs,
    ReportArgs, SampleArgs, SerializeArgs,
};

const CORPUS_FILE: &str = "corpus.jsonl";

/// 3 for an unreachable service, 2 for every other failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let service = e
        .chain()
        .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::ServiceUnreachable { .. })));
    if service {
        3
    } else {
        2
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Sample(a) => cmd_sample(a, &file),
        Command::Serialize(a) => cmd_serialize(a, &file),
        Command::Generate(a) => cmd_generate(a, &file),
        Command::Evaluate(a) => cmd_evaluate(a, &file),
        Command::BuildTasks(a) => cmd_build_tasks(a, &file),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Combined(a) => cmd_combined(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    io::write_string(path, &(serde_json::to_string_pretty(value)? + "\n"))?;
    Ok(())
}

fn print_filter_stats(stats: &ingest::FilterStats) {
    print!("{stats}");
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let kind: AdapterKind = a.adapter.parse()?;
    let schema: AdapterSchema = match &a.schema {
        Some(p) => load_toml(p)?,
        None => AdapterSchema::default(),
    };
    let policy: Option<FilterPolicy> = a.filter.as_deref().map(load_toml).transpose()?;

    let mut m = ManifestBuilder::start("ingest", &a.out, json!({ "adapter": a.adapter, "filter": policy }))?;
    m.input("in", &a.input)?;
    if let Some(p) = &a.schema {
        m.input("schema", p)?;
    }
    if let Some(p) = &a.filter {
        m.input("filter", p)?;
    }

    let ingested = ingest::ingest(kind, &a.input, &schema).with_context(|| format!("ingesting {}", a.input.display()))?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let mut corpus = ingested.corpus;
    let mut outputs = vec![CORPUS_FILE, "violations.jsonl"];
    if let Some(policy) = &policy {
        let (kept, stats) = ingest::filter_corpus(&corpus, policy);
        print_filter_stats(&stats);
        write_json(&m.path("filter_stats.json"), &stats)?;
        outputs.push("filter_stats.json");
        corpus = kept;
    }
    let violations = validate_corpus(&corpus);
    for v in &violations {
        eprintln!("violation: {v}");
    }
    io::write_corpus(&m.path(CORPUS_FILE), &corpus)?;
    io::write_jsonl(&m.path("violations.jsonl"), &violations)?;
    println!(
        "{} dialogs, {} instances, {} violations",
        corpus.dialogs.len(),
        corpus.instance_count(),
        violations.len()
    );
    m.finish(&outputs)
}

fn cmd_filter(a: FilterArgs) -> Result<()> {
    let policy: FilterPolicy = load_toml(&a.policy)?;
    let mut m = ManifestBuilder::start("filter", &a.out, &policy)?;
    m.input("corpus", &a.corpus)?.input("policy", &a.policy)?;
    let corpus = io::read_corpus(&a.corpus)?;
    let (kept, stats) = ingest::filter_corpus(&corpus, &policy);
    print_filter_stats(&stats);
    io::write_corpus(&m.path(CORPUS_FILE), &kept)?;
    write_json(&m.path("filter_stats.json"), &stats)?;
    m.finish(&[CORPUS_FILE, "filter_stats.json"])
}

fn cmd_sample(a: SampleArgs, file: &FileConfig) -> Result<()> {
    let spec = FewShotSpec::new(pick(a.k, &file.k, DEFAULT_FEWSHOT_K), pick(a.seed, &file.seed, 0));
    let mut m = ManifestBuilder::start("sample", &a.out, spec)?;
    m.input("corpus", &a.corpus)?.seed("sample", spec.seed);
    let corpus = io::read_corpus(&a.corpus)?;
    let sampled = ingest::sample_fewshot(&corpus, &spec)?;
    io::write_corpus(&m.path(CORPUS_FILE), &sampled)?;
    println!("sampled {} of {} dialogs (seed {})", sampled.dialogs.len(), corpus.dialogs.len(), spec.seed);
    m.finish(&[CORPUS_FILE])
}

fn cmd_serialize(a: SerializeArgs, file: &FileConfig) -> Result<()> {
    let wire = a.wire.resolve(file);
    let mut m = ManifestBuilder::start("serialize", &a.out, &wire)?;
    m.input("corpus", &a.corpus)?;
    let corpus = io::read_corpus(&a.corpus)?;
    let mut text = String::new();
    let mut ids = String::new();
    let mut skipped = 0usize;
    for inst in corpus.instances() {
        match serialize_instance(inst, &wire) {
            Ok(line) => {
                text.push_str(&dialeval::serialize::escape_line(&line));
                text.push('\n');
                ids.push_str(&inst.instance_id);
                ids.push('\n');
            }
            Err(e @ Error::MarkerCollision { .. }) => {
                eprintln!("warning: skipping {}: {e}", inst.instance_id);
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    io::write_string(&m.path("train.txt"), &text)?;
    io::write_string(&m.path("ids.txt"), &ids)?;
    println!("{} lines written, {skipped} skipped", corpus.instance_count() - skipped);
    m.finish(&["train.txt", "ids.txt"])
}

fn cmd_generate(a: GenerateArgs, file: &FileConfig) -> Result<()> {
    let endpoint = a
        .endpoint
        .clone()
        .or_else(|| file.endpoint.clone())
        .ok_or_else(|| anyhow!("no generation endpoint: pass --endpoint or set DIALEVAL_ENDPOINT"))?;
    let d = DecodeConfig::default();
    let timeout = pick(a.timeout_secs, &file.timeout_secs, d.timeout.as_secs_f64());
    let decode = DecodeConfig {
        beam_size: pick(a.beam_size, &file.beam_size, d.beam_size),
        max_new_tokens: pick(a.max_new_tokens, &file.max_new_tokens, d.max_new_tokens),
        timeout: Duration::try_from_secs_f64(timeout).context("invalid --timeout-secs")?,
    };
    let c = ClientConfig::default();
    let cfg = ClientConfig {
        max_in_flight: pick(a.max_in_flight, &file.max_in_flight, c.max_in_flight),
        retries: pick(a.retries, &file.retries, c.retries),
        wire: a.wire.resolve(file),
        ..c
    };
    let config = json!({
        "endpoint": endpoint,
        "decode": decode,
        "max_in_flight": cfg.max_in_flight,
        "retries": cfg.retries,
        "wire": cfg.wire,
    });
    let mut m = ManifestBuilder::start("generate", &a.out, config)?;
    m.input("corpus", &a.corpus)?;
    let corpus = io::read_corpus(&a.corpus)?;
    let instances: Vec<_> = corpus.instances().cloned().collect();
    let outputs = client::generate_batch(&instances, &endpoint, &decode, &cfg)?;
    let failed = outputs.iter().filter(|o| o.is_error()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} instances failed to generate", outputs.len());
    }
    io::write_jsonl(&m.path("outputs.jsonl"), &outputs)?;
    println!("{} outputs written", outputs.len());
    m.finish(&["outputs.jsonl"])
}

fn cmd_evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let resamples = pick(a.resamples, &file.resamples, DEFAULT_RESAMPLES);
    let seed = pick(a.seed, &file.seed, 0);
    let scorer = a.scorer.clone().or_else(|| file.scorer.clone());
    let scorer_metric = pick(a.scorer_metric.clone(), &file.scorer_metric, "neural".to_owned());
    let timeout = pick(a.timeout_secs, &file.timeout_secs, 60.0);
    let config = json!({
        "scorer": scorer,
        "scorer_metric": scorer_metric,
        "resamples": resamples,
        "timeout_secs": timeout,
    });
    let mut m = ManifestBuilder::start("evaluate", &a.out, config)?;
    m.input("outputs", &a.outputs)?.input("corpus", &a.corpus)?;
    if let Some(p) = &a.db {
        m.input("db", p)?;
    }
    if let Some(p) = &a.baseline {
        m.input("baseline", p)?;
        m.seed("bootstrap", seed);
    }

    let corpus = io::read_corpus(&a.corpus)?;
    let outputs: Vec<SystemOutput> = io::read_jsonl(&a.outputs)?;
    let db = a.db.as_deref().map(EntityDatabase::load).transpose()?;
    let tok = TokenizationConfig::default();
    let mut eval = evaluate(&corpus, &outputs, db.as_ref(), &tok)?;
    if db.is_some() && eval.task.is_none() {
        eprintln!("warning: no dialog with goals has outputs; task metrics skipped");
    }
    if !eval.errored.is_empty() {
        eprintln!("warning: {} errored outputs excluded from scoring", eval.errored.len());
    }
    if !eval.empty_knowledge.is_empty() {
        eprintln!("warning: {} instances without knowledge scored KF1 = 0", eval.empty_knowledge.len());
    }
    if let Some(endpoint) = &scorer {
        let timeout = Duration::try_from_secs_f64(timeout).context("invalid --timeout-secs")?;
        if let Some(w) = client::merge_neural_scores(
            &mut eval.report,
            &outputs,
            endpoint,
            &scorer_metric,
            timeout,
            &ClientConfig::default(),
        ) {
            eprintln!("warning: {w}");
        }
    }

    let mut outs = vec!["report.json", "summary.txt"];
    let mut systems = vec![(a.name.as_str(), eval.report.clone())];
    let mut comparison = None;
    if let Some(p) = &a.baseline {
        let base: Vec<SystemOutput> = io::read_jsonl(p)?;
        let base_report = evaluate(&corpus, &base, db.as_ref(), &tok)?.report;
        systems.push((a.baseline_name.as_str(), base_report));
        let cmp = compare(&corpus, &outputs, &base, db.as_ref(), &tok, resamples, seed)?;
        write_json(&m.path("comparison.json"), &cmp)?;
        outs.push("comparison.json");
        comparison = Some(cmp);
    }

    write_json(&m.path("report.json"), &eval.report)?;
    let refs: Vec<(&str, &MetricReport)> = systems.iter().map(|(n, r)| (*n, r)).collect();
    let mut summary = tables::lexical_table(&refs).to_string();
    if eval.task.is_some() {
        summary.push('\n');
        summary.push_str(&tables::task_table(&refs).to_string());
    }
    if let Some(cmp) = &comparison {
        summary.push('\n');
        summary.push_str(&format!("{} vs {} ({} paired instances)\n", a.name, a.baseline_name, cmp.paired));
        for (metric, t) in &cmp.ttest {
            summary.push_str(&format!("  {metric:<8} paired t = {:>8.3}  p = {:.4}\n", t.t, t.p));
        }
        for (metric, b) in &cmp.bootstrap {
            summary.push_str(&format!(
                "  {metric:<8} bootstrap delta = {:>8.4}  p = {:.4}\n",
                b.observed_delta * 100.0,
                b.p
            ));
        }
    }
    io::write_string(&m.path("summary.txt"), &summary)?;
    print!("{summary}");
    m.finish(&outs)
}

fn cmd_build_tasks(a: BuildTasksArgs, file: &FileConfig) -> Result<()> {
    let seed = pick(a.seed, &file.seed, 0);
    let mut m = ManifestBuilder::start("build-tasks", &a.out, json!({}))?;
    m.input("corpus", &a.corpus)?
        .input("system_a", &a.system_a)?
        .input("system_b", &a.system_b)?
        .seed("placement", seed);
    let corpus = io::read_corpus(&a.corpus)?;
    let sa: Vec<SystemOutput> = io::read_jsonl(&a.system_a)?;
    let sb: Vec<SystemOutput> = io::read_jsonl(&a.system_b)?;
    let tasks = build_pairwise_tasks(&sa, &sb, &corpus, seed)?;
    let payloads: Vec<_> = tasks.iter().map(|t| &t.payload).collect();
    let keys: Vec<_> = tasks.iter().map(|t| &t.key).collect();
    io::write_jsonl(&m.path("tasks.jsonl"), &payloads)?;
    io::write_jsonl(&m.path("keys.jsonl"), &keys)?;
    println!("{} tasks written", tasks.len());
    m.finish(&["tasks.jsonl", "keys.jsonl"])
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let mut m = ManifestBuilder::start("analyze", &a.out, json!({ "dataset": a.dataset }))?;
    m.input("ratings", &a.ratings)?;
    if let Some(p) = &a.keys {
        m.input("keys", p)?;
    }
    if let Some(p) = &a.report {
        m.input("report", p)?;
    }
    if a.report.is_some() && a.keys.is_none() {
        bail!("--report needs --keys to map tasks back to instances");
    }

    let records: Vec<RatingRecord> = io::read_jsonl(&a.ratings)?;
    let agreement = analysis::agreement_by_question(&records)?;
    let mut summary = tables::agreement_table(&[(a.dataset.as_str(), &agreement)]).to_string();
    let mut result = BTreeMap::new();
    result.insert("agreement", serde_json::to_value(&agreement)?);

    if let Some(kp) = &a.keys {
        let keys: Vec<TaskKey> = io::read_jsonl(kp)?;
        let wtl = analysis::wtl_by_question(&records, &keys)?;
        summary.push('\n');
        summary.push_str(&tables::wtl_table(&a.name_a, &a.name_b, &wtl).to_string());
        result.insert("wtl", serde_json::to_value(&wtl)?);

        if let Some(rp) = &a.report {
            let report: MetricReport = serde_json::from_str(&io::read_to_string(rp)?)?;
            let human = analysis::human_means(&records, &keys)?;
            let corr = metric_human_correlation(&report, &human)?;
            summary.push('\n');
            summary.push_str(&tables::correlation_table(&corr).to_string());
            result.insert("correlation", serde_json::to_value(&corr)?);
        }
    }
    write_json(&m.path("analysis.json"), &result)?;
    io::write_string(&m.path("summary.txt"), &summary)?;
    print!("{summary}");
    m.finish(&["analysis.json", "summary.txt"])
}

fn cmd_combined(a: CombinedArgs) -> Result<()> {
    let c = task::combined(a.inform / 100.0, a.success / 100.0, a.bleu / 100.0)?;
    println!("{c:.2}");
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut systems = Vec::new();
    for spec in &a.reports {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("expected NAME=PATH, got `{spec}`"))?;
        let report: MetricReport = serde_json::from_str(&io::read_to_string(Path::new(path))?)
            .with_context(|| format!("parsing {path}"))?;
        systems.push((name.to_owned(), report));
    }
    let refs: Vec<(&str, &MetricReport)> = systems.iter().map(|(n, r)| (n.as_str(), r)).collect();
    print!("{}", tables::lexical_table(&refs));
    if refs.iter().any(|(_, r)| r.corpus.contains_key(task::COMBINED)) {
        println!();
        print!("{}", tables::task_table(&refs));
    }
    Ok(())
}
