//! HTTP client for an external generation service and an optional neural
//! scoring service.
//!
//! Generation: one `POST` per instance with a [`GenerationRequest`] body,
//! answered by a [`GenerationResponse`]. Scoring: one `POST` per chunk with a
//! list of [`ScoreRequestItem`], answered by a list of [`ScoreResponseItem`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DialogTurn, GroundedInstance, MetricReport, SystemOutput};
use crate::serialize::{serialize_prompt, WireFormatConfig};

pub const DEFAULT_BEAM_SIZE: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_size: u32,
    pub max_new_tokens: u32,
    #[serde(rename = "timeout_secs", with = "secs")]
    pub timeout: Duration,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_size: DEFAULT_BEAM_SIZE,
            max_new_tokens: 128,
            timeout: Duration::from_secs(60),
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestInstance {
    /// Flat model input (everything before the target); `None` if the
    /// instance text collides with a format marker.
    pub flat: Option<String>,
    pub context: Vec<DialogTurn>,
    pub environment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub instance: RequestInstance,
    pub decode: DecodeConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    #[serde(default)]
    pub model_tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequestItem {
    pub instance_id: String,
    pub hypothesis: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponseItem {
    pub instance_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub max_in_flight: usize,
    /// Extra attempts after the first for transient failures.
    pub retries: u32,
    pub backoff_base: Duration,
    pub score_chunk: usize,
    pub wire: WireFormatConfig,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            max_in_flight: 8,
            retries: 3,
            backoff_base: Duration::from_millis(250),
            score_chunk: 256,
            wire: WireFormatConfig::default(),
        }
    }
}

pub fn build_request(inst: &GroundedInstance, decode: &DecodeConfig, wire: &WireFormatConfig) -> GenerationRequest {
    GenerationRequest {
        instance: RequestInstance {
            flat: serialize_prompt(inst, wire).ok(),
            context: inst.context.clone(),
            environment: inst.environment.clone(),
        },
        decode: *decode,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Failure {
    Connect(String),
    Timeout,
    /// Worth retrying (5xx, 429, broken body).
    Transient(String),
    Fatal(String),
}

impl Failure {
    fn retryable(&self) -> bool {
        !matches!(self, Failure::Fatal(_))
    }

    fn marker(&self) -> String {
        match self {
            Failure::Connect(m) => format!("unreachable: {m}"),
            Failure::Timeout => "timeout".to_owned(),
            Failure::Transient(m) | Failure::Fatal(m) => m.clone(),
        }
    }
}

fn classify(e: reqwest::Error) -> Failure {
    if e.is_timeout() {
        Failure::Timeout
    } else if e.is_connect() {
        Failure::Connect(e.to_string())
    } else {
        Failure::Transient(e.to_string())
    }
}

fn post_json<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
    client: &Client,
    endpoint: &str,
    body: &Req,
) -> std::result::Result<Resp, Failure> {
    let resp = client.post(endpoint).json(body).send().map_err(classify)?;
    let status = resp.status();
    if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
        return Err(Failure::Transient(format!("HTTP {status}")));
    }
    if !status.is_success() {
        return Err(Failure::Fatal(format!("HTTP {status}")));
    }
    resp.json::<Resp>().map_err(|e| {
        if e.is_timeout() {
            Failure::Timeout
        } else {
            Failure::Fatal(format!("bad response body: {e}"))
        }
    })
}

fn with_retries<T>(cfg: &ClientConfig, mut op: impl FnMut() -> std::result::Result<T, Failure>) -> std::result::Result<T, Failure> {
    let mut attempt = 0;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(f) if f.retryable() && attempt < cfg.retries => {
                let wait = cfg.backoff_base * 2u32.saturating_pow(attempt);
                debug!("attempt {} failed ({}), retrying in {wait:?}", attempt + 1, f.marker());
                thread::sleep(wait);
                attempt += 1;
            }
            Err(f) => return Err(f),
        }
    }
}

fn http_client(timeout: Duration) -> Result<Client> {
    Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))
}

fn knowledge_of(inst: &GroundedInstance) -> Vec<String> {
    inst.environment
        .split('\n')
        .filter(|s| !s.trim().is_empty())
        .map(str::to_owned)
        .collect()
}

/// Generates one response per instance, in input order.
///
/// At most `cfg.max_in_flight` requests run at once. Failed instances get an
/// output with an empty hypothesis and `error` set. If every instance failed
/// to connect, the whole batch fails with [`Error::ServiceUnreachable`].
pub fn generate_batch(
    instances: &[GroundedInstance],
    endpoint: &str,
    decode: &DecodeConfig,
    cfg: &ClientConfig,
) -> Result<Vec<SystemOutput>> {
    decode.validate()?;
    if instances.is_empty() {
        return Ok(Vec::new());
    }
    let client = http_client(decode.timeout)?;
    let next = AtomicUsize::new(0);
    let workers = cfg.max_in_flight.clamp(1, instances.len());

    let mut results: Vec<Option<std::result::Result<GenerationResponse, Failure>>> = vec![None; instances.len()];
    let parts: Vec<Vec<(usize, std::result::Result<GenerationResponse, Failure>)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= instances.len() {
                            break;
                        }
                        let req = build_request(&instances[i], decode, &cfg.wire);
                        let res = with_retries(cfg, || {
                            let r: GenerationResponse = post_json(&client, endpoint, &req)?;
                            if r.text.is_empty() {
                                Err(Failure::Fatal("empty response text".into()))
                            } else {
                                Ok(r)
                            }
                        });
                        done.push((i, res));
                    }
                    done
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for (i, r) in parts.into_iter().flatten() {
        results[i] = Some(r);
    }

    let failures: Vec<&Failure> = results
        .iter()
        .filter_map(|r| r.as_ref().and_then(|r| r.as_ref().err()))
        .collect();
    if failures.len() == instances.len() {
        if let Some(Failure::Connect(m)) = failures.iter().find(|f| matches!(f, Failure::Connect(_))) {
            if failures.iter().all(|f| matches!(f, Failure::Connect(_))) {
                return Err(Error::ServiceUnreachable {
                    endpoint: endpoint.to_owned(),
                    message: m.clone(),
                });
            }
        }
    }

    Ok(instances
        .iter()
        .zip(results)
        .map(|(inst, r)| {
            let mut out = SystemOutput::new(inst.instance_id.clone(), "", inst.target.clone(), knowledge_of(inst));
            match r.expect("every index is processed") {
                Ok(resp) => out.hypothesis = resp.text,
                Err(f) => {
                    warn!("instance {}: {}", inst.instance_id, f.marker());
                    out.error = Some(f.marker());
                }
            }
            out
        })
        .collect())
}

/// Scores outputs with an external metric service. Errored outputs are not
/// sent.
pub fn neural_score_batch(
    outputs: &[SystemOutput],
    endpoint: &str,
    timeout: Duration,
    cfg: &ClientConfig,
) -> Result<BTreeMap<String, f64>> {
    let client = http_client(timeout)?;
    let items: Vec<ScoreRequestItem> = outputs
        .iter()
        .filter(|o| !o.is_error())
        .map(|o| ScoreRequestItem {
            instance_id: o.instance_id.clone(),
            hypothesis: o.hypothesis.clone(),
            reference: o.reference.clone(),
        })
        .collect();
    let mut scores = BTreeMap::new();
    for chunk in items.chunks(cfg.score_chunk.max(1)) {
        let resp: Vec<ScoreResponseItem> =
            with_retries(cfg, || post_json(&client, endpoint, &chunk)).map_err(|f| match f {
                Failure::Connect(message) => Error::ServiceUnreachable {
                    endpoint: endpoint.to_owned(),
                    message,
                },
                other => Error::ServiceUnreachable {
                    endpoint: endpoint.to_owned(),
                    message: other.marker(),
                },
            })?;
        for r in resp {
            scores.insert(r.instance_id, r.score);
        }
    }
    Ok(scores)
}

/// Adds a neural metric to `report` when the scorer answers. Any failure is
/// returned as a warning and leaves the report unchanged.
pub fn merge_neural_scores(
    report: &mut MetricReport,
    outputs: &[SystemOutput],
    endpoint: &str,
    metric_name: &str,
    timeout: Duration,
    cfg: &ClientConfig,
) -> Option<String> {
    match neural_score_batch(outputs, endpoint, timeout, cfg) {
        Ok(scores) => {
            report.merge_scores(metric_name, &scores);
            None
        }
        Err(e) => {
            let msg = format!("{metric_name} scorer skipped: {e}");
            warn!("{msg}");
            Some(msg)
        }
    }
}
