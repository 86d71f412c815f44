//! Chat-completion transport for the LLM scoring study, plus replay and
//! recording wrappers so runs can be reproduced without network access.
//!
//! Wire format: `POST <base_url>/chat/completions` with body
//! `{"model": ..., "messages": [{"role": "user", "content": <prompt>}], "temperature": 0}`
//! and header `Authorization: Bearer <token>`. The reply text is read from
//! `choices[0].message.content`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use bkpred_core::llm::{build_prompt, ExtractionStatus, LlmResponseRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::LlmSettings;
use crate::error::{Error, Result};
use crate::io::read_jsonl;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    /// Worth retrying: rate limits, server errors, timeouts.
    #[error("{0}")]
    Retryable(String),
    #[error("{0}")]
    Fatal(String),
}

pub trait Transport: Sync {
    fn complete(&self, record_id: &str, prompt: &str) -> Result<String, TransportError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    model: String,
    token: Option<String>,
}

impl HttpTransport {
    /// Reads the token from the configured environment variable; a missing
    /// variable sends no `Authorization` header.
    pub fn new(s: &LlmSettings) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(s.timeout_secs)).build();
        Self {
            agent,
            url: format!("{}/chat/completions", s.base_url.trim_end_matches('/')),
            model: s.model.clone(),
            token: std::env::var(&s.token_env).ok().filter(|t| !t.is_empty()),
        }
    }
}

pub fn request_body(model: &str, prompt: &str) -> String {
    serde_json::json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
    })
    .to_string()
}

pub fn response_text(body: &str) -> Result<String, TransportError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| TransportError::Fatal(format!("response is not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(String::from)
        .ok_or_else(|| TransportError::Fatal("response has no choices[0].message.content".into()))
}

impl Transport for HttpTransport {
    fn complete(&self, _record_id: &str, prompt: &str) -> Result<String, TransportError> {
        let mut req = self.agent.post(&self.url).set("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.set("Authorization", &format!("Bearer {t}"));
        }
        match req.send_string(&request_body(&self.model, prompt)) {
            Ok(resp) => {
                let body = resp.into_string().map_err(|e| TransportError::Retryable(e.to_string()))?;
                response_text(&body)
            }
            Err(ureq::Error::Status(code, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                let msg = format!("HTTP {code}: {}", body.chars().take(200).collect::<String>());
                if code == 429 || code >= 500 {
                    Err(TransportError::Retryable(msg))
                } else {
                    Err(TransportError::Fatal(msg))
                }
            }
            Err(e) => Err(TransportError::Retryable(e.to_string())),
        }
    }
}

/// Answers from previously persisted records: the stored raw response, or
/// the stored transport error.
pub struct ReplayTransport {
    entries: BTreeMap<String, LlmResponseRecord>,
}

impl ReplayTransport {
    pub fn new(records: impl IntoIterator<Item = LlmResponseRecord>) -> Self {
        Self { entries: records.into_iter().map(|r| (r.record_id.clone(), r)).collect() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_jsonl::<LlmResponseRecord>(path)?))
    }
}

impl Transport for ReplayTransport {
    fn complete(&self, record_id: &str, _prompt: &str) -> Result<String, TransportError> {
        match self.entries.get(record_id) {
            Some(r) if r.extraction_status == ExtractionStatus::TransportError => {
                Err(TransportError::Fatal(r.error.clone().unwrap_or_else(|| "transport error".into())))
            }
            Some(r) => Ok(r.raw_response.clone()),
            None => Err(TransportError::Fatal(format!("no replay entry for {record_id}"))),
        }
    }
}

/// One request and its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub record_id: String,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
}

/// Passes requests through and keeps every exchange, retries included.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<Exchange>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    /// Exchanges sorted by record id, then in call order.
    pub fn exchanges(&self) -> Vec<Exchange> {
        let mut v = self.log.lock().expect("log lock").clone();
        v.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        v
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn complete(&self, record_id: &str, prompt: &str) -> Result<String, TransportError> {
        let r = self.inner.complete(record_id, prompt);
        self.log.lock().expect("log lock").push(Exchange {
            record_id: record_id.into(),
            prompt: prompt.into(),
            response: r.as_ref().ok().cloned(),
            error: r.as_ref().err().map(ToString::to_string),
        });
        r
    }
}

/// Spaces request starts at least `interval` apart across threads.
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_second(rate: f64) -> Self {
        let interval = if rate.is_finite() && rate > 0.0 { Duration::from_secs_f64(1.0 / rate) } else { Duration::ZERO };
        Self { interval, next: Mutex::new(None) }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().expect("limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollectConfig {
    pub template: String,
    pub max_tokens: usize,
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
    pub requests_per_second: f64,
    pub concurrency: usize,
}

impl CollectConfig {
    pub fn from_settings(s: &LlmSettings) -> Result<Self> {
        let template = match &s.template {
            Some(p) => crate::io::read_string(p)?,
            None => bkpred_core::llm::DEFAULT_TEMPLATE.to_string(),
        };
        Ok(Self {
            template,
            max_tokens: s.max_tokens,
            max_retries: s.max_retries,
            backoff: Duration::from_millis(s.backoff_ms),
            requests_per_second: s.requests_per_second,
            concurrency: s.concurrency.max(1),
        })
    }
}

fn one(record_id: &str, text: &str, transport: &dyn Transport, limiter: &RateLimiter, cfg: &CollectConfig) -> LlmResponseRecord {
    let prompt = match build_prompt(&cfg.template, text, cfg.max_tokens) {
        Ok(p) => p,
        Err(e) => return LlmResponseRecord::transport_error(record_id, format!("prompt not built: {e}")),
    };
    let mut attempt = 0;
    loop {
        limiter.acquire();
        match transport.complete(record_id, &prompt) {
            Ok(raw) => return LlmResponseRecord::from_response(record_id, raw),
            Err(TransportError::Retryable(_)) if attempt < cfg.max_retries => {
                std::thread::sleep(cfg.backoff * 2u32.saturating_pow(attempt));
                attempt += 1;
            }
            Err(e) => return LlmResponseRecord::transport_error(record_id, e.to_string()),
        }
    }
}

/// One request per `(record_id, MD&A)` pair with bounded retries, a shared
/// rate limit and up to `concurrency` requests in flight. Records come back
/// in input order whatever the completion order.
pub fn collect(docs: &[(String, String)], transport: &dyn Transport, cfg: &CollectConfig) -> Vec<LlmResponseRecord> {
    let limiter = RateLimiter::per_second(cfg.requests_per_second);
    let slots: Vec<Mutex<Option<LlmResponseRecord>>> = docs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cfg.concurrency.clamp(1, docs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((id, text)) = docs.get(i) else { break };
                let r = one(id, text, transport, &limiter, cfg);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

/// Extraction summary of a collect run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectReport {
    pub n_records: usize,
    pub n_ok: usize,
    pub n_no_score: usize,
    pub n_transport_error: usize,
    pub coverage: f64,
}

impl CollectReport {
    pub fn of(records: &[LlmResponseRecord]) -> Self {
        let count = |s: ExtractionStatus| records.iter().filter(|r| r.extraction_status == s).count();
        Self {
            n_records: records.len(),
            n_ok: count(ExtractionStatus::Ok),
            n_no_score: count(ExtractionStatus::NoScore),
            n_transport_error: count(ExtractionStatus::TransportError),
            coverage: bkpred_core::llm::coverage(records),
        }
    }
}

pub fn http_or_replay(s: &LlmSettings, replay: Option<&Path>) -> Result<Box<dyn Transport>> {
    match replay {
        Some(p) => Ok(Box::new(ReplayTransport::load(p)?)),
        None => {
            if s.base_url.is_empty() {
                return Err(Error::Config("llm.base_url is empty".into()));
            }
            Ok(Box::new(HttpTransport::new(s)))
        }
    }
}
