use chrono::{DateTime, FixedOffset};
use reqwest::header::{HeaderMap, HeaderName, HeaderValue};
use reqwest::{RequestBuilder, Response};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ServerConfig, PING_TIMEOUT};
use super::error::ApiError;
use super::message::{Base64Image, ChatMessage, Role};
use super::model::ModelTag;
use super::options::GenerationOptions;
use super::stream::{decode_ndjson, NdjsonDecoder, Stats, StreamEvent};
use crate::error::{Error, Result};

/// Callback receiving decoded events while a response streams in.
pub type Sink<'a> = &'a mut (dyn FnMut(&StreamEvent) + Send);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerStatus {
    pub reachable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PullResult {
    pub model: ModelTag,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelInfo {
    pub model: ModelTag,
    pub size_bytes: u64,
    pub modified_at: DateTime<FixedOffset>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completion {
    pub text: String,
    pub stats: Stats,
}

/// Wire-level client for the Ollama HTTP API.
///
/// Cheap to clone and safe to share between tasks; every request keeps its
/// own decode state.
#[derive(Debug, Clone)]
pub struct Client {
    config: ServerConfig,
    http: reqwest::Client,
}

impl Client {
    pub fn new(config: ServerConfig) -> Result<Self> {
        let mut headers = HeaderMap::new();
        for (name, value) in config.extra_headers() {
            let name = HeaderName::from_bytes(name.as_bytes())
                .map_err(|e| Error::invalid(format!("header name {name:?}: {e}")))?;
            let value =
                HeaderValue::from_str(value).map_err(|e| Error::invalid(format!("header value for {name}: {e}")))?;
            headers.insert(name, value);
        }
        let mut builder = reqwest::Client::builder()
            .default_headers(headers)
            .timeout(config.timeout());
        if is_loopback(&config) {
            // Proxy variables set for outbound traffic must not capture a local server.
            builder = builder.no_proxy();
        }
        let http = builder
            .build()
            .map_err(|e| Error::invalid(format!("building HTTP client: {e}")))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    /// `GET /api/version`. Never fails: an unreachable server is reported
    /// as `reachable: false`.
    pub async fn ping(&self) -> ServerStatus {
        let resp = self
            .http
            .get(self.config.endpoint("/api/version"))
            .timeout(PING_TIMEOUT)
            .send()
            .await;
        match resp {
            Ok(r) if r.status().as_u16() == 200 => {
                let version = r
                    .json::<Value>()
                    .await
                    .ok()
                    .and_then(|v| v.get("version").and_then(Value::as_str).map(str::to_owned));
                ServerStatus {
                    reachable: true,
                    version,
                }
            }
            _ => ServerStatus {
                reachable: false,
                version: None,
            },
        }
    }

    /// Pulls `model` (or the configured default), forwarding progress to `sink`.
    pub async fn pull_model(&self, model: Option<&ModelTag>, sink: Sink<'_>) -> Result<PullResult> {
        let model = model.unwrap_or(self.config.default_model()).clone();
        let body = json!({"name": model.to_string(), "stream": true});
        let resp = self
            .send(self.http.post(self.config.endpoint("/api/pull")).json(&body))
            .await?;
        let events = read_stream(resp, Some(sink)).await?;
        let last_status = events.iter().rev().find_map(|e| match e {
            StreamEvent::PullProgress { status, .. } => Some(status.as_str()),
            _ => None,
        });
        Ok(PullResult {
            ok: last_status == Some("success"),
            model,
        })
    }

    /// `GET /api/tags`, sorted by model name.
    pub async fn list_models(&self) -> Result<Vec<ModelInfo>> {
        #[derive(Deserialize)]
        struct Tags {
            #[serde(default)]
            models: Vec<Entry>,
        }
        #[derive(Deserialize)]
        struct Entry {
            name: Option<String>,
            model: Option<String>,
            #[serde(default)]
            size: u64,
            modified_at: Option<String>,
        }

        let resp = self.send(self.http.get(self.config.endpoint("/api/tags"))).await?;
        let tags: Tags = resp
            .json()
            .await
            .map_err(|e| ApiError::protocol(format!("/api/tags: {e}")))?;
        let mut out = Vec::with_capacity(tags.models.len());
        for entry in tags.models {
            let name = entry
                .name
                .or(entry.model)
                .ok_or_else(|| ApiError::protocol("/api/tags entry without a name"))?;
            let stamp = entry
                .modified_at
                .ok_or_else(|| ApiError::protocol(format!("/api/tags entry {name} has no modified_at")))?;
            let modified_at = DateTime::parse_from_rfc3339(&stamp)
                .map_err(|e| ApiError::protocol(format!("/api/tags entry {name}: modified_at {stamp:?}: {e}")))?;
            let model = name
                .parse()
                .map_err(|_| ApiError::protocol(format!("/api/tags entry has invalid name {name:?}")))?;
            out.push(ModelInfo {
                model,
                size_bytes: entry.size,
                modified_at,
            });
        }
        out.sort_by_key(|m| m.model.canonical());
        Ok(out)
    }

    /// Single stateless completion (`POST /api/generate`).
    ///
    /// With a sink the response is streamed and the returned text is the
    /// concatenation of every delta the sink saw.
    pub async fn generate(
        &self,
        prompt: &str,
        model: &ModelTag,
        options: &GenerationOptions,
        images: &[Base64Image],
        sink: Option<Sink<'_>>,
    ) -> Result<Completion> {
        if prompt.trim().is_empty() {
            return Err(Error::invalid("prompt must not be empty"));
        }
        let mut body = json!({
            "model": model.to_string(),
            "prompt": prompt,
            "stream": sink.is_some(),
        });
        if !images.is_empty() {
            body["images"] = images.iter().map(|i| i.data.as_str()).collect();
        }
        if !options.is_empty() {
            body["options"] = serde_json::to_value(options).expect("options serialize");
        }
        let (text, stats) = self.complete("/api/generate", &body, sink).await?;
        Ok(Completion { text, stats })
    }

    /// Message-list completion (`POST /api/chat`). Returns the assistant turn.
    pub async fn chat(
        &self,
        messages: &[ChatMessage],
        model: &ModelTag,
        options: &GenerationOptions,
        sink: Option<Sink<'_>>,
    ) -> Result<ChatMessage> {
        let Some(last) = messages.last() else {
            return Err(Error::invalid("chat needs at least one message"));
        };
        if last.role != Role::User {
            return Err(Error::invalid(format!(
                "last message must come from the user, not {}",
                last.role
            )));
        }
        for m in messages {
            m.check()?;
        }
        let mut body = json!({
            "model": model.to_string(),
            "messages": messages.iter().map(ChatMessage::to_wire).collect::<Vec<_>>(),
            "stream": sink.is_some(),
        });
        if !options.is_empty() {
            body["options"] = serde_json::to_value(options).expect("options serialize");
        }
        let (text, _) = self.complete("/api/chat", &body, sink).await?;
        Ok(ChatMessage::assistant(text))
    }

    /// `POST /api/embeddings` for a single text.
    pub async fn embed(&self, text: &str, model: &ModelTag) -> Result<Vec<f64>> {
        if text.is_empty() {
            return Err(Error::invalid("text to embed must not be empty"));
        }
        let body = json!({"model": model.to_string(), "prompt": text});
        let resp = self
            .send(self.http.post(self.config.endpoint("/api/embeddings")).json(&body))
            .await?;
        let bytes = resp.bytes().await.map_err(ApiError::from)?;
        let value: Value = serde_json::from_slice(&bytes)
            .map_err(|e| ApiError::protocol(format!("/api/embeddings: invalid JSON: {e}")))?;
        if let Some(err) = value.get("error") {
            return Err(ApiError::from_status(200, &json!({"error": err}).to_string()).into());
        }
        let Some(Value::Array(entries)) = value.get("embedding") else {
            return Err(ApiError::protocol("/api/embeddings: reply has no \"embedding\" array").into());
        };
        entries
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64().ok_or_else(|| {
                    ApiError::protocol(format!("/api/embeddings: entry {i} is not a number: {v}")).into()
                })
            })
            .collect()
    }

    async fn complete(&self, path: &str, body: &Value, sink: Option<Sink<'_>>) -> Result<(String, Stats)> {
        let resp = self.send(self.http.post(self.config.endpoint(path)).json(body)).await?;
        let events = read_stream(resp, sink).await?;
        let mut text = String::new();
        let mut stats = None;
        for event in events {
            match event {
                _ if stats.is_some() => {
                    return Err(ApiError::protocol(format!("{path}: data after the done record")).into());
                }
                StreamEvent::ContentDelta(delta) => text.push_str(&delta),
                StreamEvent::Done(s) => stats = Some(s),
                StreamEvent::PullProgress { .. } => {
                    return Err(ApiError::protocol(format!("{path}: unexpected status line")).into());
                }
            }
        }
        let stats = stats.ok_or_else(|| ApiError::protocol(format!("{path}: response ended without a done record")))?;
        Ok((text, stats))
    }

    async fn send(&self, req: RequestBuilder) -> Result<Response, ApiError> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let body = resp.text().await.unwrap_or_default();
        Err(ApiError::from_status(status.as_u16(), &body))
    }
}

/// Reads a response body chunk by chunk through the NDJSON decoder. A plain
/// single-object JSON body decodes the same way.
async fn read_stream(mut resp: Response, mut sink: Option<Sink<'_>>) -> Result<Vec<StreamEvent>, ApiError> {
    let Some(sink) = sink.as_mut() else {
        let bytes = resp.bytes().await?;
        return decode_ndjson([bytes]);
    };
    let mut decoder = NdjsonDecoder::new();
    let mut events = Vec::new();
    while let Some(chunk) = resp.chunk().await? {
        for event in decoder.feed(&chunk)? {
            sink(&event);
            events.push(event);
        }
    }
    for event in decoder.finish()? {
        sink(&event);
        events.push(event);
    }
    Ok(events)
}

fn is_loopback(config: &ServerConfig) -> bool {
    match config.base_url().host() {
        Some(url::Host::Domain(d)) => d.eq_ignore_ascii_case("localhost"),
        Some(url::Host::Ipv4(ip)) => ip.is_loopback(),
        Some(url::Host::Ipv6(ip)) => ip.is_loopback(),
        None => false,
    }
}
