//! Deterministic Ollama-API emulator.
//!
//! [`MockServer`] speaks the same wire surface as a real server
//! (`/api/version`, `/api/tags`, `/api/pull`, `/api/generate`, `/api/chat`,
//! `/api/embeddings`) and adds `GET /debug/capture`, which returns every
//! request body received so far as JSONL.
//!
//! Replies come from [`oracle`]: seeded temperature-0 requests always get
//! the same text, everything else gets a fresh nonce, embeddings are
//! hash-seeded, and classification prompts are answered from a keyword
//! table. Faults can be injected globally ([`MockConfig::fault`]) or for
//! requests whose text contains a marker ([`MockConfig::content_faults`]).

pub mod oracle;

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fmt;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use axum::body::{Body, Bytes};
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::error::{Error, Result};
use crate::transport::{Client, ModelTag, ServerConfig};

pub use oracle::{FIXED_TIMESTAMP, MOCK_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Answer 500 to every affected request.
    Http500,
    /// Never answer until the server shuts down.
    Stall,
    /// Emit `not json` mid-stream (or as the whole body when not streaming).
    MalformedLine,
    /// Answer as if the requested model did not exist.
    ModelMissing,
}

impl Fault {
    pub fn as_str(self) -> &'static str {
        match self {
            Fault::Http500 => "http500",
            Fault::Stall => "stall",
            Fault::MalformedLine => "malformed_line",
            Fault::ModelMissing => "model_missing",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "http500" => Ok(Fault::Http500),
            "stall" => Ok(Fault::Stall),
            "malformed_line" => Ok(Fault::MalformedLine),
            "model_missing" => Ok(Fault::ModelMissing),
            other => Err(Error::invalid(format!(
                "unknown fault {other:?} (expected http500, stall, malformed_line or model_missing)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub embedding_dimension: usize,
}

#[derive(Debug, Clone)]
pub struct MockConfig {
    pub host: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    /// Models available at startup, keyed by canonical `name:tag`.
    pub registered_models: BTreeMap<String, ModelSpec>,
    /// Streamed bodies are flushed in pieces of this many bytes.
    pub chunk_size: usize,
    pub fault: Option<Fault>,
    pub keyword_table: BTreeMap<String, String>,
    /// Requests whose prompt or message text contains the marker get the fault.
    pub content_faults: Vec<(String, Fault)>,
}

impl Default for MockConfig {
    fn default() -> Self {
        let mut config = Self::empty();
        for name in ["llama2", "llava", "nomic-embed-text", "all-minilm"] {
            config = config.with_model(&ModelTag::new(name), oracle::default_dimension(name));
        }
        config
    }
}

impl MockConfig {
    /// No models registered; everything must be pulled first.
    pub fn empty() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 0,
            registered_models: BTreeMap::new(),
            chunk_size: 4096,
            fault: None,
            keyword_table: oracle::default_keyword_table(),
            content_faults: Vec::new(),
        }
    }

    pub fn with_model(mut self, model: &ModelTag, embedding_dimension: usize) -> Self {
        self.registered_models
            .insert(model.canonical(), ModelSpec { embedding_dimension });
        self
    }

    pub fn with_port(mut self, port: u16) -> Self {
        self.port = port;
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn with_content_fault(mut self, marker: impl Into<String>, fault: Fault) -> Self {
        self.content_faults.push((marker.into(), fault));
        self
    }

    fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::invalid("chunk_size must be at least 1"));
        }
        if let Some((name, _)) = self
            .registered_models
            .iter()
            .find(|(_, spec)| spec.embedding_dimension == 0)
        {
            return Err(Error::invalid(format!("model {name} has embedding dimension 0")));
        }
        if self.content_faults.iter().any(|(marker, _)| marker.is_empty()) {
            return Err(Error::invalid("content fault markers must not be empty"));
        }
        Ok(())
    }
}

/// One request as the server received it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureEntry {
    pub seq: usize,
    pub method: String,
    pub path: String,
    /// Raw request body, verbatim.
    pub body: String,
}

impl CaptureEntry {
    pub fn json(&self) -> Option<Value> {
        serde_json::from_str(&self.body).ok()
    }
}

#[derive(Debug, Clone)]
struct ModelEntry {
    tag: ModelTag,
    dimension: usize,
}

struct Shared {
    config: MockConfig,
    models: Mutex<BTreeMap<String, ModelEntry>>,
    capture: Mutex<Vec<CaptureEntry>>,
    shutdown: watch::Receiver<bool>,
}

/// A running mock server. Dropping the handle stops it.
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: watch::Sender<bool>,
    task: Option<JoinHandle<()>>,
}

/// Binds and starts a mock server on the current tokio runtime.
pub async fn serve(config: MockConfig) -> Result<MockServer> {
    MockServer::start(config).await
}

impl MockServer {
    pub async fn start(config: MockConfig) -> Result<Self> {
        config.validate()?;
        let bind = SocketAddr::new(config.host, config.port);
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| Error::io(format!("bind {bind}"), e))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Error::io(format!("bind {bind}"), e))?;

        let models = config
            .registered_models
            .iter()
            .map(|(name, spec)| {
                let tag: ModelTag = name.parse()?;
                Ok((
                    name.clone(),
                    ModelEntry {
                        tag,
                        dimension: spec.embedding_dimension,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        let (tx, rx) = watch::channel(false);
        let shared = Arc::new(Shared {
            config,
            models: Mutex::new(models),
            capture: Mutex::new(Vec::new()),
            shutdown: rx.clone(),
        });
        let app = Router::new().fallback(dispatch).with_state(shared.clone());
        let mut stop = rx;
        let task = tokio::spawn(async move {
            let graceful = async move {
                while !*stop.borrow() {
                    if stop.changed().await.is_err() {
                        break;
                    }
                }
            };
            let _ = axum::serve(listener, app).with_graceful_shutdown(graceful).await;
        });
        Ok(Self {
            addr,
            shared,
            shutdown: tx,
            task: Some(task),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL, e.g. `http://127.0.0.1:40123`.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn server_config(&self) -> ServerConfig {
        ServerConfig::new(&self.url()).expect("mock address is a valid URL")
    }

    pub fn client(&self) -> Client {
        Client::new(self.server_config()).expect("default client settings are valid")
    }

    /// Every request received so far, in arrival order.
    pub fn capture(&self) -> Vec<CaptureEntry> {
        self.shared.capture.lock().unwrap().clone()
    }

    /// Canonical names of the models currently available.
    pub fn models(&self) -> Vec<String> {
        self.shared.models.lock().unwrap().keys().cloned().collect()
    }

    /// Stops accepting connections and waits for in-flight requests to end.
    pub async fn shutdown(mut self) {
        let _ = self.shutdown.send(true);
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        let _ = self.shutdown.send(true);
    }
}

impl fmt::Debug for MockServer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MockServer")
            .field("addr", &self.addr)
            .finish_non_exhaustive()
    }
}

impl Shared {
    fn record(&self, method: &Method, path: &str, body: &Bytes) {
        let mut log = self.capture.lock().unwrap();
        let seq = log.len();
        log.push(CaptureEntry {
            seq,
            method: method.to_string(),
            path: path.to_owned(),
            body: String::from_utf8_lossy(body).into_owned(),
        });
    }

    fn lookup(&self, model: &ModelTag) -> Option<ModelEntry> {
        self.models.lock().unwrap().get(&model.canonical()).cloned()
    }

    fn content_fault(&self, body: &Value) -> Option<Fault> {
        let mut texts: Vec<&str> = Vec::new();
        if let Some(p) = body.get("prompt").and_then(Value::as_str) {
            texts.push(p);
        }
        if let Some(Value::Array(messages)) = body.get("messages") {
            texts.extend(messages.iter().filter_map(|m| m.get("content").and_then(Value::as_str)));
        }
        self.config
            .content_faults
            .iter()
            .find(|(marker, _)| texts.iter().any(|t| t.contains(marker.as_str())))
            .map(|(_, fault)| *fault)
    }

    async fn stall(&self) -> Response {
        let mut rx = self.shutdown.clone();
        while !*rx.borrow() {
            if rx.changed().await.is_err() {
                break;
            }
        }
        error_response(StatusCode::SERVICE_UNAVAILABLE, "server shutting down")
    }

    fn ndjson(&self, lines: &[Value], malformed: bool) -> Response {
        let mut bytes = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            bytes.extend_from_slice(line.to_string().as_bytes());
            bytes.push(b'\n');
            if malformed && i == 0 {
                bytes.extend_from_slice(b"not json\n");
            }
        }
        let chunks: Vec<Result<Bytes, Infallible>> = bytes
            .chunks(self.config.chunk_size)
            .map(|c| Ok(Bytes::copy_from_slice(c)))
            .collect();
        Response::builder()
            .status(StatusCode::OK)
            .header(header::CONTENT_TYPE, "application/x-ndjson")
            .body(Body::from_stream(futures::stream::iter(chunks)))
            .expect("static response parts")
    }
}

fn json_response(status: StatusCode, value: Value) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], value.to_string()).into_response()
}

fn error_response(status: StatusCode, message: impl fmt::Display) -> Response {
    json_response(status, json!({"error": message.to_string()}))
}

fn model_missing(name: impl fmt::Display) -> Response {
    error_response(
        StatusCode::NOT_FOUND,
        format!("model \"{name}\" not found, try pulling it first"),
    )
}

async fn dispatch(State(shared): State<Arc<Shared>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let path = uri.path();
    if path == "/debug/capture" && method == Method::GET {
        let mut out = String::new();
        for entry in shared.capture.lock().unwrap().iter() {
            out.push_str(&serde_json::to_string(entry).expect("capture entries serialize"));
            out.push('\n');
        }
        return ([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response();
    }
    shared.record(&method, path, &body);

    let parsed = if method == Method::POST {
        match serde_json::from_slice::<Value>(&body) {
            Ok(v @ Value::Object(_)) => Some(v),
            Ok(_) => return error_response(StatusCode::BAD_REQUEST, "request body must be a JSON object"),
            Err(e) => return error_response(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}")),
        }
    } else {
        None
    };
    let fault = shared
        .config
        .fault
        .or_else(|| parsed.as_ref().and_then(|b| shared.content_fault(b)));
    match fault {
        Some(Fault::Http500) => return error_response(StatusCode::INTERNAL_SERVER_ERROR, "injected fault: http500"),
        Some(Fault::Stall) => return shared.stall().await,
        _ => {}
    }
    let malformed = fault == Some(Fault::MalformedLine);
    let missing = fault == Some(Fault::ModelMissing);

    match (&method, path, parsed) {
        (&Method::GET, "/api/version", _) => json_response(StatusCode::OK, json!({"version": MOCK_VERSION})),
        (&Method::GET, "/api/tags", _) => tags(&shared),
        (&Method::POST, "/api/pull", Some(b)) => pull(&shared, &b, malformed),
        (&Method::POST, "/api/generate", Some(b)) => complete(&shared, &b, Endpoint::Generate, malformed, missing),
        (&Method::POST, "/api/chat", Some(b)) => complete(&shared, &b, Endpoint::Chat, malformed, missing),
        (&Method::POST, "/api/embeddings", Some(b)) => embeddings(&shared, &b, malformed, missing),
        _ => error_response(StatusCode::NOT_FOUND, format!("no route for {method} {path}")),
    }
}

fn tags(shared: &Shared) -> Response {
    let models: Vec<Value> = shared
        .models
        .lock()
        .unwrap()
        .iter()
        .map(|(name, entry)| {
            json!({
                "name": name,
                "model": name,
                "modified_at": oracle::FIXED_TIMESTAMP,
                "size": oracle::model_size(&entry.tag),
                "digest": oracle::model_digest(&entry.tag),
            })
        })
        .collect();
    json_response(StatusCode::OK, json!({"models": models}))
}

fn requested_model(body: &Value, keys: &[&str]) -> std::result::Result<ModelTag, String> {
    let name = keys
        .iter()
        .find_map(|k| body.get(*k).and_then(Value::as_str))
        .ok_or_else(|| "model is required".to_owned())?;
    name.parse().map_err(|e: Error| e.to_string())
}

fn pull(shared: &Shared, body: &Value, malformed: bool) -> Response {
    let tag = match requested_model(body, &["name", "model"]) {
        Ok(t) => t,
        Err(msg) => return error_response(StatusCode::BAD_REQUEST, msg),
    };
    shared
        .models
        .lock()
        .unwrap()
        .entry(tag.canonical())
        .or_insert_with(|| ModelEntry {
            dimension: oracle::default_dimension(tag.name()),
            tag: tag.clone(),
        });
    if body.get("stream").and_then(Value::as_bool).unwrap_or(true) {
        shared.ndjson(&oracle::pull_lines(&tag), malformed)
    } else {
        json_response(StatusCode::OK, json!({"status": "success"}))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Endpoint {
    Generate,
    Chat,
}

fn complete(shared: &Shared, body: &Value, endpoint: Endpoint, malformed: bool, missing: bool) -> Response {
    let tag = match requested_model(body, &["model"]) {
        Ok(t) => t,
        Err(msg) => return error_response(StatusCode::BAD_REQUEST, msg),
    };
    if missing || shared.lookup(&tag).is_none() {
        return model_missing(&tag);
    }
    if endpoint == Endpoint::Chat {
        match body.get("messages") {
            Some(Value::Array(m)) if !m.is_empty() => {}
            _ => return error_response(StatusCode::BAD_REQUEST, "messages must be a non-empty array"),
        }
    }
    let text = oracle::mock_completion(&tag, body, &shared.config.keyword_table, rand::random());
    let pieces = oracle::tokens(&text);
    let model_name = tag.to_string();
    let record = |content: &str, done: bool| {
        let mut v = json!({"model": model_name, "created_at": oracle::FIXED_TIMESTAMP, "done": done});
        match endpoint {
            Endpoint::Generate => v["response"] = json!(content),
            Endpoint::Chat => v["message"] = json!({"role": "assistant", "content": content}),
        }
        if done {
            v["done_reason"] = json!("stop");
            v["total_duration"] = json!(0);
            v["eval_count"] = json!(pieces.len());
        }
        v
    };

    if body.get("stream").and_then(Value::as_bool).unwrap_or(true) {
        let mut lines: Vec<Value> = pieces.iter().map(|p| record(p, false)).collect();
        lines.push(record("", true));
        shared.ndjson(&lines, malformed)
    } else if malformed {
        ([(header::CONTENT_TYPE, "application/json")], "not json\n").into_response()
    } else {
        json_response(StatusCode::OK, record(&text, true))
    }
}

fn embeddings(shared: &Shared, body: &Value, malformed: bool, missing: bool) -> Response {
    let tag = match requested_model(body, &["model"]) {
        Ok(t) => t,
        Err(msg) => return error_response(StatusCode::BAD_REQUEST, msg),
    };
    let entry = match shared.lookup(&tag) {
        Some(e) if !missing => e,
        _ => return model_missing(&tag),
    };
    let text = body.get("prompt").and_then(Value::as_str).unwrap_or("");
    if text.is_empty() {
        return json_response(StatusCode::OK, json!({"embedding": []}));
    }
    let mut embedding: Vec<Value> = oracle::mock_embedding(&tag, text, entry.dimension)
        .into_iter()
        .map(Value::from)
        .collect();
    if malformed {
        embedding[0] = json!("not a number");
    }
    json_response(StatusCode::OK, json!({"embedding": embedding}))
}
