use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::error::ApiError;

/// Fields of the terminal `"done": true` record other than the content.
pub type Stats = BTreeMap<String, Value>;

/// One decoded unit of a streaming response.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamEvent {
    ContentDelta(String),
    Done(Stats),
    PullProgress {
        status: String,
        completed: Option<u64>,
        total: Option<u64>,
    },
}

/// Incremental NDJSON decoder.
///
/// Bytes are split on `\n` before any UTF-8 decoding, so a codepoint cut in
/// half by a chunk boundary is reassembled with the rest of its line.
#[derive(Debug, Default)]
pub struct NdjsonDecoder {
    pending: Vec<u8>,
    line_no: usize,
}

impl NdjsonDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Consumes a chunk and returns the events of every line it completed.
    pub fn feed(&mut self, chunk: &[u8]) -> Result<Vec<StreamEvent>, ApiError> {
        let mut events = Vec::new();
        let mut rest = chunk;
        while let Some(pos) = rest.iter().position(|&b| b == b'\n') {
            self.pending.extend_from_slice(&rest[..pos]);
            rest = &rest[pos + 1..];
            let line = std::mem::take(&mut self.pending);
            self.decode_line(&line, &mut events)?;
        }
        self.pending.extend_from_slice(rest);
        Ok(events)
    }

    /// Flushes a final line that arrived without its terminating newline.
    pub fn finish(&mut self) -> Result<Vec<StreamEvent>, ApiError> {
        let mut events = Vec::new();
        let line = std::mem::take(&mut self.pending);
        self.decode_line(&line, &mut events)?;
        Ok(events)
    }

    fn decode_line(&mut self, raw: &[u8], out: &mut Vec<StreamEvent>) -> Result<(), ApiError> {
        self.line_no += 1;
        let text = String::from_utf8_lossy(raw);
        let line = text.trim();
        if line.is_empty() {
            return Ok(());
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| ApiError::protocol(format!("line {}: invalid JSON ({e}): {}", self.line_no, excerpt(line))))?;
        let Value::Object(obj) = value else {
            return Err(ApiError::protocol(format!(
                "line {}: expected a JSON object: {}",
                self.line_no,
                excerpt(line)
            )));
        };
        decode_object(obj, out).map_err(|detail| match detail {
            LineError::Server(e) => e,
            LineError::Shape(d) => ApiError::protocol(format!("line {}: {d}: {}", self.line_no, excerpt(line))),
        })
    }
}

enum LineError {
    Server(ApiError),
    Shape(&'static str),
}

fn decode_object(mut obj: Map<String, Value>, out: &mut Vec<StreamEvent>) -> Result<(), LineError> {
    if let Some(err) = obj.get("error") {
        let msg = err.as_str().map(str::to_owned).unwrap_or_else(|| err.to_string());
        return Err(LineError::Server(if msg.to_ascii_lowercase().contains("not found") {
            ApiError::model_missing(msg)
        } else {
            ApiError::protocol(format!("server error: {msg}"))
        }));
    }

    let content = take_content(&mut obj)?;
    let done = match obj.get("done") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(LineError::Shape("\"done\" is not a boolean")),
    };

    if let Some(text) = &content {
        if !done || !text.is_empty() {
            out.push(StreamEvent::ContentDelta(text.clone()));
        }
    }
    if done {
        obj.remove("done");
        obj.remove("context");
        out.push(StreamEvent::Done(obj.into_iter().collect()));
        return Ok(());
    }
    if content.is_some() {
        return Ok(());
    }

    match obj.get("status") {
        Some(Value::String(status)) => {
            out.push(StreamEvent::PullProgress {
                status: status.clone(),
                completed: obj.get("completed").and_then(Value::as_u64),
                total: obj.get("total").and_then(Value::as_u64),
            });
            Ok(())
        }
        _ => Err(LineError::Shape("no response, message, done or status field")),
    }
}

/// Pulls the text out of a generate (`response`) or chat (`message`) line.
fn take_content(obj: &mut Map<String, Value>) -> Result<Option<String>, LineError> {
    if let Some(v) = obj.remove("response") {
        return match v {
            Value::String(s) => Ok(Some(s)),
            _ => Err(LineError::Shape("\"response\" is not a string")),
        };
    }
    let Some(v) = obj.remove("message") else {
        return Ok(None);
    };
    let Value::Object(msg) = v else {
        return Err(LineError::Shape("\"message\" is not an object"));
    };
    if !msg.get("role").is_none_or(|r| r == "assistant") {
        return Err(LineError::Shape("reply role is not assistant"));
    }
    match msg.get("content") {
        Some(Value::String(s)) => Ok(Some(s.clone())),
        None => Ok(Some(String::new())),
        Some(_) => Err(LineError::Shape("message content is not a string")),
    }
}

fn excerpt(line: &str) -> String {
    const MAX: usize = 80;
    if line.chars().count() <= MAX {
        format!("{line:?}")
    } else {
        let cut: String = line.chars().take(MAX).collect();
        format!("{cut:?}...")
    }
}

/// Decodes a complete byte stream delivered as arbitrary chunks.
pub fn decode_ndjson<I, B>(chunks: I) -> Result<Vec<StreamEvent>, ApiError>
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut decoder = NdjsonDecoder::new();
    let mut events = Vec::new();
    for chunk in chunks {
        events.extend(decoder.feed(chunk.as_ref())?);
    }
    events.extend(decoder.finish()?);
    Ok(events)
}
