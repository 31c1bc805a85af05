//! Pure functions behind the mock server's replies.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::transport::ModelTag;

pub const MOCK_VERSION: &str = "0.0.0-mock";

/// Timestamp stamped on every generated record so streams are byte-stable.
pub const FIXED_TIMESTAMP: &str = "2024-01-01T00:00:00Z";

/// Embedding width used for models outside the built-in table.
pub const FALLBACK_DIMENSION: usize = 4096;

const ECHO_CHARS: usize = 64;

/// Built-in embedding widths, taken from the public model cards.
pub fn default_dimension(model_name: &str) -> usize {
    match model_name {
        "nomic-embed-text" => 768,
        "all-minilm" => 384,
        "llama2" => 4096,
        _ => FALLBACK_DIMENSION,
    }
}

/// Keyword → category table used to answer classification prompts.
pub fn default_keyword_table() -> BTreeMap<String, String> {
    let entries: [(&str, &[&str]); 3] = [
        (
            "negative",
            &[
                "terrible",
                "awful",
                "horrible",
                "bad",
                "disgusting",
                "worst",
                "hate",
                "bland",
            ],
        ),
        (
            "positive",
            &[
                "great",
                "delicious",
                "excellent",
                "wonderful",
                "love",
                "amazing",
                "best",
                "tasty",
            ],
        ),
        ("neutral", &["okay", "average", "ordinary", "mediocre", "acceptable"]),
    ];
    entries
        .iter()
        .flat_map(|(label, words)| words.iter().map(move |w| (w.to_string(), label.to_string())))
        .collect()
}

/// 64-bit FNV-1a.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_sorted(value, &mut out);
    out
}

fn write_sorted(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<_> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_sorted(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_sorted(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalize_strings(v: &Value) -> Value {
    match v {
        Value::String(s) => Value::String(normalize_whitespace(s)),
        Value::Array(items) => Value::Array(items.iter().map(normalize_strings).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), normalize_strings(v))).collect()),
        other => other.clone(),
    }
}

/// The parts of a generate or chat body the oracle looks at.
struct Prompt {
    input: Value,
    system: Option<String>,
    last_user: String,
}

fn extract(request: &Value) -> Prompt {
    if let Some(Value::Array(messages)) = request.get("messages") {
        let text_of = |m: &Value| m.get("content").and_then(Value::as_str).unwrap_or("").to_owned();
        let role_is = |m: &Value, r: &str| m.get("role").and_then(Value::as_str) == Some(r);
        let system: Vec<String> = messages.iter().filter(|m| role_is(m, "system")).map(text_of).collect();
        let last_user = messages
            .iter()
            .rev()
            .find(|m| role_is(m, "user"))
            .map(text_of)
            .unwrap_or_default();
        let input = Value::Array(
            messages
                .iter()
                .map(|m| {
                    json!({
                        "role": m.get("role").cloned().unwrap_or(Value::Null),
                        "content": m.get("content").cloned().unwrap_or(Value::Null),
                        "images": m.get("images").cloned().unwrap_or_else(|| json!([])),
                    })
                })
                .collect(),
        );
        return Prompt {
            input: json!({"messages": input}),
            system: (!system.is_empty()).then(|| system.join("\n")),
            last_user,
        };
    }
    let prompt = request.get("prompt").and_then(Value::as_str).unwrap_or("").to_owned();
    let system = request.get("system").and_then(Value::as_str).map(str::to_owned);
    Prompt {
        input: json!({
            "prompt": prompt,
            "system": system,
            "images": request.get("images").cloned().unwrap_or_else(|| json!([])),
        }),
        system,
        last_user: prompt,
    }
}

/// Seed, if the request asks for reproducible output (seed set and
/// temperature exactly 0).
fn reproducible_seed(request: &Value) -> Option<i64> {
    let options = request.get("options")?;
    let seed = options.get("seed")?.as_i64()?;
    (options.get("temperature")?.as_f64()? == 0.0).then_some(seed)
}

/// Classification shortcut: earliest keyword in the user text, if the system
/// prompt talks about categories.
fn keyword_label(prompt: &Prompt, table: &BTreeMap<String, String>) -> Option<String> {
    let system = prompt.system.as_deref()?;
    if !system.to_lowercase().contains("categories") {
        return None;
    }
    prompt
        .last_user
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|word| table.get(word).cloned())
}

/// Reply text for a generate or chat request body.
///
/// `nonce` is mixed in unless the request is reproducible, so callers pass
/// a fresh random value per request.
pub fn mock_completion(model: &ModelTag, request: &Value, keywords: &BTreeMap<String, String>, nonce: u64) -> String {
    let prompt = extract(request);
    if let Some(label) = keyword_label(&prompt, keywords) {
        return label;
    }
    let mut key = json!({
        "model": model.canonical(),
        "input": normalize_strings(&prompt.input),
    });
    match reproducible_seed(request) {
        Some(seed) => key["seed"] = json!(seed),
        None => key["nonce"] = json!(nonce),
    }
    let hash = stable_hash(canonical_json(&key).as_bytes());
    let echo: String = normalize_whitespace(&prompt.last_user)
        .chars()
        .take(ECHO_CHARS)
        .collect();
    format!("mock({:08x}): {echo}", hash >> 32)
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic embedding: entry `i` is a counter-based PRNG draw keyed by
/// the hash of (model, text), mapped into [-1, 1).
pub fn mock_embedding(model: &ModelTag, text: &str, dimension: usize) -> Vec<f64> {
    const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
    let seed = stable_hash(canonical_json(&json!({"model": model.canonical(), "text": text})).as_bytes());
    (0..dimension as u64)
        .map(|i| {
            let bits = splitmix64(seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GAMMA)));
            let unit = (bits >> 11) as f64 / (1u64 << 53) as f64;
            unit * 2.0 - 1.0
        })
        .collect()
}

/// Splits a completion into the deltas a streaming reply sends.
pub fn tokens(text: &str) -> Vec<&str> {
    text.split_inclusive(' ').collect()
}

pub fn model_digest(model: &ModelTag) -> String {
    let h = stable_hash(model.canonical().as_bytes());
    (0..4u64).map(|i| format!("{:016x}", splitmix64(h ^ i))).collect()
}

pub fn model_size(model: &ModelTag) -> u64 {
    1_000_000 + stable_hash(model.canonical().as_bytes()) % 4_000_000_000
}

/// Progress records for pulling `model`, ending with `{"status":"success"}`.
pub fn pull_lines(model: &ModelTag) -> Vec<Value> {
    let digest = model_digest(model);
    let total = model_size(model);
    let mut lines = vec![json!({"status": "pulling manifest"})];
    for quarter in 0..=4u64 {
        lines.push(json!({
            "status": format!("pulling {}", &digest[..12]),
            "digest": format!("sha256:{digest}"),
            "total": total,
            "completed": total * quarter / 4,
        }));
    }
    lines.push(json!({"status": "verifying sha256 digest"}));
    lines.push(json!({"status": "writing manifest"}));
    lines.push(json!({"status": "success"}));
    lines
}
