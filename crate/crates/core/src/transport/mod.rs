//! Wire-level client for the Ollama HTTP API.
//!
//! Covers request construction for the six endpoints the toolkit uses
//! (`/api/version`, `/api/tags`, `/api/pull`, `/api/generate`, `/api/chat`,
//! `/api/embeddings`), incremental NDJSON decoding of streamed replies and
//! base64 encoding of image attachments.

mod client;
mod config;
mod error;
mod message;
mod model;
mod options;
mod stream;

pub use client::{Client, Completion, ModelInfo, PullResult, ServerStatus, Sink};
pub use config::{ServerConfig, DEFAULT_HOST, DEFAULT_TIMEOUT_SECS, HOST_ENV, MODEL_ENV, PING_TIMEOUT};
pub use error::{ApiError, ApiErrorKind};
pub use message::{encode_image, Base64Image, ChatMessage, Role};
pub use model::{ModelTag, DEFAULT_MODEL, DEFAULT_TAG};
pub use options::{GenerationOptions, OptionValue};
pub use stream::{decode_ndjson, NdjsonDecoder, Stats, StreamEvent};
