//! Client toolkit for a local Ollama server: transport, chat sessions, text
//! annotation, document embeddings, a deterministic mock server and the
//! `ollo` command line.

pub mod annotate;
pub mod cli;
pub mod embed;
pub mod error;
pub mod format;
pub mod mockd;
mod pool;
pub mod session;
pub mod transport;

pub use error::{Error, Result};
pub use format::TableFormat;
pub use session::ChatSession;
pub use transport::{
    ApiError, ApiErrorKind, ChatMessage, Client, GenerationOptions, ModelTag, Role, ServerConfig, StreamEvent,
};
