use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "system" => Ok(Role::System),
            "user" => Ok(Role::User),
            "assistant" => Ok(Role::Assistant),
            other => Err(Error::invalid(format!("unknown role {other:?}"))),
        }
    }
}

/// Image bytes in the form the API expects: standard base64, no line breaks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Base64Image {
    pub data: String,
    /// File path or URL the bytes came from.
    pub source: String,
}

impl Base64Image {
    pub fn from_bytes(bytes: &[u8], source: impl Into<String>) -> Self {
        Self {
            data: STANDARD.encode(bytes),
            source: source.into(),
        }
    }

    pub fn decode(&self) -> Result<Vec<u8>> {
        STANDARD
            .decode(&self.data)
            .map_err(|e| Error::malformed("image", format!("{}: {e}", self.source)))
    }
}

/// Reads an image from a local path or fetches it from an http(s) URL.
pub async fn encode_image(source: &str) -> Result<Base64Image> {
    if source.starts_with("http://") || source.starts_with("https://") {
        let fetch_err = |detail: String| Error::Fetch {
            url: source.to_owned(),
            detail,
        };
        let resp = reqwest::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| fetch_err(e.to_string()))?
            .get(source)
            .send()
            .await
            .map_err(|e| fetch_err(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(fetch_err(format!("HTTP {}", resp.status().as_u16())));
        }
        let bytes = resp.bytes().await.map_err(|e| fetch_err(e.to_string()))?;
        return Ok(Base64Image::from_bytes(&bytes, source));
    }
    let path = Path::new(source);
    let bytes = tokio::fs::read(path).await.map_err(|e| Error::io(path, e))?;
    Ok(Base64Image::from_bytes(&bytes, source))
}

/// One conversation turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    images: Vec<Base64Image>,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>, images: Vec<Base64Image>) -> Result<Self> {
        if !images.is_empty() && role != Role::User {
            return Err(Error::invalid(format!(
                "images can only be attached to user messages, not {role}"
            )));
        }
        Ok(Self {
            role,
            content: content.into(),
            images,
        })
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::text(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::text(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::text(Role::Assistant, content)
    }

    pub fn user_with_images(content: impl Into<String>, images: Vec<Base64Image>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            images,
        }
    }

    fn text(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            images: Vec::new(),
        }
    }

    pub fn images(&self) -> &[Base64Image] {
        &self.images
    }

    /// The message as the chat endpoint expects it: images as bare base64 strings.
    pub(crate) fn to_wire(&self) -> serde_json::Value {
        let mut v = serde_json::json!({"role": self.role, "content": self.content});
        if !self.images.is_empty() {
            v["images"] = self.images.iter().map(|i| i.data.as_str()).collect();
        }
        v
    }

    /// Checks the images-only-on-user invariant after deserialization.
    pub(crate) fn check(&self) -> Result<()> {
        if !self.images.is_empty() && self.role != Role::User {
            return Err(Error::invalid(format!("{} message carries images", self.role)));
        }
        Ok(())
    }
}
