use std::collections::BTreeMap;
use std::time::Duration;

use url::Url;

use super::model::ModelTag;
use crate::error::{Error, Result};

pub const DEFAULT_HOST: &str = "http://localhost:11434";
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;
pub const PING_TIMEOUT: Duration = Duration::from_secs(5);

pub const HOST_ENV: &str = "OLLO_HOST";
pub const MODEL_ENV: &str = "OLLO_MODEL";

/// Where and how to reach an Ollama-compatible server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    base_url: Url,
    timeout: Duration,
    extra_headers: BTreeMap<String, String>,
    default_model: ModelTag,
}

impl ServerConfig {
    /// `base_url` must be an absolute http(s) URL pointing at the server root.
    pub fn new(base_url: &str) -> Result<Self> {
        Ok(Self {
            base_url: parse_base_url(base_url)?,
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_SECS),
            extra_headers: BTreeMap::new(),
            default_model: ModelTag::default(),
        })
    }

    /// Reads `OLLO_HOST` and `OLLO_MODEL`, falling back to the defaults.
    pub fn from_env() -> Result<Self> {
        let host = std::env::var(HOST_ENV).unwrap_or_else(|_| DEFAULT_HOST.to_owned());
        let mut config = Self::new(&host)?;
        if let Ok(model) = std::env::var(MODEL_ENV) {
            config.default_model = model.parse()?;
        }
        Ok(config)
    }

    pub fn with_timeout_secs(mut self, secs: u64) -> Result<Self> {
        if secs == 0 {
            return Err(Error::invalid("timeout must be at least one second"));
        }
        self.timeout = Duration::from_secs(secs);
        Ok(self)
    }

    pub fn with_header(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.extra_headers.insert(name.into(), value.into());
        self
    }

    pub fn with_default_model(mut self, model: ModelTag) -> Self {
        self.default_model = model;
        self
    }

    pub fn base_url(&self) -> &Url {
        &self.base_url
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn extra_headers(&self) -> &BTreeMap<String, String> {
        &self.extra_headers
    }

    pub fn default_model(&self) -> &ModelTag {
        &self.default_model
    }

    pub(crate) fn endpoint(&self, path: &str) -> Url {
        // base_url has an empty path by construction, so join never drops segments.
        self.base_url.join(path).expect("endpoint paths are static and valid")
    }
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self::new(DEFAULT_HOST).expect("default host is a valid URL")
    }
}

fn parse_base_url(raw: &str) -> Result<Url> {
    let url = Url::parse(raw.trim()).map_err(|e| Error::invalid(format!("base URL {raw:?}: {e}")))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(Error::invalid(format!("base URL {raw:?} must use http or https")));
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(Error::invalid(format!("base URL {raw:?} has no host")));
    }
    if url.path() != "/" || url.query().is_some() || url.fragment().is_some() {
        return Err(Error::invalid(format!(
            "base URL {raw:?} must point at the server root (no path, query or fragment)"
        )));
    }
    Ok(url)
}
