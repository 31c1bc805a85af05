use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub const DEFAULT_MODEL: &str = "llama2";
pub const DEFAULT_TAG: &str = "latest";

/// A `name[:tag]` model identifier.
///
/// The tag is remembered only if it was written out, so a tag parsed from
/// `"llava"` renders back as `"llava"` while still comparing as
/// `llava:latest` through [`ModelTag::canonical`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelTag {
    name: String,
    tag: Option<String>,
}

impl ModelTag {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            tag: None,
        }
    }

    pub fn with_tag(name: impl Into<String>, tag: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            tag: Some(tag.into()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> &str {
        self.tag.as_deref().unwrap_or(DEFAULT_TAG)
    }

    pub fn has_explicit_tag(&self) -> bool {
        self.tag.is_some()
    }

    /// Always `name:tag`, with the default tag filled in.
    pub fn canonical(&self) -> String {
        format!("{}:{}", self.name, self.tag())
    }

    /// True when both refer to the same local model, ignoring whether the
    /// default tag was spelled out.
    pub fn same_model(&self, other: &ModelTag) -> bool {
        self.name == other.name && self.tag() == other.tag()
    }
}

impl Default for ModelTag {
    fn default() -> Self {
        Self::new(DEFAULT_MODEL)
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tag {
            Some(tag) => write!(f, "{}:{}", self.name, tag),
            None => f.write_str(&self.name),
        }
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        // A colon followed by a slash belongs to a registry host:port, not a tag.
        let (name, tag) = match s.rfind(':') {
            Some(i) if !s[i + 1..].contains('/') => (&s[..i], Some(&s[i + 1..])),
            _ => (s, None),
        };
        if name.is_empty() {
            return Err(Error::invalid(format!("model tag {s:?} has an empty name")));
        }
        if name.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("model tag {s:?} contains whitespace")));
        }
        match tag {
            Some("") => Err(Error::invalid(format!("model tag {s:?} has an empty tag"))),
            Some(t) => Ok(Self::with_tag(name, t)),
            None => Ok(Self::new(name)),
        }
    }
}

impl Serialize for ModelTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
