use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A scalar value for an option the client does not model explicitly
/// (`top_k`, `num_ctx`, `stop`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptionValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<bool> for OptionValue {
    fn from(v: bool) -> Self {
        OptionValue::Bool(v)
    }
}

impl From<i64> for OptionValue {
    fn from(v: i64) -> Self {
        OptionValue::Int(v)
    }
}

impl From<f64> for OptionValue {
    fn from(v: f64) -> Self {
        OptionValue::Real(v)
    }
}

impl From<&str> for OptionValue {
    fn from(v: &str) -> Self {
        OptionValue::Text(v.to_owned())
    }
}

/// Per-request decoding knobs, sent as the `options` object.
///
/// Only fields that were set are serialized; nothing is ever sent as `null`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationOptions {
    seed: Option<i64>,
    temperature: Option<f64>,
    extras: BTreeMap<String, OptionValue>,
}

const RESERVED: [&str; 2] = ["seed", "temperature"];

impl GenerationOptions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seed plus temperature 0: the combination under which repeated
    /// prompts give the same output.
    pub fn reproducible(seed: i64) -> Self {
        Self {
            seed: Some(seed),
            temperature: Some(0.0),
            extras: BTreeMap::new(),
        }
    }

    pub fn with_seed(mut self, seed: i64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be a non-negative number, got {temperature}"
            )));
        }
        self.temperature = Some(temperature);
        Ok(self)
    }

    pub fn with_extra(mut self, name: impl Into<String>, value: impl Into<OptionValue>) -> Result<Self> {
        let name = name.into();
        if RESERVED.contains(&name.as_str()) {
            return Err(Error::invalid(format!("option {name:?} has a dedicated setter")));
        }
        self.extras.insert(name, value.into());
        Ok(self)
    }

    pub fn seed(&self) -> Option<i64> {
        self.seed
    }

    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    pub fn extras(&self) -> &BTreeMap<String, OptionValue> {
        &self.extras
    }

    pub fn is_empty(&self) -> bool {
        self.seed.is_none() && self.temperature.is_none() && self.extras.is_empty()
    }

    /// Seeded with temperature exactly 0.
    pub fn is_reproducible(&self) -> bool {
        self.seed.is_some() && self.temperature == Some(0.0)
    }

    /// Fills in `seed` (and temperature 0 when no temperature is set).
    pub fn seeded_default(mut self, seed: i64) -> Self {
        self.seed = Some(seed);
        self.temperature.get_or_insert(0.0);
        self
    }
}

impl Serialize for GenerationOptions {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let len = self.seed.is_some() as usize + self.temperature.is_some() as usize + self.extras.len();
        let mut map = serializer.serialize_map(Some(len))?;
        if let Some(seed) = self.seed {
            map.serialize_entry("seed", &seed)?;
        }
        if let Some(t) = self.temperature {
            map.serialize_entry("temperature", &t)?;
        }
        for (k, v) in &self.extras {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for GenerationOptions {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            seed: Option<i64>,
            temperature: Option<f64>,
            #[serde(flatten)]
            extras: BTreeMap<String, OptionValue>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut opts = GenerationOptions {
            seed: raw.seed,
            temperature: None,
            extras: raw.extras,
        };
        if let Some(t) = raw.temperature {
            opts = opts.with_temperature(t).map_err(serde::de::Error::custom)?;
        }
        Ok(opts)
    }
}
