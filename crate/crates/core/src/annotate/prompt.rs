use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::ChatMessage;

pub const DEFAULT_SYSTEM_PROMPT: &str = "You assign texts into categories. Answer with just the correct category.";
pub const DEFAULT_USER_FORMAT: &str = "text: {text}\ncategories: {categories}";
pub const REASONING_INSTRUCTION: &str = "Think step by step, then state only the category on the last line.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    OneShot,
    FewShot,
    ChainOfThought,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero_shot",
            Strategy::OneShot => "one_shot",
            Strategy::FewShot => "few_shot",
            Strategy::ChainOfThought => "chain_of_thought",
        }
    }

    /// Checks the number of worked examples this strategy allows.
    /// Chain-of-thought accepts any number.
    pub fn check_examples(self, count: usize) -> Result<()> {
        let ok = match self {
            Strategy::ZeroShot => count == 0,
            Strategy::OneShot => count == 1,
            Strategy::FewShot => count >= 2,
            Strategy::ChainOfThought => true,
        };
        if ok {
            return Ok(());
        }
        let wanted = match self {
            Strategy::ZeroShot => "no examples",
            Strategy::OneShot => "exactly 1 example",
            _ => "at least 2 examples",
        };
        Err(Error::invalid(format!("{self} needs {wanted}, got {count}")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "zero_shot" => Ok(Strategy::ZeroShot),
            "one_shot" => Ok(Strategy::OneShot),
            "few_shot" => Ok(Strategy::FewShot),
            "chain_of_thought" | "cot" => Ok(Strategy::ChainOfThought),
            _ => Err(Error::invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

/// A worked example: a text and the category it should get.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub answer: String,
}

impl Example {
    pub fn new(text: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            answer: answer.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    system: String,
    examples: Vec<Example>,
    user_format: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system: DEFAULT_SYSTEM_PROMPT.to_owned(),
            examples: Vec::new(),
            user_format: DEFAULT_USER_FORMAT.to_owned(),
        }
    }
}

impl PromptTemplate {
    /// `user_format` may use `{text}` (required) and `{categories}`.
    pub fn new(system: impl Into<String>, examples: Vec<Example>, user_format: impl Into<String>) -> Result<Self> {
        let user_format = user_format.into();
        if !user_format.contains("{text}") {
            return Err(Error::invalid(format!(
                "user format {user_format:?} has no {{text}} placeholder"
            )));
        }
        Ok(Self {
            system: system.into(),
            examples,
            user_format,
        })
    }

    pub fn with_system(mut self, system: impl Into<String>) -> Self {
        self.system = system.into();
        self
    }

    pub fn with_examples(mut self, examples: Vec<Example>) -> Self {
        self.examples = examples;
        self
    }

    pub fn system(&self) -> &str {
        &self.system
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn user_format(&self) -> &str {
        &self.user_format
    }

    /// Fills the placeholders in a single pass, so braces inside `text`
    /// are never themselves expanded.
    pub fn render_user(&self, text: &str, categories: &[String]) -> String {
        let joined = categories.join(", ");
        let mut out = String::with_capacity(self.user_format.len() + text.len() + joined.len());
        let mut rest = self.user_format.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let tail = &rest[open..];
            if let Some(after) = tail.strip_prefix("{text}") {
                out.push_str(text);
                rest = after;
            } else if let Some(after) = tail.strip_prefix("{categories}") {
                out.push_str(&joined);
                rest = after;
            } else {
                out.push('{');
                rest = &tail[1..];
            }
        }
        out.push_str(rest);
        out
    }
}

/// `[system] + (user example, assistant answer)* + [user target]`.
pub fn build_messages(
    template: &PromptTemplate,
    strategy: Strategy,
    text: &str,
    categories: &[String],
) -> Result<Vec<ChatMessage>> {
    strategy.check_examples(template.examples.len())?;
    let system = match strategy {
        Strategy::ChainOfThought => format!("{}\n{REASONING_INSTRUCTION}", template.system),
        _ => template.system.clone(),
    };
    let mut messages = Vec::with_capacity(2 * template.examples.len() + 2);
    messages.push(ChatMessage::system(system));
    for example in &template.examples {
        messages.push(ChatMessage::user(template.render_user(&example.text, categories)));
        messages.push(ChatMessage::assistant(example.answer.clone()));
    }
    messages.push(ChatMessage::user(template.render_user(text, categories)));
    Ok(messages)
}
