//! History-preserving chat.
//!
//! [`Client::generate`] treats every prompt as a new conversation; a
//! [`ChatSession`] instead resends the whole exchange so follow-up questions
//! see the earlier turns. The system prompt is kept outside the history and
//! prepended per request, so [`ChatSession::reset`] can keep it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::{Base64Image, ChatMessage, Client, GenerationOptions, ModelTag, Role, Sink};

#[derive(Debug, Clone, PartialEq)]
pub struct ChatSession {
    model: ModelTag,
    system_prompt: Option<String>,
    history: Vec<ChatMessage>,
    options: GenerationOptions,
}

#[derive(Serialize, Deserialize)]
struct TranscriptHeader {
    model: ModelTag,
    options: GenerationOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    system: Option<String>,
}

impl ChatSession {
    pub fn new(model: ModelTag, system_prompt: Option<String>, options: GenerationOptions) -> Self {
        Self {
            model,
            system_prompt,
            history: Vec::new(),
            options,
        }
    }

    pub fn model(&self) -> &ModelTag {
        &self.model
    }

    pub fn system_prompt(&self) -> Option<&str> {
        self.system_prompt.as_deref()
    }

    pub fn options(&self) -> &GenerationOptions {
        &self.options
    }

    /// Completed turns only: user, assistant, user, assistant, ...
    pub fn history(&self) -> &[ChatMessage] {
        &self.history
    }

    /// The message array sent for the next user turn.
    pub fn request_messages(&self, next: &ChatMessage) -> Vec<ChatMessage> {
        let mut messages = Vec::with_capacity(self.history.len() + 2);
        if let Some(system) = &self.system_prompt {
            messages.push(ChatMessage::system(system.clone()));
        }
        messages.extend(self.history.iter().cloned());
        messages.push(next.clone());
        messages
    }

    /// Sends one user turn and records it together with the reply.
    /// On failure the history is left untouched.
    pub async fn chat(&mut self, client: &Client, user_text: &str, images: Vec<Base64Image>) -> Result<String> {
        self.exchange(client, user_text, images, None).await
    }

    /// Like [`chat`](Self::chat) but streams the reply through `sink`.
    pub async fn chat_streaming(
        &mut self,
        client: &Client,
        user_text: &str,
        images: Vec<Base64Image>,
        sink: Sink<'_>,
    ) -> Result<String> {
        self.exchange(client, user_text, images, Some(sink)).await
    }

    async fn exchange(
        &mut self,
        client: &Client,
        user_text: &str,
        images: Vec<Base64Image>,
        sink: Option<Sink<'_>>,
    ) -> Result<String> {
        if user_text.trim().is_empty() {
            return Err(Error::invalid("chat message must not be empty"));
        }
        let user = ChatMessage::user_with_images(user_text, images);
        let messages = self.request_messages(&user);
        let reply = client.chat(&messages, &self.model, &self.options, sink).await?;
        let text = reply.content.clone();
        self.history.push(user);
        self.history.push(reply);
        Ok(text)
    }

    /// Forgets the conversation; model, system prompt and options stay.
    pub fn reset(&mut self) {
        self.history.clear();
    }

    /// JSONL: a header line `{"model","options","system"?}` followed by one
    /// message object per line.
    pub fn write_transcript<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = TranscriptHeader {
            model: self.model.clone(),
            options: self.options.clone(),
            system: self.system_prompt.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for message in &self.history {
            serde_json::to_writer(&mut out, message)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save_transcript(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_transcript(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_transcript<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header_line = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line.map_err(|e| Error::malformed("transcript", e.to_string()))?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::malformed("transcript", "missing header line")),
            }
        };
        let header: TranscriptHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::malformed("transcript", format!("header: {e}")))?;
        let mut session = Self::new(header.model, header.system, header.options);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::malformed("transcript", e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let message: ChatMessage = serde_json::from_str(&line)
                .map_err(|e| Error::malformed("transcript", format!("line {}: {e}", i + 1)))?;
            message
                .check()
                .map_err(|e| Error::malformed("transcript", format!("line {}: {e}", i + 1)))?;
            let expected = if session.history.len().is_multiple_of(2) {
                Role::User
            } else {
                Role::Assistant
            };
            if message.role != expected {
                return Err(Error::malformed(
                    "transcript",
                    format!("line {}: expected a {expected} message, found {}", i + 1, message.role),
                ));
            }
            session.history.push(message);
        }
        if session.history.len() % 2 == 1 {
            return Err(Error::malformed("transcript", "ends with an unanswered user message"));
        }
        Ok(session)
    }

    pub fn load_transcript(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_transcript(BufReader::new(file))
    }
}
