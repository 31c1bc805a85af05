use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::corpus::AnnotationRecord;
use super::prompt::{build_messages, PromptTemplate, Strategy};
use super::validate::{validate_answer, validate_reasoned_answer};
use crate::error::{Error, Result};
use crate::pool::map_ordered;
use crate::transport::{ApiError, ChatMessage, Client, GenerationOptions, ModelTag};

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub model: ModelTag,
    pub options: GenerationOptions,
    /// When set, requests use this seed and (unless `options` says
    /// otherwise) temperature 0.
    pub seed: Option<i64>,
    pub concurrency: usize,
}

impl BatchOptions {
    pub fn new(model: ModelTag) -> Self {
        Self {
            model,
            options: GenerationOptions::new(),
            seed: None,
            concurrency: 1,
        }
    }

    pub fn with_seed(mut self, seed: i64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_concurrency(mut self, concurrency: usize) -> Self {
        self.concurrency = concurrency;
        self
    }

    pub fn with_options(mut self, options: GenerationOptions) -> Self {
        self.options = options;
        self
    }

    fn effective_options(&self) -> GenerationOptions {
        match self.seed {
            Some(seed) => self.options.clone().seeded_default(seed),
            None => self.options.clone(),
        }
    }
}

/// Annotates every record independently and returns them in input order.
///
/// Each output record has exactly one of `answer` and `error` set. A failing
/// record never stops the batch; only setup problems (bad template for the
/// strategy, duplicate ids, unreachable server) return `Err`.
/// `progress(done, total)` is called after each record finishes.
pub async fn annotate_batch<P>(
    client: &Client,
    records: Vec<AnnotationRecord>,
    template: &PromptTemplate,
    strategy: Strategy,
    batch: &BatchOptions,
    progress: P,
) -> Result<Vec<AnnotationRecord>>
where
    P: Fn(usize, usize) + Sync,
{
    if batch.concurrency == 0 {
        return Err(Error::invalid("concurrency must be at least 1"));
    }
    strategy.check_examples(template.examples().len())?;
    let mut ids = HashSet::new();
    if let Some(dup) = records.iter().find(|r| !ids.insert(r.id.as_str())) {
        return Err(Error::invalid(format!("duplicate record id {:?}", dup.id)));
    }
    if records.is_empty() {
        return Ok(records);
    }
    let status = client.ping().await;
    if !status.reachable {
        return Err(ApiError::unreachable(format!("no server at {}", client.config().base_url())).into());
    }

    let options = batch.effective_options();
    let total = records.len();
    let done = AtomicUsize::new(0);
    let results = map_ordered(records, batch.concurrency, |record| {
        let options = &options;
        let done = &done;
        let progress = &progress;
        async move {
            let out = annotate_one(client, record, template, strategy, &batch.model, options).await;
            progress(done.fetch_add(1, Ordering::SeqCst) + 1, total);
            out
        }
    })
    .await;
    Ok(results)
}

async fn annotate_one(
    client: &Client,
    mut record: AnnotationRecord,
    template: &PromptTemplate,
    strategy: Strategy,
    model: &ModelTag,
    options: &GenerationOptions,
) -> AnnotationRecord {
    record.answer = None;
    record.raw_response = None;
    record.error = None;
    if record.categories.is_empty() {
        record.error = Some("record has no categories".into());
        return record;
    }
    let messages = match build_messages(template, strategy, &record.text, &record.categories) {
        Ok(m) => m,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let reply = match chat_with_retry(client, &messages, model, options).await {
        Ok(reply) => reply.content,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let validated = match strategy {
        Strategy::ChainOfThought => validate_reasoned_answer(&reply, &record.categories),
        _ => validate_answer(&reply, &record.categories),
    };
    record.raw_response = Some(reply);
    match validated {
        Ok(label) => record.answer = Some(label),
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// One retry, and only after a timeout.
async fn chat_with_retry(
    client: &Client,
    messages: &[ChatMessage],
    model: &ModelTag,
    options: &GenerationOptions,
) -> Result<ChatMessage> {
    match client.chat(messages, model, options, None).await {
        Err(Error::Api(e)) if e.is_timeout() => client.chat(messages, model, options, None).await,
        other => other,
    }
}
