//! Text annotation: prompt construction for zero-, one- and few-shot and
//! chain-of-thought classification, answer validation, and a batch runner
//! over CSV/JSONL corpora.

mod batch;
mod corpus;
mod prompt;
mod validate;

pub use batch::{annotate_batch, BatchOptions};
pub use corpus::{
    parse_categories, read_corpus, read_corpus_from, read_examples, write_results, write_results_to, AnnotationRecord,
    CATEGORY_SEPARATOR,
};
pub use prompt::{
    build_messages, Example, PromptTemplate, Strategy, DEFAULT_SYSTEM_PROMPT, DEFAULT_USER_FORMAT,
    REASONING_INSTRUCTION,
};
pub use validate::{normalize_label, validate_answer, validate_reasoned_answer, ValidationError};
