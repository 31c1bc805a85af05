use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("response {raw:?} matches none of the categories")]
    NoMatch { raw: String },
    #[error("category list is empty")]
    NoCategories,
    #[error("categories {0:?} and {1:?} are indistinguishable after normalization")]
    AmbiguousCategories(String, String),
}

fn is_decoration(c: char) -> bool {
    c.is_whitespace() || c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’' | '«' | '»' | '…')
}

/// Trims whitespace and surrounding punctuation, then case-folds.
pub fn normalize_label(s: &str) -> String {
    s.trim_matches(is_decoration).to_lowercase()
}

fn match_label(candidate: &str, raw: &str, categories: &[String]) -> Result<String, ValidationError> {
    if categories.is_empty() {
        return Err(ValidationError::NoCategories);
    }
    let normalized: Vec<String> = categories.iter().map(|c| normalize_label(c)).collect();
    for (i, a) in normalized.iter().enumerate() {
        if let Some(j) = normalized[i + 1..].iter().position(|b| b == a) {
            return Err(ValidationError::AmbiguousCategories(
                categories[i].clone(),
                categories[i + 1 + j].clone(),
            ));
        }
    }
    let wanted = normalize_label(candidate);
    normalized
        .iter()
        .position(|c| *c == wanted)
        .map(|i| categories[i].clone())
        .ok_or_else(|| ValidationError::NoMatch { raw: raw.to_owned() })
}

/// Maps a model reply onto one of `categories`, returning the label as
/// spelled in the list.
pub fn validate_answer(raw: &str, categories: &[String]) -> Result<String, ValidationError> {
    match_label(raw, raw, categories)
}

/// For reasoning-style replies: only the last non-empty line is matched.
pub fn validate_reasoned_answer(raw: &str, categories: &[String]) -> Result<String, ValidationError> {
    let last = raw.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
    match_label(last, raw, categories)
}
