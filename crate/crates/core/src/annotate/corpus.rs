use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prompt::Example;
use crate::error::{Error, Result};
use crate::format::TableFormat;

/// In-cell separator for the category list in CSV files.
pub const CATEGORY_SEPARATOR: char = '|';

/// One text to classify plus, after a batch run, its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AnnotationRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, categories: Vec<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            categories,
            answer: None,
            raw_response: None,
            error: None,
        }
    }
}

/// Splits a `"a|b|c"` category list, dropping empty entries.
pub fn parse_categories(cell: &str) -> Vec<String> {
    cell.split(CATEGORY_SEPARATOR)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::malformed("corpus", e.to_string())
}

/// Reads a corpus. CSV needs `id` and `text` columns; a `categories` cell
/// (`|`-separated) overrides `default_categories` for its row.
pub fn read_corpus_from<R: Read>(
    reader: R,
    format: TableFormat,
    default_categories: &[String],
) -> Result<Vec<AnnotationRecord>> {
    let mut records = match format {
        TableFormat::Csv => read_csv(reader)?,
        TableFormat::Jsonl => read_jsonl(reader, "corpus")?,
    };
    let mut seen = HashSet::new();
    for record in &mut records {
        if !seen.insert(record.id.clone()) {
            return Err(Error::malformed("corpus", format!("duplicate id {:?}", record.id)));
        }
        if record.categories.is_empty() {
            record.categories = default_categories.to_vec();
        }
    }
    Ok(records)
}

pub fn read_corpus(
    path: impl AsRef<Path>,
    format: TableFormat,
    default_categories: &[String],
) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus_from(BufReader::new(file), format, default_categories)
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = column("id").ok_or_else(|| Error::malformed("corpus", "missing required column \"id\""))?;
    let text_col = column("text").ok_or_else(|| Error::malformed("corpus", "missing required column \"text\""))?;
    let categories_col = column("categories");
    let answer_col = column("answer");
    let raw_col = column("raw_response");
    let error_col = column("error");

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let cell = |col: Option<usize>| {
            col.and_then(|c| row.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
        };
        out.push(AnnotationRecord {
            id: row.get(id_col).unwrap_or_default().to_owned(),
            text: row.get(text_col).unwrap_or_default().to_owned(),
            categories: cell(categories_col).map(|c| parse_categories(&c)).unwrap_or_default(),
            answer: cell(answer_col),
            raw_response: cell(raw_col),
            error: cell(error_col),
        });
    }
    Ok(out)
}

fn read_jsonl<R: Read, T: for<'de> Deserialize<'de>>(reader: R, what: &'static str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::malformed(what, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::malformed(what, format!("line {}: {e}", i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// Writes records with their `answer`, `raw_response` and `error` columns.
pub fn write_results_to<W: Write>(records: &[AnnotationRecord], mut out: W, format: TableFormat) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["id", "text", "categories", "answer", "raw_response", "error"])
                .map_err(csv_error)?;
            for r in records {
                let categories = r.categories.join(&CATEGORY_SEPARATOR.to_string());
                w.write_record([
                    r.id.as_str(),
                    r.text.as_str(),
                    categories.as_str(),
                    r.answer.as_deref().unwrap_or(""),
                    r.raw_response.as_deref().unwrap_or(""),
                    r.error.as_deref().unwrap_or(""),
                ])
                .map_err(csv_error)?;
            }
            w.flush().map_err(|e| Error::io("<results>", e))
        }
        TableFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut out, r).map_err(|e| Error::io("<results>", e.into()))?;
                out.write_all(b"\n").map_err(|e| Error::io("<results>", e))?;
            }
            out.flush().map_err(|e| Error::io("<results>", e))
        }
    }
}

pub fn write_results(records: &[AnnotationRecord], path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_results_to(records, BufWriter::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Worked examples for one- and few-shot prompts: `text` and `answer` columns.
pub fn read_examples(path: impl AsRef<Path>, format: TableFormat) -> Result<Vec<Example>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        TableFormat::Jsonl => read_jsonl(BufReader::new(file), "examples"),
        TableFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(BufReader::new(file));
            rdr.deserialize()
                .map(|row| row.map_err(|e| Error::malformed("examples", e.to_string())))
                .collect()
        }
    }
}
