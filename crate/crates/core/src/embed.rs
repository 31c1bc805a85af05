//! Document embeddings: one vector per text, collected into a matrix that
//! can be written out for downstream model training.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::TableFormat;
use crate::pool::try_map_ordered;
use crate::transport::{Client, ModelTag};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    model: ModelTag,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    dimension: usize,
}

impl EmbeddingMatrix {
    pub fn new(model: ModelTag, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(Self {
            model,
            ids: Vec::new(),
            vectors: Vec::new(),
            dimension,
        })
    }

    pub fn push(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                id,
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        self.ids.push(id);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn model(&self) -> &ModelTag {
        &self.model
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.vectors.iter().map(Vec::as_slice))
    }
}

/// Rescales `v` to unit Euclidean norm. Zero vectors are left as they are.
pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Embeds every `(id, text)` pair, keeping input order.
///
/// The first reply fixes the matrix dimension and every later reply must
/// match it. Any failure aborts the whole call.
pub async fn embed_texts(
    client: &Client,
    texts: &[(String, String)],
    model: &ModelTag,
    normalize_rows: bool,
    concurrency: usize,
) -> Result<EmbeddingMatrix> {
    if texts.is_empty() {
        return Err(Error::invalid("nothing to embed"));
    }
    if concurrency == 0 {
        return Err(Error::invalid("concurrency must be at least 1"));
    }
    let mut seen = HashSet::new();
    if let Some((dup, _)) = texts.iter().find(|(id, _)| !seen.insert(id.as_str())) {
        return Err(Error::invalid(format!("duplicate id {dup:?}")));
    }
    if let Some((id, _)) = texts.iter().find(|(_, t)| t.is_empty()) {
        return Err(Error::invalid(format!("text {id:?} is empty")));
    }

    let vectors = try_map_ordered(texts, concurrency, |(_, text)| client.embed(text, model)).await?;
    let dimension = vectors[0].len();
    if dimension == 0 {
        return Err(Error::DimensionMismatch {
            id: texts[0].0.clone(),
            expected: 1,
            actual: 0,
        });
    }
    let mut matrix = EmbeddingMatrix::new(model.clone(), dimension)?;
    for ((id, _), mut v) in texts.iter().zip(vectors) {
        if normalize_rows {
            normalize(&mut v);
        }
        matrix.push(id.clone(), v)?;
    }
    Ok(matrix)
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    model: ModelTag,
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonlRow {
    id: String,
    embedding: Vec<f64>,
}

/// 17 significant digits: enough for any f64 to read back bit-identical.
fn render(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV: header `id,d0,d1,…` then one row per text.
/// JSONL: a `{"model","dimension"}` header line, then `{"id","embedding"}` rows.
pub fn write_matrix_to<W: Write>(matrix: &EmbeddingMatrix, mut out: W, format: TableFormat) -> std::io::Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let header: Vec<String> = std::iter::once("id".to_owned())
                .chain((0..matrix.dimension).map(|i| format!("d{i}")))
                .collect();
            w.write_record(&header)?;
            for (id, v) in matrix.rows() {
                w.write_record(std::iter::once(id.to_owned()).chain(v.iter().map(|x| render(*x))))?;
            }
            w.flush()
        }
        TableFormat::Jsonl => {
            let header = JsonlHeader {
                model: matrix.model.clone(),
                dimension: matrix.dimension,
            };
            serde_json::to_writer(&mut out, &header)?;
            out.write_all(b"\n")?;
            for (id, v) in matrix.rows() {
                serde_json::to_writer(
                    &mut out,
                    &JsonlRow {
                        id: id.to_owned(),
                        embedding: v.to_vec(),
                    },
                )?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

pub fn write_matrix(matrix: &EmbeddingMatrix, path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_to(matrix, BufWriter::new(file), format).map_err(|e| Error::io(path, e))
}

/// Reads a matrix back. CSV carries no model name, so `model` is used for
/// it; JSONL takes the model from its header.
pub fn read_matrix_from<R: Read>(reader: R, format: TableFormat, model: &ModelTag) -> Result<EmbeddingMatrix> {
    let bad = |detail: String| Error::malformed("embedding matrix", detail);
    match format {
        TableFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(reader);
            let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
            if headers.get(0) != Some("id") {
                return Err(bad("first column must be \"id\"".into()));
            }
            let mut matrix = EmbeddingMatrix::new(model.clone(), headers.len() - 1)?;
            for row in rdr.records() {
                let row = row.map_err(|e| bad(e.to_string()))?;
                let values = row
                    .iter()
                    .skip(1)
                    .map(|cell| cell.parse::<f64>().map_err(|e| bad(format!("{cell:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                matrix.push(&row[0], values)?;
            }
            Ok(matrix)
        }
        TableFormat::Jsonl => {
            let mut lines = BufReader::new(reader).lines();
            let header = lines
                .next()
                .ok_or_else(|| bad("missing header line".into()))?
                .map_err(|e| bad(e.to_string()))?;
            let header: JsonlHeader = serde_json::from_str(&header).map_err(|e| bad(format!("header: {e}")))?;
            let mut matrix = EmbeddingMatrix::new(header.model, header.dimension)?;
            for line in lines {
                let line = line.map_err(|e| bad(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let row: JsonlRow = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
                matrix.push(row.id, row.embedding)?;
            }
            Ok(matrix)
        }
    }
}

pub fn read_matrix(path: impl AsRef<Path>, format: TableFormat, model: &ModelTag) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_from(BufReader::new(file), format, model)
}
