//! Turn a handful of texts into a normalized embedding matrix and write it as CSV.

mod common;

use ollo::embed::{embed_texts, read_matrix, write_matrix};
use ollo::transport::ModelTag;
use ollo::TableFormat;

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let (client, _mock) = common::connect().await?;
    let model = ModelTag::new("nomic-embed-text");
    let texts: Vec<(String, String)> = [
        "It’s a beautiful day",
        "It is raining again",
        "Llamas are domesticated South American camelids",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| (format!("doc{i}"), t.to_string()))
    .collect();

    let matrix = embed_texts(&client, &texts, &model, true, 2).await?;
    println!("{} texts x {} dimensions", matrix.len(), matrix.dimension());

    let v = &matrix.vectors();
    let cosine = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    println!("cos(doc0, doc1) = {:+.4}", cosine(&v[0], &v[1]));
    println!("cos(doc0, doc2) = {:+.4}", cosine(&v[0], &v[2]));

    let path = std::env::temp_dir().join("ollo-embeddings.csv");
    write_matrix(&matrix, &path, TableFormat::Csv)?;
    let back = read_matrix(&path, TableFormat::Csv, &model)?;
    println!("wrote {} (round trip exact: {})", path.display(), back == matrix);
    Ok(())
}
