//! Zero-shot and few-shot sentiment labels for a small corpus.

mod common;

use ollo::annotate::{annotate_batch, AnnotationRecord, BatchOptions, Example, PromptTemplate, Strategy};
use ollo::transport::ModelTag;

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let (client, _mock) = common::connect().await?;
    let categories: Vec<String> = ["positive", "neutral", "negative"].map(String::from).to_vec();
    let texts = [
        "the pizza tastes terrible",
        "the pasta was delicious",
        "an average espresso",
        "the waiter recited a poem",
    ];
    let records: Vec<AnnotationRecord> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| AnnotationRecord::new(i.to_string(), *t, categories.clone()))
        .collect();
    let batch = BatchOptions::new(ModelTag::default()).with_seed(42).with_concurrency(4);

    let zero = annotate_batch(
        &client,
        records.clone(),
        &PromptTemplate::default(),
        Strategy::ZeroShot,
        &batch,
        |_, _| {},
    )
    .await?;

    let few_template = PromptTemplate::default().with_examples(vec![
        Example::new("the soup was great", "positive"),
        Example::new("the bread was okay", "neutral"),
    ]);
    let few = annotate_batch(
        &client,
        records,
        &few_template,
        Strategy::FewShot,
        &batch,
        |done, total| eprintln!("few-shot {done}/{total}"),
    )
    .await?;

    for (z, f) in zero.iter().zip(&few) {
        let show = |r: &AnnotationRecord| match (&r.answer, &r.error) {
            (Some(a), _) => a.clone(),
            _ => "(no label)".to_owned(),
        };
        println!("{:<30} zero-shot: {:<10} few-shot: {}", z.text, show(z), show(f));
    }
    Ok(())
}
