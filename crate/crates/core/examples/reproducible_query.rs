//! A seed with temperature 0 gives the same completion every time.

mod common;

use ollo::transport::{GenerationOptions, ModelTag};

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let (client, _mock) = common::connect().await?;
    let model = ModelTag::default();
    let prompt = "Why is the sky blue? Answer in one sentence.";

    let seeded = GenerationOptions::reproducible(42);
    let a = client.generate(prompt, &model, &seeded, &[], None).await?;
    let b = client.generate(prompt, &model, &seeded, &[], None).await?;
    println!("seeded #1: {}", a.text);
    println!("seeded #2: {}", b.text);
    println!("identical: {}", a.text == b.text);

    let free = GenerationOptions::new();
    let c = client.generate(prompt, &model, &free, &[], None).await?;
    println!("unseeded:  {}", c.text);
    Ok(())
}
