//! Drive the mock server directly: fault injection and the capture log.

use ollo::mockd::{Fault, MockConfig, MockServer};
use ollo::transport::{GenerationOptions, ModelTag};

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let config = MockConfig::default()
        .with_chunk_size(7)
        .with_content_fault("BOOM", Fault::Http500);
    let server = MockServer::start(config).await?;
    let client = server.client();
    println!("mock listening on {}", server.url());

    let model = ModelTag::default();
    let opts = GenerationOptions::reproducible(1);
    let ok = client.generate("hello there", &model, &opts, &[], None).await?;
    println!("ok:     {}", ok.text);
    match client.generate("BOOM goes the request", &model, &opts, &[], None).await {
        Ok(c) => println!("unexpected success: {}", c.text),
        Err(e) => println!("fault:  {e}"),
    }
    match client.generate("hi", &ModelTag::new("mistral"), &opts, &[], None).await {
        Ok(c) => println!("unexpected success: {}", c.text),
        Err(e) => println!("absent: {e}"),
    }

    for entry in server.capture() {
        println!("#{} {} {} {}", entry.seq, entry.method, entry.path, entry.body);
    }
    server.shutdown().await;
    Ok(())
}
