//! Check the server, pull a model with a progress readout, then list models.

mod common;

use ollo::transport::{ModelTag, StreamEvent};

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let (client, _mock) = common::connect().await?;

    let status = client.ping().await;
    println!("reachable: {}, version: {:?}", status.reachable, status.version);

    let model: ModelTag = "llava".parse()?;
    let mut progress = |e: &StreamEvent| {
        if let StreamEvent::PullProgress {
            status,
            completed,
            total,
        } = e
        {
            match (completed, total) {
                (Some(c), Some(t)) if *t > 0 => eprintln!("  {status}: {:>3}%", c * 100 / t),
                _ => eprintln!("  {status}"),
            }
        }
    };
    let pulled = client.pull_model(Some(&model), &mut progress).await?;
    println!("pulled {} ok={}", pulled.model, pulled.ok);

    for m in client.list_models().await? {
        println!(
            "{:<28} {:>12} bytes  {}",
            m.model.canonical(),
            m.size_bytes,
            m.modified_at
        );
    }
    Ok(())
}
