//! Attach an image to a prompt for a vision model.
//!
//! Pass a file path or http(s) URL as the first argument; without one a
//! 1x1 PNG is written to a temp file and used instead.

mod common;

use ollo::transport::{encode_image, GenerationOptions, ModelTag, StreamEvent};

const TINY_PNG: &[u8] = &[
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00,
    0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1f, 0x15, 0xc4, 0x89, 0x00, 0x00, 0x00, 0x0d, 0x49,
    0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x00, 0x01, 0x00, 0x00, 0x05, 0x00, 0x01, 0x0d, 0x0a, 0x2d, 0xb4, 0x00, 0x00,
    0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let (client, _mock) = common::connect().await?;
    let source = match std::env::args().nth(1) {
        Some(s) => s,
        None => {
            let path = std::env::temp_dir().join("ollo-logo.png");
            std::fs::write(&path, TINY_PNG).map_err(|e| ollo::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            path.to_string_lossy().into_owned()
        }
    };
    let image = encode_image(&source).await?;
    println!("{source}: {} base64 chars", image.data.len());

    let llava = ModelTag::new("llava");
    client.pull_model(Some(&llava), &mut |_: &StreamEvent| {}).await?;
    let reply = client
        .generate(
            "Excitedly desscribe this logo",
            &llava,
            &GenerationOptions::new(),
            &[image],
            None,
        )
        .await?;
    println!("{}", reply.text);
    Ok(())
}
