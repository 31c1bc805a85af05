//! A two-turn conversation, streamed to stdout, then saved as a transcript.

mod common;

use std::io::Write;

use ollo::transport::{GenerationOptions, ModelTag, StreamEvent};
use ollo::ChatSession;

#[tokio::main]
async fn main() -> ollo::Result<()> {
    let (client, _mock) = common::connect().await?;
    let mut session = ChatSession::new(ModelTag::default(), None, GenerationOptions::reproducible(42));

    for question in ["why is the sky blue?", "and how do you know that?"] {
        println!("> {question}");
        let mut print = |e: &StreamEvent| {
            if let StreamEvent::ContentDelta(text) = e {
                print!("{text}");
                let _ = std::io::stdout().flush();
            }
        };
        session
            .chat_streaming(&client, question, Vec::new(), &mut print)
            .await?;
        println!();
    }

    let path = std::env::temp_dir().join("ollo-chat-example.jsonl");
    session.save_transcript(&path)?;
    let restored = ChatSession::load_transcript(&path)?;
    println!("saved {} messages to {}", restored.history().len(), path.display());
    Ok(())
}
