mod common;

use ollo::mockd::MockConfig;
use ollo::transport::{GenerationOptions, ModelTag, Role, StreamEvent};
use ollo::{ChatSession, Error};

fn session() -> ChatSession {
    ChatSession::new(ModelTag::new("llama2"), None, GenerationOptions::reproducible(42))
}

#[tokio::test]
async fn follow_up_sees_the_first_exchange() {
    let server = common::mock().await;
    let client = server.client();
    let mut s = session();
    let first = s.chat(&client, "why is the sky blue?", Vec::new()).await.unwrap();
    s.chat(&client, "and how do you know that?", Vec::new()).await.unwrap();

    assert_eq!(s.history().len(), 4);
    let roles: Vec<Role> = s.history().iter().map(|m| m.role).collect();
    assert_eq!(roles, [Role::User, Role::Assistant, Role::User, Role::Assistant]);

    let second = server.capture()[1].json().unwrap();
    let sent = second["messages"].as_array().unwrap();
    assert_eq!(sent.len(), 3);
    assert_eq!(sent[0]["content"], "why is the sky blue?");
    assert_eq!(sent[1]["content"], first.as_str());
    assert_eq!(sent[2]["content"], "and how do you know that?");
}

#[tokio::test]
async fn system_prompt_leads_every_request() {
    let server = common::mock().await;
    let client = server.client();
    let mut s = ChatSession::new(
        ModelTag::new("llama2"),
        Some("be brief".into()),
        GenerationOptions::new(),
    );
    s.chat(&client, "one", Vec::new()).await.unwrap();
    s.chat(&client, "two", Vec::new()).await.unwrap();
    for entry in server.capture() {
        let body = entry.json().unwrap();
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][0]["content"], "be brief");
    }
    assert_eq!(s.history().len(), 4);
}

#[tokio::test]
async fn reset_starts_a_fresh_conversation() {
    let server = common::mock().await;
    let client = server.client();
    let mut s = session();
    s.chat(&client, "why is the sky blue?", Vec::new()).await.unwrap();
    s.reset();
    assert!(s.history().is_empty());
    s.chat(&client, "hello again", Vec::new()).await.unwrap();
    let last = server.capture().last().unwrap().json().unwrap();
    let sent = last["messages"].as_array().unwrap();
    assert_eq!(sent.len(), 1);
    assert_eq!(sent[0]["role"], "user");
}

#[tokio::test]
async fn streaming_and_plain_turns_agree() {
    let server = common::mock().await;
    let client = server.client();
    let mut plain = session();
    let mut streamed = session();
    let a = plain.chat(&client, "why is the sky blue?", Vec::new()).await.unwrap();
    let mut deltas = String::new();
    let mut sink = |e: &StreamEvent| {
        if let StreamEvent::ContentDelta(d) = e {
            deltas.push_str(d);
        }
    };
    let b = streamed
        .chat_streaming(&client, "why is the sky blue?", Vec::new(), &mut sink)
        .await
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(deltas, b);
    assert_eq!(plain, streamed);
}

#[tokio::test]
async fn failed_turn_leaves_history_alone() {
    let server = common::mock_with(MockConfig::empty().with_model(&ModelTag::new("other"), 8)).await;
    let client = server.client();
    let mut s = session();
    let err = s.chat(&client, "hi", Vec::new()).await.unwrap_err();
    assert!(err.as_api().is_some_and(|e| e.is_model_missing()));
    assert!(s.history().is_empty());
    assert!(matches!(
        s.chat(&client, "", Vec::new()).await,
        Err(Error::InvalidArgument(_))
    ));
}

#[tokio::test]
async fn transcript_file_round_trip() {
    let server = common::mock().await;
    let client = server.client();
    let mut s = ChatSession::new(
        ModelTag::new("llava"),
        Some("describe things".into()),
        GenerationOptions::reproducible(3),
    );
    let logo = ollo::transport::Base64Image::from_bytes(common::TINY_PNG, "logo.png");
    s.chat(&client, "what is this?", vec![logo]).await.unwrap();
    s.chat(&client, "and the colours?", Vec::new()).await.unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    s.save_transcript(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(ChatSession::load_transcript(&path).unwrap(), s);
}
