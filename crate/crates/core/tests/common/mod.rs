#![allow(dead_code)]

use std::net::SocketAddr;

use axum::routing::get;
use axum::Router;
use ollo::mockd::{MockConfig, MockServer};
use ollo::transport::{Client, ServerConfig};

pub fn categories() -> Vec<String> {
    ["positive", "neutral", "negative"].map(String::from).to_vec()
}

/// Smallest valid PNG: 1x1 transparent pixel.
pub const TINY_PNG: &[u8] = &[
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00,
    0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1f, 0x15, 0xc4, 0x89, 0x00, 0x00, 0x00, 0x0d, 0x49,
    0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x00, 0x01, 0x00, 0x00, 0x05, 0x00, 0x01, 0x0d, 0x0a, 0x2d, 0xb4, 0x00, 0x00,
    0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

pub async fn mock() -> MockServer {
    MockServer::start(MockConfig::default()).await.unwrap()
}

pub async fn mock_with(config: MockConfig) -> MockServer {
    MockServer::start(config).await.unwrap()
}

pub fn client_with_timeout(server: &MockServer, secs: u64) -> Client {
    Client::new(server.server_config().with_timeout_secs(secs).unwrap()).unwrap()
}

/// A port with nothing listening on it.
pub async fn closed_port_config() -> ServerConfig {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    ServerConfig::new(&format!("http://{addr}")).unwrap()
}

/// Serves `TINY_PNG` at `/public/ollama.png`, standing in for a remote image URL.
pub async fn image_host() -> SocketAddr {
    let app = Router::new().route("/public/ollama.png", get(|| async { TINY_PNG }));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    addr
}
