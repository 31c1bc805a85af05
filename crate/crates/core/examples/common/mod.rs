use ollo::mockd::{MockConfig, MockServer};
use ollo::transport::{Client, ServerConfig, HOST_ENV};

/// Connects to `$OLLO_HOST` if set, otherwise to an in-process mock server.
/// Keep the returned server alive for as long as the client is used.
pub async fn connect() -> ollo::Result<(Client, Option<MockServer>)> {
    if std::env::var(HOST_ENV).is_ok_and(|h| !h.is_empty()) {
        let client = Client::new(ServerConfig::from_env()?)?;
        return Ok((client, None));
    }
    let server = MockServer::start(MockConfig::default()).await?;
    eprintln!("{HOST_ENV} not set; using a mock server at {}", server.url());
    Ok((server.client(), Some(server)))
}
