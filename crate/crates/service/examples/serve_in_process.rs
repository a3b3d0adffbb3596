//! Starts the service on a free local port with a temporary store and stub
//! lyrics, generates one song over HTTP, then lists the history.
//!
//! ```text
//! cargo run -p versetune-service --example serve_in_process
//! ```

use std::sync::Arc;

use versetune::config::Config;
use versetune_service::{lyrics_provider, serve, AppState, Store};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(&dir.path().join("songs.db"))?);
    let state = AppState { store, provider: lyrics_provider(true), config: Config::default() };
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, state, async {
        let _ = stopped.await;
    }));

    let body = serde_json::json!({ "lyrics": "Birds are flying in the sky.", "key": "D major", "seed": 7 });
    let created = tokio::task::spawn_blocking({
        let base = base.clone();
        move || -> Result<(String, String), Box<dyn std::error::Error + Send + Sync>> {
            let created = ureq::post(&format!("{base}/generate")).send_json(body)?.into_string()?;
            let listing = ureq::get(&format!("{base}/songs")).call()?.into_string()?;
            Ok((created, listing))
        }
    })
    .await??;
    println!("POST /generate -> {}", created.0);
    println!("GET /songs -> {}", created.1);

    let _ = stop.send(());
    server.await??;
    Ok(())
}
