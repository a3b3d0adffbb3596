//! HTTP service, song history store and command-line front end for the
//! versetune composer.

pub mod api;
pub mod cli;
pub mod generate;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use versetune::image::{provider_from_env, LyricsProvider, StubProvider};

pub use api::{router, AppState};
pub use store::{SongRecord, Store};

/// The stub when asked for (or when `VERSETUNE_LLM_STUB` is set), otherwise
/// the HTTP provider if its endpoint is configured.
pub fn lyrics_provider(stub: bool) -> Option<Arc<dyn LyricsProvider>> {
    if stub {
        return Some(Arc::new(StubProvider));
    }
    match provider_from_env() {
        Ok(provider) => Some(Arc::from(provider)),
        Err(e) => {
            log::info!("image lyrics disabled: {e}");
            None
        }
    }
}

/// Serves the API on `listener` until `shutdown` resolves, then checkpoints the store.
pub async fn serve<F>(listener: tokio::net::TcpListener, state: AppState, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    let store = state.store.clone();
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    if let Err(e) = store.checkpoint() {
        log::warn!("store checkpoint failed: {e}");
    }
    Ok(())
}
