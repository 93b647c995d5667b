//! HTTP/JSON API over an opened review index.

mod api;
mod error;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::{router, API_VERSION, DEFAULT_PAGE};
pub use error::ApiError;
pub use state::{AppState, EntityRecord, Snapshot, DEFAULT_SESSION_IDLE};

/// Serves `state` on `addr` until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, version = %state.snapshot.version(), "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
