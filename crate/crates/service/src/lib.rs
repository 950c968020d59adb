//! Interactive preference elicitation over HTTP.
//!
//! A session runs the greedy outer loop with comparisons answered by a
//! person. The algorithm suspends on one pairwise question at a time:
//!
//! - `POST /sessions` with a [`CreateRequest`] returns `{session_id}`
//! - `GET /sessions/{id}/query` returns the pending question or `{status: "done"}`
//! - `POST /sessions/{id}/answer` with `{query_id, preferred: "A" | "B"}`
//! - `GET /sessions/{id}/summary` and `GET /sessions/{id}/catalog`
//!
//! With a data directory every session is stored as `<id>/session.json`
//! plus an append-only `<id>/events.jsonl`, replayed on restart.

mod api;
mod error;
pub mod session;

use std::net::SocketAddr;

pub use api::{
    router, AnswerRequest, AnswerResponse, AppState, CreateRequest, CreateResponse, QueryResponse,
    ServiceConfig,
};
pub use error::{ServiceError, ServiceResult};
pub use session::{Catalog, PendingQuery, Phase, Preferred, Session, SessionSpec, Summary};

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(&config).map_err(std::io::Error::other)?;
    let app = router(state, config.static_dir.clone());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}
