//! HTTP routes.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::response::Html;
use axum::routing::{get, post};
use axum::{Json, Router};
use expgreedy::function::file::{self, FunctionFile};
use expgreedy::function::AnyFunction;
use expgreedy::ItemId;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::{ServiceError, ServiceResult};
use crate::session::{persisted_sessions, Catalog, DisplayItem, PendingQuery, Phase, Preferred, Session, SessionSpec, Summary};

const INDEX_HTML: &str = include_str!("../static/index.html");

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Sessions are persisted here and restored on start.
    pub data_dir: Option<PathBuf>,
    /// Used when a create request names no catalog.
    pub catalog: Option<AnyFunction>,
    /// Served at `/` in place of the built-in page.
    pub static_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    data_dir: Option<PathBuf>,
    catalog: Option<Catalog>,
}

impl AppState {
    /// Restores every session persisted under `config.data_dir`.
    pub fn new(config: &ServiceConfig) -> ServiceResult<Self> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &config.data_dir {
            for path in persisted_sessions(dir)? {
                let s = Session::restore(&path)?;
                sessions.insert(s.id().to_string(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                sessions: RwLock::new(sessions),
                data_dir: config.data_dir.clone(),
                catalog: config.catalog.as_ref().map(Catalog::from_function),
            }),
        })
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().expect("poisoned").len()
    }

    fn session(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.inner
            .sessions
            .read()
            .expect("poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn create(&self, req: CreateRequest) -> ServiceResult<String> {
        let catalog = match (req.catalog, req.catalog_path) {
            (Some(_), Some(_)) => {
                return Err(ServiceError::BadRequest(
                    "give either catalog or catalog_path, not both".into(),
                ))
            }
            (Some(f), None) => Catalog::from_file(f)?,
            (None, Some(path)) => Catalog::from_function(&file::load(&path)?),
            (None, None) => self.inner.catalog.clone().ok_or_else(|| {
                ServiceError::BadRequest("no catalog given and the service has no default".into())
            })?,
        };
        let mut spec = req.spec;
        spec.seed.get_or_insert_with(rand::random);
        let id = format!("{:032x}", rand::random::<u128>());
        let mut session = Session::new(id.clone(), spec, catalog)?;
        if let Some(dir) = &self.inner.data_dir {
            session.persist_to(&dir.join(&id))?;
        }
        self.inner
            .sessions
            .write()
            .expect("poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRequest {
    #[serde(flatten)]
    pub spec: SessionSpec,
    #[serde(default)]
    pub catalog: Option<FunctionFile>,
    #[serde(default)]
    pub catalog_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QueryResponse {
    AwaitingAnswer(PendingQuery),
    Done { selected: Vec<ItemId> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub query_id: String,
    pub preferred: Preferred,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub accepted: bool,
    pub seq: u64,
    pub phase: Phase,
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/query", get(next_query))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/catalog", get(catalog))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<CreateRequest>,
) -> ServiceResult<Json<CreateResponse>> {
    let session_id = state.create(req)?;
    Ok(Json(CreateResponse { session_id }))
}

async fn next_query(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<Json<QueryResponse>> {
    let session = state.session(&id)?;
    let s = session.lock().expect("poisoned");
    Ok(Json(match s.pending() {
        Some(q) => QueryResponse::AwaitingAnswer(q.clone()),
        None => QueryResponse::Done {
            selected: s.selected().to_vec(),
        },
    }))
}

async fn answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> ServiceResult<Json<AnswerResponse>> {
    let session = state.session(&id)?;
    let mut s = session.lock().expect("poisoned");
    let event = s.answer(&req.query_id, req.preferred)?;
    Ok(Json(AnswerResponse {
        accepted: true,
        seq: event.seq,
        phase: s.phase(),
    }))
}

async fn summary(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<Json<Summary>> {
    let session = state.session(&id)?;
    let s = session.lock().expect("poisoned");
    Ok(Json(s.summary()))
}

async fn catalog(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<Json<Vec<DisplayItem>>> {
    let session = state.session(&id)?;
    let s = session.lock().expect("poisoned");
    Ok(Json(s.catalog().items().to_vec()))
}
