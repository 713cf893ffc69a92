//! Annotation service: a small JSON API over [`tagbridge::annotate::Session`].
//!
//! Reads take a cheap snapshot of the current session. Mutations go through
//! one writer lock; an iteration runs on a copy of the session and is
//! published only when it has finished, so readers keep seeing the previous
//! state until then.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tagbridge::annotate::{AnnotateError, CorrectionBatch, Session};
use tagbridge::corpus::VerseId;
use tagbridge::metrics::MetricsRecord;
use tagbridge::project::read_text;
use tokio::net::TcpListener;
use tokio::sync::Mutex;

pub struct AppState {
    root: PathBuf,
    current: RwLock<Option<Arc<Session>>>,
    writer: Mutex<()>,
}

impl AppState {
    /// Loads the project at `root`. A directory without an initial state is
    /// accepted; every endpoint then answers 404 until one exists.
    pub fn open(root: impl Into<PathBuf>) -> tagbridge::Result<Arc<AppState>> {
        let root = root.into();
        let session = match Session::load(&root) {
            Ok(s) => Some(Arc::new(s)),
            Err(tagbridge::Error::Parameter(_)) if !root.join("snapshots/IgbTC-0.cols").exists() => None,
            Err(e) => return Err(e),
        };
        Ok(Arc::new(AppState {
            root,
            current: RwLock::new(session),
            writer: Mutex::new(()),
        }))
    }

    fn session(&self) -> Result<Arc<Session>, ApiError> {
        if let Some(s) = self.current.read().expect("session lock").clone() {
            return Ok(s);
        }
        // the initial state may have been produced since start-up
        let mut slot = self.current.write().expect("session lock");
        if slot.is_none() && self.root.join("snapshots/IgbTC-0.cols").exists() {
            *slot = Some(Arc::new(Session::load(&self.root).map_err(ApiError::data)?));
        }
        slot.clone().ok_or_else(ApiError::no_project)
    }

    fn publish(&self, session: Session) {
        *self.current.write().expect("session lock") = Some(Arc::new(session));
    }
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verses: Vec<VerseId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            kind,
            message: message.into(),
            verses: Vec::new(),
            tags: Vec::new(),
        }
    }

    fn no_project() -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "no_project", "no project loaded (run `project` first)")
    }

    fn busy() -> ApiError {
        ApiError::new(StatusCode::CONFLICT, "busy", "an iteration is already running")
    }

    fn data(e: tagbridge::Error) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "data", e.to_string())
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> ApiError {
        let message = e.to_string();
        match e {
            AnnotateError::Pending(verses) => ApiError {
                verses,
                ..ApiError::new(StatusCode::CONFLICT, "pending", message)
            },
            AnnotateError::NotPending(id) => ApiError {
                verses: vec![id],
                ..ApiError::new(StatusCode::CONFLICT, "not_pending", message)
            },
            AnnotateError::InvalidTags(tags) => ApiError {
                tags,
                ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_tags", message)
            },
            AnnotateError::BadIndex { verse, .. } => ApiError {
                verses: vec![verse],
                ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_index", message)
            },
            AnnotateError::NotSelected(_) => ApiError::new(StatusCode::NOT_FOUND, "not_selected", message),
            AnnotateError::Data(e) => ApiError::data(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
struct SliceQuery {
    iter: Option<usize>,
}

#[derive(Serialize)]
struct Ack {
    verse_id: VerseId,
    pending_verses: usize,
}

async fn state(State(app): State<Arc<AppState>>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.session()?.status()))
}

async fn tagset(State(app): State<Arc<AppState>>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.session()?.tagset().clone()))
}

async fn slice(State(app): State<Arc<AppState>>, Query(q): Query<SliceQuery>) -> ApiResult<impl IntoResponse> {
    let session = app.session()?;
    let n = q.iter.unwrap_or(session.iteration() + 1);
    Ok(Json(session.slice_view(n)?))
}

async fn corrections(State(app): State<Arc<AppState>>, Json(batch): Json<CorrectionBatch>) -> ApiResult<impl IntoResponse> {
    app.session()?;
    let _w = app.writer.lock().await;
    let mut slot = app.current.write().expect("session lock");
    let session = Arc::make_mut(slot.as_mut().ok_or_else(ApiError::no_project)?);
    session.submit(&batch)?;
    Ok(Json(Ack {
        verse_id: batch.verse_id,
        pending_verses: session.pending().len(),
    }))
}

async fn iterate(State(app): State<Arc<AppState>>) -> ApiResult<Json<MetricsRecord>> {
    let session = app.session()?;
    let _w = app.writer.try_lock().map_err(|_| ApiError::busy())?;
    let mut next = Session::clone(&session);
    drop(session);
    let (next, record) = tokio::task::spawn_blocking(move || {
        let r = next.iterate();
        (next, r)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let record = record?;
    app.publish(next);
    Ok(Json(record))
}

async fn metrics_csv(State(app): State<Arc<AppState>>) -> ApiResult<Response> {
    let session = app.session()?;
    let body = read_text(&session.project().metrics_csv()).map_err(ApiError::data)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response())
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/state", get(state))
        .route("/api/tagset", get(tagset))
        .route("/api/slice", get(slice))
        .route("/api/corrections", post(corrections))
        .route("/api/iterate", post(iterate))
        .route("/api/metrics.csv", get(metrics_csv))
        .with_state(app)
}

/// Serves `app` on an already bound listener until the future is dropped.
pub async fn serve(listener: TcpListener, app: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(app)).await
}

/// Binds `addr`, reports the bound address through `on_bound`, then serves.
pub async fn run(addr: SocketAddr, root: PathBuf, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let app = AppState::open(root).map_err(std::io::Error::other)?;
    let listener = TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    serve(listener, app).await
}
