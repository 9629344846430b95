//! Local HTTP service for interactive editing sessions.
//!
//! A session holds one uploaded image. After a fit, every preview or export
//! request carries a complete edit script and is applied to the fitted
//! baseline, so replaying a script always yields the same bytes.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tristruct_core::editing::EditScript;
use tristruct_core::fitting::{FitConfig, FitReport};
use tristruct_core::imaging::decode_image;
use tristruct_core::pipeline::{parse_axis, Init};
use tristruct_core::structure::{AxisFile, StructureFile};
use tristruct_core::IlluminantAxis;

pub use error::ApiError;
use session::Session;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub port: u16,
    pub max_megapixels: f64,
    pub max_body_bytes: usize,
    pub preview_max_side: u32,
    pub idle_timeout: Duration,
    /// Allowed editor origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            max_megapixels: 40.0,
            max_body_bytes: 256 << 20,
            preview_max_side: 512,
            idle_timeout: Duration::from_secs(30 * 60),
            cors_origin: None,
        }
    }
}

struct Entry {
    session: Arc<tokio::sync::Mutex<Session>>,
    last_used: Mutex<Instant>,
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Arc<Entry>>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self { sessions: Arc::default(), config: Arc::new(config) }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    fn insert(&self, session: Session) -> String {
        let id = format!("{:032x}", rand::random::<u128>());
        let entry = Entry {
            session: Arc::new(tokio::sync::Mutex::new(session)),
            last_used: Mutex::new(Instant::now()),
        };
        self.sessions.lock().expect("session map poisoned").insert(id.clone(), Arc::new(entry));
        id
    }

    fn get(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        let map = self.sessions.lock().expect("session map poisoned");
        let entry = map.get(id).ok_or_else(|| ApiError::not_found(id))?;
        *entry.last_used.lock().expect("clock poisoned") = Instant::now();
        Ok(entry.session.clone())
    }

    /// Drops sessions idle for longer than the configured timeout at `now`.
    pub fn expire_idle(&self, now: Instant) -> usize {
        let timeout = self.config.idle_timeout;
        let mut map = self.sessions.lock().expect("session map poisoned");
        let before = map.len();
        map.retain(|_, e| {
            let last = *e.last_used.lock().expect("clock poisoned");
            now.saturating_duration_since(last) <= timeout
        });
        before - map.len()
    }
}

pub fn router(state: AppState) -> Router {
    let cors = match &state.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(AllowOrigin::exact(v)),
            Err(_) => CorsLayer::new().allow_origin(Any),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id/fit", post(fit_session))
        .route("/sessions/:id/preview", post(preview))
        .route("/sessions/:id/export", post(export))
        .route("/sessions/:id/cloud", get(cloud))
        .layer(DefaultBodyLimit::max(limit))
        .layer(cors)
        .with_state(state)
}

/// Serves until ctrl-c, sweeping idle sessions in the background.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    let state = AppState::new(config);
    let sweeper = state.clone();
    let period = (sweeper.config.idle_timeout / 2).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let dropped = sweeper.expire_idle(Instant::now());
            if dropped > 0 {
                tracing::info!(dropped, "expired idle sessions");
            }
        }
    });
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let max_mp = state.config.max_megapixels;
    let preview_side = state.config.preview_max_side;
    let session = tokio::task::spawn_blocking(move || -> Result<Session, ApiError> {
        let image = decode_image(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let mp = image.len() as f64 / 1e6;
        if mp > max_mp {
            return Err(ApiError::too_large(format!("{mp:.1} MP exceeds the {max_mp} MP limit")));
        }
        if image.is_empty() {
            return Err(ApiError::bad_request("image has no pixels"));
        }
        Ok(Session::new(image, preview_side))
    })
    .await
    .map_err(ApiError::internal)??;
    let (width, height) = (session.image.width(), session.image.height());
    let id = state.insert(session);
    Ok((StatusCode::CREATED, Json(Created { id, width, height })).into_response())
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum AxisParam {
    Named(String),
    Explicit(AxisFile),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitParam {
    Named(String),
    Degrees(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct FitRequest {
    pub k: usize,
    #[serde(default = "default_axis")]
    pub axis: AxisParam,
    #[serde(default = "default_init")]
    pub init: InitParam,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub angle_tol: Option<f64>,
}

fn default_axis() -> AxisParam {
    AxisParam::Named("gray".into())
}

fn default_init() -> InitParam {
    InitParam::Named("uniform".into())
}

fn one() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitResponse {
    pub structure: StructureFile,
    /// Angle of each colored vertex about the axis, radians, in structure
    /// order.
    pub angles: Vec<f64>,
    pub report: FitReport,
}

impl FitRequest {
    fn resolve(&self) -> Result<(IlluminantAxis, Init, FitConfig), ApiError> {
        let unprocessable = |e: tristruct_core::Error| ApiError::from_core(e);
        let axis = match &self.axis {
            AxisParam::Named(s) => parse_axis(s).map_err(unprocessable)?,
            AxisParam::Explicit(a) => IlluminantAxis::new(a.a, a.b).map_err(unprocessable)?,
        };
        let init = match &self.init {
            InitParam::Named(s) => Init::parse(s).map_err(unprocessable)?,
            InitParam::Degrees(d) => Init::Degrees(d.clone()),
        };
        let defaults = FitConfig::default();
        let cfg = FitConfig {
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            angle_tol: self.angle_tol.unwrap_or(defaults.angle_tol),
            stride: self.stride,
            ..defaults
        };
        cfg.validate().map_err(unprocessable)?;
        Ok((axis, init, cfg))
    }
}

async fn fit_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FitRequest>,
) -> Result<Json<FitResponse>, ApiError> {
    let session = state.get(&id)?;
    let (axis, init, cfg) = req.resolve()?;
    let initial = init.structure(axis, req.k).map_err(ApiError::from_core)?;
    let mut guard = session.lock_owned().await;
    let response = tokio::task::spawn_blocking(move || guard.fit(&initial, &cfg))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(response))
}

async fn preview(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(script): Json<EditScript>,
) -> Result<Response, ApiError> {
    let session = state.get(&id)?;
    let mut guard = session.lock_owned().await;
    let png =
        tokio::task::spawn_blocking(move || guard.preview(&script)).await.map_err(ApiError::internal)??;
    Ok(png_response(png))
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(script): Json<EditScript>,
) -> Result<Response, ApiError> {
    let session = state.get(&id)?;
    let mut guard = session.lock_owned().await;
    let png =
        tokio::task::spawn_blocking(move || guard.export(&script)).await.map_err(ApiError::internal)??;
    Ok(png_response(png))
}

#[derive(Debug, Deserialize)]
struct CloudQuery {
    max_points: Option<usize>,
}

async fn cloud(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<CloudQuery>,
) -> Result<Response, ApiError> {
    let session = state.get(&id)?;
    let guard = session.lock_owned().await;
    let max_points = q.max_points.unwrap_or(20_000);
    let bytes =
        tokio::task::spawn_blocking(move || guard.cloud(max_points)).await.map_err(ApiError::internal)??;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

pub const REVISION_HEADER: &str = "x-edit-revision";

fn png_response((png, revision): (Vec<u8>, u64)) -> Response {
    (
        [
            (header::CONTENT_TYPE, "image/png".to_string()),
            (header::HeaderName::from_static(REVISION_HEADER), revision.to_string()),
        ],
        png,
    )
        .into_response()
}
