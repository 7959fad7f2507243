//! HTTP session API.
//!
//! Every operation on a session runs under that session's lock, and the
//! events it produced are appended to the store before the lock is released.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hilrank_core::config::GP_MAX_ITEMS;
use hilrank_core::session::{Clock, Ranking, RetrainMode, Session, SessionOptions, SessionStats, StepOutcome};
use hilrank_core::sim::{kendall_tau, spearman_rho};
use hilrank_core::{ComparisonRecord, Error as CoreError, Item, PairDecision, SessionConfig, UtilityBreakdown};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::ServiceError;
use crate::ingest::ingest_features;
use crate::store::{valid_session_id, EventStore};

/// Automatic resolutions per `GET /next` when the request does not say.
pub const DEFAULT_MAX_AUTO_PER_REQUEST: usize = 256;

#[derive(Debug, Clone, Copy, Default)]
pub struct ServiceOptions {
    pub retrain: RetrainMode,
    pub clock: Clock,
}

impl ServiceOptions {
    fn session(&self) -> SessionOptions {
        SessionOptions {
            retrain: self.retrain,
            clock: self.clock,
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub extra: Map<String, Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            extra: Map::new(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", message)
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn body(&self) -> Value {
        let mut body = self.extra.clone();
        body.insert("error".into(), json!({ "code": self.code, "message": self.message }));
        Value::Object(body)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let msg = e.to_string();
        match e {
            ServiceError::UnknownSession(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_session", msg),
            ServiceError::SessionExists(_) => ApiError::new(StatusCode::CONFLICT, "session_exists", msg),
            ServiceError::BadRequest(_) | ServiceError::Json(_) => ApiError::invalid(msg),
            ServiceError::Ingest { .. } | ServiceError::DuplicateId { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_items", msg)
            }
            ServiceError::Core(core) => core.into(),
            ServiceError::Io(_) | ServiceError::Log { .. } | ServiceError::Csv(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg)
            }
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::StalePair { expected_i, expected_j } => ApiError::new(StatusCode::CONFLICT, "stale_pair", msg)
                .with("expected", json!({ "i": expected_i, "j": expected_j })),
            CoreError::SessionComplete => {
                ApiError::new(StatusCode::CONFLICT, "session_complete", msg).with("status", json!("complete"))
            }
            CoreError::NoOutstandingPair => ApiError::new(StatusCode::CONFLICT, "no_pair_issued", msg),
            CoreError::Config(_)
            | CoreError::InvalidInput(_)
            | CoreError::UnknownItem(_)
            | CoreError::EmptyItems
            | CoreError::DimensionMismatch { .. } => ApiError::invalid(msg),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub session_id: Option<String>,
    /// JSONL item file readable by the server.
    #[serde(default)]
    pub features_path: Option<PathBuf>,
    #[serde(default)]
    pub items: Option<Vec<Item>>,
    #[serde(default)]
    pub config: SessionConfig,
    /// Ground-truth score per item id (larger is better), for simulations.
    #[serde(default)]
    pub ground_truth: Option<HashMap<String, f64>>,
    #[serde(default)]
    pub max_auto_per_request: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub n: usize,
    pub feature_dim: usize,
    pub bins: usize,
    pub gp_enabled: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairView {
    pub i: String,
    pub j: String,
    pub display_uris: [Option<String>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NextResponse {
    Pair {
        pair: PairView,
        utility: Option<UtilityBreakdown>,
        decision: PairDecision,
    },
    AutoResolving {
        resolved: usize,
    },
    Complete {
        ranking: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRequest {
    pub i: String,
    pub j: String,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentResponse {
    pub status: String,
    pub record: ComparisonRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    #[serde(flatten)]
    pub stats: SessionStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

struct Slot {
    session: Mutex<Session>,
    /// Ground-truth order, best first.
    truth: Option<Vec<String>>,
}

fn truth_order(scores: &HashMap<String, f64>) -> Vec<String> {
    let mut ids: Vec<(&String, f64)> = scores.iter().map(|(k, &v)| (k, v)).collect();
    ids.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    ids.into_iter().map(|(k, _)| k.clone()).collect()
}

pub struct AppState {
    store: EventStore,
    options: ServiceOptions,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    pub fn new(store: EventStore, options: ServiceOptions) -> Self {
        Self {
            store,
            options,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &EventStore {
        &self.store
    }

    /// Resumes every session found in the store; returns their ids.
    pub fn load_existing(&self) -> Result<Vec<String>, ServiceError> {
        let ids = self.store.sessions()?;
        for id in &ids {
            let events = self.store.load(id)?;
            let mut session = Session::resume(&events, self.options.session())?;
            self.store.append(id, &session.take_unflushed())?;
            let truth = self.store.load_truth(id)?.map(|t| truth_order(&t));
            self.sessions.write().expect("session map poisoned").insert(
                id.clone(),
                Arc::new(Slot {
                    session: Mutex::new(session),
                    truth,
                }),
            );
        }
        Ok(ids)
    }

    pub fn create_session(&self, req: CreateRequest) -> Result<CreateResponse, ApiError> {
        let items = match (req.items, &req.features_path) {
            (Some(items), None) => items,
            (None, Some(path)) => ingest_features(path)?,
            _ => return Err(ApiError::invalid("exactly one of items and features_path is required")),
        };
        let id = req.session_id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        if !valid_session_id(&id) {
            return Err(ApiError::invalid(format!("invalid session id {id:?}")));
        }
        if let Some(truth) = &req.ground_truth {
            let covers = truth.len() == items.len() && items.iter().all(|it| truth.contains_key(&it.id));
            if !covers || truth.values().any(|v| !v.is_finite()) {
                return Err(ApiError::invalid("ground_truth must give a finite score for exactly the session's items"));
            }
        }
        let mut notes = Vec::new();
        if req.config.gp_enabled && items.len() > GP_MAX_ITEMS {
            notes.push(format!("gp disabled: n = {} exceeds {GP_MAX_ITEMS}", items.len()));
        }
        let mut config = req.config;
        config.max_auto_per_step = req.max_auto_per_request.unwrap_or(DEFAULT_MAX_AUTO_PER_REQUEST);

        let mut map = self.sessions.write().expect("session map poisoned");
        if map.contains_key(&id) || self.store.exists(&id) {
            return Err(ServiceError::SessionExists(id).into());
        }
        let mut session = Session::new(id.clone(), items, config, self.options.session())?;
        if let Some(truth) = &req.ground_truth {
            self.store.save_truth(&id, truth)?;
        }
        self.store.append(&id, &session.take_unflushed())?;
        let cfg = session.config();
        let response = CreateResponse {
            session_id: id.clone(),
            n: cfg.n,
            feature_dim: cfg.feature_dim,
            bins: cfg.bins,
            gp_enabled: cfg.gp_enabled,
            notes,
        };
        map.insert(
            id,
            Arc::new(Slot {
                session: Mutex::new(session),
                truth: req.ground_truth.as_ref().map(truth_order),
            }),
        );
        Ok(response)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()).into())
    }

    /// Runs `f` under the session lock and persists whatever it emitted.
    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session, &Slot) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let slot = self.slot(id)?;
        let mut session = slot.session.lock().unwrap_or_else(|p| p.into_inner());
        let out = f(&mut session, &slot);
        self.store.append(id, &session.take_unflushed())?;
        out
    }

    pub fn next(&self, id: &str) -> Result<NextResponse, ApiError> {
        self.with_session(id, |s, _| {
            Ok(match s.step()? {
                StepOutcome::NeedHuman { i, j, decision } => {
                    let uri = |id: &str| s.lookup(id).ok().and_then(|k| s.items()[k].display_uri.clone());
                    NextResponse::Pair {
                        pair: PairView {
                            display_uris: [uri(&i), uri(&j)],
                            i,
                            j,
                        },
                        utility: decision.utility,
                        decision,
                    }
                }
                StepOutcome::AutoResolving { resolved } => NextResponse::AutoResolving { resolved },
                StepOutcome::Complete { ranking } => NextResponse::Complete { ranking },
            })
        })
    }

    pub fn judge(&self, id: &str, req: &JudgmentRequest) -> Result<JudgmentResponse, ApiError> {
        if req.winner != req.i && req.winner != req.j {
            return Err(ApiError::invalid("winner must be i or j"));
        }
        self.with_session(id, |s, _| {
            let record = s.submit_judgment(&req.i, &req.j, req.winner == req.i)?;
            Ok(JudgmentResponse {
                status: "accepted".into(),
                record,
            })
        })
    }

    pub fn ranking(&self, id: &str) -> Result<Ranking, ApiError> {
        self.with_session(id, |s, _| Ok(s.current_ranking()))
    }

    pub fn stats(&self, id: &str) -> Result<StatsResponse, ApiError> {
        self.with_session(id, |s, slot| {
            let (tau, rho) = match &slot.truth {
                Some(truth) if truth.len() >= 2 => {
                    let order = s.current_ranking().order;
                    (Some(kendall_tau(&order, truth)?), Some(spearman_rho(&order, truth)?))
                }
                _ => (None, None),
            };
            Ok(StatsResponse {
                stats: s.stats(),
                tau,
                rho,
            })
        })
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn create(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse(&body)?;
    let out = blocking(move || state.create_session(req)).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn next(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let out = blocking(move || state.next(&id)).await?;
    let status = match out {
        NextResponse::AutoResolving { .. } => StatusCode::ACCEPTED,
        _ => StatusCode::OK,
    };
    Ok((status, Json(out)).into_response())
}

async fn judge(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<JudgmentResponse>, ApiError> {
    let req: JudgmentRequest = parse(&body)?;
    Ok(Json(blocking(move || state.judge(&id, &req)).await?))
}

async fn ranking(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Ranking>, ApiError> {
    Ok(Json(blocking(move || state.ranking(&id)).await?))
}

async fn stats(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<StatsResponse>, ApiError> {
    Ok(Json(blocking(move || state.stats(&id)).await?))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create))
        .route("/v1/sessions/{id}/next", get(next))
        .route("/v1/sessions/{id}/judgments", post(judge))
        .route("/v1/sessions/{id}/ranking", get(ranking))
        .route("/v1/sessions/{id}/stats", get(stats))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
