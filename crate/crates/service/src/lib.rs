//! HTTP API for the adversarial playground.
//!
//! - `GET /api/config`: attack parameter schemas, model accuracy, `M`, `C`
//! - `GET /api/seeds`: seed images with their class probabilities
//! - `POST /api/attack`: run one attack on a seed
//! - `GET /healthz`: liveness
//!
//! Anything else falls through to the static UI directory when one is
//! configured. Attacks run on the blocking pool, at most `workers` at a time;
//! further requests wait for a slot.

mod error;
pub mod wire;

use std::future::Future;
use std::path::Path;
use std::sync::Arc;

use advplay_core::attacks::{run_attack, Algorithm, AttackSpec, Direction};
use advplay_core::mnist::SeedSet;
use advplay_core::nn::{NUM_CLASSES, NUM_FEATURES};
use advplay_core::{Classifier, Network};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use error::ApiError;
use wire::{AttackResponse, AttackSchema, ConfigResponse, ParamRange, Seed};

pub const DEFAULT_PORT: u16 = 9000;

struct Loaded {
    network: Network,
    seeds: Vec<Seed>,
    accuracy: f64,
}

/// Shared, read-only server state.
#[derive(Clone)]
pub struct AppState {
    loaded: Option<Arc<Loaded>>,
    permits: Arc<Semaphore>,
}

impl AppState {
    /// Precomputes the seed probabilities. `workers` bounds concurrent attacks.
    pub fn new(network: Network, seeds: &SeedSet, accuracy: f64, workers: usize) -> advplay_core::Result<Self> {
        let seeds = seeds
            .entries
            .iter()
            .map(|e| {
                Ok(Seed {
                    seed_id: e.seed_id,
                    label: e.label,
                    pixels: e.image.pixels().to_vec(),
                    probs: network.forward(&e.image)?.0,
                })
            })
            .collect::<advplay_core::Result<Vec<_>>>()?;
        Ok(AppState {
            loaded: Some(Arc::new(Loaded {
                network,
                seeds,
                accuracy,
            })),
            permits: Arc::new(Semaphore::new(workers.max(1))),
        })
    }

    /// State without a model: every API call answers 503.
    pub fn unloaded() -> Self {
        AppState {
            loaded: None,
            permits: Arc::new(Semaphore::new(1)),
        }
    }

    fn model(&self) -> Result<&Arc<Loaded>, ApiError> {
        self.loaded.as_ref().ok_or(ApiError::NoModel)
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    let api = Router::new()
        .route("/api/config", get(config))
        .route("/api/seeds", get(seeds))
        .route("/api/attack", post(attack))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

fn range(name: &str, min: f64, max: f64, min_inclusive: bool, step: f64, default: f64) -> ParamRange {
    ParamRange {
        name: name.into(),
        min,
        max,
        min_inclusive,
        step,
        default,
    }
}

pub fn attack_schemas() -> Vec<AttackSchema> {
    let upsilon = || range("upsilon", 0.0, 100.0, false, 1.0, 20.0);
    vec![
        AttackSchema {
            name: "fgsm".into(),
            label: "FGSM".into(),
            target: "optional".into(),
            strength: range("epsilon", 0.0, 1.0, true, 0.01, 0.1),
            k_percent: None,
        },
        AttackSchema {
            name: "jsma".into(),
            label: "JSMA".into(),
            target: "required".into(),
            strength: upsilon(),
            k_percent: None,
        },
        AttackSchema {
            name: "fjsma".into(),
            label: "FJSMA".into(),
            target: "required".into(),
            strength: upsilon(),
            k_percent: Some(range("k_percent", 1.0, 100.0, true, 1.0, 15.0)),
        },
    ]
}

async fn config(State(state): State<AppState>) -> Result<Json<ConfigResponse>, ApiError> {
    let loaded = state.model()?;
    Ok(Json(ConfigResponse {
        attacks: attack_schemas(),
        model_accuracy: loaded.accuracy,
        features: NUM_FEATURES,
        classes: NUM_CLASSES,
        directions: vec!["decrease".into(), "increase".into()],
    }))
}

async fn seeds(State(state): State<AppState>) -> Result<Json<Vec<Seed>>, ApiError> {
    Ok(Json(state.model()?.seeds.clone()))
}

fn as_index(v: &Value, field: &str) -> Result<usize, ApiError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| ApiError::bad(field, "must be a non-negative integer"))
}

fn as_number(v: &Value, field: &str) -> Result<f32, ApiError> {
    v.as_f64()
        .map(|n| n as f32)
        .ok_or_else(|| ApiError::bad(field, "must be a number"))
}

/// Validates a raw request body into `(seed_id, spec)` with one message per
/// offending field.
pub fn parse_attack_request(body: &[u8]) -> Result<(usize, AttackSpec), ApiError> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad("body", format!("not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ApiError::bad("body", "must be a JSON object"))?;
    let field = |name: &str| obj.get(name).filter(|v| !v.is_null());

    let algorithm = match field("attack").map(|v| v.as_str()) {
        None => return Err(ApiError::bad("attack", "is required")),
        Some(None) => return Err(ApiError::bad("attack", "must be a string")),
        Some(Some(name)) => name.parse::<Algorithm>().map_err(|_| {
            ApiError::bad(
                "attack",
                format!("unknown attack `{name}`; expected fgsm, jsma or fjsma"),
            )
        })?,
    };
    let seed_id = as_index(
        field("seed_id").ok_or_else(|| ApiError::bad("seed_id", "is required"))?,
        "seed_id",
    )?;
    let target = field("target").map(|v| as_index(v, "target")).transpose()?;
    if let Some(t) = target {
        if t >= NUM_CLASSES {
            return Err(ApiError::bad(
                "target",
                format!("must be between 0 and {}", NUM_CLASSES - 1),
            ));
        }
    }
    if target.is_none() && algorithm != Algorithm::Fgsm {
        return Err(ApiError::bad("target", format!("is required for {}", algorithm.name())));
    }
    let strength = as_number(
        field("strength").ok_or_else(|| ApiError::bad("strength", "is required"))?,
        "strength",
    )?;
    match algorithm {
        Algorithm::Fgsm if !(0.0..=1.0).contains(&strength) => {
            return Err(ApiError::bad("strength", "epsilon must lie in [0, 1]"));
        }
        Algorithm::Jsma | Algorithm::Fjsma if !(strength > 0.0 && strength <= 100.0) => {
            return Err(ApiError::bad("strength", "upsilon must lie in (0, 100]"));
        }
        _ => {}
    }
    let k_percent = match algorithm {
        Algorithm::Fjsma => {
            let k = field("k_percent")
                .map(|v| as_number(v, "k_percent"))
                .transpose()?
                .unwrap_or(15.0);
            if !(k > 0.0 && k <= 100.0) {
                return Err(ApiError::bad("k_percent", "must lie in (0, 100]"));
            }
            Some(k)
        }
        _ => None,
    };
    let direction = match field("direction").map(|v| v.as_str()) {
        None => Direction::default(),
        Some(Some(d)) => d
            .parse()
            .map_err(|_| ApiError::bad("direction", "must be `decrease` or `increase`"))?,
        Some(None) => return Err(ApiError::bad("direction", "must be a string")),
    };
    let spec = AttackSpec {
        algorithm,
        target,
        strength,
        k_percent,
        direction,
        saliency: Default::default(),
    };
    spec.validate().map_err(|e| ApiError::bad("body", e.to_string()))?;
    Ok((seed_id, spec))
}

async fn attack(State(state): State<AppState>, body: Bytes) -> Result<Json<AttackResponse>, ApiError> {
    let loaded = Arc::clone(state.model()?);
    let (seed_id, spec) = parse_attack_request(&body)?;
    let index = loaded
        .seeds
        .iter()
        .position(|s| s.seed_id == seed_id)
        .ok_or_else(|| ApiError::bad("seed_id", format!("unknown seed {seed_id}")))?;
    let _permit = state.permits.acquire().await.map_err(ApiError::internal)?;
    let response = tokio::task::spawn_blocking(move || {
        let seed = &loaded.seeds[index];
        let image = advplay_core::Image::new(seed.pixels.clone())?;
        let outcome = run_attack(&loaded.network, &image, &spec)?;
        Ok::<_, advplay_core::Error>(AttackResponse::from_outcome(seed_id, &image, outcome))
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(ApiError::internal)?;
    Ok(Json(response))
}
