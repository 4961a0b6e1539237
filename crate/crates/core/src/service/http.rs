use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::app::parse_priority;
use super::{ApiError, App, Granularity};
use crate::integrate::MergePolicy;
use crate::model::WindowGrid;
use crate::quality::FilterSpec;
use crate::store::SourceFile;

type Params = Query<HashMap<String, String>>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

async fn blocking<T, F>(app: &Arc<App>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&App) -> Result<T, ApiError> + Send + 'static,
{
    let app = Arc::clone(app);
    tokio::task::spawn_blocking(move || f(&app))
        .await
        .map_err(ApiError::internal)?
}

fn parse_json<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

fn date_param(params: &HashMap<String, String>, key: &str) -> Result<Option<NaiveDate>, ApiError> {
    params
        .get(key)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| ApiError::bad_request(format!("{key} must be YYYY-MM-DD, got {v:?}")))
        })
        .transpose()
}

async fn require_token(State(app): State<Arc<App>>, req: Request, next: Next) -> Response {
    if let Some(token) = &app.config.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::unauthorized().into_response();
        }
    }
    next.run(req).await
}

/// Every endpoint, behind the bearer-token check when a token is set.
pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/files", post(upload_files))
        .route("/sessions/{id}/integrate", post(integrate))
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}/frames", get(frames))
        .route("/datasets/{id}/quality", get(quality))
        .route("/datasets/{id}/filter", post(filter))
        .route("/datasets/{id}/export.csv", get(export_csv))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(middleware::from_fn_with_state(
            Arc::clone(&app),
            require_token,
        ))
        .with_state(app)
}

pub async fn serve(addr: SocketAddr, app: Arc<App>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Default, Deserialize)]
struct NewSession {
    timezone: Option<String>,
}

async fn create_session(State(app): State<Arc<App>>, body: Bytes) -> Result<Response, ApiError> {
    let req: NewSession = parse_json(&body)?;
    let s = app.create_session(req.timezone.as_deref())?;
    Ok((StatusCode::CREATED, Json(s)).into_response())
}

async fn get_session(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    Ok(Json(app.session(&id)?).into_response())
}

#[derive(Deserialize, Serialize)]
struct UploadedFile {
    name: String,
    content: String,
}

#[derive(Default, Deserialize)]
struct Upload {
    #[serde(default)]
    files: Vec<UploadedFile>,
}

/// JSON `{"files": [{"name", "content"}]}`, or one raw file with its name
/// in `?name=`.
async fn upload_files(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Params,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let files: Vec<SourceFile> = if is_json {
        let up: Upload = parse_json(&body)?;
        up.files
            .into_iter()
            .map(|f| SourceFile {
                name: f.name,
                vendor: None,
                item: None,
                bytes: f.content.into_bytes(),
            })
            .collect()
    } else {
        let name = params
            .get("name")
            .filter(|n| !n.is_empty())
            .ok_or_else(|| ApiError::bad_request("raw uploads need ?name="))?;
        vec![SourceFile {
            name: name.clone(),
            vendor: None,
            item: None,
            bytes: body.to_vec(),
        }]
    };
    let s = blocking(&app, move |a| a.handle_upload(&id, files)).await?;
    Ok(Json(s).into_response())
}

async fn integrate(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Response, ApiError> {
    let interval = match params.get("interval") {
        None => 10,
        Some(v) => v.parse().map_err(|_| {
            ApiError::bad_request(format!("interval must be an integer, got {v:?}"))
        })?,
    };
    let grid = WindowGrid::new(interval).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let policy = match params.get("priority") {
        None => MergePolicy::default(),
        Some(list) => parse_priority(list)?,
    };
    let r = blocking(&app, move |a| a.handle_integrate(&id, grid, policy)).await?;
    Ok((StatusCode::CREATED, Json(r)).into_response())
}

async fn list_datasets(State(app): State<Arc<App>>) -> Result<Response, ApiError> {
    let list = blocking(&app, |a| a.handle_list()).await?;
    Ok(Json(list).into_response())
}

async fn frames(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Response, ApiError> {
    let granularity: Granularity = match params.get("granularity") {
        None => Granularity::Window,
        Some(g) => g.parse()?,
    };
    let from = date_param(&params, "from")?;
    let to = date_param(&params, "to")?;
    let rows = blocking(&app, move |a| {
        a.handle_query_frames(&id, granularity, from, to)
    })
    .await?;
    Ok(Json(rows).into_response())
}

/// Thresholds come from the named filter in `?filter=` (default spec
/// otherwise); `?lookback_days=` overrides the recency period.
async fn quality(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Response, ApiError> {
    let lookback = params
        .get("lookback_days")
        .map(|v| {
            v.parse::<i64>().map_err(|_| {
                ApiError::bad_request(format!("lookback_days must be an integer, got {v:?}"))
            })
        })
        .transpose()?;
    let named = params.get("filter").cloned();
    let report = blocking(&app, move |a| {
        let mut spec = match named {
            Some(n) => a.store().filter(&id, &n)?,
            None => FilterSpec::default(),
        };
        if let Some(l) = lookback {
            spec.recency_lookback_days = l;
        }
        a.handle_quality(&id, &spec)
    })
    .await?;
    Ok(Json(report).into_response())
}

async fn filter(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Params,
    body: Bytes,
) -> Result<Response, ApiError> {
    let spec: FilterSpec = parse_json(&body)?;
    let name = params.get("name").cloned();
    let r = blocking(&app, move |a| a.handle_filter(&id, &spec, name.as_deref())).await?;
    Ok(Json(r).into_response())
}

async fn export_csv(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Response, ApiError> {
    let name = params.get("filter").cloned();
    let csv = blocking(&app, move |a| a.handle_export_named(&id, name.as_deref())).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
