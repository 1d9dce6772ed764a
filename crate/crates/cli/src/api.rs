//! Read-only HTTP/JSON API over one immutable cube snapshot.
//!
//! Every response body is a pure function of the snapshot and the request,
//! so identical queries return byte-identical bodies.

use std::path::Path;
use std::sync::Arc;

use axum::extract::{RawQuery, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::services::ServeDir;
use wgd_core::aggregator::{
    gender_distribution, other_genders_view, summary, yearly_series, AggregateError, Cube,
    CubeFilter,
};

use crate::snapshot::LoadedSnapshot;

const INDEX_HTML: &str = include_str!("index.html");

struct AppState {
    cube: Cube,
    subclasses: Vec<String>,
    hash: String,
}

/// A failed request, rendered as `{"error": code, "message": text}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "invalid_query",
            message: message.into(),
        }
    }
}

impl From<AggregateError> for ApiError {
    fn from(e: AggregateError) -> Self {
        let (status, code) = match &e {
            AggregateError::InvalidRange { .. } => (StatusCode::BAD_REQUEST, "invalid_query"),
            AggregateError::UnknownSubclass(_) => (StatusCode::NOT_FOUND, "unknown_subclass"),
            AggregateError::EmptySelection => (StatusCode::UNPROCESSABLE_ENTITY, "empty_selection"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

/// Query parameters shared by the API endpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiQuery {
    pub subclass: Option<String>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    /// Repeated `genders=` parameters.
    pub genders: Option<Vec<String>>,
    /// The single gender of a series.
    pub gender: Option<String>,
}

impl ApiQuery {
    /// Parses a raw query string, accepting only the keys in `allowed`.
    /// Empty values count as absent.
    pub fn parse(raw: Option<&str>, allowed: &[&str]) -> Result<Self, ApiError> {
        let mut q = ApiQuery::default();
        let mut seen = Vec::new();
        for (key, value) in url::form_urlencoded::parse(raw.unwrap_or("").as_bytes()) {
            if !allowed.contains(&key.as_ref()) {
                return Err(ApiError::bad_request(format!("unknown parameter {key:?}")));
            }
            if key != "genders" {
                if seen.contains(&key) {
                    return Err(ApiError::bad_request(format!(
                        "parameter {key:?} given twice"
                    )));
                }
                seen.push(key.clone());
            }
            if value.is_empty() {
                continue;
            }
            let year = |v: &str| {
                v.parse::<i32>().map_err(|_| {
                    ApiError::bad_request(format!("{key} must be an integer year, got {v:?}"))
                })
            };
            match key.as_ref() {
                "subclass" => q.subclass = Some(value.into_owned()),
                "year_from" => q.year_from = Some(year(&value)?),
                "year_to" => q.year_to = Some(year(&value)?),
                "genders" => q
                    .genders
                    .get_or_insert_with(Vec::new)
                    .push(value.into_owned()),
                "gender" => q.gender = Some(value.into_owned()),
                _ => unreachable!("filtered by allowed"),
            }
        }
        if let (Some(from), Some(to)) = (q.year_from, q.year_to) {
            if from > to {
                return Err(AggregateError::InvalidRange { from, to }.into());
            }
        }
        Ok(q)
    }

    fn filter(&self) -> CubeFilter {
        CubeFilter {
            subclass: self.subclass.clone(),
            year_from: self.year_from,
            year_to: self.year_to,
        }
    }
}

const FILTER_KEYS: [&str; 3] = ["subclass", "year_from", "year_to"];

async fn subclasses(
    State(s): State<Arc<AppState>>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    ApiQuery::parse(raw.as_deref(), &[])?;
    Ok(Json(&s.subclasses).into_response())
}

async fn summary_handler(
    State(s): State<Arc<AppState>>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    let q = ApiQuery::parse(
        raw.as_deref(),
        &["subclass", "year_from", "year_to", "genders"],
    )?;
    Ok(Json(summary(&s.cube, &q.filter(), q.genders.as_deref())?).into_response())
}

async fn distribution(
    State(s): State<Arc<AppState>>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    let q = ApiQuery::parse(raw.as_deref(), &FILTER_KEYS)?;
    Ok(Json(gender_distribution(&s.cube, &q.filter())?).into_response())
}

async fn series(
    State(s): State<Arc<AppState>>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    let q = ApiQuery::parse(
        raw.as_deref(),
        &["gender", "subclass", "year_from", "year_to"],
    )?;
    let gender = q
        .gender
        .as_deref()
        .ok_or_else(|| ApiError::bad_request("gender is required"))?;
    Ok(Json(yearly_series(&s.cube, gender, &q.filter())?).into_response())
}

async fn other(
    State(s): State<Arc<AppState>>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    ApiQuery::parse(raw.as_deref(), &[])?;
    Ok(Json(other_genders_view(&s.cube)).into_response())
}

#[derive(Serialize)]
struct Health<'a> {
    status: &'a str,
    snapshot_hash: &'a str,
}

async fn healthz(State(s): State<Arc<AppState>>) -> Response {
    Json(Health {
        status: "ok",
        snapshot_hash: &s.hash,
    })
    .into_response()
}

async fn api_not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found",
        message: "no such endpoint".into(),
    }
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

/// The API routes plus the dashboard's static files: `ui_dir` if given,
/// otherwise a built-in page describing the API.
pub fn router(snapshot: &LoadedSnapshot, ui_dir: Option<&Path>) -> Router {
    let state = Arc::new(AppState {
        subclasses: snapshot
            .cube
            .subclasses()
            .into_iter()
            .map(str::to_owned)
            .collect(),
        cube: snapshot.cube.clone(),
        hash: snapshot.manifest.content_hash.clone(),
    });
    let api = Router::new()
        .route("/subclasses", get(subclasses))
        .route("/summary", get(summary_handler))
        .route("/distribution", get(distribution))
        .route("/series", get(series))
        .route("/other", get(other))
        .fallback(api_not_found);
    let app = Router::new()
        .nest("/api", api)
        .route("/healthz", get(healthz));
    let app = match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(index)),
    };
    app.with_state(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_parsing() {
        let q = ApiQuery::parse(
            Some("subclass=Judge&year_from=2001&genders=a&genders=trans%20woman"),
            &["subclass", "year_from", "genders"],
        )
        .unwrap();
        assert_eq!(q.subclass.as_deref(), Some("Judge"));
        assert_eq!(q.year_from, Some(2001));
        assert_eq!(
            q.genders,
            Some(vec!["a".to_owned(), "trans woman".to_owned()])
        );

        let empty = ApiQuery::parse(Some("subclass=&year_from=&year_to="), &FILTER_KEYS).unwrap();
        assert_eq!(empty, ApiQuery::default());

        let bad = |raw: &str| ApiQuery::parse(Some(raw), &FILTER_KEYS).unwrap_err().status;
        assert_eq!(bad("year_from=2010&year_to=2005"), StatusCode::BAD_REQUEST);
        assert_eq!(bad("year_from=soon"), StatusCode::BAD_REQUEST);
        assert_eq!(bad("colour=red"), StatusCode::BAD_REQUEST);
        assert_eq!(bad("subclass=A&subclass=B"), StatusCode::BAD_REQUEST);
    }
}
