//! Single-entity lookups: Wikidata gender and Wikipedia article creation year.

use chrono::{DateTime, Datelike, FixedOffset};
use serde::Deserialize;
use wgd_core::QId;

use super::{ClientError, Endpoint};

/// Default gender lookup. `{ID}` is replaced by the Q-id. `wdt:P21` yields
/// best-rank "sex or gender" statements; labels are taken in English.
/// The `FILTER EXISTS` row distinguishes an entity without a gender statement
/// (one empty row) from an unknown entity (no rows).
pub const DEFAULT_GENDER_TEMPLATE: &str = r#"PREFIX wd: <http://www.wikidata.org/entity/>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
SELECT ?gender ?genderLabel WHERE {
  BIND(wd:{ID} AS ?item)
  FILTER EXISTS { ?item ?anyProperty ?anyValue }
  OPTIONAL {
    ?item wdt:P21 ?gender .
    OPTIONAL { ?gender rdfs:label ?genderLabel . FILTER(LANG(?genderLabel) = "en") }
  }
}
ORDER BY STR(?gender)
"#;

pub fn entity_gender_query(template: &str, id: &QId) -> String {
    template.replace("{ID}", id.as_str())
}

/// Gender label of a Wikidata entity, or `None` if it declares none.
///
/// With several gender statements the first by IRI order is used, so the
/// answer is stable across runs. A gender item without an English label is
/// reported by its Q-id.
pub async fn fetch_entity_gender(
    endpoint: &Endpoint,
    entity_id: &str,
) -> Result<Option<String>, ClientError> {
    fetch_entity_gender_with(endpoint, DEFAULT_GENDER_TEMPLATE, entity_id).await
}

pub async fn fetch_entity_gender_with(
    endpoint: &Endpoint,
    template: &str,
    entity_id: &str,
) -> Result<Option<String>, ClientError> {
    let id = QId::parse(entity_id).map_err(|e| ClientError::InvalidInput(e.to_string()))?;
    let rows = endpoint
        .select_rows(&entity_gender_query(template, &id))
        .await?;
    if rows.is_empty() {
        return Err(ClientError::EntityNotFound(id.as_str().to_owned()));
    }
    let label = rows.iter().find_map(|row| {
        row.get("genderLabel")
            .cloned()
            .or_else(|| row.get("gender").map(|iri| local_name(iri).to_owned()))
    });
    Ok(label)
}

fn local_name(iri: &str) -> &str {
    iri.rsplit(['/', '#']).next().unwrap_or(iri)
}

/// Article title as sent to the API: trimmed, spaces as underscores.
pub fn api_title(title: &str) -> String {
    title.trim().replace(' ', "_")
}

#[derive(Deserialize)]
struct ApiResponse {
    query: Option<ApiQuery>,
    error: Option<ApiError>,
}

#[derive(Deserialize)]
struct ApiError {
    code: String,
    #[serde(default)]
    info: String,
}

#[derive(Deserialize)]
struct ApiQuery {
    #[serde(default)]
    pages: Vec<ApiPage>,
}

#[derive(Deserialize)]
struct ApiPage {
    #[serde(default)]
    missing: bool,
    #[serde(default)]
    invalid: bool,
    #[serde(default)]
    revisions: Vec<ApiRevision>,
}

#[derive(Deserialize)]
struct ApiRevision {
    timestamp: String,
}

/// Year of the article's earliest revision, or `None` if there is no such page.
pub async fn fetch_creation_year(
    endpoint: &Endpoint,
    article_title: &str,
) -> Result<Option<i32>, ClientError> {
    if article_title.trim().is_empty() {
        return Err(ClientError::InvalidInput("article title is empty".into()));
    }
    let title = api_title(article_title);
    let body = endpoint
        .get(&[
            ("action", "query"),
            ("prop", "revisions"),
            ("titles", &title),
            ("rvlimit", "1"),
            ("rvdir", "newer"),
            ("rvprop", "timestamp"),
            ("format", "json"),
            ("formatversion", "2"),
        ])
        .await?;
    parse_creation_year(&body)
}

fn parse_creation_year(body: &[u8]) -> Result<Option<i32>, ClientError> {
    let resp: ApiResponse = serde_json::from_slice(body).map_err(|e| ClientError::Parse {
        offset: 0,
        message: e.to_string(),
    })?;
    if let Some(err) = resp.error {
        return Err(ClientError::NonRetryableQuery {
            status: 200,
            message: format!("{}: {}", err.code, err.info),
        });
    }
    let Some(page) = resp.query.and_then(|q| q.pages.into_iter().next()) else {
        return Ok(None);
    };
    if page.missing || page.invalid {
        return Ok(None);
    }
    let Some(rev) = page.revisions.first() else {
        return Ok(None);
    };
    let ts: DateTime<FixedOffset> =
        DateTime::parse_from_rfc3339(&rev.timestamp).map_err(|e| ClientError::Parse {
            offset: 0,
            message: format!("revision timestamp {:?}: {e}", rev.timestamp),
        })?;
    Ok(Some(ts.year()))
}
