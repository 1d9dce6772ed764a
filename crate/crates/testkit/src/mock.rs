//! Local fixture servers standing in for a SPARQL endpoint and the MediaWiki
//! action API.
//!
//! The SPARQL mock does not evaluate SPARQL. A responder maps the query text
//! to the full relation; the mock then applies the paging clauses the
//! harvester emits (`FILTER(STR(?k) > "...")`, `ORDER BY STR(?k)`, `LIMIT`,
//! `OFFSET`) and enforces the row limit and the sort cap the way the public
//! endpoints do. Faults can be scripted per request, and every request is
//! logged with its arrival time and headers.

use std::collections::{BTreeMap, VecDeque};
use std::net::SocketAddr;
use std::sync::{Arc, LazyLock, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{RawQuery, State};
use axum::http::{header, HeaderMap, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::serve::ListenerExt;
use axum::Router;
use regex::Regex;
use tokio::task::JoinHandle;

pub type Row = BTreeMap<String, String>;

/// Maps a query to the complete, unpaged relation it denotes.
/// `Err` lets a responder reject a query with a status and message.
pub type Responder = Arc<dyn Fn(&str) -> Result<Vec<Row>, (u16, String)> + Send + Sync>;

#[derive(Debug, Clone)]
pub enum Fault {
    Status(u16),
    StatusBody(u16, String),
    /// Sleep before answering normally.
    Delay(Duration),
    /// 200 with a cut-off body.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct LoggedRequest {
    pub at: Instant,
    pub method: String,
    /// SPARQL query text, or the raw query string for the wiki API.
    pub query: String,
    pub user_agent: Option<String>,
    pub accept: Option<String>,
    /// Status the mock answered with.
    pub status: u16,
}

enum Kind {
    Sparql {
        responder: Responder,
        row_limit: usize,
        sort_cap: Option<u64>,
    },
    Wiki {
        /// Title (spaces, not underscores) to first-revision timestamp.
        articles: BTreeMap<String, String>,
    },
}

struct Shared {
    kind: Kind,
    script: Mutex<VecDeque<Fault>>,
    outage: Mutex<Option<Fault>>,
    log: Mutex<Vec<LoggedRequest>>,
}

pub struct MockServer {
    addr: SocketAddr,
    path: &'static str,
    shared: Arc<Shared>,
    task: JoinHandle<()>,
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

impl MockServer {
    pub async fn sparql(
        responder: Responder,
        row_limit: usize,
        sort_cap: Option<u64>,
    ) -> MockServer {
        Self::start(
            Kind::Sparql {
                responder,
                row_limit,
                sort_cap,
            },
            "/sparql",
        )
        .await
    }

    pub async fn wiki(articles: BTreeMap<String, String>) -> MockServer {
        Self::start(Kind::Wiki { articles }, "/w/api.php").await
    }

    async fn start(kind: Kind, path: &'static str) -> MockServer {
        let shared = Arc::new(Shared {
            kind,
            script: Mutex::new(VecDeque::new()),
            outage: Mutex::new(None),
            log: Mutex::new(Vec::new()),
        });
        let app = Router::new()
            .fallback(handle)
            .with_state(Arc::clone(&shared));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
            .await
            .expect("bind mock server");
        let addr = listener.local_addr().expect("mock server address");
        let listener = listener.tap_io(|tcp| {
            let _ = tcp.set_nodelay(true);
        });
        let task = tokio::spawn(async move {
            axum::serve(listener, app).await.expect("mock server");
        });
        MockServer {
            addr,
            path,
            shared,
            task,
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}{}", self.addr, self.path)
    }

    /// Faults consumed one per request, in order, before normal answers resume.
    pub fn script(&self, faults: impl IntoIterator<Item = Fault>) {
        self.shared.script.lock().unwrap().extend(faults);
    }

    pub fn clear_script(&self) {
        self.shared.script.lock().unwrap().clear();
    }

    /// A fault applied to every request until cleared with `None`.
    pub fn set_outage(&self, fault: Option<Fault>) {
        *self.shared.outage.lock().unwrap() = fault;
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.shared.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.shared.log.lock().unwrap().len()
    }

    pub fn clear_log(&self) {
        self.shared.log.lock().unwrap().clear();
    }
}

async fn handle(
    State(shared): State<Arc<Shared>>,
    method: Method,
    headers: HeaderMap,
    RawQuery(raw): RawQuery,
    body: Bytes,
) -> Response {
    let at = Instant::now();
    let mut params: Vec<(String, String)> =
        url::form_urlencoded::parse(raw.as_deref().unwrap_or("").as_bytes())
            .into_owned()
            .collect();
    if method == Method::POST {
        params.extend(url::form_urlencoded::parse(&body).into_owned());
    }
    let logged_query = match shared.kind {
        Kind::Sparql { .. } => param(&params, "query").unwrap_or_default().to_owned(),
        Kind::Wiki { .. } => raw.clone().unwrap_or_default(),
    };
    let header_str = |name: header::HeaderName| {
        headers
            .get(name)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned)
    };
    let mut entry = LoggedRequest {
        at,
        method: method.to_string(),
        query: logged_query,
        user_agent: header_str(header::USER_AGENT),
        accept: header_str(header::ACCEPT),
        status: 200,
    };

    let fault = {
        let outage = shared.outage.lock().unwrap().clone();
        outage.or_else(|| shared.script.lock().unwrap().pop_front())
    };
    let mut truncate = false;
    match fault {
        Some(Fault::Status(code)) => {
            return finish(&shared, entry, code, format!("scripted failure {code}"))
        }
        Some(Fault::StatusBody(code, text)) => return finish(&shared, entry, code, text),
        Some(Fault::Delay(d)) => tokio::time::sleep(d).await,
        Some(Fault::Truncated) => truncate = true,
        None => {}
    }

    let (status, content_type, mut text) = match &shared.kind {
        Kind::Sparql {
            responder,
            row_limit,
            sort_cap,
        } => match param(&params, "query") {
            None => (400, "text/plain", "missing query parameter".to_owned()),
            Some(q) => match answer_sparql(responder, q, *row_limit, *sort_cap) {
                Ok(body) => (200, "application/sparql-results+json", body),
                Err((code, msg)) => (code, "text/plain", msg),
            },
        },
        Kind::Wiki { articles } => (200, "application/json", answer_wiki(articles, &params)),
    };
    if truncate {
        text.truncate(text.len() / 2);
    }
    entry.status = status;
    shared.log.lock().unwrap().push(entry);
    (
        StatusCode::from_u16(status).unwrap(),
        [(header::CONTENT_TYPE, content_type)],
        text,
    )
        .into_response()
}

fn finish(shared: &Shared, mut entry: LoggedRequest, code: u16, text: String) -> Response {
    entry.status = code;
    shared.log.lock().unwrap().push(entry);
    (StatusCode::from_u16(code).unwrap(), text).into_response()
}

fn param<'a>(params: &'a [(String, String)], name: &str) -> Option<&'a str> {
    params
        .iter()
        .find(|(k, _)| k == name)
        .map(|(_, v)| v.as_str())
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

static FILTER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"FILTER\(STR\(\?(\w+)\) > "((?:[^"\\]|\\.)*)"\)"#).unwrap());
static ORDER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"ORDER BY STR\(\?(\w+)\)").unwrap());
static LIMIT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bLIMIT (\d+)").unwrap());
static OFFSET_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bOFFSET (\d+)").unwrap());

fn answer_sparql(
    responder: &Responder,
    query: &str,
    row_limit: usize,
    sort_cap: Option<u64>,
) -> Result<String, (u16, String)> {
    let mut rows = responder(query)?;
    if let Some(c) = FILTER_RE.captures(query) {
        let (key, after) = (c[1].to_owned(), unescape(&c[2]));
        rows.retain(|r| r.get(&key).is_some_and(|v| v.as_str() > after.as_str()));
    }
    let ordered = ORDER_RE.captures(query).map(|c| c[1].to_owned());
    if let Some(key) = &ordered {
        rows.sort_by(|a, b| a.get(key).cmp(&b.get(key)));
    }
    let limit = LIMIT_RE
        .captures(query)
        .map(|c| c[1].parse::<u64>().unwrap());
    let offset = OFFSET_RE
        .captures(query)
        .map_or(0, |c| c[1].parse::<u64>().unwrap());
    if let (Some(cap), Some(_), Some(limit)) = (sort_cap, &ordered, limit) {
        if offset + limit > cap {
            return Err((
                400,
                format!(
                    "Virtuoso 22023 Error SR353: Sorted TOP clause specifies more then {} rows to sort. \
                     Only {cap} are allowed.",
                    offset + limit
                ),
            ));
        }
    }
    let take = limit.map_or(usize::MAX, |l| l as usize).min(row_limit);
    let page: Vec<&Row> = rows.iter().skip(offset as usize).take(take).collect();
    Ok(encode_results(&page))
}

fn encode_results(rows: &[&Row]) -> String {
    let mut vars: Vec<&str> = rows
        .iter()
        .flat_map(|r| r.keys().map(String::as_str))
        .collect();
    vars.sort_unstable();
    vars.dedup();
    let bindings: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<String, serde_json::Value> = r
                .iter()
                .map(|(k, v)| {
                    let kind = if v.starts_with("http://") {
                        "uri"
                    } else {
                        "literal"
                    };
                    (k.clone(), serde_json::json!({ "type": kind, "value": v }))
                })
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::json!({ "head": { "vars": vars }, "results": { "bindings": bindings } }).to_string()
}

fn answer_wiki(articles: &BTreeMap<String, String>, params: &[(String, String)]) -> String {
    let Some(raw_title) = param(params, "titles") else {
        return serde_json::json!({ "error": { "code": "missingparam", "info": "titles" } })
            .to_string();
    };
    let title = raw_title.replace('_', " ");
    let page = match articles.get(&title) {
        Some(ts) => serde_json::json!({
            "pageid": 1 + articles.keys().position(|k| k == &title).unwrap(),
            "ns": 0,
            "title": title,
            "revisions": [ { "timestamp": ts } ],
        }),
        None => serde_json::json!({ "ns": 0, "title": title, "missing": true }),
    };
    let mut doc = serde_json::json!({ "batchcomplete": true, "query": { "pages": [page] } });
    if raw_title != title {
        doc["query"]["normalized"] =
            serde_json::json!([{ "fromencoded": false, "from": raw_title, "to": title }]);
    }
    doc.to_string()
}

/// A responder serving one fixed relation for any query.
pub fn table(rows: Vec<Row>) -> Responder {
    let rows = Arc::new(rows);
    Arc::new(move |_q: &str| Ok(rows.as_ref().clone()))
}

/// `n` rows `{k: "r0000000", v: "<i>"}` with unique, zero-padded keys.
pub fn numbered_rows(n: usize) -> Vec<Row> {
    (0..n)
        .map(|i| {
            let mut r = Row::new();
            r.insert("k".into(), format!("r{i:07}"));
            r.insert("v".into(), i.to_string());
            r
        })
        .collect()
}
