use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use wgd_harvest::sparql::{
    fetch_creation_year, fetch_entity_gender, ClientError, Endpoint, EndpointConfig, ErrorClass,
    PagedQuery, Pager, RetryPolicy,
};
use wgd_testkit::mock::{numbered_rows, table, Fault, MockServer, Responder, Row};
use wgd_testkit::world::FixtureWorld;

fn endpoint(url: &str, retry: RetryPolicy) -> Endpoint {
    let mut cfg = EndpointConfig::dbpedia(url).unwrap();
    cfg.min_request_interval_ms = 0;
    Endpoint::new(cfg, retry).unwrap()
}

fn fast_retry(max_attempts: u32) -> RetryPolicy {
    RetryPolicy::fixed(max_attempts, 20, 2.0)
}

fn relation_query() -> PagedQuery {
    PagedQuery::new(
        "",
        "SELECT ?k ?v WHERE { ?s ?k ?v . {{KEY_FILTER}} }",
        Some("k"),
    )
}

#[tokio::test]
async fn empty_result_is_single_last_page() {
    let server = MockServer::sparql(table(vec![]), 10_000, Some(40_000)).await;
    let ep = endpoint(&server.url(), fast_retry(3));
    let page = ep
        .execute_select("SELECT ?k WHERE { ?s ?p ?k }")
        .await
        .unwrap();
    assert!(page.rows.is_empty());
    assert!(page.is_last);
}

#[tokio::test]
async fn two_server_errors_then_success() {
    let server = MockServer::sparql(table(numbered_rows(3)), 10_000, None).await;
    server.script([Fault::Status(500), Fault::Status(503)]);
    let ep = endpoint(&server.url(), fast_retry(3));
    let started = Instant::now();
    let page = ep
        .execute_select("SELECT * WHERE { ?s ?p ?o }")
        .await
        .unwrap();
    assert_eq!(page.rows.len(), 3);
    assert_eq!(server.request_count(), 3);
    // two backoff waits: 20 ms then 40 ms
    assert!(started.elapsed() >= Duration::from_millis(60));
    let statuses: Vec<u16> = server.requests().iter().map(|r| r.status).collect();
    assert_eq!(statuses, vec![500, 503, 200]);
}

#[tokio::test]
async fn persistent_timeout_exhausts_after_max_attempts() {
    let server = MockServer::sparql(table(numbered_rows(3)), 10_000, None).await;
    server.set_outage(Some(Fault::Status(504)));
    let ep = endpoint(&server.url(), fast_retry(3));
    match ep.execute_select("SELECT * WHERE { ?s ?p ?o }").await {
        Err(ClientError::RetriesExhausted {
            attempts,
            last_class,
            ..
        }) => {
            assert_eq!(attempts, 3);
            assert_eq!(last_class, ErrorClass::Timeout);
        }
        other => panic!("expected RetriesExhausted, got {other:?}"),
    }
    assert_eq!(server.request_count(), 3);
}

#[tokio::test]
async fn attempt_count_is_min_of_failures_plus_one_and_max() {
    let server = MockServer::sparql(table(numbered_rows(1)), 10_000, None).await;
    let faults = [
        Fault::Status(500),
        Fault::Status(429),
        Fault::Status(504),
        Fault::Status(502),
    ];
    for max_attempts in 1..=4u32 {
        for k in 0..=4usize {
            server.clear_log();
            server.clear_script();
            server.script(faults.iter().take(k).cloned());
            let ep = endpoint(&server.url(), RetryPolicy::fixed(max_attempts, 1, 1.0));
            let result = ep.execute_select("SELECT * WHERE { ?s ?p ?o }").await;
            let expected = (k + 1).min(max_attempts as usize);
            assert_eq!(server.request_count(), expected, "k={k} max={max_attempts}");
            assert_eq!(
                result.is_ok(),
                k < max_attempts as usize,
                "k={k} max={max_attempts}"
            );
        }
    }
}

#[tokio::test]
async fn client_timeout_is_retried_as_timeout() {
    let server = MockServer::sparql(table(numbered_rows(2)), 10_000, None).await;
    server.script([Fault::Delay(Duration::from_millis(400))]);
    let mut cfg = EndpointConfig::dbpedia(&server.url()).unwrap();
    cfg.min_request_interval_ms = 0;
    cfg.transport.timeout_ms = 100;
    let ep = Endpoint::new(cfg, fast_retry(2)).unwrap();
    let page = ep
        .execute_select("SELECT * WHERE { ?s ?p ?o }")
        .await
        .unwrap();
    assert_eq!(page.rows.len(), 2);
    assert_eq!(
        server.request_count(),
        1,
        "the timed-out request is logged only when answered"
    );
}

#[tokio::test]
async fn bad_request_is_not_retried() {
    let server = MockServer::sparql(table(vec![]), 10_000, None).await;
    server.script([Fault::StatusBody(
        400,
        "Virtuoso 37000 Error SP030: SPARQL compiler".into(),
    )]);
    let ep = endpoint(&server.url(), fast_retry(5));
    let err = ep.execute_select("SELEKT").await.unwrap_err();
    assert!(
        matches!(err, ClientError::NonRetryableQuery { status: 400, .. }),
        "{err:?}"
    );
    assert_eq!(server.request_count(), 1);
}

#[tokio::test]
async fn truncated_body_is_parse_error() {
    let server = MockServer::sparql(table(numbered_rows(50)), 10_000, None).await;
    server.script([Fault::Truncated]);
    let ep = endpoint(&server.url(), fast_retry(3));
    let err = ep
        .execute_select("SELECT * WHERE { ?s ?p ?o }")
        .await
        .unwrap_err();
    assert!(matches!(err, ClientError::Parse { .. }), "{err:?}");
}

#[tokio::test]
async fn requests_are_spaced_and_carry_configured_headers() {
    let server = MockServer::sparql(table(numbered_rows(1)), 10_000, None).await;
    let mut cfg = EndpointConfig::dbpedia(&server.url()).unwrap();
    cfg.min_request_interval_ms = 40;
    cfg.transport.user_agent = "wgd-test-agent/1.0".into();
    let ep = Endpoint::new(cfg, fast_retry(1)).unwrap();
    // sequential, then a concurrent burst
    for _ in 0..3 {
        ep.execute_select("SELECT * WHERE { ?s ?p ?o }")
            .await
            .unwrap();
    }
    let burst: Vec<_> = (0..6)
        .map(|_| {
            let ep = ep.clone();
            tokio::spawn(async move { ep.execute_select("SELECT * WHERE { ?s ?p ?o }").await })
        })
        .collect();
    for t in burst {
        t.await.unwrap().unwrap();
    }
    let log = server.requests();
    assert_eq!(log.len(), 9);
    let mut times: Vec<Instant> = log.iter().map(|r| r.at).collect();
    times.sort();
    for w in times.windows(2) {
        assert!(
            w[1] - w[0] >= Duration::from_millis(40),
            "gap {:?}",
            w[1] - w[0]
        );
    }
    for r in &log {
        assert_eq!(r.user_agent.as_deref(), Some("wgd-test-agent/1.0"));
        assert_eq!(r.accept.as_deref(), Some("application/sparql-results+json"));
        assert_eq!(r.method, "POST");
    }
}

async fn paged_rows(
    size: usize,
    page_size: u32,
    row_limit: u32,
    sort_cap: u32,
) -> (Vec<usize>, Vec<Row>, MockServer) {
    let server = MockServer::sparql(
        table(numbered_rows(size)),
        row_limit as usize,
        Some(u64::from(sort_cap)),
    )
    .await;
    let mut cfg = EndpointConfig::dbpedia(&server.url()).unwrap();
    cfg.min_request_interval_ms = 0;
    cfg.row_limit = row_limit;
    cfg.sort_cap = Some(sort_cap);
    let ep = Endpoint::new(cfg, fast_retry(1)).unwrap();
    let mut pager = Pager::new(ep, relation_query(), page_size).unwrap();
    let mut sizes = Vec::new();
    let mut rows = Vec::new();
    while let Some(page) = pager.next_page().await {
        let page = page.unwrap();
        sizes.push(page.rows.len());
        rows.extend(page.rows);
    }
    (sizes, rows, server)
}

fn same_multiset(got: &[Row], expected: &[Row]) -> bool {
    let count = |rows: &[Row]| {
        let mut m: BTreeMap<Row, usize> = BTreeMap::new();
        for r in rows {
            *m.entry(r.clone()).or_default() += 1;
        }
        m
    };
    count(got) == count(expected)
}

#[tokio::test]
async fn pagination_25001_rows() {
    let (sizes, rows, _s) = paged_rows(25_001, 10_000, 10_000, 40_000).await;
    assert_eq!(sizes, vec![10_000, 10_000, 5_001]);
    assert!(same_multiset(&rows, &numbered_rows(25_001)));
}

#[tokio::test]
async fn pagination_switches_to_keyed_past_sort_cap() {
    let (sizes, rows, server) = paged_rows(45_000, 10_000, 10_000, 40_000).await;
    assert_eq!(sizes, vec![10_000, 10_000, 10_000, 10_000, 5_000]);
    assert!(same_multiset(&rows, &numbered_rows(45_000)));
    let log = server.requests();
    let offset_queries = log.iter().filter(|r| r.query.contains("OFFSET")).count();
    let keyed_queries = log
        .iter()
        .filter(|r| r.query.contains("FILTER(STR(?k) >"))
        .count();
    assert_eq!((offset_queries, keyed_queries), (4, 1));
    assert!(log.iter().all(|r| r.status == 200));
}

#[tokio::test]
async fn pagination_boundary_sizes() {
    for (size, expected) in [
        (0usize, vec![0usize]),
        (9_999, vec![9_999]),
        (10_000, vec![10_000, 0]),
    ] {
        let (sizes, rows, _s) = paged_rows(size, 10_000, 10_000, 40_000).await;
        assert_eq!(sizes, expected, "size {size}");
        assert!(same_multiset(&rows, &numbered_rows(size)));
    }
}

#[tokio::test]
async fn pagination_small_pages_cover_every_size() {
    // row limit 7, cap 21: exercises both strategies with every remainder
    let size = Arc::new(AtomicUsize::new(0));
    let current = Arc::clone(&size);
    let responder: Responder =
        Arc::new(move |_q: &str| Ok(numbered_rows(current.load(Ordering::SeqCst))));
    let server = MockServer::sparql(responder, 7, Some(21)).await;
    let mut cfg = EndpointConfig::dbpedia(&server.url()).unwrap();
    cfg.min_request_interval_ms = 0;
    cfg.row_limit = 7;
    cfg.sort_cap = Some(21);
    let ep = Endpoint::new(cfg, fast_retry(1)).unwrap();
    for n in 0..=40usize {
        size.store(n, Ordering::SeqCst);
        for page_size in [1u32, 3, 7] {
            let mut pager = Pager::new(ep.clone(), relation_query(), page_size).unwrap();
            let mut rows = Vec::new();
            while let Some(page) = pager.next_page().await {
                rows.extend(page.unwrap().rows);
            }
            assert!(
                same_multiset(&rows, &numbered_rows(n)),
                "size {n} page {page_size}"
            );
        }
    }
}

#[tokio::test]
async fn missing_sort_key_fails_at_the_cap() {
    let server = MockServer::sparql(table(numbered_rows(30)), 10, Some(20)).await;
    let mut cfg = EndpointConfig::dbpedia(&server.url()).unwrap();
    cfg.min_request_interval_ms = 0;
    cfg.row_limit = 10;
    cfg.sort_cap = Some(20);
    let ep = Endpoint::new(cfg, fast_retry(1)).unwrap();
    let q = PagedQuery::new("", "SELECT ?k ?v WHERE { ?s ?k ?v }", None);
    let mut pager = Pager::new(ep, q, 10).unwrap();
    assert_eq!(pager.next_page().await.unwrap().unwrap().rows.len(), 10);
    assert_eq!(pager.next_page().await.unwrap().unwrap().rows.len(), 10);
    assert!(matches!(
        pager.next_page().await,
        Some(Err(ClientError::CapStrategy(_)))
    ));
}

#[tokio::test]
async fn page_size_above_row_limit_is_rejected() {
    let server = MockServer::sparql(table(vec![]), 10, None).await;
    let mut cfg = EndpointConfig::dbpedia(&server.url()).unwrap();
    cfg.row_limit = 10;
    cfg.sort_cap = None;
    let ep = Endpoint::new(cfg, fast_retry(1)).unwrap();
    assert!(Pager::new(ep, relation_query(), 11).is_err());
}

async fn world_endpoints() -> (MockServer, MockServer, Endpoint, Endpoint) {
    let world = Arc::new(FixtureWorld::bundled());
    let wd = MockServer::sparql(world.wikidata_responder(), 100_000, None).await;
    let wiki = MockServer::wiki(world.articles.clone()).await;
    let mut wd_cfg = EndpointConfig::wikidata(&wd.url()).unwrap();
    wd_cfg.min_request_interval_ms = 0;
    let mut wiki_cfg = EndpointConfig::wikipedia(&wiki.url()).unwrap();
    wiki_cfg.min_request_interval_ms = 0;
    let wd_ep = Endpoint::new(wd_cfg, fast_retry(2)).unwrap();
    let wiki_ep = Endpoint::new(wiki_cfg, fast_retry(2)).unwrap();
    (wd, wiki, wd_ep, wiki_ep)
}

#[tokio::test]
async fn entity_gender_lookups() {
    let (wd, _wiki, ep, _) = world_endpoints().await;
    assert_eq!(
        fetch_entity_gender(&ep, "Q7259").await.unwrap().as_deref(),
        Some("female")
    );
    assert_eq!(
        fetch_entity_gender(&ep, "Q4300007")
            .await
            .unwrap()
            .as_deref(),
        Some("trans woman")
    );
    assert_eq!(fetch_entity_gender(&ep, "Q4300005").await.unwrap(), None);
    assert!(matches!(
        fetch_entity_gender(&ep, "Q4200002").await,
        Err(ClientError::EntityNotFound(_))
    ));
    let before = wd.request_count();
    assert!(matches!(
        fetch_entity_gender(&ep, "X123").await,
        Err(ClientError::InvalidInput(_))
    ));
    assert_eq!(wd.request_count(), before, "no request for a malformed id");
    let q = &wd.requests()[0].query;
    assert!(q.contains("wdt:P21") && q.contains(r#"LANG(?genderLabel) = "en""#));
}

#[tokio::test]
async fn creation_year_lookups() {
    let (_wd, wiki, _, ep) = world_endpoints().await;
    assert_eq!(
        fetch_creation_year(&ep, "Ancient Sculptor").await.unwrap(),
        Some(2004)
    );
    assert_eq!(
        fetch_creation_year(&ep, "Overflow Runner").await.unwrap(),
        Some(2024)
    );
    assert_eq!(
        fetch_creation_year(&ep, "No Such Article").await.unwrap(),
        None
    );
    assert!(fetch_creation_year(&ep, "  ").await.is_err());
    let log = wiki.requests();
    assert_eq!(log.len(), 3);
    assert!(log[0].query.contains("titles=Ancient_Sculptor"));
    assert!(log[0].query.contains("rvdir=newer"));
    assert_eq!(log[0].method, "GET");
}
