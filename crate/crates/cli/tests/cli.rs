mod common;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use wgd_harvest::harvester::HarvestCheckpoint;
use wgd_testkit::mock::{Fault, MockServer};
use wgd_testkit::world::FixtureWorld;

use common::{cleaning_fixture, fixture};

fn wgd() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wgd"));
    for var in [
        "WGD_DBPEDIA_ENDPOINT",
        "WGD_WIKIDATA_ENDPOINT",
        "WGD_WIKIPEDIA_API",
        "WGD_BIND_ADDR",
    ] {
        cmd.env_remove(var);
    }
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().unwrap()
}

async fn run_async(mut cmd: Command) -> Output {
    tokio::task::spawn_blocking(move || cmd.output().unwrap())
        .await
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn golden_harvest() -> Vec<(String, Vec<u8>)> {
    files(&wgd_testkit::world_dir().join("golden"))
}

struct World {
    dbpedia: MockServer,
    wikidata: MockServer,
    wiki: MockServer,
}

async fn world() -> World {
    let w = Arc::new(FixtureWorld::bundled());
    World {
        dbpedia: MockServer::sparql(w.dbpedia_responder(), 4, Some(8)).await,
        wikidata: MockServer::sparql(w.wikidata_responder(), 100_000, None).await,
        wiki: MockServer::wiki(w.articles.clone()).await,
    }
}

fn harvest_cmd(w: &World, dir: &Path) -> Command {
    let mut cmd = wgd();
    cmd.args(["harvest", "--out"])
        .arg(dir.join("raw"))
        .arg("--checkpoint")
        .arg(dir.join("cp.json"))
        .args(["--dbpedia-endpoint", &w.dbpedia.url()])
        .args(["--wikidata-endpoint", &w.wikidata.url()])
        .args(["--wikipedia-api", &w.wiki.url()])
        .args(["--page-size", "4", "--row-limit", "4", "--sort-cap", "8"])
        .args([
            "--min-interval-ms",
            "0",
            "--max-attempts",
            "3",
            "--backoff-ms",
            "5",
        ])
        .args(["--enrichment-batch", "8"]);
    cmd
}

#[test]
fn harvest_without_endpoints_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(wgd()
        .args(["harvest", "--out"])
        .arg(dir.path().join("raw"))
        .arg("--checkpoint")
        .arg(dir.path().join("cp.json")));
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("WGD_DBPEDIA_ENDPOINT"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
    assert!(!dir.path().join("cp.json").exists());
}

#[tokio::test(flavor = "multi_thread")]
async fn harvest_writes_reference_csvs() {
    let w = world().await;
    let dir = tempfile::tempdir().unwrap();
    let out = run_async(harvest_cmd(&w, dir.path())).await;
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files(&dir.path().join("raw")), golden_harvest());
    assert!(stderr(&out).contains("harvested 65 records into 4 files"));

    // Endpoints from the environment work the same way.
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = wgd();
    cmd.args(["harvest", "--out"])
        .arg(dir.path().join("raw"))
        .arg("--checkpoint")
        .arg(dir.path().join("cp.json"))
        .env("WGD_DBPEDIA_ENDPOINT", w.dbpedia.url())
        .env("WGD_WIKIDATA_ENDPOINT", w.wikidata.url())
        .env("WGD_WIKIPEDIA_API", w.wiki.url())
        .args([
            "--page-size",
            "4",
            "--row-limit",
            "4",
            "--sort-cap",
            "8",
            "--min-interval-ms",
            "0",
        ]);
    let out = run_async(cmd).await;
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files(&dir.path().join("raw")), golden_harvest());
}

async fn wait_for_progress(cp: &Path, child: &mut std::process::Child) {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        if let Ok(Some(c)) = HarvestCheckpoint::load(cp) {
            if !c.completed_subclasses.is_empty() {
                return;
            }
        }
        assert!(
            child.try_wait().unwrap().is_none(),
            "harvest ended before it could be killed"
        );
        assert!(Instant::now() < deadline, "no progress");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn killed_harvest_resumes_to_identical_output() {
    let w = world().await;
    w.dbpedia
        .set_outage(Some(Fault::Delay(Duration::from_millis(40))));
    w.wikidata
        .set_outage(Some(Fault::Delay(Duration::from_millis(40))));
    let dir = tempfile::tempdir().unwrap();

    let mut child = harvest_cmd(&w, dir.path())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    wait_for_progress(&dir.path().join("cp.json"), &mut child).await;
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(
        !HarvestCheckpoint::load(&dir.path().join("cp.json"))
            .unwrap()
            .unwrap()
            .finished
    );

    w.dbpedia.set_outage(None);
    w.wikidata.set_outage(None);
    let out = run_async(harvest_cmd(&w, dir.path())).await;
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files(&dir.path().join("raw")), golden_harvest());
}

#[tokio::test(flavor = "multi_thread")]
async fn interrupt_exits_130_and_resumes() {
    let w = world().await;
    w.dbpedia
        .set_outage(Some(Fault::Delay(Duration::from_millis(40))));
    let dir = tempfile::tempdir().unwrap();

    let mut child = harvest_cmd(&w, dir.path())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    wait_for_progress(&dir.path().join("cp.json"), &mut child).await;
    let status = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let out = tokio::task::spawn_blocking(move || child.wait_with_output().unwrap())
        .await
        .unwrap();
    assert_eq!(out.status.code(), Some(130), "{}", stderr(&out));

    w.dbpedia.set_outage(None);
    let out = run_async(harvest_cmd(&w, dir.path())).await;
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files(&dir.path().join("raw")), golden_harvest());
}

#[tokio::test(flavor = "multi_thread")]
async fn endpoint_outage_exits_2_and_resumes() {
    let w = world().await;
    w.wikidata.set_outage(Some(Fault::Status(503)));
    let dir = tempfile::tempdir().unwrap();
    let out = run_async(harvest_cmd(&w, dir.path())).await;
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(
        stderr(&out).contains("rerun the same command"),
        "{}",
        stderr(&out)
    );

    w.wikidata.set_outage(None);
    let out = run_async(harvest_cmd(&w, dir.path())).await;
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files(&dir.path().join("raw")), golden_harvest());
}

#[tokio::test(flavor = "multi_thread")]
async fn harvest_with_named_subclasses_skips_enumeration() {
    let w = world().await;
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = harvest_cmd(&w, dir.path());
    cmd.args(["--subclass", "Judge", "--subclass", "BeautyQueen"]);
    let out = run_async(cmd).await;
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let got = files(&dir.path().join("raw"));
    let want: Vec<_> = golden_harvest()
        .into_iter()
        .filter(|(n, _)| n == "Judge.csv" || n == "BeautyQueen.csv")
        .collect();
    assert_eq!(got, want);
    assert!(!w
        .dbpedia
        .requests()
        .iter()
        .any(|r| r.query.contains("subClassOf")));
}

#[test]
fn clean_reproduces_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let (clean, report) = (dir.path().join("clean.csv"), dir.path().join("report.json"));
    let out = run(wgd()
        .args(["clean", "--input"])
        .arg(cleaning_fixture("raw.csv"))
        .arg("--config")
        .arg(cleaning_fixture("clean.toml"))
        .arg("--out")
        .arg(&clean)
        .arg("--report")
        .arg(&report));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(&clean).unwrap(),
        std::fs::read(cleaning_fixture("clean.golden.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(&report).unwrap(),
        std::fs::read(cleaning_fixture("report.golden.json")).unwrap()
    );

    let text = String::from_utf8(out.stdout).unwrap();
    let stages = [
        "drop_duplicate_combinations",
        "resolve_multi_id_instances",
        "null_shared_ids",
        "repair_ages",
        "gaussian_outlier_pass",
        "clean_gender_labels",
        "apply_missing_value_policy",
    ];
    let positions: Vec<usize> = stages.iter().map(|s| text.find(s).expect(s)).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
    assert!(text.contains("rows: 200 -> 143"), "{text}");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("report.txt")).unwrap(),
        text
    );
}

#[test]
fn clean_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(wgd()
        .args(["clean", "--input"])
        .arg(cleaning_fixture("raw.csv"))
        .args(["--resolver", "fixture", "--resolver-fixture"])
        .arg(cleaning_fixture("resolver.json"))
        .args(["--fixed-cutoff", "117", "--out"])
        .arg(dir.path().join("clean.csv"))
        .arg("--report")
        .arg(&report));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["outlier_cutoff"], 117);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("outlier cutoff: 117"));

    // A directory input reads every CSV in it.
    let raw_dir = dir.path().join("raw");
    std::fs::create_dir(&raw_dir).unwrap();
    std::fs::copy(cleaning_fixture("raw.csv"), raw_dir.join("a.csv")).unwrap();
    let out = run(wgd()
        .args(["clean", "--input"])
        .arg(&raw_dir)
        .args(["--resolver", "off", "--out"])
        .arg(dir.path().join("clean2.csv"))
        .arg("--report")
        .arg(dir.path().join("report2.json")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("rows: 200 ->"));
}

#[test]
fn clean_missing_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(wgd()
        .args(["clean", "--input"])
        .arg(dir.path().join("absent.csv"))
        .arg("--out")
        .arg(dir.path().join("clean.csv"))
        .arg("--report")
        .arg(dir.path().join("report.json")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("absent.csv"));
    assert!(!dir.path().join("clean.csv").exists());
}

#[test]
fn aggregate_writes_golden_cube_and_snapshot() {
    for (clean, golden) in [
        (
            fixture("dashboard/clean.csv"),
            fixture("dashboard/cube.golden.csv"),
        ),
        (
            cleaning_fixture("clean.golden.csv"),
            fixture("cleaning_cube.golden.csv"),
        ),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(wgd()
            .args(["aggregate", "--clean"])
            .arg(&clean)
            .arg("--report")
            .arg(cleaning_fixture("report.golden.json"))
            .arg("--out")
            .arg(dir.path()));
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(
            std::fs::read(dir.path().join("cube.csv")).unwrap(),
            std::fs::read(&golden).unwrap()
        );
        let snap = wgd::snapshot::load(dir.path()).unwrap();
        assert_eq!(
            snap.manifest.cleaning_report.as_deref(),
            Some("report.json")
        );
        assert!(String::from_utf8(out.stdout)
            .unwrap()
            .contains(&snap.manifest.content_hash));
    }
}

#[test]
fn aggregate_empty_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(
        &empty,
        "subclass,instance,wikiDataID,gender,age,birthYear,publicationYear\n",
    )
    .unwrap();
    let out = run(wgd()
        .args(["aggregate", "--clean"])
        .arg(&empty)
        .arg("--out")
        .arg(dir.path().join("snap")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("snap/cube.csv")).unwrap(),
        "year,subclass,gender,article_count,avg_age,age_sample_size\n"
    );

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "subclass,instance,wikiDataID,gender,age,birthYear,publicationYear\n\
         Judge,A,Q1,female,40,1984,2010\n\
         Judge,B,Q2,male,forty,1984,2011\n",
    )
    .unwrap();
    let out = run(wgd()
        .args(["aggregate", "--clean"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("snap2")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    assert!(!dir.path().join("snap2/snapshot.json").exists());

    let out = run(wgd()
        .args(["aggregate", "--clean"])
        .arg(dir.path().join("nope.csv"))
        .arg("--out")
        .arg(dir.path().join("snap3")));
    assert_eq!(out.status.code(), Some(1));
}

fn start_server(snapshot: &Path, extra_env: Option<(&str, &str)>) -> (std::process::Child, String) {
    let mut cmd = wgd();
    cmd.args(["serve", "--snapshot"])
        .arg(snapshot)
        .stderr(Stdio::piped());
    match extra_env {
        Some((k, v)) => cmd.env(k, v),
        None => cmd.args(["--bind", "127.0.0.1:0"]),
    };
    let mut child = cmd.spawn().unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let line = lines.next().unwrap().unwrap();
    let addr = line
        .split("http://")
        .nth(1)
        .unwrap_or_else(|| panic!("{line}"))
        .to_owned();
    (child, format!("http://{addr}"))
}

#[tokio::test(flavor = "multi_thread")]
async fn serve_binary_serves_and_refuses_tampered_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(wgd()
        .args(["aggregate", "--clean"])
        .arg(fixture("dashboard/clean.csv"))
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0));

    let client = reqwest::Client::new();
    for env in [None, Some(("WGD_BIND_ADDR", "127.0.0.1:0"))] {
        let (mut child, base) = start_server(dir.path(), env);
        let (status, body) = common::get(&client, &format!("{base}/healthz")).await;
        assert_eq!(status, 200);
        assert!(body.contains("\"status\":\"ok\""));
        let (status, body) = common::get(&client, &format!("{base}/api/summary")).await;
        assert_eq!(status, 200);
        assert!(body.contains("\"percent\":17.00"));
        child.kill().unwrap();
        child.wait().unwrap();
    }

    let clean = dir.path().join("clean.csv");
    let text = std::fs::read_to_string(&clean)
        .unwrap()
        .replacen("female", "male", 1);
    std::fs::write(&clean, text).unwrap();
    let out = run(wgd()
        .args(["serve", "--bind", "127.0.0.1:0", "--snapshot"])
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("hash mismatch"), "{}", stderr(&out));
}

#[test]
fn help_documents_every_subcommand() {
    let out = run(wgd().arg("--help"));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["harvest", "clean", "aggregate", "serve"] {
        assert!(text.contains(sub), "{text}");
        let out = run(wgd().args([sub, "--help"]));
        assert_eq!(out.status.code(), Some(0));
    }
}
