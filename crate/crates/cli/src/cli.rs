//! `wgd harvest|clean|aggregate|serve`.
//!
//! Exit codes: 0 success, 1 configuration, input or I/O error, 2 endpoint
//! failure after retries (rerun the same command to resume), 130 interrupted.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use wgd_core::cleaner::{
    run_cleaning, CleaningConfig, CleaningReport, DisabledResolver, EntityResolver,
    FixtureResolver, ResolverMode,
};
use wgd_core::record::{read_records, write_clean_records};
use wgd_core::RawPersonRecord;
use wgd_harvest::harvester::{
    enumerate_subclasses, run_harvest, HarvestCheckpoint, HarvestClients, HarvestConfig,
    HarvestError, KillSwitch, SubclassCatalog,
};
use wgd_harvest::sparql::{
    Endpoint, EndpointConfig, RetryPolicy, ENV_DBPEDIA, ENV_WIKIDATA, ENV_WIKIPEDIA,
    PUBLIC_DBPEDIA, PUBLIC_WIKIDATA, PUBLIC_WIKIPEDIA,
};
use wgd_harvest::LiveResolver;

use crate::{api, snapshot};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_RETRIES_EXHAUSTED: u8 = 2;
pub const EXIT_INTERRUPTED: u8 = 130;

#[derive(Debug, Parser)]
#[command(
    name = "wgd",
    version,
    about = "Harvest, clean, aggregate and serve Wikipedia Person gender data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Harvest Person subclasses from DBpedia, enriched with Wikidata gender
    /// and Wikipedia article creation year, into one raw CSV per subclass.
    Harvest(HarvestArgs),
    /// Clean raw CSVs into one clean CSV plus a cleaning report.
    Clean(CleanArgs),
    /// Build the aggregate cube from a clean CSV and write a servable snapshot.
    Aggregate(AggregateArgs),
    /// Serve a snapshot over the read-only JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EndpointArgs {
    /// DBpedia SPARQL endpoint URL.
    #[arg(long, env = ENV_DBPEDIA)]
    pub dbpedia_endpoint: Option<String>,
    /// Wikidata SPARQL endpoint URL.
    #[arg(long, env = ENV_WIKIDATA)]
    pub wikidata_endpoint: Option<String>,
    /// Wikipedia action API URL (`.../w/api.php`).
    #[arg(long, env = ENV_WIKIPEDIA)]
    pub wikipedia_api: Option<String>,
    /// Use the public endpoints for any URL not given otherwise.
    #[arg(long)]
    pub public_endpoints: bool,
    /// Minimum spacing between requests to one endpoint, in milliseconds.
    #[arg(long)]
    pub min_interval_ms: Option<u64>,
    /// Requests allowed in flight per endpoint.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Attempts per request, including the first.
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Backoff before the first retry, in milliseconds (doubles per retry).
    #[arg(long)]
    pub backoff_ms: Option<u64>,
    /// Client-side request timeout, in milliseconds.
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    /// User-Agent header; public endpoints ask for a contact address here.
    #[arg(long)]
    pub user_agent: Option<String>,
    /// Rows the DBpedia endpoint returns per response.
    #[arg(long)]
    pub row_limit: Option<u32>,
    /// Largest OFFSET + LIMIT the DBpedia endpoint sorts.
    #[arg(long)]
    pub sort_cap: Option<u32>,
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// Directory receiving one `<Subclass>.csv` per subclass.
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint file; rerunning with the same file resumes.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
    /// TOML file with harvest settings (page_size, enrichment_batch,
    /// workers, current_year, gender_template, outage_threshold).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rows requested per DBpedia page (at most the row limit)
    #[arg(long)]
    pub page_size: Option<u32>,
    /// Records enriched between two checkpoint saves
    #[arg(long)]
    pub enrichment_batch: Option<usize>,
    /// Concurrent gender and creation-year lookups
    #[arg(long)]
    pub workers: Option<usize>,
    /// Year used for the age of living people
    #[arg(long)]
    pub current_year: Option<i32>,
    /// Harvest only these subclasses instead of enumerating the ontology.
    #[arg(long = "subclass")]
    pub subclasses: Vec<String>,
    /// Subclasses to skip in addition to OrganizationMember.
    #[arg(long = "exclude")]
    pub exclude: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Raw CSV files, or directories whose `*.csv` files are read in name order.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Clean CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Cleaning report (JSON); a text rendering is written next to it as `.txt`.
    #[arg(long)]
    pub report: PathBuf,
    /// TOML file with cleaning settings (upper_limit, z_threshold,
    /// fixed_cutoff, current_year, resolver, resolver_fixture).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ages above this are recomputed from birth and death years
    #[arg(long)]
    pub upper_limit: Option<i32>,
    /// Standard deviations above the mean for the fitted outlier cutoff
    #[arg(long)]
    pub z_threshold: Option<f64>,
    /// Fixed outlier age cutoff instead of the fitted one.
    #[arg(long)]
    pub fixed_cutoff: Option<i32>,
    /// Year used for the age of living people
    #[arg(long)]
    pub current_year: Option<i32>,
    /// Identifier cross-check source: live, fixture or off.
    #[arg(long)]
    pub resolver: Option<ResolverMode>,
    /// Entity JSON used by the fixture resolver.
    #[arg(long)]
    pub resolver_fixture: Option<PathBuf>,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Clean CSV produced by `wgd clean`.
    #[arg(long)]
    pub clean: PathBuf,
    /// Cleaning report to include in the snapshot.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Snapshot directory to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Snapshot directory or its `snapshot.json`.
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Address to listen on
    #[arg(long, env = "WGD_BIND_ADDR", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Built dashboard assets to serve at `/`.
    #[arg(long)]
    pub ui: Option<PathBuf>,
}

/// A failed command: its exit code and what to tell the operator.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        let usage = Cli::command().render_usage();
        Failure::new(EXIT_FAILURE, format!("{message}\n\n{usage}"))
    }
}

impl From<HarvestError> for Failure {
    fn from(e: HarvestError) -> Self {
        let code = match &e {
            HarvestError::Interrupted => EXIT_INTERRUPTED,
            e if e.is_resumable() => EXIT_RETRIES_EXHAUSTED,
            _ => EXIT_FAILURE,
        };
        let mut message = e.to_string();
        if code == EXIT_RETRIES_EXHAUSTED {
            message.push_str("\nprogress is checkpointed; rerun the same command to resume");
        }
        Failure::new(code, message)
    }
}

/// Runs a parsed command and returns its exit code, reporting errors on
/// standard error.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Harvest(args) => runtime().and_then(|rt| rt.block_on(harvest(args))),
        Command::Clean(args) => clean(args),
        Command::Aggregate(args) => aggregate(args),
        Command::Serve(args) => runtime().and_then(|rt| rt.block_on(serve(args))),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot start runtime: {e}")))
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

impl EndpointArgs {
    fn url(
        given: &Option<String>,
        public: bool,
        fallback: &str,
        env: &str,
        flag: &str,
    ) -> Result<String, Failure> {
        match given {
            Some(url) => Ok(url.clone()),
            None if public => Ok(fallback.to_owned()),
            None => Err(Failure::usage(format!(
                "missing endpoint configuration: set {env} or pass --{flag} (or --public-endpoints)"
            ))),
        }
    }

    fn retry(&self) -> Result<RetryPolicy, Failure> {
        let mut retry = RetryPolicy::default();
        if let Some(n) = self.max_attempts {
            retry.max_attempts = n;
        }
        if let Some(ms) = self.backoff_ms {
            retry.base_backoff_ms = ms;
        }
        retry.validate().map_err(Failure::usage)?;
        Ok(retry)
    }

    fn endpoint(&self, mut config: EndpointConfig) -> Result<Endpoint, Failure> {
        if let Some(ms) = self.min_interval_ms {
            config.min_request_interval_ms = ms;
        }
        if let Some(n) = self.max_in_flight {
            config.max_in_flight = n;
        }
        if let Some(ms) = self.timeout_ms {
            config.transport.timeout_ms = ms;
        }
        if let Some(ua) = &self.user_agent {
            config.transport.user_agent = ua.clone();
        }
        Endpoint::new(config, self.retry()?).map_err(Failure::usage)
    }

    fn dbpedia(&self) -> Result<Endpoint, Failure> {
        let url = Self::url(
            &self.dbpedia_endpoint,
            self.public_endpoints,
            PUBLIC_DBPEDIA,
            ENV_DBPEDIA,
            "dbpedia-endpoint",
        )?;
        let mut config = EndpointConfig::dbpedia(&url).map_err(Failure::usage)?;
        if let Some(n) = self.row_limit {
            config.row_limit = n;
        }
        if let Some(n) = self.sort_cap {
            config.sort_cap = Some(n);
        }
        self.endpoint(config)
    }

    fn wikidata(&self) -> Result<Endpoint, Failure> {
        let url = Self::url(
            &self.wikidata_endpoint,
            self.public_endpoints,
            PUBLIC_WIKIDATA,
            ENV_WIKIDATA,
            "wikidata-endpoint",
        )?;
        self.endpoint(EndpointConfig::wikidata(&url).map_err(Failure::usage)?)
    }

    fn wikipedia(&self) -> Result<Endpoint, Failure> {
        let url = Self::url(
            &self.wikipedia_api,
            self.public_endpoints,
            PUBLIC_WIKIPEDIA,
            ENV_WIKIPEDIA,
            "wikipedia-api",
        )?;
        self.endpoint(EndpointConfig::wikipedia(&url).map_err(Failure::usage)?)
    }
}

async fn harvest(args: HarvestArgs) -> Result<(), Failure> {
    let mut config: HarvestConfig = match &args.config {
        Some(path) => read_toml(path)?,
        None => HarvestConfig::default(),
    };
    if let Some(n) = args.page_size {
        config.page_size = n;
    }
    if let Some(n) = args.enrichment_batch {
        config.enrichment_batch = n;
    }
    if let Some(n) = args.workers {
        config.workers = n;
    }
    if let Some(y) = args.current_year {
        config.current_year = y;
    }
    let clients = HarvestClients {
        dbpedia: args.endpoints.dbpedia()?,
        wikidata: args.endpoints.wikidata()?,
        wikipedia: args.endpoints.wikipedia()?,
    };
    let exclude: Vec<&str> = args.exclude.iter().map(String::as_str).collect();

    let catalog = match HarvestCheckpoint::load(&args.checkpoint)? {
        Some(cp) => SubclassCatalog::new(cp.catalog, &exclude),
        None if !args.subclasses.is_empty() => SubclassCatalog::new(&args.subclasses, &exclude),
        None => {
            tracing::info!("enumerating Person subclasses");
            enumerate_subclasses(&clients.dbpedia, &exclude)
                .await
                .map_err(HarvestError::from)?
        }
    };
    tracing::info!(subclasses = catalog.subclasses.len(), "catalog ready");

    let kill = KillSwitch::never();
    let on_signal = kill.clone();
    tokio::spawn(async move {
        if tokio::signal::ctrl_c().await.is_ok() {
            tracing::warn!("interrupt received; stopping at the next checkpoint");
            on_signal.trigger();
        }
    });
    let outcome = run_harvest(
        &clients,
        &catalog,
        &args.checkpoint,
        &args.out,
        &config,
        &kill,
    )
    .await?;
    eprintln!(
        "harvested {} records into {} files under {} ({} lookups left unset)",
        outcome.records,
        outcome.files.len(),
        args.out.display(),
        outcome.checkpoint.failed_lookups
    );
    Ok(())
}

fn input_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = fs::read_dir(input)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", input.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(Failure::new(
                EXIT_FAILURE,
                format!("{}: no such file or directory", input.display()),
            ));
        }
    }
    Ok(files)
}

fn clean_config(args: &CleanArgs) -> Result<CleaningConfig, Failure> {
    let mut config: CleaningConfig = match &args.config {
        Some(path) => {
            let mut c: CleaningConfig = read_toml(path)?;
            // Relative fixture paths are relative to the config file.
            if let (Some(fixture), Some(dir)) = (&c.resolver_fixture, path.parent()) {
                c.resolver_fixture = Some(dir.join(fixture));
            }
            c
        }
        None => CleaningConfig::default(),
    };
    if let Some(v) = args.upper_limit {
        config.upper_limit = v;
    }
    if let Some(v) = args.z_threshold {
        config.z_threshold = v;
    }
    if let Some(v) = args.fixed_cutoff {
        config.fixed_cutoff = Some(v);
    }
    if let Some(v) = args.current_year {
        config.current_year = v;
    }
    if let Some(v) = args.resolver {
        config.resolver = v;
    }
    if let Some(v) = &args.resolver_fixture {
        config.resolver_fixture = Some(v.clone());
    }
    if config.current_year < 2001 {
        return Err(Failure::usage("current_year must be 2001 or later"));
    }
    if config.upper_limit < 1 || config.z_threshold.is_nan() || config.z_threshold <= 0.0 {
        return Err(Failure::usage(
            "upper_limit and z_threshold must be positive",
        ));
    }
    Ok(config)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn clean_with<R: EntityResolver>(
    records: Vec<RawPersonRecord>,
    resolver: &R,
    config: &CleaningConfig,
    args: &CleanArgs,
) -> Result<CleaningReport, Failure> {
    let (clean, report) = run_cleaning(records, resolver, config);
    let csv = write_clean_records(Vec::new(), &clean).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    write_file(&args.out, &csv)?;
    write_file(&args.report, report.to_json().as_bytes())?;
    write_file(
        &args.report.with_extension("txt"),
        report.to_string().as_bytes(),
    )?;
    Ok(report)
}

fn clean(args: CleanArgs) -> Result<(), Failure> {
    let config = clean_config(&args)?;
    let mut records = Vec::new();
    for path in input_files(&args.inputs)? {
        let file = fs::File::open(&path)
            .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
        let rows = read_records(std::io::BufReader::new(file))
            .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
        records.extend(rows);
    }
    let report = match config.resolver {
        ResolverMode::Off => clean_with(records, &DisabledResolver, &config, &args)?,
        ResolverMode::Fixture => {
            let path = config.resolver_fixture.as_ref().ok_or_else(|| {
                Failure::usage("resolver \"fixture\" needs resolver_fixture or --resolver-fixture")
            })?;
            let resolver = FixtureResolver::load(path)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
            clean_with(records, &resolver, &config, &args)?
        }
        ResolverMode::Live => {
            let resolver = LiveResolver::new(args.endpoints.dbpedia()?, args.endpoints.wikidata()?)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot start resolver: {e}")))?;
            clean_with(records, &resolver, &config, &args)?
        }
    };
    print!("{report}");
    Ok(())
}

fn aggregate(args: AggregateArgs) -> Result<(), Failure> {
    let (manifest, cube) = snapshot::build(&args.clean, args.report.as_deref(), &args.out)
        .map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    println!(
        "cube: {} cells over {} years; snapshot {} ({})",
        cube.len(),
        cube.years().len(),
        args.out.display(),
        manifest.content_hash
    );
    Ok(())
}

async fn serve(args: ServeArgs) -> Result<(), Failure> {
    let snap = snapshot::load(&args.snapshot).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    let app = api::router(&snap, args.ui.as_deref());
    let listener = tokio::net::TcpListener::bind(args.bind)
        .await
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot bind {}: {e}", args.bind)))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot bind {}: {e}", args.bind)))?;
    eprintln!(
        "serving snapshot {} on http://{addr}",
        snap.manifest.content_hash
    );
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure::new(EXIT_FAILURE, e))
}
