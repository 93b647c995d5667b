//! `reviewlens`: preprocess a review corpus, serve the index, replay
//! command scripts and iterate on the attribute schema.

use std::fs;
use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reviewlens_core::config::{ConfigError, Featurizer, PipelineConfig};
use reviewlens_core::index::IndexError;
use reviewlens_core::pipeline::{self, PipelineError, PreprocessOutcome};
use reviewlens_core::querylang::{parse, Session};
use reviewlens_core::synth::{self, SynthParams};
use reviewlens_server::AppState;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "reviewlens",
    version,
    about = "Explore review corpora through clusters of attribute sentiment"
)]
struct Cli {
    /// Pipeline configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Featurize, cluster and summarize; write a new index version.
    Preprocess,
    /// Serve the HTTP API over the latest index version.
    Serve {
        /// Index root; defaults to `index_dir` from the config.
        #[arg(long, env = "INDEX_DIR")]
        index_dir: Option<PathBuf>,
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "HOST", default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Replay a command script and print matching review ids as JSON lines.
    Run {
        /// One command per line; blank lines and `#` comments are skipped.
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value = "all")]
        entity: String,
        /// Dot-separated cluster path; empty for the root.
        #[arg(long, default_value = "")]
        path: String,
    },
    /// Re-run preprocessing with a new schema into the next index version.
    Iterate {
        #[arg(long)]
        schema: PathBuf,
    },
    /// Check the config and input files without writing anything.
    Validate,
    /// Write a synthetic hotel corpus with a ready-to-use config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        reviews: usize,
        #[arg(long, default_value_t = 60)]
        entities: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// A failed command: exit code 1 for validation, 2 for runtime errors.
struct Failure {
    code: u8,
    stage: &'static str,
    message: String,
    line: Option<usize>,
}

impl Failure {
    fn validation(stage: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            stage,
            message: message.into(),
            line: None,
        }
    }

    fn runtime(stage: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            stage,
            message: message.into(),
            line: None,
        }
    }

    fn report(&self) {
        let mut v = json!({
            "error": {
                "kind": if self.code == 1 { "validation" } else { "runtime" },
                "stage": self.stage,
                "message": self.message,
            }
        });
        if let Some(line) = self.line {
            v["error"]["line"] = json!(line);
        }
        eprintln!("{v}");
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::runtime("config", e.to_string()),
            other => Failure::validation("config", other.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if e.is_validation() { 1 } else { 2 };
        Failure {
            code,
            stage: e.stage(),
            message: e.to_string(),
            line: None,
        }
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        Failure::runtime("index", e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::validation("config", "--config is required"))?;
    let mut config = PipelineConfig::load(path)?;
    let cwd = std::env::current_dir().map_err(|e| Failure::runtime("config", e.to_string()))?;
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            Failure::validation("config", format!("override '{kv}' is not KEY=VALUE"))
        })?;
        config.set(k.trim(), v.trim(), &cwd)?;
    }
    config.validate()?;
    Ok(config)
}

fn print_json(v: &serde_json::Value) {
    println!("{v}");
}

fn outcome_json(o: &PreprocessOutcome) -> serde_json::Value {
    json!({
        "index_dir": o.dir.display().to_string(),
        "version": o.manifest.version_string(),
        "n_reviews": o.manifest.n_reviews,
        "dims": o.manifest.dims,
        "trees": o.manifest.trees.len(),
        "missing_attributes": o.missing_attributes,
    })
}

fn preprocess(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let outcome = pipeline::preprocess(&config)?;
    print_json(&outcome_json(&outcome));
    Ok(())
}

fn iterate(cli: &Cli, schema: &Path) -> Result<()> {
    let config = load_config(cli)?;
    let outcome = pipeline::iterate(&config, schema)?;
    print_json(&outcome_json(&outcome));
    Ok(())
}

fn validate(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let corpus = pipeline::load_corpus(&config)?;
    let n_reviews = corpus.len();
    let n_entities = corpus.entities().len();
    // Extraction featurization is cheap and checks records against the schema.
    let missing = if config.featurizer == Featurizer::Extractions {
        pipeline::featurize(&config, corpus)?.missing_attributes
    } else {
        Vec::new()
    };
    print_json(&json!({
        "valid": true,
        "featurizer": config.featurizer,
        "n_reviews": n_reviews,
        "n_entities": n_entities,
        "missing_attributes": missing,
    }));
    Ok(())
}

fn index_root(cli: &Cli, explicit: Option<&Path>) -> Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p.to_path_buf()),
        None => Ok(load_config(cli)?.index_dir()?.to_path_buf()),
    }
}

fn run(cli: &Cli, script: &Path, entity: &str, path: &str) -> Result<()> {
    let root = index_root(cli, None)?;
    let text = fs::read_to_string(script).map_err(|e| {
        Failure::runtime(
            "run",
            format!("cannot read script {}: {e}", script.display()),
        )
    })?;
    let state = AppState::open(&root)?;

    let mut commands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cmd = parse(line, &state.snapshot.catalog).map_err(|e| Failure {
            code: 1,
            stage: "run",
            message: format!("line {}: {e}", i + 1),
            line: Some(i + 1),
        })?;
        commands.push(cmd);
    }

    let scope = state
        .scope(entity, path)
        .map_err(|e| Failure::validation("run", e.message))?;
    let session = Session::replay(scope, &commands, &state.snapshot.index.artifacts);

    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    for &r in &session.working_set {
        writeln!(out, "{}", json!({ "id": state.snapshot.id_of(r) }))
            .map_err(|e| Failure::runtime("run", e.to_string()))?;
    }
    out.flush()
        .map_err(|e| Failure::runtime("run", e.to_string()))
}

fn serve(cli: &Cli, index_dir: Option<&Path>, host: IpAddr, port: u16) -> Result<()> {
    let root = index_root(cli, index_dir)?;
    let state = AppState::open(&root)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::runtime("serve", e.to_string()))?;
    runtime
        .block_on(reviewlens_server::serve(SocketAddr::new(host, port), state))
        .map_err(|e| Failure::runtime("serve", e.to_string()))
}

fn synth(out: &Path, reviews: usize, entities: usize, seed: u64) -> Result<()> {
    let corpus = synth::generate(SynthParams {
        n_reviews: reviews,
        n_entities: entities,
        seed,
    });
    let files = synth::write_corpus(out, &corpus, seed)
        .map_err(|e| Failure::runtime("synth", e.to_string()))?;
    print_json(&json!({
        "config": files.config.display().to_string(),
        "n_reviews": corpus.reviews.len(),
        "n_entities": corpus.entities.len(),
    }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Cmd::Serve { .. }) {
        "info"
    } else {
        "warn"
    };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();

    let result = match &cli.command {
        Cmd::Preprocess => preprocess(&cli),
        Cmd::Serve {
            index_dir,
            port,
            host,
        } => serve(&cli, index_dir.as_deref(), *host, *port),
        Cmd::Run {
            script,
            entity,
            path,
        } => run(&cli, script, entity, path),
        Cmd::Iterate { schema } => iterate(&cli, schema),
        Cmd::Validate => validate(&cli),
        Cmd::Synth {
            out,
            reviews,
            entities,
            seed,
        } => synth(out, *reviews, *entities, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code)
        }
    }
}
