use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cinemeta_cli::config::{PipelineConfig, SEED_ENV};
use cinemeta_cli::eval::evaluate;
use cinemeta_cli::{demo, pipeline};
use cinemeta_core::bridge::{serve, FixtureBackend};
use cinemeta_core::formats::{export, read_catalog};
use cinemeta_core::fusion::catalog_query;
use cinemeta_core::metadata::parse_predicate;
use cinemeta_core::profile::load_profile;

#[derive(Parser)]
#[command(name = "cinemeta", version, about = "Dailies metadata ingest, export, query and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate every clip manifest and write the catalog and export.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-export a catalog under a profile.
    Export {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-label accuracy of predictions against truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Also score ObjectType.
        #[arg(long)]
        objects: bool,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the ids of catalog records matching a predicate.
    Query {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long = "where", default_value = "")]
        predicate: String,
    },
    /// Serve canned detector answers over stdin/stdout.
    FixtureBackend {
        #[arg(long)]
        root: PathBuf,
        /// Accepted for the sidecar calling convention; the stdio loop always runs.
        #[arg(long)]
        serve: bool,
    },
    /// Write a small synthetic ingest workspace.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_records(path: &Path) -> Result<Vec<cinemeta_core::metadata::MetadataRecord>> {
    read_catalog(path).with_context(|| format!("cannot read catalog {}", path.display()))
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest { config } => {
            let mut cfg = PipelineConfig::load(&config)?;
            cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
            let summary = pipeline::run_ingest(&cfg)?;
            println!("{} clips -> {}", summary.clips, summary.catalog.display());
        }
        Command::Export { catalog, profile, out } => {
            let records = read_records(&catalog)?;
            let text = std::fs::read_to_string(&profile).with_context(|| format!("cannot read {}", profile.display()))?;
            let profile = load_profile(&text).with_context(|| format!("bad profile {}", profile.display()))?;
            let body = export(&records, &profile)?;
            std::fs::write(&out, body).with_context(|| format!("cannot write {}", out.display()))?;
        }
        Command::Eval { pred, truth, objects, report } => {
            let pred = read_records(&pred)?;
            let truth = read_records(&truth)?;
            let result = match evaluate(&pred, &truth, objects) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            print!("{}", result.table());
            if let Some(path) = report {
                std::fs::write(&path, result.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
            }
        }
        Command::Query { catalog, predicate } => {
            let pred = parse_predicate(&predicate).with_context(|| format!("bad predicate {predicate:?}"))?;
            for id in catalog_query(&catalog, &pred)? {
                println!("{id}");
            }
        }
        Command::FixtureBackend { root, .. } => {
            let mut backend = FixtureBackend::new(root)?;
            let stdin = std::io::stdin();
            serve(&mut backend, stdin.lock(), std::io::stdout().lock())?;
        }
        Command::Demo { out } => {
            let ws = demo::write_demo(&out)?;
            println!("{}", ws.config.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
