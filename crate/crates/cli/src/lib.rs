//! `fasy` command line: catalog ingestion and queries, one-shot composition,
//! fixture generation and the HTTP service.
//!
//! Standard output carries machine-readable results only; diagnostics go to
//! standard error. Exit status is 0 on success, 2 when the arguments or the
//! data they name are at fault, and 1 for anything else.

pub mod commands;
pub mod server;

use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use fasy_core::{CatalogError, ComponentKind, ComposeError, PlacementMode, RecordId};

#[derive(Debug, Parser)]
#[command(
    name = "fasy",
    version,
    about = "Compose grayscale faces from a catalog of facial parts"
)]
pub struct Cli {
    /// Log more on standard error (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add a PGM component to the catalog and print its record id.
    Ingest(IngestArgs),
    /// List the components of one kind that match the given attributes.
    Query(QueryArgs),
    /// Compose a face from seven records, write it as PGM and print the layout.
    Compose(ComposeArgs),
    /// Write a deterministic synthetic catalog.
    GenFixtures(GenFixturesArgs),
    /// Serve the /v1 HTTP API over a catalog.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Catalog directory; created if missing.
    #[arg(long)]
    pub catalog: PathBuf,
    /// PGM (P5) file to ingest.
    #[arg(long)]
    pub image: PathBuf,
    /// Component kind, e.g. Nose or right-eyebrow.
    #[arg(long)]
    pub kind: ComponentKind,
    /// Attribute as NAME=VALUE; repeat for each attribute.
    #[arg(long = "attr", value_name = "NAME=VALUE", value_parser = parse_attr)]
    pub attrs: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub kind: ComponentKind,
    /// Attribute constraint as NAME=VALUE. Omitted attributes match anything.
    #[arg(long = "attr", value_name = "NAME=VALUE", value_parser = parse_attr)]
    pub attrs: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// One record id per kind, in any order.
    #[arg(long, num_args = 1.., value_delimiter = ',', conflicts_with = "query", required_unless_present = "query")]
    pub ids: Vec<RecordId>,
    /// TOML face query; the lowest-id match of each kind is used.
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// blind, masked or tuned.
    #[arg(long, default_value_t = PlacementMode::Tuned)]
    pub mode: PlacementMode,
    /// TOML file of per-slot nudges, e.g. `[lip]` `drow = 3`.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    /// TOML file replacing the layout constants.
    #[arg(long)]
    pub constants: Option<PathBuf>,
    /// Where to write the composite PGM.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenFixturesArgs {
    /// Directory for the new catalog; must not already hold one.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Random records per kind on top of the two reference records.
    #[arg(long, default_value_t = 2)]
    pub extra_per_kind: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// TOML file replacing the layout constants.
    #[arg(long)]
    pub constants: Option<PathBuf>,
}

fn parse_attr(s: &str) -> Result<(String, String), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let (name, value) = (name.trim(), value.trim());
    if name.is_empty() || value.is_empty() {
        return Err(format!("expected NAME=VALUE, got '{s}'"));
    }
    Ok((name.to_string(), value.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Bad arguments or bad data named by them.
    Caller,
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub fault: Fault,
    pub message: String,
}

impl CliError {
    pub fn caller(message: impl Into<String>) -> Self {
        CliError {
            fault: Fault::Caller,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            fault: Fault::Internal,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.fault {
            Fault::Caller => 2,
            Fault::Internal => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::CorruptManifest(_) | CatalogError::MissingImage(_) | CatalogError::Io(_) => {
                CliError::internal(e.to_string())
            }
            _ => CliError::caller(e.to_string()),
        }
    }
}

impl From<ComposeError> for CliError {
    fn from(e: ComposeError) -> Self {
        CliError::caller(e.to_string())
    }
}

impl From<fasy_core::catalog::SchemaError> for CliError {
    fn from(e: fasy_core::catalog::SchemaError) -> Self {
        CliError::caller(format!("schema violation: {e}"))
    }
}
