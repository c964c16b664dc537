use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use fasy_core::catalog::{validate_assignment_query, validate_query, MANIFEST_FILE};
use fasy_core::fixtures::{generate_catalog, FixtureSpec};
use fasy_core::{
    compose_records, write_pgm, Assignment, Catalog, ComponentKind, ComposeOptions, FaceQuery, LayoutConstants,
    LayoutOverride, RecordId, Slot,
};
use serde::de::DeserializeOwned;

use crate::{CliError, Command, ComposeArgs, GenFixturesArgs, IngestArgs, QueryArgs};

pub fn run(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest(args) => ingest(args, out),
        Command::Query(args) => query(args, out),
        Command::Compose(args) => compose(args, out),
        Command::GenFixtures(args) => gen_fixtures(args, out),
        Command::Serve(args) => crate::server::run(args, out),
    }
}

pub fn ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let attrs = attribute_map(&args.attrs)?;
    let bytes = fs::read(&args.image).map_err(|e| CliError::caller(format!("{}: {e}", args.image.display())))?;
    let mut catalog = Catalog::open(&args.catalog)?;
    let id = catalog.ingest(&bytes, args.kind, attrs)?;
    tracing::info!(id, kind = %args.kind, "ingested");
    emit(out, format_args!("{id}\n"))
}

/// Prints a header of attribute names followed by one row per match.
pub fn query(args: &QueryArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let attrs = attribute_map(&args.attrs)?;
    validate_assignment_query(args.kind, &attrs)?;
    let catalog = open_existing(&args.catalog)?;
    let names: Vec<&str> = args.kind.attributes().iter().map(|d| d.name).collect();
    let mut text = format!("id\t{}\n", names.join("\t"));
    for record in catalog.match_components(args.kind, &attrs) {
        let values: Vec<&str> = names.iter().map(|n| record.attributes[*n].as_str()).collect();
        text.push_str(&format!("{}\t{}\n", record.id, values.join("\t")));
    }
    emit(out, format_args!("{text}"))
}

/// Writes the composite and prints `anchor`, each slot's position and the
/// worst seam contrast, tab separated.
pub fn compose(args: &ComposeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = open_existing(&args.catalog)?;
    let selections = match &args.query {
        Some(path) => select_by_query(&catalog, &read_toml::<FaceQuery>(path)?)?,
        None => select_by_ids(&catalog, &args.ids)?,
    };
    let opts = ComposeOptions {
        mode: args.mode,
        overrides: read_optional::<LayoutOverride>(args.overrides.as_deref())?,
        constants: read_optional::<LayoutConstants>(args.constants.as_deref())?,
    };
    let composite = compose_records(&catalog, &selections, &opts)?;
    fs::write(&args.out, write_pgm(&composite.image))
        .map_err(|e| CliError::internal(format!("{}: {e}", args.out.display())))?;

    let layout = composite.layout;
    let mut text = format!("anchor\t{}\t{}\n", layout.anchor.row, layout.anchor.col);
    for slot in Slot::ALL {
        let p = layout.position(slot);
        text.push_str(&format!("{slot}\t{}\t{}\n", p.row, p.col));
    }
    text.push_str(&format!("seam_contrast\t{}\n", composite.seam_contrast()));
    emit(out, format_args!("{text}"))
}

pub fn gen_fixtures(args: &GenFixturesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.out.join(MANIFEST_FILE).exists() {
        return Err(CliError::caller(format!(
            "{} already holds a catalog",
            args.out.display()
        )));
    }
    let spec = FixtureSpec {
        seed: args.seed,
        extra_per_kind: args.extra_per_kind,
    };
    let catalog = generate_catalog(&args.out, &spec)?;
    let mut text = String::new();
    for record in catalog.components() {
        text.push_str(&format!("{}\t{}\n", record.id, record.kind));
    }
    emit(out, format_args!("{text}"))
}

/// Opens a catalog that must already exist; only `ingest` may create one.
pub fn open_existing(root: &Path) -> Result<Catalog, CliError> {
    if !root.join(MANIFEST_FILE).is_file() {
        return Err(CliError::caller(format!("no catalog at {}", root.display())));
    }
    Ok(Catalog::open(root)?)
}

pub fn read_optional<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), read_toml)
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::caller(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::caller(format!("{}: {e}", path.display())))
}

/// Repeating an attribute is fine; giving it two different values is not.
fn attribute_map(pairs: &[(String, String)]) -> Result<Assignment, CliError> {
    let mut map = Assignment::new();
    for (name, value) in pairs {
        if let Some(previous) = map.insert(name.clone(), value.clone()) {
            if previous != *value {
                return Err(CliError::caller(format!(
                    "attribute {name} given twice with different values ('{previous}' and '{value}')"
                )));
            }
        }
    }
    Ok(map)
}

fn select_by_ids(catalog: &Catalog, ids: &[RecordId]) -> Result<BTreeMap<ComponentKind, RecordId>, CliError> {
    let mut selections = BTreeMap::new();
    for &id in ids {
        let record = catalog
            .component(id)
            .ok_or_else(|| CliError::caller(format!("unknown record {id}")))?;
        if let Some(other) = selections.insert(record.kind, id) {
            return Err(CliError::caller(format!(
                "records {other} and {id} are both {}",
                record.kind
            )));
        }
    }
    Ok(selections)
}

fn select_by_query(catalog: &Catalog, query: &FaceQuery) -> Result<BTreeMap<ComponentKind, RecordId>, CliError> {
    validate_query(query)?;
    let empty = Assignment::new();
    ComponentKind::ALL
        .into_iter()
        .map(|kind| {
            let hits = catalog.match_components(kind, query.get(&kind).unwrap_or(&empty));
            let first = hits
                .first()
                .ok_or_else(|| CliError::caller(format!("no {kind} matches the query")))?;
            tracing::info!(%kind, id = first.id, candidates = hits.len(), "selected");
            Ok((kind, first.id))
        })
        .collect()
}

fn emit(out: &mut dyn Write, args: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(args)
        .and_then(|()| out.flush())
        .map_err(|e| CliError::internal(format!("writing output: {e}")))
}
