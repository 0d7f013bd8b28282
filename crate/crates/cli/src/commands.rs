//! Command-line parsing and every subcommand except `serve`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use itemgraph::api::config::DEFAULT_BASE_URL;
use itemgraph::api::{ExportBundle, WireItem, WireType};
use itemgraph::collections::{membership_listing, MembershipGraph};
use itemgraph::schema::parse_schema;
use itemgraph::viewers::ViewerRegistry;
use itemgraph::{
    Ability, Actor, Effect, Engine, Error, ItemId, ListQuery, PermissionGrant, PieceValue, Result, Row, Subject,
};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "itemgraph", version, about = "Manage an itemgraph store")]
pub struct Cli {
    /// Store file to operate on [default: itemgraph.json].
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Print structured JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Agent recorded as creator of new items. Without it only agents can
    /// be created, each becoming its own creator.
    #[arg(long, global = true)]
    pub agent: Option<ItemId>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty store file.
    Init { path: PathBuf },
    /// Serve the HTTP/JSON API.
    Serve(ServeArgs),
    /// Inspect or extend the item type hierarchy.
    #[command(subcommand)]
    Type(TypeCommand),
    #[command(subcommand)]
    Item(ItemCommand),
    #[command(subcommand)]
    Collection(CollectionCommand),
    /// Allow or deny an ability.
    Grant(GrantArgs),
    /// Remove a grant by id.
    Revoke { grant_id: u64 },
    /// Write the canonical export bundle.
    Export {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Create the store from an export bundle.
    Import {
        #[arg(short, long)]
        input: PathBuf,
    },
    #[command(subcommand)]
    Debug(DebugCommand),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// TOML service configuration (tokens, admins, base URL, page size).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured base URL.
    #[arg(long)]
    pub base_url: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum TypeCommand {
    /// Define every type in a schema file.
    Define {
        #[arg(short = 'f', long = "file")]
        file: PathBuf,
    },
    List,
    Show { name: String },
}

#[derive(Debug, Subcommand)]
pub enum ItemCommand {
    Create {
        type_name: String,
        /// `piece=value`; repeatable.
        #[arg(long = "set")]
        set: Vec<String>,
    },
    Show {
        id: ItemId,
        #[arg(long)]
        version: Option<u32>,
    },
    Update {
        id: ItemId,
        #[arg(long = "set")]
        set: Vec<String>,
    },
    Deactivate { id: ItemId },
    Reactivate { id: ItemId },
    Destroy { id: ItemId },
    List {
        type_name: String,
        #[arg(long)]
        subtypes: bool,
        #[arg(long)]
        inactive: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum CollectionCommand {
    Add { collection: ItemId, member: ItemId },
    /// Deactivate a Membership.
    Remove { collection: ItemId, membership: ItemId },
    List {
        collection: ItemId,
        #[arg(long)]
        indirect: bool,
    },
}

#[derive(Debug, Args)]
pub struct GrantArgs {
    /// Target item; omit with `--type` for a create grant.
    pub item: Option<ItemId>,
    /// `everyone`, `agent:<id>` or `collection:<id>`.
    #[arg(long)]
    pub subject: String,
    #[arg(long, default_value = "view")]
    pub ability: String,
    #[arg(long)]
    pub piece: Option<String>,
    /// Grant `create` on an item type instead.
    #[arg(long = "type", conflicts_with_all = ["item", "piece"])]
    pub type_name: Option<String>,
    #[arg(long)]
    pub deny: bool,
}

#[derive(Debug, Subcommand)]
pub enum DebugCommand {
    /// Row counts of every live and archive table.
    Tables,
}

pub const DEFAULT_STORE: &str = "itemgraph.json";

impl Cli {
    pub fn store_path(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_STORE))
    }
}

/// Result of one command in both renderings.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub text: String,
}

impl Output {
    fn new(json: Value, text: impl Into<String>) -> Self {
        Output { json, text: text.into() }
    }
}

pub fn parse_subject(raw: &str) -> Result<Subject> {
    match raw.split_once(':') {
        None if raw == "everyone" => Ok(Subject::Everyone),
        Some(("agent", id)) => Ok(Subject::Agent(id.parse()?)),
        Some(("collection", id)) => Ok(Subject::Collection(id.parse()?)),
        _ => Err(Error::UnknownSubject(raw.to_string())),
    }
}

fn parse_assignments(engine: &Engine, type_name: &str, raw: &[String]) -> Result<Row> {
    raw.iter()
        .map(|assignment| {
            let (name, value) = assignment
                .split_once('=')
                .ok_or_else(|| Error::BadRequest(format!("expected piece=value, got `{assignment}`")))?;
            let def = engine.schema().piece(type_name, name)?;
            Ok((name.to_string(), PieceValue::parse_literal(name, def.kind, value)?))
        })
        .collect()
}

fn open(path: &Path) -> Result<Engine> {
    if !path.exists() {
        return Err(Error::Io(format!("store {} does not exist; run `itemgraph init` first", path.display())));
    }
    Engine::open(path)
}

fn item_text(item: &itemgraph::VisibleItem) -> String {
    let state = if item.active { "active" } else { "inactive" };
    let mut text = format!("{} #{} v{} of {} ({state})", item.type_name, item.id, item.version, item.current_version);
    for piece in &item.pieces {
        let _ = write!(text, "\n  {}: {}", piece.name, piece.value);
    }
    text
}

fn ids_text(ids: &[ItemId]) -> String {
    ids.iter().map(ItemId::to_string).collect::<Vec<_>>().join("\n")
}

/// Runs any command except `serve`.
pub fn execute(cli: &Cli) -> Result<Output> {
    let actor = Actor::admin(cli.agent);
    let store_path = cli.store_path();
    let store = store_path.as_path();
    match &cli.command {
        Command::Init { path } => {
            if path.exists() {
                return Err(Error::NonEmptyTarget);
            }
            Engine::new().save(path)?;
            Ok(Output::new(json!({ "store": path }), format!("initialized {}", path.display())))
        }
        Command::Serve(_) => Err(Error::BadRequest("serve runs asynchronously".into())),
        Command::Type(command) => type_command(cli, actor, command),
        Command::Item(command) => item_command(cli, actor, command),
        Command::Collection(command) => collection_command(cli, actor, command),
        Command::Grant(args) => {
            let mut engine = open(store)?;
            let subject = parse_subject(&args.subject)?;
            let effect = if args.deny { Effect::Deny } else { Effect::Allow };
            let grant = match (&args.type_name, args.item) {
                (Some(type_name), _) => PermissionGrant::create_on_type(subject, type_name, effect),
                (None, Some(item)) => {
                    let ability = Ability::new(args.ability.clone());
                    match &args.piece {
                        Some(piece) => PermissionGrant::on_piece(subject, ability, item, piece, effect),
                        None => PermissionGrant::on_item(subject, ability, item, effect),
                    }
                }
                (None, None) => return Err(Error::BadRequest("grant needs an item or --type".into())),
            };
            let id = engine.grant(actor, grant)?;
            engine.save(store)?;
            Ok(Output::new(json!({ "grant_id": id }), format!("grant {id}")))
        }
        Command::Revoke { grant_id } => {
            let mut engine = open(store)?;
            engine.revoke(actor, *grant_id)?;
            engine.save(store)?;
            Ok(Output::new(json!({ "grant_id": grant_id, "revoked": true }), format!("revoked grant {grant_id}")))
        }
        Command::Export { output } => {
            let text = open(store)?.export().to_text();
            match output {
                Some(path) => {
                    fs::write(path, &text)?;
                    Ok(Output::new(json!({ "bundle": path }), format!("exported to {}", path.display())))
                }
                None => Ok(Output::new(serde_json::from_str(&text)?, text.trim_end())),
            }
        }
        Command::Import { input } => {
            let bundle = ExportBundle::parse(&fs::read_to_string(input)?)?;
            let mut engine = if store.exists() { Engine::open(store)? } else { Engine::new() };
            engine.import_into(bundle)?;
            engine.save(store)?;
            let count = engine.store().records().count();
            Ok(Output::new(json!({ "store": store, "items": count }), format!("imported {count} items")))
        }
        Command::Debug(DebugCommand::Tables) => {
            let engine = open(store)?;
            let rows = engine.store().table_counts();
            let archived = engine.store().archive_counts();
            let mut text = String::from("table\trows\tarchived");
            let mut tables = serde_json::Map::new();
            for (name, count) in &rows {
                let old = archived.get(name).copied().unwrap_or(0);
                let _ = write!(text, "\n{name}\t{count}\t{old}");
                tables.insert(name.clone(), json!({ "rows": count, "archived": old }));
            }
            Ok(Output::new(json!({ "tables": tables }), text))
        }
    }
}

fn type_command(cli: &Cli, actor: Actor, command: &TypeCommand) -> Result<Output> {
    let store_path = cli.store_path();
    let store = store_path.as_path();
    match command {
        TypeCommand::Define { file } => {
            let mut engine = open(store)?;
            let batch = parse_schema(&fs::read_to_string(file)?)?;
            let names: Vec<String> = batch.iter().map(|t| t.name.clone()).collect();
            engine.define_types(actor, batch)?;
            engine.save(store)?;
            Ok(Output::new(json!({ "defined": names }), format!("defined {}", names.join(", "))))
        }
        TypeCommand::List => {
            let engine = open(store)?;
            let names: Vec<&str> = engine.schema().type_names().collect();
            Ok(Output::new(json!(names), names.join("\n")))
        }
        TypeCommand::Show { name } => {
            let engine = open(store)?;
            let actions = ViewerRegistry::standard(&engine).list_actions(&engine, name)?;
            let wire = WireType::new(engine.schema(), name, actions)?;
            let mut text = format!("type {}", wire.name);
            if !wire.parents.is_empty() {
                let _ = write!(text, " : {}", wire.parents.join(", "));
            }
            for piece in &wire.pieces {
                let _ = write!(text, "\n  {}: {}", piece.name, piece.kind);
                if let Some(target) = &piece.target_type {
                    let _ = write!(text, " -> {target}");
                }
                if piece.required {
                    text.push_str(" required");
                }
                if piece.owner != wire.name {
                    let _ = write!(text, "  (from {})", piece.owner);
                }
            }
            Ok(Output::new(serde_json::to_value(&wire)?, text))
        }
    }
}

fn item_command(cli: &Cli, actor: Actor, command: &ItemCommand) -> Result<Output> {
    let store_path = cli.store_path();
    let store = store_path.as_path();
    let show = |engine: &Engine, id: ItemId, version: Option<u32>| -> Result<Output> {
        let item = engine.read_item(actor, id, version)?;
        Ok(Output::new(serde_json::to_value(WireItem::new(&item, DEFAULT_BASE_URL))?, item_text(&item)))
    };
    match command {
        ItemCommand::Create { type_name, set } => {
            let mut engine = open(store)?;
            let pieces = parse_assignments(&engine, type_name, set)?;
            let id = engine.create_item(actor, type_name, pieces)?.id;
            engine.save(store)?;
            show(&engine, id, None)
        }
        ItemCommand::Show { id, version } => show(&open(store)?, *id, *version),
        ItemCommand::Update { id, set } => {
            let mut engine = open(store)?;
            let type_name = engine.store().live_record(*id)?.type_name.clone();
            let pieces = parse_assignments(&engine, &type_name, set)?;
            engine.update_item(actor, *id, pieces)?;
            engine.save(store)?;
            show(&engine, *id, None)
        }
        ItemCommand::Deactivate { id } | ItemCommand::Reactivate { id } | ItemCommand::Destroy { id } => {
            let mut engine = open(store)?;
            let verb = match command {
                ItemCommand::Deactivate { .. } => {
                    engine.deactivate(actor, *id)?;
                    "deactivated"
                }
                ItemCommand::Reactivate { .. } => {
                    engine.reactivate(actor, *id)?;
                    "reactivated"
                }
                _ => {
                    engine.destroy(actor, *id)?;
                    "destroyed"
                }
            };
            engine.save(store)?;
            let state = engine.store().record(*id)?.state;
            Ok(Output::new(json!({ "id": id, "state": state }), format!("{verb} {id}")))
        }
        ItemCommand::List { type_name, subtypes, inactive } => {
            let engine = open(store)?;
            let mut query = ListQuery::new();
            if *subtypes {
                query = query.subtypes();
            }
            if *inactive {
                query = query.inactive();
            }
            let ids = engine.list_items(actor, type_name, &query)?;
            Ok(Output::new(json!(ids), ids_text(&ids)))
        }
    }
}

fn collection_command(cli: &Cli, actor: Actor, command: &CollectionCommand) -> Result<Output> {
    let store_path = cli.store_path();
    let store = store_path.as_path();
    match command {
        CollectionCommand::Add { collection, member } => {
            let mut engine = open(store)?;
            let membership = engine.add_membership(actor, *collection, *member)?;
            engine.save(store)?;
            Ok(Output::new(json!({ "membership": membership }), format!("membership {membership}")))
        }
        CollectionCommand::Remove { collection, membership } => {
            let mut engine = open(store)?;
            engine.remove_membership(actor, *collection, *membership)?;
            engine.save(store)?;
            Ok(Output::new(json!({ "membership": membership, "removed": true }), format!("removed {membership}")))
        }
        CollectionCommand::List { collection, indirect } => {
            let engine = open(store)?;
            let listing = membership_listing(engine.store(), *collection)?;
            let graph = MembershipGraph::build(engine.store());
            let members: Vec<ItemId> = if *indirect {
                graph.indirect(*collection).into_iter().collect()
            } else {
                graph.direct(*collection).into_iter().collect()
            };
            let json = json!({ "collection": collection, "indirect": indirect, "members": members, "memberships": listing });
            Ok(Output::new(json, ids_text(&members)))
        }
    }
}
