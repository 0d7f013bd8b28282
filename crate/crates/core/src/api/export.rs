//! The canonical export bundle.
//!
//! A bundle is one self-describing JSON document holding the schema, every
//! version of every item, the membership relation, and the grants. Its
//! text form is deterministic: exporting the same state twice produces the
//! same bytes. The manifest carries a format version and the SHA-256 of
//! the compact JSON encoding of everything except the manifest.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collections::{membership_edges, MemberStatus};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::permissions::{Ability, GrantSet, PermissionGrant};
use crate::schema::{SchemaRegistry, TypeDescriptor};
use crate::store::{ItemState, Row, Store};
use crate::value::ItemId;

pub const BUNDLE_FORMAT: &str = "itemgraph-bundle/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub checksum: String,
}

/// One item with its full history. Tombstones have no versions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedItem {
    pub id: ItemId,
    pub type_name: String,
    pub state: ItemState,
    /// `versions[k]` is the full piece map of version `k + 1`.
    pub versions: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedMembership {
    pub membership: ItemId,
    pub collection: ItemId,
    pub member: ItemId,
    pub status: MemberStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedGrant {
    pub id: u64,
    #[serde(flatten)]
    pub grant: PermissionGrant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedGrants {
    pub next_id: u64,
    pub abilities: Vec<Ability>,
    pub grants: Vec<ExportedGrant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleBody {
    pub schema: Vec<TypeDescriptor>,
    pub next_item_id: u64,
    pub items: Vec<ExportedItem>,
    /// Derived from the Membership items; checked on import.
    pub memberships: Vec<ExportedMembership>,
    pub grants: ExportedGrants,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub manifest: Manifest,
    #[serde(flatten)]
    pub body: BundleBody,
}

fn checksum(body: &BundleBody) -> String {
    let compact = serde_json::to_vec(body).expect("bundle body serializes");
    hex::encode(Sha256::digest(compact))
}

fn memberships_of(store: &Store) -> Vec<ExportedMembership> {
    membership_edges(store)
        .into_iter()
        .map(|e| ExportedMembership {
            membership: e.membership,
            collection: e.collection,
            member: e.member,
            status: e.status,
        })
        .collect()
}

impl ExportBundle {
    pub fn from_engine(engine: &Engine) -> Self {
        let store = engine.store();
        let items = store
            .records()
            .map(|(id, record)| {
                let versions = if record.is_destroyed() {
                    Vec::new()
                } else {
                    (1..=record.version)
                        .map(|v| store.raw_version(id, v).expect("recorded version exists"))
                        .collect()
                };
                ExportedItem {
                    id,
                    type_name: record.type_name.clone(),
                    state: record.state,
                    versions,
                }
            })
            .collect();
        let grants = engine.grants();
        let body = BundleBody {
            schema: store.schema().descriptors().cloned().collect(),
            next_item_id: store.next_id().get(),
            items,
            memberships: memberships_of(store),
            grants: ExportedGrants {
                next_id: grants.next_id(),
                abilities: grants.abilities().cloned().collect(),
                grants: grants
                    .iter()
                    .map(|(id, grant)| ExportedGrant { id, grant: grant.clone() })
                    .collect(),
            },
        };
        ExportBundle {
            manifest: Manifest {
                format_version: BUNDLE_FORMAT.to_string(),
                checksum: checksum(&body),
            },
            body,
        }
    }

    /// The canonical text: pretty-printed JSON and a trailing newline.
    pub fn to_text(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bundle serializes");
        text.push('\n');
        text
    }

    /// Parses and verifies format version and checksum.
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptBundle(e.to_string()))?;
        let format = value
            .get("manifest")
            .and_then(|m| m.get("format_version"))
            .and_then(|f| f.as_str())
            .ok_or_else(|| Error::CorruptBundle("missing manifest.format_version".into()))?;
        if format != BUNDLE_FORMAT {
            return Err(Error::FormatVersionMismatch(format.to_string()));
        }
        let bundle: ExportBundle = serde_json::from_value(value).map_err(|e| Error::CorruptBundle(e.to_string()))?;
        if checksum(&bundle.body) != bundle.manifest.checksum {
            return Err(Error::ChecksumMismatch);
        }
        Ok(bundle)
    }

    /// Rebuilds an engine holding exactly the exported state.
    pub fn into_engine(self) -> Result<Engine> {
        if self.manifest.format_version != BUNDLE_FORMAT {
            return Err(Error::FormatVersionMismatch(self.manifest.format_version));
        }
        if checksum(&self.body) != self.manifest.checksum {
            return Err(Error::ChecksumMismatch);
        }
        let body = self.body;
        let mut schema = SchemaRegistry::new();
        schema.define_all(body.schema)?;
        let mut store = Store::new(schema);
        let mut last = None;
        for item in body.items {
            if last.is_some_and(|prev| prev >= item.id) {
                return Err(Error::CorruptBundle("items are not in ascending id order".into()));
            }
            last = Some(item.id);
            store.restore_item(item.id, &item.type_name, item.state, item.versions)?;
        }
        if body.next_item_id < store.next_id().get() {
            return Err(Error::CorruptBundle("next_item_id is below an exported id".into()));
        }
        store.reserve_ids_below(ItemId(body.next_item_id));
        if memberships_of(&store) != body.memberships {
            return Err(Error::CorruptBundle("membership section disagrees with the items".into()));
        }

        let mut grants = GrantSet::new();
        for ability in body.grants.abilities {
            grants.register_ability(ability);
        }
        let mut seen = BTreeSet::new();
        for ExportedGrant { id, grant } in body.grants.grants {
            if !seen.insert(id) || id >= body.grants.next_id {
                return Err(Error::CorruptBundle(format!("grant id {id} is duplicated or out of range")));
            }
            grants.validate(&store, &grant)?;
            grants.restore(id, grant);
        }
        grants.reserve_ids_below(body.grants.next_id);
        Ok(Engine { store, grants })
    }
}

impl Engine {
    pub fn export(&self) -> ExportBundle {
        ExportBundle::from_engine(self)
    }

    /// Builds a fresh installation from bundle text.
    pub fn import(text: &str) -> Result<Engine> {
        ExportBundle::parse(text)?.into_engine()
    }

    /// Loads a bundle into this installation, which must hold no items,
    /// no grants, and no types beyond those the bundle defines.
    pub fn import_into(&mut self, bundle: ExportBundle) -> Result<()> {
        if !self.store.is_empty() || !self.grants.is_empty() {
            return Err(Error::NonEmptyTarget);
        }
        let defined: BTreeSet<&str> = bundle.body.schema.iter().map(|t| t.name.as_str()).collect();
        if self.schema().descriptors().any(|t| !defined.contains(t.name.as_str())) {
            return Err(Error::NonEmptyTarget);
        }
        *self = bundle.into_engine()?;
        Ok(())
    }
}
