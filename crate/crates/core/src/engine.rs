//! The installation: a [`Store`] plus its [`GrantSet`], with every mutating
//! operation checked against the acting agent's permissions.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collections;
use crate::error::{Error, Result};
use crate::permissions::{Ability, GrantSet, GrantTarget, PermissionGrant, Resolver};
use crate::schema::{SchemaRegistry, TypeDescriptor};
use crate::store::{ItemSnapshot, ListQuery, Row, Store, StoreState};
use crate::value::{ItemId, PieceKind, PieceValue};

const STORE_FORMAT: &str = "itemgraph-store/1";

/// Who is performing an operation.
///
/// `agent` is `None` for anonymous visitors. `admin` marks the
/// installation administrator, who bypasses grant checks (the CLI runs
/// this way, and the service for agents listed as admins).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Actor {
    pub agent: Option<ItemId>,
    pub admin: bool,
}

impl Actor {
    pub fn agent(id: ItemId) -> Self {
        Actor {
            agent: Some(id),
            admin: false,
        }
    }

    pub fn admin(agent: Option<ItemId>) -> Self {
        Actor { agent, admin: true }
    }

    pub fn anonymous() -> Self {
        Actor {
            agent: None,
            admin: false,
        }
    }
}

/// An item as one agent is allowed to see it: only visible pieces, in
/// schema order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VisibleItem {
    pub id: ItemId,
    pub type_name: String,
    pub version: u32,
    pub current_version: u32,
    pub active: bool,
    pub pieces: Vec<VisiblePiece>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VisiblePiece {
    pub name: String,
    pub kind: PieceKind,
    pub value: PieceValue,
}

impl VisibleItem {
    pub fn piece(&self, name: &str) -> Option<&PieceValue> {
        self.pieces.iter().find(|p| p.name == name).map(|p| &p.value)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Engine {
    pub(crate) store: Store,
    pub(crate) grants: GrantSet,
}

#[derive(Serialize, Deserialize)]
struct EngineFile {
    format: String,
    store: StoreState,
    grants: GrantSet,
}

impl Engine {
    /// A fresh installation with the bootstrap schema.
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn with_schema(schema: SchemaRegistry) -> Self {
        Engine {
            store: Store::new(schema),
            grants: GrantSet::new(),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn schema(&self) -> &SchemaRegistry {
        self.store.schema()
    }

    pub fn grants(&self) -> &GrantSet {
        &self.grants
    }

    pub fn resolver(&self) -> Resolver<'_> {
        Resolver::new(&self.store, &self.grants)
    }

    pub fn define_types(&mut self, actor: Actor, batch: Vec<TypeDescriptor>) -> Result<()> {
        if !actor.admin {
            return Err(Error::PermissionDenied {
                ability: "define_types".into(),
                item: "schema".into(),
            });
        }
        self.store.define_types(batch)
    }

    pub fn register_ability(&mut self, ability: Ability) -> bool {
        self.grants.register_ability(ability)
    }

    pub fn can(&self, agent: Option<ItemId>, ability: &Ability, item: ItemId, piece: Option<&str>) -> Result<bool> {
        self.resolver().can(agent, ability, item, piece)
    }

    pub fn visible_pieces(&self, agent: Option<ItemId>, item: ItemId) -> Result<BTreeSet<String>> {
        self.resolver().visible_pieces(agent, item)
    }

    /// Fails with `PermissionDenied` unless the actor holds `ability`.
    pub fn require(&self, actor: Actor, ability: &Ability, item: ItemId, piece: Option<&str>) -> Result<()> {
        self.store.live_record(item)?;
        if actor.admin || self.can(actor.agent, ability, item, piece)? {
            Ok(())
        } else {
            Err(Error::PermissionDenied {
                ability: ability.to_string(),
                item: match piece {
                    Some(p) => format!("{item}.{p}"),
                    None => item.to_string(),
                },
            })
        }
    }

    pub fn create_item(&mut self, actor: Actor, type_name: &str, pieces: Row) -> Result<ItemSnapshot> {
        if !actor.admin {
            let agent = actor.agent.ok_or(Error::AgentRequired)?;
            if !self.resolver().can_create(Some(agent), type_name)? {
                return Err(Error::PermissionDenied {
                    ability: Ability::CREATE.to_string(),
                    item: type_name.to_string(),
                });
            }
        }
        self.store.create_item(type_name, pieces, actor.agent)
    }

    /// Editing needs `edit` on the item and on every changed piece.
    pub fn update_item(&mut self, actor: Actor, id: ItemId, changes: Row) -> Result<ItemSnapshot> {
        self.require(actor, &Ability::EDIT, id, None)?;
        let type_name = self.store.live_record(id)?.type_name.clone();
        for piece in changes.keys() {
            if self.schema().piece(&type_name, piece).is_ok() {
                self.require(actor, &Ability::EDIT, id, Some(piece))?;
            }
        }
        self.store.update_item(id, changes)
    }

    pub fn deactivate(&mut self, actor: Actor, id: ItemId) -> Result<()> {
        self.require(actor, &Ability::DEACTIVATE, id, None)?;
        self.store.deactivate(id)
    }

    pub fn reactivate(&mut self, actor: Actor, id: ItemId) -> Result<()> {
        self.require(actor, &Ability::DEACTIVATE, id, None)?;
        self.store.reactivate(id)
    }

    /// Destroys an inactive item and drops the grants that refer to it.
    pub fn destroy(&mut self, actor: Actor, id: ItemId) -> Result<()> {
        match self.store.record(id)?.state {
            crate::store::ItemState::Destroyed => return Err(Error::AlreadyDestroyed(id)),
            crate::store::ItemState::Active => return Err(Error::NotDeactivated(id)),
            crate::store::ItemState::Inactive => {}
        }
        self.require(actor, &Ability::DESTROY, id, None)?;
        self.store.destroy(id)?;
        self.grants.purge_item(id);
        Ok(())
    }

    /// Reads an item (or one version of it) filtered to what the actor may
    /// view. Inactive items are readable only by those who may reactivate
    /// them.
    pub fn read_item(&self, actor: Actor, id: ItemId, version: Option<u32>) -> Result<VisibleItem> {
        let record = self.store.live_record(id)?;
        let current = record.version;
        self.require(actor, &Ability::VIEW, id, None)?;
        if !record.is_active() {
            self.require(actor, &Ability::DEACTIVATE, id, None)
                .map_err(|_| Error::ItemInactive(id))?;
        }
        let snapshot = match version {
            Some(v) => self.store.get_version(id, v)?,
            None => self.store.get_item(id)?,
        };
        let resolver = self.resolver();
        let visible = if actor.admin {
            None
        } else {
            Some(resolver.visible_pieces(actor.agent, id)?)
        };
        let pieces = self
            .schema()
            .all_pieces(&snapshot.type_name)?
            .iter()
            .filter(|def| visible.as_ref().is_none_or(|v| v.contains(&def.name)))
            .map(|def| VisiblePiece {
                name: def.name.clone(),
                kind: def.kind,
                value: snapshot.pieces.get(&def.name).cloned().unwrap_or(PieceValue::Null),
            })
            .collect();
        Ok(VisibleItem {
            id,
            type_name: snapshot.type_name,
            version: snapshot.version,
            current_version: current,
            active: snapshot.active,
            pieces,
        })
    }

    /// Lists item ids the actor may view.
    pub fn list_items(&self, actor: Actor, type_name: &str, query: &ListQuery) -> Result<Vec<ItemId>> {
        let ids = self.store.list_items(type_name, query)?;
        if actor.admin {
            return Ok(ids);
        }
        let resolver = self.resolver();
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            if resolver.can(actor.agent, &Ability::VIEW, id, None)? {
                out.push(id);
            }
        }
        Ok(out)
    }

    /// Records a grant. The grantor needs `modify_permissions` on the target
    /// item; type-scoped grants are reserved to administrators.
    pub fn grant(&mut self, actor: Actor, grant: PermissionGrant) -> Result<u64> {
        self.grants.validate(&self.store, &grant)?;
        match &grant.target {
            GrantTarget::Item(item) => self.require(actor, &Ability::MODIFY_PERMISSIONS, *item, None)?,
            GrantTarget::Type(name) if !actor.admin => {
                return Err(Error::PermissionDenied {
                    ability: Ability::MODIFY_PERMISSIONS.to_string(),
                    item: name.clone(),
                })
            }
            GrantTarget::Type(_) => {}
        }
        Ok(self.grants.insert(grant))
    }

    pub fn revoke(&mut self, actor: Actor, grant_id: u64) -> Result<PermissionGrant> {
        let grant = self.grants.get(grant_id).ok_or(Error::UnknownGrant(grant_id))?;
        match &grant.target {
            GrantTarget::Item(item) => self.require(actor, &Ability::MODIFY_PERMISSIONS, *item, None)?,
            GrantTarget::Type(name) if !actor.admin => {
                return Err(Error::PermissionDenied {
                    ability: Ability::MODIFY_PERMISSIONS.to_string(),
                    item: name.clone(),
                })
            }
            GrantTarget::Type(_) => {}
        }
        self.grants.revoke(grant_id)
    }

    /// Adding to a collection needs `edit` on the collection, not on the
    /// member.
    pub fn add_membership(&mut self, actor: Actor, collection: ItemId, member: ItemId) -> Result<ItemId> {
        let agent = actor.agent.ok_or(Error::AgentRequired)?;
        self.require(actor, &Ability::EDIT, collection, None)?;
        collections::add_membership(&mut self.store, collection, member, agent)
    }

    /// Removal deactivates the Membership; allowed to anyone who may edit
    /// the collection or deactivate the Membership.
    pub fn remove_membership(&mut self, actor: Actor, collection: ItemId, membership: ItemId) -> Result<()> {
        let edit_collection = self.require(actor, &Ability::EDIT, collection, None);
        if edit_collection.is_err() {
            self.require(actor, &Ability::DEACTIVATE, membership, None)?;
        }
        collections::remove_membership(&mut self.store, collection, membership)
    }

    /// Full serialization of the installation state.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&EngineFile {
            format: STORE_FORMAT.to_string(),
            store: self.store.to_state(),
            grants: self.grants.clone(),
        })
        .expect("engine state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: EngineFile = serde_json::from_str(text).map_err(|e| Error::CorruptBundle(e.to_string()))?;
        if file.format != STORE_FORMAT {
            return Err(Error::FormatVersionMismatch(file.format));
        }
        Ok(Engine {
            store: Store::from_state(file.store)?,
            grants: file.grants,
        })
    }

    pub fn open(path: &Path) -> Result<Self> {
        Engine::from_json(&fs::read_to_string(path)?)
    }

    /// Writes the store file atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_json().as_bytes())?;
        tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}
