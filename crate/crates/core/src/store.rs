//! Multi-table item storage with per-type version archives.
//!
//! An item of most-derived type `T` owns one row in the table of every type
//! in `ancestry(T)`; each row carries only the pieces that type defines.
//! Updating an item copies all of its rows into the per-type archives before
//! the live rows change, so every superseded version stays retrievable.
//!
//! Deletion is two-phase. [`Store::deactivate`] hides an item and can be
//! undone with [`Store::reactivate`]. [`Store::destroy`] only accepts
//! inactive items and erases every live and archived row, leaving a
//! tombstone with the id and type name so the id is never reissued and
//! pointers to it read as [`PieceValue::DestroyedReference`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{PieceDefinition, SchemaRegistry, TypeDescriptor};
use crate::value::{ItemId, PieceKind, PieceValue};

/// Piece values keyed by piece name.
pub type Row = BTreeMap<String, PieceValue>;

/// Type that every creator must belong to.
pub const AGENT_TYPE: &str = "Agent";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemState {
    Active,
    Inactive,
    Destroyed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub type_name: String,
    /// Current version; zero once destroyed.
    pub version: u32,
    pub state: ItemState,
}

impl ItemRecord {
    pub fn is_destroyed(&self) -> bool {
        self.state == ItemState::Destroyed
    }

    pub fn is_active(&self) -> bool {
        self.state == ItemState::Active
    }
}

/// One logical table: live rows and superseded rows of a single type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogicalTable {
    pub rows: BTreeMap<ItemId, Row>,
    pub archive: BTreeMap<ItemId, BTreeMap<u32, Row>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSnapshot {
    pub id: ItemId,
    pub type_name: String,
    pub version: u32,
    pub active: bool,
    pub pieces: Row,
}

impl ItemSnapshot {
    pub fn piece(&self, name: &str) -> Option<&PieceValue> {
        self.pieces.get(name)
    }

    pub fn creator(&self) -> Option<ItemId> {
        self.pieces.get("creator").and_then(PieceValue::referenced_item)
    }
}

/// Options for [`Store::list_items`].
#[derive(Debug, Clone, Default)]
pub struct ListQuery {
    pub include_subtypes: bool,
    pub include_inactive: bool,
    /// Equality predicates on piece values.
    pub filters: Vec<(String, PieceValue)>,
}

impl ListQuery {
    pub fn new() -> Self {
        ListQuery::default()
    }

    pub fn subtypes(mut self) -> Self {
        self.include_subtypes = true;
        self
    }

    pub fn inactive(mut self) -> Self {
        self.include_inactive = true;
        self
    }

    pub fn filter(mut self, piece: impl Into<String>, value: PieceValue) -> Self {
        self.filters.push((piece.into(), value));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    schema: SchemaRegistry,
    next_id: u64,
    records: BTreeMap<ItemId, ItemRecord>,
    tables: BTreeMap<String, LogicalTable>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new(SchemaRegistry::bootstrap())
    }
}

impl Store {
    pub fn new(schema: SchemaRegistry) -> Self {
        let tables = schema
            .type_names()
            .map(|t| (t.to_string(), LogicalTable::default()))
            .collect();
        Store {
            schema,
            next_id: 1,
            records: BTreeMap::new(),
            tables,
        }
    }

    pub fn schema(&self) -> &SchemaRegistry {
        &self.schema
    }

    /// Adds item types; each gets an empty table.
    pub fn define_types(&mut self, batch: Vec<TypeDescriptor>) -> Result<()> {
        self.schema.define_all(batch)?;
        for name in self.schema.type_names() {
            self.tables.entry(name.to_string()).or_default();
        }
        Ok(())
    }

    /// The id the next created item will receive.
    pub fn next_id(&self) -> ItemId {
        ItemId(self.next_id)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Every record ever created, tombstones included, in id order.
    pub fn records(&self) -> impl Iterator<Item = (ItemId, &ItemRecord)> {
        self.records.iter().map(|(id, r)| (*id, r))
    }

    pub fn record(&self, id: ItemId) -> Result<&ItemRecord> {
        self.records.get(&id).ok_or(Error::UnknownItem(id))
    }

    /// Record of an item that has not been destroyed.
    pub fn live_record(&self, id: ItemId) -> Result<&ItemRecord> {
        let record = self.record(id)?;
        if record.is_destroyed() {
            return Err(Error::Destroyed(id));
        }
        Ok(record)
    }

    pub fn is_instance_of(&self, id: ItemId, type_name: &str) -> Result<bool> {
        let record = self.live_record(id)?;
        self.schema.is_subtype(&record.type_name, type_name)
    }

    /// Number of live rows per logical table.
    pub fn table_counts(&self) -> BTreeMap<String, usize> {
        self.tables.iter().map(|(t, table)| (t.clone(), table.rows.len())).collect()
    }

    /// Number of archived rows per logical table.
    pub fn archive_counts(&self) -> BTreeMap<String, usize> {
        self.tables
            .iter()
            .map(|(t, table)| (t.clone(), table.archive.values().map(BTreeMap::len).sum()))
            .collect()
    }

    pub fn table(&self, type_name: &str) -> Result<&LogicalTable> {
        self.tables
            .get(type_name)
            .ok_or_else(|| Error::UnknownType(type_name.to_string()))
    }

    /// Creates an item at version 1. With `creator == None` the item is
    /// its own creator, which is only allowed for agents.
    pub fn create_item(&mut self, type_name: &str, pieces: Row, creator: Option<ItemId>) -> Result<ItemSnapshot> {
        let all = self.schema.all_pieces(type_name)?;
        let id = ItemId(self.next_id);
        let creator = match creator {
            Some(agent) => {
                let record = self.records.get(&agent).filter(|r| !r.is_destroyed()).ok_or(
                    Error::DanglingPointer {
                        piece: "creator".into(),
                        target: agent,
                    },
                )?;
                if !self.schema.is_subtype(&record.type_name, AGENT_TYPE)? {
                    return Err(Error::NotAnAgent(agent));
                }
                agent
            }
            None => {
                if !self.schema.is_subtype(type_name, AGENT_TYPE)? {
                    return Err(Error::AgentRequired);
                }
                id
            }
        };
        if pieces.contains_key("creator") {
            return Err(Error::ImmutablePiece("creator".into()));
        }
        for (name, value) in &pieces {
            let def = self.schema.piece(type_name, name)?;
            self.validate_value(def, value)?;
        }
        let mut full: Row = all
            .iter()
            .map(|def| (def.name.clone(), pieces.get(&def.name).cloned().unwrap_or(PieceValue::Null)))
            .collect();
        full.insert("creator".into(), PieceValue::ItemPointer(creator));
        if let Some(missing) = all.iter().find(|d| d.required && full[&d.name].is_null()) {
            return Err(Error::MissingRequiredPiece(missing.name.clone()));
        }

        self.next_id += 1;
        self.records.insert(
            id,
            ItemRecord {
                type_name: type_name.to_string(),
                version: 1,
                state: ItemState::Active,
            },
        );
        for (table, row) in self.split_rows(type_name, full)? {
            self.tables.entry(table).or_default().rows.insert(id, row);
        }
        self.get_item(id)
    }

    /// Applies `changes` as a new version; the full prior state is archived
    /// first, even when `changes` is empty.
    pub fn update_item(&mut self, id: ItemId, changes: Row) -> Result<ItemSnapshot> {
        let record = self.live_record(id)?.clone();
        if !record.is_active() {
            return Err(Error::ItemInactive(id));
        }
        for (name, value) in &changes {
            if name == "creator" || name == "id" {
                return Err(Error::ImmutablePiece(name.clone()));
            }
            let def = self.schema.piece(&record.type_name, name)?;
            self.validate_value(def, value)?;
            if def.required && value.is_null() {
                return Err(Error::MissingRequiredPiece(name.clone()));
            }
        }
        let ancestry = self.schema.ancestry(&record.type_name)?.to_vec();
        for table_name in &ancestry {
            let table = self.tables.get_mut(table_name).expect("table per type");
            let row = table.rows.get(&id).cloned().unwrap_or_default();
            table.archive.entry(id).or_default().insert(record.version, row);
        }
        for (name, value) in changes {
            let owner = self.schema.piece_owner(&record.type_name, &name)?.to_string();
            let table = self.tables.get_mut(&owner).expect("table per type");
            table.rows.entry(id).or_default().insert(name, value);
        }
        self.records.get_mut(&id).expect("record exists").version += 1;
        self.get_item(id)
    }

    pub fn get_item(&self, id: ItemId) -> Result<ItemSnapshot> {
        let record = self.live_record(id)?;
        self.get_version(id, record.version)
    }

    pub fn get_version(&self, id: ItemId, version: u32) -> Result<ItemSnapshot> {
        let record = self.live_record(id)?;
        let mut pieces = self.raw_version(id, version)?;
        for value in pieces.values_mut() {
            if let Some(target) = value.referenced_item() {
                if self.records.get(&target).is_some_and(ItemRecord::is_destroyed) {
                    *value = PieceValue::DestroyedReference(target);
                }
            }
        }
        Ok(ItemSnapshot {
            id,
            type_name: record.type_name.clone(),
            version,
            active: record.is_active(),
            pieces,
        })
    }

    /// Stored piece values of one version, joined across ancestor tables.
    /// Pointers are returned as stored, even if their target is gone.
    pub fn raw_version(&self, id: ItemId, version: u32) -> Result<Row> {
        let record = self.live_record(id)?;
        if version == 0 || version > record.version {
            return Err(Error::UnknownVersion { id, version });
        }
        let mut pieces = Row::new();
        for table_name in self.schema.ancestry(&record.type_name)? {
            let table = &self.tables[table_name];
            let row = if version == record.version {
                table.rows.get(&id)
            } else {
                table.archive.get(&id).and_then(|versions| versions.get(&version))
            };
            if let Some(row) = row {
                pieces.extend(row.iter().map(|(k, v)| (k.clone(), v.clone())));
            }
        }
        Ok(pieces)
    }

    pub fn list_items(&self, type_name: &str, query: &ListQuery) -> Result<Vec<ItemId>> {
        let table = self.table(type_name)?;
        let mut filters = Vec::with_capacity(query.filters.len());
        for (piece, value) in &query.filters {
            let owner = self
                .schema
                .piece_owner(type_name, piece)
                .map_err(|_| Error::UnknownFilterPiece(piece.clone()))?;
            filters.push((&self.tables[owner], piece, value));
        }
        Ok(table
            .rows
            .keys()
            .copied()
            .filter(|id| {
                let record = &self.records[id];
                (query.include_inactive || record.is_active())
                    && (query.include_subtypes || record.type_name == type_name)
                    && filters.iter().all(|(owner, piece, value)| {
                        owner.rows.get(id).and_then(|row| row.get(*piece)) == Some(*value)
                    })
            })
            .collect())
    }

    pub fn deactivate(&mut self, id: ItemId) -> Result<()> {
        let record = self.live_record_mut(id)?;
        if !record.is_active() {
            return Err(Error::AlreadyInactive(id));
        }
        record.state = ItemState::Inactive;
        Ok(())
    }

    pub fn reactivate(&mut self, id: ItemId) -> Result<()> {
        let record = self.live_record_mut(id)?;
        if record.is_active() {
            return Err(Error::AlreadyActive(id));
        }
        record.state = ItemState::Active;
        Ok(())
    }

    /// Irreversibly erases an inactive item, leaving only its tombstone.
    pub fn destroy(&mut self, id: ItemId) -> Result<()> {
        let record = self.record(id)?;
        match record.state {
            ItemState::Destroyed => return Err(Error::AlreadyDestroyed(id)),
            ItemState::Active => return Err(Error::NotDeactivated(id)),
            ItemState::Inactive => {}
        }
        for table in self.tables.values_mut() {
            table.rows.remove(&id);
            table.archive.remove(&id);
        }
        let record = self.records.get_mut(&id).expect("record exists");
        record.state = ItemState::Destroyed;
        record.version = 0;
        Ok(())
    }

    fn live_record_mut(&mut self, id: ItemId) -> Result<&mut ItemRecord> {
        let record = self.records.get_mut(&id).ok_or(Error::UnknownItem(id))?;
        if record.is_destroyed() {
            return Err(Error::Destroyed(id));
        }
        Ok(record)
    }

    fn validate_value(&self, def: &PieceDefinition, value: &PieceValue) -> Result<()> {
        let (target, piece_name) = match value {
            PieceValue::Null => return Ok(()),
            PieceValue::ItemPointer(id) => (*id, None),
            PieceValue::PiecePointer(p) => (p.item_id, Some(&p.piece_name)),
            _ => (ItemId(0), None),
        };
        if value.kind() != Some(def.kind) {
            return Err(Error::PieceKindMismatch {
                piece: def.name.clone(),
                expected: def.kind.to_string(),
                actual: value.kind().map_or("destroyed_reference", PieceKind::as_str).to_string(),
            });
        }
        if !def.kind.is_pointer() {
            return Ok(());
        }
        let target_type = def.target_type.as_deref().expect("pointer pieces carry a target");
        let record = self
            .records
            .get(&target)
            .filter(|r| !r.is_destroyed())
            .ok_or(Error::DanglingPointer {
                piece: def.name.clone(),
                target,
            })?;
        if !self.schema.is_subtype(&record.type_name, target_type)? {
            return Err(Error::PointerTypeMismatch {
                piece: def.name.clone(),
                target,
                expected: target_type.to_string(),
                actual: record.type_name.clone(),
            });
        }
        if let Some(piece_name) = piece_name {
            self.schema.piece(&record.type_name, piece_name)?;
        }
        Ok(())
    }

    /// Splits a full piece map into one row per ancestor table.
    fn split_rows(&self, type_name: &str, pieces: Row) -> Result<BTreeMap<String, Row>> {
        let mut rows: BTreeMap<String, Row> = self
            .schema
            .ancestry(type_name)?
            .iter()
            .map(|t| (t.clone(), Row::new()))
            .collect();
        for (name, value) in pieces {
            let owner = self.schema.piece_owner(type_name, &name)?;
            rows.get_mut(owner).expect("owner is an ancestor").insert(name, value);
        }
        Ok(rows)
    }

    /// Rebuilds an item from exported versions. `versions[k]` holds the
    /// full piece map of version `k + 1`; tombstones pass no versions.
    pub(crate) fn restore_item(
        &mut self,
        id: ItemId,
        type_name: &str,
        state: ItemState,
        versions: Vec<Row>,
    ) -> Result<()> {
        if self.records.contains_key(&id) {
            return Err(Error::CorruptBundle(format!("item {id} appears twice")));
        }
        let expected: Vec<&str> = self.schema.all_pieces(type_name)?.iter().map(|p| p.name.as_str()).collect();
        if (state == ItemState::Destroyed) != versions.is_empty() {
            return Err(Error::CorruptBundle(format!("item {id} has inconsistent versions")));
        }
        let current = versions.len() as u32;
        for (index, pieces) in versions.into_iter().enumerate() {
            let version = index as u32 + 1;
            if !pieces.keys().map(String::as_str).eq(expected.iter().copied().collect::<std::collections::BTreeSet<_>>()) {
                return Err(Error::CorruptBundle(format!("item {id} v{version} does not match its type's pieces")));
            }
            for (table, row) in self.split_rows(type_name, pieces)? {
                let table = self.tables.entry(table).or_default();
                if version == current {
                    table.rows.insert(id, row);
                } else {
                    table.archive.entry(id).or_default().insert(version, row);
                }
            }
        }
        self.records.insert(
            id,
            ItemRecord {
                type_name: type_name.to_string(),
                version: current,
                state,
            },
        );
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    pub(crate) fn reserve_ids_below(&mut self, next_id: ItemId) {
        self.next_id = self.next_id.max(next_id.0);
    }

    pub(crate) fn to_state(&self) -> StoreState {
        StoreState {
            schema: self.schema.descriptors().cloned().collect(),
            next_id: self.next_id,
            records: self.records.clone(),
            tables: self.tables.clone(),
        }
    }

    pub(crate) fn from_state(state: StoreState) -> Result<Self> {
        let mut schema = SchemaRegistry::new();
        schema.define_all(state.schema)?;
        let mut store = Store::new(schema);
        store.next_id = state.next_id;
        store.records = state.records;
        for (name, table) in state.tables {
            if !store.schema.contains(&name) {
                return Err(Error::UnknownType(name));
            }
            store.tables.insert(name, table);
        }
        Ok(store)
    }
}

/// Serialized form of a [`Store`]: the schema plus every logical table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct StoreState {
    pub schema: Vec<TypeDescriptor>,
    pub next_id: u64,
    pub records: BTreeMap<ItemId, ItemRecord>,
    pub tables: BTreeMap<String, LogicalTable>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::PiecePointerValue;

    fn row(pairs: &[(&str, PieceValue)]) -> Row {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn mike_and_robot() -> (Store, ItemId, ItemId) {
        let mut store = Store::default();
        let mike = store
            .create_item("Person", row(&[("first_name", PieceValue::text("Mike"))]), None)
            .unwrap()
            .id;
        let robot = store.create_item("Agent", Row::new(), Some(mike)).unwrap().id;
        (store, mike, robot)
    }

    #[test]
    fn rows_per_ancestor_table() {
        let (store, mike, robot) = mike_and_robot();
        let counts = store.table_counts();
        assert_eq!(counts["Person"], 1);
        assert_eq!(counts["Agent"], 2);
        assert_eq!(counts["Item"], 2);
        assert_eq!(counts["Document"], 0);
        assert!(store.table("Person").unwrap().rows.contains_key(&mike));
        assert!(!store.table("Person").unwrap().rows.contains_key(&robot));
        let snap = store.get_item(mike).unwrap();
        assert_eq!(snap.creator(), Some(mike));
        assert_eq!(snap.piece("description"), Some(&PieceValue::Null));
        assert_eq!(snap.piece("first_name"), Some(&PieceValue::text("Mike")));
    }

    #[test]
    fn listing_is_polymorphic() {
        let (store, mike, robot) = mike_and_robot();
        assert_eq!(store.list_items("Agent", &ListQuery::new().subtypes()).unwrap(), [mike, robot]);
        assert_eq!(store.list_items("Agent", &ListQuery::new()).unwrap(), [robot]);
        assert_eq!(store.list_items("Person", &ListQuery::new().subtypes()).unwrap(), [mike]);
        assert!(Store::default().list_items("Item", &ListQuery::new().subtypes()).unwrap().is_empty());
        assert_eq!(
            store.list_items("Person", &ListQuery::new().filter("nope", PieceValue::Null)),
            Err(Error::UnknownFilterPiece("nope".into()))
        );
    }

    #[test]
    fn contact_methods_by_agent_pointer() {
        let (mut store, mike, robot) = mike_and_robot();
        let mut mine = Vec::new();
        for i in 0..3 {
            let r = row(&[
                ("agent_pointer", PieceValue::ItemPointer(mike)),
                ("value", PieceValue::text(format!("mike{i}@example.org"))),
            ]);
            mine.push(store.create_item("ContactMethod", r, Some(mike)).unwrap().id);
        }
        store
            .create_item("ContactMethod", row(&[("agent_pointer", PieceValue::ItemPointer(robot))]), Some(robot))
            .unwrap();
        let q = ListQuery::new().subtypes().filter("agent_pointer", PieceValue::ItemPointer(mike));
        assert_eq!(store.list_items("ContactMethod", &q).unwrap(), mine);
    }

    #[test]
    fn create_errors() {
        let (mut store, mike, _) = mike_and_robot();
        assert_eq!(
            store.create_item("Document", Row::new(), Some(ItemId(99))).unwrap_err(),
            Error::DanglingPointer { piece: "creator".into(), target: ItemId(99) }
        );
        assert_eq!(store.create_item("Document", Row::new(), None).unwrap_err(), Error::AgentRequired);
        assert_eq!(
            store.create_item("Ghost", Row::new(), Some(mike)).unwrap_err(),
            Error::UnknownType("Ghost".into())
        );
        assert_eq!(
            store.create_item("ContactMethod", Row::new(), Some(mike)).unwrap_err(),
            Error::MissingRequiredPiece("agent_pointer".into())
        );
        let doc = store.create_item("Document", Row::new(), Some(mike)).unwrap().id;
        assert!(matches!(
            store.create_item("ContactMethod", row(&[("agent_pointer", PieceValue::ItemPointer(doc))]), Some(mike)),
            Err(Error::PointerTypeMismatch { .. })
        ));
        assert!(matches!(
            store.create_item("Person", row(&[("first_name", PieceValue::Integer(3))]), Some(mike)),
            Err(Error::PieceKindMismatch { .. })
        ));
        assert_eq!(store.create_item("Document", Row::new(), Some(doc)).unwrap_err(), Error::NotAnAgent(doc));
        let bad_piece = PieceValue::PiecePointer(PiecePointerValue { item_id: mike, piece_name: "body".into() });
        assert!(matches!(
            store.create_item("Excerpt", row(&[("source_piece", bad_piece)]), Some(mike)),
            Err(Error::UnknownPiece { .. })
        ));
    }

    #[test]
    fn versions_are_archived() {
        let (mut store, mike, _) = mike_and_robot();
        store.update_item(mike, row(&[("first_name", PieceValue::text("Michael"))])).unwrap();
        assert_eq!(store.get_version(mike, 1).unwrap().piece("first_name"), Some(&PieceValue::text("Mike")));
        assert_eq!(store.get_item(mike).unwrap().version, 2);
        assert_eq!(store.get_version(mike, 2).unwrap(), store.get_item(mike).unwrap());
        assert_eq!(store.get_version(mike, 3), Err(Error::UnknownVersion { id: mike, version: 3 }));
        assert_eq!(store.get_version(mike, 0), Err(Error::UnknownVersion { id: mike, version: 0 }));
        // one archived row per ancestor table
        let archived = store.archive_counts();
        assert_eq!((archived["Person"], archived["Agent"], archived["Item"]), (1, 1, 1));
    }

    #[test]
    fn empty_update_still_archives() {
        let (mut store, mike, _) = mike_and_robot();
        let before = store.get_item(mike).unwrap();
        let after = store.update_item(mike, Row::new()).unwrap();
        assert_eq!(after.version, 2);
        assert_eq!(store.get_version(mike, 1).unwrap().pieces, before.pieces);
    }

    #[test]
    fn update_errors() {
        let (mut store, mike, robot) = mike_and_robot();
        assert_eq!(
            store.update_item(mike, row(&[("creator", PieceValue::ItemPointer(robot))])).unwrap_err(),
            Error::ImmutablePiece("creator".into())
        );
        assert_eq!(store.update_item(ItemId(77), Row::new()).unwrap_err(), Error::UnknownItem(ItemId(77)));
        store.deactivate(robot).unwrap();
        assert_eq!(store.update_item(robot, Row::new()).unwrap_err(), Error::ItemInactive(robot));
    }

    #[test]
    fn deactivate_reactivate_round_trip() {
        let (mut store, mike, _) = mike_and_robot();
        let before = store.get_item(mike).unwrap();
        store.deactivate(mike).unwrap();
        assert_eq!(store.deactivate(mike), Err(Error::AlreadyInactive(mike)));
        assert!(!store.list_items("Person", &ListQuery::new()).unwrap().contains(&mike));
        assert!(store.list_items("Person", &ListQuery::new().inactive()).unwrap().contains(&mike));
        store.reactivate(mike).unwrap();
        assert_eq!(store.reactivate(mike), Err(Error::AlreadyActive(mike)));
        assert_eq!(store.get_item(mike).unwrap(), before);
    }

    #[test]
    fn destroy_requires_deactivation_and_scrubs() {
        let (mut store, mike, robot) = mike_and_robot();
        store.update_item(robot, row(&[("description", PieceValue::text("SENTINEL-robot-v2"))])).unwrap();
        store.update_item(robot, row(&[("description", PieceValue::text("SENTINEL-robot-v3"))])).unwrap();
        let contact = store
            .create_item("ContactMethod", row(&[("agent_pointer", PieceValue::ItemPointer(robot))]), Some(mike))
            .unwrap()
            .id;
        assert_eq!(store.destroy(robot), Err(Error::NotDeactivated(robot)));
        store.deactivate(robot).unwrap();
        store.destroy(robot).unwrap();
        assert_eq!(store.destroy(robot), Err(Error::AlreadyDestroyed(robot)));
        assert_eq!(store.get_item(robot), Err(Error::Destroyed(robot)));
        assert_eq!(store.reactivate(robot), Err(Error::Destroyed(robot)));

        let dump = serde_json::to_string(&store.to_state()).unwrap();
        assert!(!dump.contains("SENTINEL"));
        assert_eq!(
            store.get_item(contact).unwrap().piece("agent_pointer"),
            Some(&PieceValue::DestroyedReference(robot))
        );
        // the id is never reissued
        let next = store.create_item("Agent", Row::new(), Some(mike)).unwrap().id;
        assert!(next > contact);
        assert_eq!(store.record(robot).unwrap().type_name, "Agent");
    }
}
