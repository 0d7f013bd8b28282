//! JSON shapes exchanged over HTTP.
//!
//! Piece values use their plain JSON literal: strings, integers, booleans,
//! an item id for item pointers, and `{"item": id, "piece": name}` for
//! piece pointers. Unset values are `null`. A pointer whose target was
//! destroyed is `null` with `"destroyed_target"` naming the old id.

use indexmap::IndexMap;
use serde::Serialize;
use serde_json::Value;

use crate::engine::VisibleItem;
use crate::schema::{PieceDefinition, SchemaRegistry};
use crate::value::{ItemId, PieceKind, PieceValue};

pub const WIRE_FORMAT: &str = "itemgraph-wire/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WirePiece {
    pub kind: PieceKind,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub destroyed_target: Option<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WireLinks {
    #[serde(rename = "self")]
    pub self_link: String,
    pub versions: String,
    pub annotations: String,
}

impl WireLinks {
    pub fn for_item(base_url: &str, id: ItemId) -> Self {
        WireLinks {
            self_link: item_link(base_url, id),
            versions: format!("{base_url}/item/{id}/versions"),
            annotations: format!("{base_url}/item/{id}/annotations"),
        }
    }
}

pub fn item_link(base_url: &str, id: ItemId) -> String {
    format!("{base_url}/item/{id}")
}

pub fn version_link(base_url: &str, id: ItemId, version: u32) -> String {
    format!("{base_url}/item/{id}/version/{version}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireItem {
    pub id: ItemId,
    pub type_name: String,
    pub version: u32,
    pub active: bool,
    pub pieces: IndexMap<String, WirePiece>,
    pub links: WireLinks,
}

impl WireItem {
    pub fn new(item: &VisibleItem, base_url: &str) -> Self {
        let pieces = item
            .pieces
            .iter()
            .map(|p| {
                let destroyed_target = match p.value {
                    PieceValue::DestroyedReference(id) => Some(id),
                    _ => None,
                };
                let piece = WirePiece {
                    kind: p.kind,
                    value: p.value.to_json(),
                    destroyed_target,
                };
                (p.name.clone(), piece)
            })
            .collect();
        WireItem {
            id: item.id,
            type_name: item.type_name.clone(),
            version: item.version,
            active: item.active,
            pieces,
            links: WireLinks::for_item(base_url, item.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WirePieceDefinition {
    pub name: String,
    pub kind: PieceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_type: Option<String>,
    pub required: bool,
    /// The type that declares this piece.
    pub owner: String,
}

/// Everything a client needs to build a form for one type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WireType {
    pub name: String,
    pub parents: Vec<String>,
    pub ancestry: Vec<String>,
    pub own_pieces: Vec<String>,
    /// All pieces, inherited first, in the order forms should show them.
    pub pieces: Vec<WirePieceDefinition>,
    pub subtypes: Vec<String>,
    /// (viewer, action) pairs usable on items of this type.
    pub actions: Vec<WireAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WireAction {
    pub viewer: String,
    pub action: String,
}

impl WireType {
    pub fn new(schema: &SchemaRegistry, name: &str, actions: Vec<(String, String)>) -> crate::Result<Self> {
        let descriptor = schema.get(name)?;
        let wire_piece = |def: &PieceDefinition| -> crate::Result<WirePieceDefinition> {
            Ok(WirePieceDefinition {
                name: def.name.clone(),
                kind: def.kind,
                target_type: def.target_type.clone(),
                required: def.required,
                owner: schema.piece_owner(name, &def.name)?.to_string(),
            })
        };
        Ok(WireType {
            name: descriptor.name.clone(),
            parents: descriptor.parents.clone(),
            ancestry: schema.ancestry(name)?.to_vec(),
            own_pieces: descriptor.own_pieces.iter().map(|p| p.name.clone()).collect(),
            pieces: schema.all_pieces(name)?.iter().map(wire_piece).collect::<crate::Result<_>>()?,
            subtypes: schema.subtypes_of(name)?.into_iter().map(str::to_string).collect(),
            actions: actions.into_iter().map(|(viewer, action)| WireAction { viewer, action }).collect(),
        })
    }
}
