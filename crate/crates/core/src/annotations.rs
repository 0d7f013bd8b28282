//! Comments, transclusions and excerpts.
//!
//! All three are ordinary items, each with its own id, version history and
//! grants, and creating one never touches the item it refers to. Comments
//! and transclusions are anchored to a fixed version of their target; the
//! anchor does not move when the target is edited later.
//!
//! Character offsets count Unicode scalar values (Rust `char`s) of the
//! stored body text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{Actor, Engine};
use crate::error::{Error, Result};
use crate::permissions::{Ability, Resolver};
use crate::store::{ListQuery, Row, Store};
use crate::value::{ItemId, PiecePointerValue, PieceValue};

pub const COMMENT_TYPE: &str = "Comment";
pub const TEXT_COMMENT_TYPE: &str = "TextComment";
pub const TEXT_DOCUMENT_TYPE: &str = "TextDocument";
pub const TRANSCLUSION_TYPE: &str = "Transclusion";
pub const EXCERPT_TYPE: &str = "Excerpt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Comment,
    Transclusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anchor {
    pub item: ItemId,
    pub version: u32,
    /// Character offset into the anchored body; comments have none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: ItemId,
    pub kind: AnnotationKind,
    pub anchor: Anchor,
    /// The item a transclusion embeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<ItemId>,
}

impl Annotation {
    fn sort_key(&self) -> (u64, ItemId) {
        (self.anchor.offset.unwrap_or(0), self.id)
    }
}

/// Length of a body in the canonical offset unit.
pub fn text_length(body: &str) -> usize {
    body.chars().count()
}

fn read_anchor(pieces: &Row, item: &str, version: &str, offset: Option<&str>) -> Option<Anchor> {
    let item = pieces.get(item)?.referenced_item()?;
    let version = u32::try_from(pieces.get(version)?.as_integer()?).ok()?;
    let offset = match offset {
        Some(name) => Some(u64::try_from(pieces.get(name)?.as_integer()?).ok()?),
        None => None,
    };
    Some(Anchor { item, version, offset })
}

/// Every active comment and transclusion in the store, unfiltered.
pub fn all_annotations(store: &Store) -> Vec<Annotation> {
    let mut out = Vec::new();
    let query = ListQuery::new().subtypes();
    for id in store.list_items(COMMENT_TYPE, &query).unwrap_or_default() {
        if let Ok(snap) = store.get_item(id) {
            if let Some(anchor) = read_anchor(&snap.pieces, "commented_item", "item_version_number", None) {
                out.push(Annotation { id, kind: AnnotationKind::Comment, anchor, target: None });
            }
        }
    }
    for id in store.list_items(TRANSCLUSION_TYPE, &query).unwrap_or_default() {
        if let Ok(snap) = store.get_item(id) {
            if let Some(anchor) =
                read_anchor(&snap.pieces, "document_pointer", "document_version", Some("character_offset"))
            {
                let target = snap.pieces.get("target_item").and_then(PieceValue::referenced_item);
                out.push(Annotation { id, kind: AnnotationKind::Transclusion, anchor, target });
            }
        }
    }
    out
}

/// The value an excerpt currently points at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcerptValue {
    pub value: PieceValue,
    pub source: ItemId,
    pub piece: String,
}

fn body_of(engine: &Engine, doc: ItemId, version: u32) -> Result<String> {
    let snap = engine.store().get_version(doc, version)?;
    Ok(snap.piece("body").and_then(PieceValue::as_text).unwrap_or("").to_string())
}

fn check_version(engine: &Engine, item: ItemId, version: u32) -> Result<()> {
    let current = engine.store().live_record(item)?.version;
    if version == 0 || version > current {
        return Err(Error::UnknownVersion { id: item, version });
    }
    Ok(())
}

impl Engine {
    /// Creates a TextComment about one version of `target`.
    pub fn create_comment(&mut self, actor: Actor, target: ItemId, version: u32, body: &str) -> Result<ItemId> {
        check_version(self, target, version)?;
        self.require(actor, &Ability::COMMENT_ON, target, None)?;
        let agent = actor.agent.ok_or(Error::AgentRequired)?;
        let pieces: Row = [
            ("commented_item".to_string(), PieceValue::ItemPointer(target)),
            ("item_version_number".to_string(), PieceValue::Integer(version.into())),
            ("body".to_string(), PieceValue::text(body)),
        ]
        .into_iter()
        .collect();
        Ok(self.store.create_item(TEXT_COMMENT_TYPE, pieces, Some(agent))?.id)
    }

    /// Creates a Transclusion embedding `target` at a character offset of
    /// one version of a TextDocument.
    pub fn create_transclusion(
        &mut self,
        actor: Actor,
        doc: ItemId,
        version: u32,
        offset: i64,
        target: ItemId,
    ) -> Result<ItemId> {
        if !self.store.is_instance_of(doc, TEXT_DOCUMENT_TYPE)? {
            return Err(Error::NotATextDocument(doc));
        }
        check_version(self, doc, version)?;
        let length = text_length(&body_of(self, doc, version)?);
        if offset < 0 || offset as u64 > length as u64 {
            return Err(Error::OffsetOutOfRange { offset, length });
        }
        self.store.live_record(target)?;
        self.require(actor, &Ability::COMMENT_ON, doc, None)?;
        let agent = actor.agent.ok_or(Error::AgentRequired)?;
        let pieces: Row = [
            ("document_pointer".to_string(), PieceValue::ItemPointer(doc)),
            ("document_version".to_string(), PieceValue::Integer(version.into())),
            ("character_offset".to_string(), PieceValue::Integer(offset)),
            ("target_item".to_string(), PieceValue::ItemPointer(target)),
        ]
        .into_iter()
        .collect();
        Ok(self.store.create_item(TRANSCLUSION_TYPE, pieces, Some(agent))?.id)
    }

    /// Creates an Excerpt pointing at one piece of `source`. The creator
    /// must be able to view that piece.
    pub fn create_excerpt(&mut self, actor: Actor, source: ItemId, piece: &str) -> Result<ItemId> {
        self.require(actor, &Ability::VIEW, source, Some(piece))?;
        let pointer = PieceValue::PiecePointer(PiecePointerValue {
            item_id: source,
            piece_name: piece.to_string(),
        });
        let pieces: Row = [("source_piece".to_string(), pointer)].into_iter().collect();
        self.create_item(actor, EXCERPT_TYPE, pieces).map(|s| s.id)
    }

    /// Reads the current value of the piece an excerpt points at.
    pub fn resolve_excerpt(&self, actor: Actor, excerpt: ItemId) -> Result<ExcerptValue> {
        if !self.store.is_instance_of(excerpt, EXCERPT_TYPE)? {
            return Err(Error::NotAnExcerpt(excerpt));
        }
        self.require(actor, &Ability::VIEW, excerpt, None)?;
        let pointer = match self.store.get_item(excerpt)?.piece("source_piece") {
            Some(PieceValue::PiecePointer(p)) => p.clone(),
            Some(PieceValue::DestroyedReference(id)) => return Err(Error::DanglingSource(*id)),
            _ => return Err(Error::NotAnExcerpt(excerpt)),
        };
        self.require(actor, &Ability::VIEW, pointer.item_id, Some(&pointer.piece_name))?;
        let value = self
            .store
            .get_item(pointer.item_id)?
            .piece(&pointer.piece_name)
            .cloned()
            .unwrap_or(PieceValue::Null);
        Ok(ExcerptValue {
            value,
            source: pointer.item_id,
            piece: pointer.piece_name,
        })
    }

    /// Annotations anchored to `item`, limited to `version` when given,
    /// that `agent` may view, ordered by (offset, id).
    pub fn annotations_for(&self, actor: Actor, item: ItemId, version: Option<u32>) -> Result<Vec<Annotation>> {
        self.store.live_record(item)?;
        let resolver = self.resolver();
        annotations_visible(&resolver, self.store(), actor, item, version)
    }
}

pub(crate) fn annotations_visible(
    resolver: &Resolver<'_>,
    store: &Store,
    actor: Actor,
    item: ItemId,
    version: Option<u32>,
) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for annotation in all_annotations(store) {
        if annotation.anchor.item != item || version.is_some_and(|v| v != annotation.anchor.version) {
            continue;
        }
        if actor.admin || resolver.can(actor.agent, &Ability::VIEW, annotation.id, None)? {
            out.push(annotation);
        }
    }
    out.sort_by_key(Annotation::sort_key);
    Ok(out)
}

/// Groups annotations by anchored version.
pub fn by_version(annotations: &[Annotation]) -> BTreeMap<u32, Vec<Annotation>> {
    let mut grouped: BTreeMap<u32, Vec<Annotation>> = BTreeMap::new();
    for a in annotations {
        grouped.entry(a.anchor.version).or_default().push(*a);
    }
    grouped
}
