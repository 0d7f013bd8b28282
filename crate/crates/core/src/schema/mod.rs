//! Item types, their pieces, and the inheritance hierarchy between them.
//!
//! Every type other than the root [`ROOT_TYPE`] names one or more parents,
//! and inherits every piece its ancestors define. Multiple inheritance is
//! allowed; a piece reached along two paths from a common ancestor appears
//! once, while two independently defined pieces with the same name are
//! rejected when the second type is defined.
//!
//! The registry is append-only: a type, once defined, never changes.

mod file;

use std::collections::{HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::PieceKind;

pub use file::{format_schema, parse_schema};

/// Name of the root item type.
pub const ROOT_TYPE: &str = "Item";

/// Piece names the engine reserves for itself.
pub const RESERVED_PIECES: &[&str] = &["id"];

/// The bootstrap hierarchy, in the schema file format.
pub const BOOTSTRAP_SCHEMA: &str = include_str!("../../schema/bootstrap.schema");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceDefinition {
    pub name: String,
    pub kind: PieceKind,
    /// Required type of the pointed-to item, for pointer kinds only.
    /// Subtypes of the target are accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_type: Option<String>,
    #[serde(default)]
    pub required: bool,
}

impl PieceDefinition {
    pub fn new(name: impl Into<String>, kind: PieceKind) -> Self {
        PieceDefinition {
            name: name.into(),
            kind,
            target_type: None,
            required: false,
        }
    }

    pub fn pointer(name: impl Into<String>, kind: PieceKind, target: impl Into<String>) -> Self {
        PieceDefinition {
            name: name.into(),
            kind,
            target_type: Some(target.into()),
            required: false,
        }
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDescriptor {
    pub name: String,
    pub parents: Vec<String>,
    pub own_pieces: Vec<PieceDefinition>,
}

impl TypeDescriptor {
    pub fn new(
        name: impl Into<String>,
        parents: impl IntoIterator<Item = impl Into<String>>,
        own_pieces: Vec<PieceDefinition>,
    ) -> Self {
        TypeDescriptor {
            name: name.into(),
            parents: parents.into_iter().map(Into::into).collect(),
            own_pieces,
        }
    }
}

#[derive(Debug, Clone)]
struct TypeEntry {
    descriptor: TypeDescriptor,
    ancestry: Vec<String>,
    pieces: Vec<PieceDefinition>,
    owners: Vec<String>,
}

/// Registry of defined item types.
#[derive(Debug, Clone, Default)]
pub struct SchemaRegistry {
    types: IndexMap<String, TypeEntry>,
}

impl PartialEq for SchemaRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.descriptors().eq(other.descriptors())
    }
}

impl SchemaRegistry {
    pub fn new() -> Self {
        SchemaRegistry::default()
    }

    /// A registry holding the bootstrap hierarchy.
    pub fn bootstrap() -> Self {
        let mut registry = SchemaRegistry::new();
        let types = parse_schema(BOOTSTRAP_SCHEMA).expect("bootstrap schema parses");
        registry
            .define_all(types)
            .expect("bootstrap schema is well formed");
        registry
    }

    /// Defines a single type. Pointer pieces must target types that are
    /// already defined (or the type itself).
    pub fn define_item_type(&mut self, descriptor: TypeDescriptor) -> Result<&TypeDescriptor> {
        let name = descriptor.name.clone();
        self.define_all(vec![descriptor])?;
        Ok(&self.types[&name].descriptor)
    }

    /// Defines a batch of types, in order. Pointer targets may refer to any
    /// type of the batch, which lets mutually referring types be declared
    /// together. On error the registry is left unchanged.
    pub fn define_all(&mut self, batch: Vec<TypeDescriptor>) -> Result<()> {
        let batch_names: HashSet<String> = batch.iter().map(|d| d.name.clone()).collect();
        let mut staged = self.clone();
        for descriptor in batch {
            staged.insert(descriptor, &batch_names)?;
        }
        *self = staged;
        Ok(())
    }

    fn insert(&mut self, descriptor: TypeDescriptor, batch: &HashSet<String>) -> Result<()> {
        let name = &descriptor.name;
        if !is_type_token(name) {
            return Err(Error::InvalidName(name.clone()));
        }
        if self.types.contains_key(name) {
            return Err(Error::DuplicateTypeName(name.clone()));
        }
        if descriptor.parents.iter().any(|p| p == name) {
            return Err(Error::CycleDetected(name.clone()));
        }
        if descriptor.parents.is_empty() && name != ROOT_TYPE {
            return Err(Error::MissingParents(name.clone()));
        }
        let mut seen_parents = HashSet::new();
        for parent in &descriptor.parents {
            if !self.types.contains_key(parent) {
                return Err(Error::UnknownParent(parent.clone()));
            }
            if !seen_parents.insert(parent) {
                return Err(Error::InvalidName(format!("{name}: parent `{parent}` listed twice")));
            }
        }

        let mut own_names = HashSet::new();
        for piece in &descriptor.own_pieces {
            if !is_piece_token(&piece.name) || RESERVED_PIECES.contains(&piece.name.as_str()) {
                return Err(Error::InvalidName(piece.name.clone()));
            }
            if !own_names.insert(piece.name.as_str()) {
                return Err(Error::PieceNameCollision {
                    type_name: name.clone(),
                    piece: piece.name.clone(),
                    other_owner: name.clone(),
                });
            }
            match (piece.kind.is_pointer(), &piece.target_type) {
                (true, None) => {
                    return Err(Error::InvalidPieceDefinition {
                        piece: piece.name.clone(),
                        reason: "pointer pieces need a target type".into(),
                    })
                }
                (false, Some(_)) => {
                    return Err(Error::InvalidPieceDefinition {
                        piece: piece.name.clone(),
                        reason: "only pointer pieces take a target type".into(),
                    })
                }
                (true, Some(target)) => {
                    if !self.types.contains_key(target) && !batch.contains(target) && target != name {
                        return Err(Error::UnknownTargetType {
                            piece: piece.name.clone(),
                            target: target.clone(),
                        });
                    }
                }
                (false, None) => {}
            }
        }

        let ancestry = self.linearize(name, &descriptor.parents);
        let mut pieces: Vec<PieceDefinition> = Vec::new();
        let mut owners: Vec<String> = Vec::new();
        let mut by_name: HashMap<String, String> = HashMap::new();
        let inherited = ancestry[1..].iter().flat_map(|ancestor| {
            self.types[ancestor]
                .descriptor
                .own_pieces
                .iter()
                .map(move |p| (ancestor.as_str(), p))
        });
        for (owner, piece) in inherited.chain(descriptor.own_pieces.iter().map(|p| (name.as_str(), p))) {
            if let Some(existing) = by_name.get(&piece.name) {
                // Each ancestor appears once in the linearization, so a repeat
                // always comes from a different owner.
                return Err(Error::PieceNameCollision {
                    type_name: name.clone(),
                    piece: piece.name.clone(),
                    other_owner: existing.clone(),
                });
            }
            by_name.insert(piece.name.clone(), owner.to_string());
            pieces.push(piece.clone());
            owners.push(owner.to_string());
        }

        self.types.insert(
            name.clone(),
            TypeEntry {
                descriptor,
                ancestry,
                pieces,
                owners,
            },
        );
        Ok(())
    }

    /// Child first, then each parent's ancestry depth-first left to right,
    /// keeping only the last occurrence of repeated types.
    fn linearize(&self, name: &str, parents: &[String]) -> Vec<String> {
        let mut walk = vec![name.to_string()];
        for parent in parents {
            walk.extend(self.types[parent].ancestry.iter().cloned());
        }
        let mut seen = HashSet::new();
        let mut keep_last: Vec<String> = walk
            .into_iter()
            .rev()
            .filter(|t| seen.insert(t.clone()))
            .collect();
        keep_last.reverse();
        keep_last
    }

    fn entry(&self, name: &str) -> Result<&TypeEntry> {
        self.types
            .get(name)
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Result<&TypeDescriptor> {
        Ok(&self.entry(name)?.descriptor)
    }

    /// Type descriptors in definition order.
    pub fn descriptors(&self) -> impl Iterator<Item = &TypeDescriptor> {
        self.types.values().map(|e| &e.descriptor)
    }

    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// True iff `ancestor` is `candidate` or one of its ancestors.
    pub fn is_subtype(&self, candidate: &str, ancestor: &str) -> Result<bool> {
        self.entry(ancestor)?;
        Ok(self.entry(candidate)?.ancestry.iter().any(|t| t == ancestor))
    }

    /// Deterministic linearization of the ancestor set, starting with the
    /// type itself and ending with the root.
    pub fn ancestry(&self, name: &str) -> Result<&[String]> {
        Ok(&self.entry(name)?.ancestry)
    }

    /// Inherited pieces in ancestry order, followed by the type's own pieces.
    pub fn all_pieces(&self, name: &str) -> Result<&[PieceDefinition]> {
        Ok(&self.entry(name)?.pieces)
    }

    pub fn piece(&self, type_name: &str, piece: &str) -> Result<&PieceDefinition> {
        let entry = self.entry(type_name)?;
        entry
            .pieces
            .iter()
            .find(|p| p.name == piece)
            .ok_or_else(|| Error::UnknownPiece {
                type_name: type_name.to_string(),
                piece: piece.to_string(),
            })
    }

    /// The type whose table stores `piece` for items of `type_name`.
    pub fn piece_owner(&self, type_name: &str, piece: &str) -> Result<&str> {
        let entry = self.entry(type_name)?;
        entry
            .pieces
            .iter()
            .position(|p| p.name == piece)
            .map(|i| entry.owners[i].as_str())
            .ok_or_else(|| Error::UnknownPiece {
                type_name: type_name.to_string(),
                piece: piece.to_string(),
            })
    }

    /// Shortest parent-edge distance from `name` to each of its ancestors
    /// (the type itself at distance 0), in breadth-first discovery order.
    pub fn ancestor_distances(&self, name: &str) -> Result<Vec<(&str, usize)>> {
        let start = self.types.get_key_value(name).ok_or_else(|| Error::UnknownType(name.to_string()))?;
        let mut out = vec![(start.0.as_str(), 0)];
        let mut seen: HashSet<&str> = HashSet::from([start.0.as_str()]);
        let mut queue = VecDeque::from([(start.0.as_str(), 0)]);
        while let Some((current, dist)) = queue.pop_front() {
            for parent in &self.types[current].descriptor.parents {
                if seen.insert(parent) {
                    out.push((parent.as_str(), dist + 1));
                    queue.push_back((parent.as_str(), dist + 1));
                }
            }
        }
        Ok(out)
    }

    /// All defined types that are subtypes of `name`, including itself.
    pub fn subtypes_of<'a>(&'a self, name: &'a str) -> Result<impl Iterator<Item = &'a str> + 'a> {
        self.entry(name)?;
        Ok(self
            .types
            .iter()
            .filter(move |(_, e)| e.ancestry.iter().any(|t| t == name))
            .map(|(n, _)| n.as_str()))
    }
}

fn is_type_token(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_piece_token(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}
