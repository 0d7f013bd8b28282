//! A typed, versioned content-object engine.
//!
//! Content lives in *items*. Every item is an instance of an *item type*;
//! item types form an inheritance hierarchy with multiple inheritance, and
//! each type declares named, typed *pieces* that its subtypes inherit.
//! Items are addressed by an immutable id, every edit produces a new
//! retrievable version, and relations such as collection memberships,
//! comments and transclusions are items in their own right.
//!
//! ```
//! use itemgraph::{Actor, Engine, ListQuery, PieceValue, Row};
//!
//! let mut engine = Engine::new();
//! let admin = Actor::admin(None);
//! let mike = engine
//!     .create_item(admin, "Person", Row::from([("first_name".into(), PieceValue::text("Mike"))]))
//!     .unwrap();
//! let robot = engine.create_item(Actor::agent(mike.id), "Agent", Row::new()).unwrap();
//!
//! let agents = engine.store().list_items("Agent", &ListQuery::new().subtypes()).unwrap();
//! assert_eq!(agents, [mike.id, robot.id]);
//! ```
//!
//! The guide in `book/` walks through each part of the model.

pub mod annotations;
pub mod api;
pub mod collections;
mod engine;
mod error;
pub mod permissions;
pub mod schema;
pub mod store;
mod value;
pub mod viewers;

pub use engine::{Actor, Engine, VisibleItem, VisiblePiece};
pub use error::{Error, Result};
pub use permissions::{Ability, Effect, GrantTarget, PermissionGrant, Subject};
pub use schema::{PieceDefinition, SchemaRegistry, TypeDescriptor};
pub use store::{ItemSnapshot, ListQuery, Row, Store};
pub use value::{ItemId, PieceKind, PiecePointerValue, PieceValue};

/// The guide chapters, compiled as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/item-types.md")]
    pub struct ItemTypes;
    #[doc = include_str!("../../../book/src/schema-files.md")]
    pub struct SchemaFiles;
    #[doc = include_str!("../../../book/src/storage-and-versions.md")]
    pub struct StorageAndVersions;
    #[doc = include_str!("../../../book/src/deletion.md")]
    pub struct Deletion;
    #[doc = include_str!("../../../book/src/collections.md")]
    pub struct Collections;
    #[doc = include_str!("../../../book/src/annotations.md")]
    pub struct Annotations;
    #[doc = include_str!("../../../book/src/permissions.md")]
    pub struct Permissions;
    #[doc = include_str!("../../../book/src/viewers.md")]
    pub struct Viewers;
    #[doc = include_str!("../../../book/src/http-api.md")]
    pub struct HttpApi;
    #[doc = include_str!("../../../book/src/export.md")]
    pub struct Export;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
