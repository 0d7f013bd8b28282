use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Installation-wide identifier of an item.
///
/// Assigned once at creation, shared by every per-type row of the item and
/// never reused, not even after the item is destroyed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u64);

impl ItemId {
    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ItemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<u64>()
            .ok()
            .filter(|v| *v > 0)
            .map(ItemId)
            .ok_or_else(|| Error::BadRequest(format!("`{s}` is not an item id")))
    }
}

/// The closed set of piece kinds. Pieces never hold lists or other
/// structures; multi-valued relations are modelled as separate items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Text,
    Integer,
    Boolean,
    ItemPointer,
    PiecePointer,
}

impl PieceKind {
    pub fn is_pointer(self) -> bool {
        matches!(self, PieceKind::ItemPointer | PieceKind::PiecePointer)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PieceKind::Text => "text",
            PieceKind::Integer => "integer",
            PieceKind::Boolean => "boolean",
            PieceKind::ItemPointer => "item_pointer",
            PieceKind::PiecePointer => "piece_pointer",
        }
    }
}

impl fmt::Display for PieceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PieceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "text" => PieceKind::Text,
            "integer" => PieceKind::Integer,
            "boolean" => PieceKind::Boolean,
            "item_pointer" => PieceKind::ItemPointer,
            "piece_pointer" => PieceKind::PiecePointer,
            other => return Err(Error::BadRequest(format!("unknown piece kind `{other}`"))),
        })
    }
}

/// A pointer to one named piece of another item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PiecePointerValue {
    pub item_id: ItemId,
    pub piece_name: String,
}

/// A typed piece value.
///
/// `Null` marks an optional piece that was never set. `DestroyedReference`
/// never appears in storage: reads substitute it for a pointer whose
/// target has been destroyed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PieceValue {
    Null,
    Text(String),
    Integer(i64),
    Boolean(bool),
    ItemPointer(ItemId),
    PiecePointer(PiecePointerValue),
    DestroyedReference(ItemId),
}

impl PieceValue {
    pub fn text(s: impl Into<String>) -> Self {
        PieceValue::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, PieceValue::Null)
    }

    /// Kind of the value, `None` for `Null` and destroyed references.
    pub fn kind(&self) -> Option<PieceKind> {
        match self {
            PieceValue::Null | PieceValue::DestroyedReference(_) => None,
            PieceValue::Text(_) => Some(PieceKind::Text),
            PieceValue::Integer(_) => Some(PieceKind::Integer),
            PieceValue::Boolean(_) => Some(PieceKind::Boolean),
            PieceValue::ItemPointer(_) => Some(PieceKind::ItemPointer),
            PieceValue::PiecePointer(_) => Some(PieceKind::PiecePointer),
        }
    }

    /// The item this value points to, if it is a pointer.
    pub fn referenced_item(&self) -> Option<ItemId> {
        match self {
            PieceValue::ItemPointer(id) | PieceValue::DestroyedReference(id) => Some(*id),
            PieceValue::PiecePointer(p) => Some(p.item_id),
            _ => None,
        }
    }

    pub fn as_item_pointer(&self) -> Option<ItemId> {
        match self {
            PieceValue::ItemPointer(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            PieceValue::Integer(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            PieceValue::Text(v) => Some(v),
            _ => None,
        }
    }

    /// Plain JSON literal for the value: strings, numbers, booleans, item
    /// ids as numbers and piece pointers as `{"item": id, "piece": name}`.
    pub fn to_json(&self) -> Value {
        match self {
            PieceValue::Null | PieceValue::DestroyedReference(_) => Value::Null,
            PieceValue::Text(s) => Value::String(s.clone()),
            PieceValue::Integer(v) => Value::from(*v),
            PieceValue::Boolean(v) => Value::Bool(*v),
            PieceValue::ItemPointer(id) => Value::from(id.0),
            PieceValue::PiecePointer(p) => {
                serde_json::json!({ "item": p.item_id.0, "piece": p.piece_name })
            }
        }
    }

    /// Inverse of [`PieceValue::to_json`], guided by the declared kind.
    pub fn from_json(piece: &str, kind: PieceKind, value: &Value) -> Result<Self> {
        let mismatch = || Error::PieceKindMismatch {
            piece: piece.to_string(),
            expected: kind.to_string(),
            actual: value.to_string(),
        };
        if value.is_null() {
            return Ok(PieceValue::Null);
        }
        Ok(match kind {
            PieceKind::Text => PieceValue::Text(value.as_str().ok_or_else(mismatch)?.to_string()),
            PieceKind::Integer => PieceValue::Integer(value.as_i64().ok_or_else(mismatch)?),
            PieceKind::Boolean => PieceValue::Boolean(value.as_bool().ok_or_else(mismatch)?),
            PieceKind::ItemPointer => {
                PieceValue::ItemPointer(ItemId(value.as_u64().filter(|v| *v > 0).ok_or_else(mismatch)?))
            }
            PieceKind::PiecePointer => {
                let item = value.get("item").and_then(Value::as_u64).ok_or_else(mismatch)?;
                let name = value.get("piece").and_then(Value::as_str).ok_or_else(mismatch)?;
                PieceValue::PiecePointer(PiecePointerValue {
                    item_id: ItemId(item),
                    piece_name: name.to_string(),
                })
            }
        })
    }

    /// Parses the command-line spelling of a value: text as-is, integers,
    /// `true`/`false`, item ids, and `id#piece` for piece pointers. The
    /// literal `null` clears a piece.
    pub fn parse_literal(piece: &str, kind: PieceKind, raw: &str) -> Result<Self> {
        let mismatch = || Error::PieceKindMismatch {
            piece: piece.to_string(),
            expected: kind.to_string(),
            actual: raw.to_string(),
        };
        if raw == "null" && kind != PieceKind::Text {
            return Ok(PieceValue::Null);
        }
        Ok(match kind {
            PieceKind::Text => PieceValue::Text(raw.to_string()),
            PieceKind::Integer => PieceValue::Integer(raw.parse().map_err(|_| mismatch())?),
            PieceKind::Boolean => PieceValue::Boolean(raw.parse().map_err(|_| mismatch())?),
            PieceKind::ItemPointer => PieceValue::ItemPointer(raw.parse().map_err(|_| mismatch())?),
            PieceKind::PiecePointer => {
                let (id, name) = raw.split_once('#').ok_or_else(mismatch)?;
                PieceValue::PiecePointer(PiecePointerValue {
                    item_id: id.parse().map_err(|_| mismatch())?,
                    piece_name: name.to_string(),
                })
            }
        })
    }
}

impl fmt::Display for PieceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceValue::Null => f.write_str("null"),
            PieceValue::Text(s) => f.write_str(s),
            PieceValue::Integer(v) => write!(f, "{v}"),
            PieceValue::Boolean(v) => write!(f, "{v}"),
            PieceValue::ItemPointer(id) => write!(f, "#{id}"),
            PieceValue::PiecePointer(p) => write!(f, "#{}.{}", p.item_id, p.piece_name),
            PieceValue::DestroyedReference(id) => write!(f, "#{id} (destroyed)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_literals_follow_declared_kind() {
        let v = PieceValue::from_json("n", PieceKind::Integer, &serde_json::json!(7)).unwrap();
        assert_eq!(v, PieceValue::Integer(7));
        assert!(PieceValue::from_json("n", PieceKind::Integer, &serde_json::json!("7")).is_err());
        let p = PieceValue::from_json(
            "src",
            PieceKind::PiecePointer,
            &serde_json::json!({"item": 3, "piece": "first_name"}),
        )
        .unwrap();
        assert_eq!(p.to_json(), serde_json::json!({"item": 3, "piece": "first_name"}));
        assert_eq!(
            PieceValue::from_json("x", PieceKind::ItemPointer, &Value::Null).unwrap(),
            PieceValue::Null
        );
    }

    #[test]
    fn cli_literals() {
        assert_eq!(
            PieceValue::parse_literal("s", PieceKind::PiecePointer, "12#email").unwrap(),
            PieceValue::PiecePointer(PiecePointerValue {
                item_id: ItemId(12),
                piece_name: "email".into()
            })
        );
        assert!(PieceValue::parse_literal("b", PieceKind::Boolean, "yes").is_err());
        assert_eq!(
            PieceValue::parse_literal("t", PieceKind::Text, "null").unwrap(),
            PieceValue::text("null")
        );
    }

    #[test]
    fn item_ids_are_positive() {
        assert!("0".parse::<ItemId>().is_err());
        assert_eq!("42".parse::<ItemId>().unwrap(), ItemId(42));
    }
}
