//! Declarative schema files.
//!
//! ```text
//! # comment
//! type Person : Agent
//!     first_name: text
//!     employer: item_pointer -> Organization required
//! ```
//!
//! A `type` line starts an entry; the indented lines that follow declare
//! its own pieces. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;

use super::{PieceDefinition, TypeDescriptor};
use crate::error::{Error, Result};

pub fn parse_schema(text: &str) -> Result<Vec<TypeDescriptor>> {
    let mut types: Vec<TypeDescriptor> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let syntax = |message: &str| Error::SchemaSyntax {
            line: line_no,
            message: message.to_string(),
        };
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let indented = line.starts_with(' ') || line.starts_with('\t');
        let line = line.trim();

        if !indented {
            let rest = line
                .strip_prefix("type ")
                .ok_or_else(|| syntax("expected `type <Name>`"))?;
            let (name, parents) = match rest.split_once(':') {
                Some((name, parents)) => {
                    let parents: Vec<String> = parents
                        .split(',')
                        .map(|p| p.trim().to_string())
                        .collect();
                    if parents.iter().any(String::is_empty) {
                        return Err(syntax("empty parent name"));
                    }
                    (name.trim(), parents)
                }
                None => (rest.trim(), Vec::new()),
            };
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(syntax("bad type name"));
            }
            types.push(TypeDescriptor {
                name: name.to_string(),
                parents,
                own_pieces: Vec::new(),
            });
            continue;
        }

        let current = types
            .last_mut()
            .ok_or_else(|| syntax("piece declared before any type"))?;
        let (name, spec) = line
            .split_once(':')
            .ok_or_else(|| syntax("expected `<piece>: <kind>`"))?;
        let mut words = spec.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| syntax("missing piece kind"))?
            .parse()
            .map_err(|_| syntax("unknown piece kind"))?;
        let mut piece = PieceDefinition::new(name.trim(), kind);
        while let Some(word) = words.next() {
            match word {
                "->" => {
                    let target = words.next().ok_or_else(|| syntax("missing target type after `->`"))?;
                    piece.target_type = Some(target.to_string());
                }
                "required" => piece.required = true,
                other => return Err(syntax(&format!("unexpected `{other}`"))),
            }
        }
        current.own_pieces.push(piece);
    }
    Ok(types)
}

/// Renders descriptors back into the schema file format.
pub fn format_schema<'a>(types: impl IntoIterator<Item = &'a TypeDescriptor>) -> String {
    let mut out = String::new();
    for (i, ty) in types.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("type ");
        out.push_str(&ty.name);
        if !ty.parents.is_empty() {
            let _ = write!(out, " : {}", ty.parents.join(", "));
        }
        out.push('\n');
        for piece in &ty.own_pieces {
            let _ = write!(out, "    {}: {}", piece.name, piece.kind);
            if let Some(target) = &piece.target_type {
                let _ = write!(out, " -> {target}");
            }
            if piece.required {
                out.push_str(" required");
            }
            out.push('\n');
        }
    }
    out
}
