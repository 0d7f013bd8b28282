//! Server-side viewers.
//!
//! A viewer accepts one item type, and with it every subtype, and exposes
//! named actions. Actions are plain Rust closures registered at startup;
//! they receive the item already filtered to the pieces the requesting
//! agent may view, so a handler cannot leak a hidden piece by accident.
//!
//! When no viewer is requested by name, dispatch picks the viewer whose
//! accepted type is the closest ancestor of the item's type (fewest parent
//! edges). Ties go to the viewer registered first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;
use serde_json::{json, Value};

use crate::annotations::{annotations_visible, Annotation, AnnotationKind};
use crate::collections::{MembershipGraph, COLLECTION_TYPE};
use crate::engine::{Actor, Engine, VisibleItem};
use crate::error::{Error, Result};
use crate::permissions::{Ability, Resolver};
use crate::schema::ROOT_TYPE;
use crate::value::{ItemId, PieceValue};

pub const ITEM_VIEWER: &str = "ItemViewer";
pub const ITEM_SHOW: &str = "item_show";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    StructuredData,
    HypertextFragment,
}

/// What an action handler returns. Hypertext bodies are JSON strings.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewOutput {
    pub content_kind: ContentKind,
    pub body: Value,
}

impl ViewOutput {
    pub fn html(fragment: String) -> Self {
        ViewOutput {
            content_kind: ContentKind::HypertextFragment,
            body: Value::String(fragment),
        }
    }

    pub fn data(body: Value) -> Self {
        ViewOutput {
            content_kind: ContentKind::StructuredData,
            body,
        }
    }
}

/// An annotation as shown next to a rendered item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationView {
    #[serde(flatten)]
    pub annotation: Annotation,
    /// False when the annotation is anchored to a version other than the
    /// one being rendered.
    pub on_this_version: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderedView {
    pub content_kind: ContentKind,
    pub body: Value,
    pub annotations: Vec<AnnotationView>,
    pub acting_viewer: String,
    pub acting_action: String,
}

/// Read-only, permission-filtered access for action handlers.
pub struct ViewContext<'a> {
    engine: &'a Engine,
    resolver: Resolver<'a>,
    graph: MembershipGraph,
    pub actor: Actor,
    pub viewer: &'a str,
    pub action: &'a str,
    pub item: VisibleItem,
    pub annotations: Vec<AnnotationView>,
    pub params: &'a BTreeMap<String, String>,
}

impl ViewContext<'_> {
    fn may_view(&self, id: ItemId) -> bool {
        self.actor.admin || self.resolver.can(self.actor.agent, &Ability::VIEW, id, None).unwrap_or(false)
    }

    /// Another item, filtered for the same agent; `None` if hidden.
    pub fn visible_item(&self, id: ItemId) -> Option<VisibleItem> {
        if !self.may_view(id) {
            return None;
        }
        self.engine.read_item(self.actor, id, None).ok()
    }

    /// Direct members of a collection that the agent may view.
    pub fn direct_members(&self, collection: ItemId) -> Vec<ItemId> {
        self.graph.direct(collection).into_iter().filter(|id| self.may_view(*id)).collect()
    }

    pub fn indirect_members(&self, collection: ItemId) -> Vec<ItemId> {
        self.graph.indirect(collection).into_iter().filter(|id| self.may_view(*id)).collect()
    }

    pub fn param(&self, name: &str) -> Option<&str> {
        self.params.get(name).map(String::as_str)
    }
}

pub type ActionHandler = Arc<dyn Fn(&ViewContext<'_>) -> Result<ViewOutput> + Send + Sync>;

#[derive(Clone)]
pub struct ViewerRegistration {
    pub viewer_name: String,
    pub accepted_type: String,
    pub actions: IndexMap<String, ActionHandler>,
}

impl std::fmt::Debug for ViewerRegistration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ViewerRegistration")
            .field("viewer_name", &self.viewer_name)
            .field("accepted_type", &self.accepted_type)
            .field("actions", &self.actions.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl ViewerRegistration {
    pub fn new(viewer_name: impl Into<String>, accepted_type: impl Into<String>) -> Self {
        ViewerRegistration {
            viewer_name: viewer_name.into(),
            accepted_type: accepted_type.into(),
            actions: IndexMap::new(),
        }
    }

    pub fn action<F>(mut self, name: impl Into<String>, handler: F) -> Self
    where
        F: Fn(&ViewContext<'_>) -> Result<ViewOutput> + Send + Sync + 'static,
    {
        self.actions.insert(name.into(), Arc::new(handler));
        self
    }
}

/// A request to run one viewer action on one item.
#[derive(Debug, Clone)]
pub struct DispatchRequest {
    pub actor: Actor,
    pub viewer: Option<String>,
    pub action: String,
    pub item: ItemId,
    pub version: Option<u32>,
    pub params: BTreeMap<String, String>,
}

impl DispatchRequest {
    pub fn new(actor: Actor, action: impl Into<String>, item: ItemId) -> Self {
        DispatchRequest {
            actor,
            viewer: None,
            action: action.into(),
            item,
            version: None,
            params: BTreeMap::new(),
        }
    }

    pub fn viewer(mut self, viewer: impl Into<String>) -> Self {
        self.viewer = Some(viewer.into());
        self
    }

    pub fn version(mut self, version: u32) -> Self {
        self.version = Some(version);
        self
    }

    pub fn param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct ViewerRegistry {
    viewers: IndexMap<String, ViewerRegistration>,
}

impl ViewerRegistry {
    /// An empty registry, without even the default item viewer.
    pub fn empty() -> Self {
        ViewerRegistry::default()
    }

    /// Just the default `ItemViewer`, which accepts every type.
    pub fn bootstrap(engine: &Engine) -> Self {
        let mut registry = ViewerRegistry::empty();
        registry
            .register(engine, item_viewer())
            .expect("root type exists");
        registry
    }

    /// The default viewer plus specialized viewers for text documents and
    /// collections.
    pub fn standard(engine: &Engine) -> Self {
        let mut registry = ViewerRegistry::bootstrap(engine);
        if engine.schema().contains(crate::annotations::TEXT_DOCUMENT_TYPE) {
            registry.register(engine, text_document_viewer()).expect("fresh name");
        }
        if engine.schema().contains(COLLECTION_TYPE) {
            registry.register(engine, collection_viewer()).expect("fresh name");
        }
        registry
    }

    pub fn register(&mut self, engine: &Engine, registration: ViewerRegistration) -> Result<()> {
        engine.schema().get(&registration.accepted_type)?;
        if self.viewers.contains_key(&registration.viewer_name) {
            return Err(Error::DuplicateViewer(registration.viewer_name));
        }
        self.viewers.insert(registration.viewer_name.clone(), registration);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ViewerRegistration> {
        self.viewers.get(name).ok_or_else(|| Error::UnknownViewer(name.to_string()))
    }

    pub fn registrations(&self) -> impl Iterator<Item = &ViewerRegistration> {
        self.viewers.values()
    }

    /// Picks the viewer for an item type. A requested viewer must accept
    /// the type or one of its ancestors.
    pub fn resolve_viewer(&self, engine: &Engine, item_type: &str, requested: Option<&str>) -> Result<&str> {
        let schema = engine.schema();
        schema.get(item_type)?;
        if let Some(name) = requested {
            let viewer = self.get(name)?;
            if !schema.is_subtype(item_type, &viewer.accepted_type)? {
                return Err(Error::ViewerTypeMismatch {
                    viewer: name.to_string(),
                    type_name: item_type.to_string(),
                });
            }
            return Ok(&viewer.viewer_name);
        }
        let distances: BTreeMap<&str, usize> = schema.ancestor_distances(item_type)?.into_iter().collect();
        self.viewers
            .values()
            .enumerate()
            .filter_map(|(order, v)| distances.get(v.accepted_type.as_str()).map(|d| ((*d, order), v)))
            .min_by_key(|(key, _)| *key)
            .map(|(_, v)| v.viewer_name.as_str())
            .ok_or_else(|| Error::NoViewer(item_type.to_string()))
    }

    /// Every (viewer, action) pair available for a type, in registration
    /// order.
    pub fn list_actions(&self, engine: &Engine, item_type: &str) -> Result<Vec<(String, String)>> {
        let schema = engine.schema();
        schema.get(item_type)?;
        let mut out = Vec::new();
        for viewer in self.viewers.values() {
            if schema.is_subtype(item_type, &viewer.accepted_type)? {
                out.extend(viewer.actions.keys().map(|a| (viewer.viewer_name.clone(), a.clone())));
            }
        }
        Ok(out)
    }

    pub fn dispatch(&self, engine: &Engine, request: &DispatchRequest) -> Result<RenderedView> {
        let record = engine.store().live_record(request.item)?;
        let type_name = record.type_name.clone();
        let item = engine.read_item(request.actor, request.item, request.version)?;
        let viewer_name = self.resolve_viewer(engine, &type_name, request.viewer.as_deref())?;
        let viewer = &self.viewers[viewer_name];
        let handler = viewer.actions.get(&request.action).ok_or_else(|| Error::UnknownAction {
            viewer: viewer_name.to_string(),
            action: request.action.clone(),
            available: viewer.actions.keys().cloned().collect(),
        })?;

        let resolver = engine.resolver();
        let all = annotations_visible(&resolver, engine.store(), request.actor, request.item, None)?;
        let (mut here, mut elsewhere): (Vec<_>, Vec<_>) =
            all.into_iter().partition(|a| a.anchor.version == item.version);
        elsewhere.sort_by_key(|a| (a.anchor.version, a.anchor.offset, a.id));
        let annotations: Vec<AnnotationView> = here
            .drain(..)
            .map(|annotation| AnnotationView { annotation, on_this_version: true })
            .chain(elsewhere.into_iter().map(|annotation| AnnotationView { annotation, on_this_version: false }))
            .collect();

        let context = ViewContext {
            engine,
            resolver,
            graph: MembershipGraph::build(engine.store()),
            actor: request.actor,
            viewer: &viewer.viewer_name,
            action: &request.action,
            item,
            annotations,
            params: &request.params,
        };
        let output = handler(&context)?;
        Ok(RenderedView {
            content_kind: output.content_kind,
            body: output.body,
            annotations: context.annotations,
            acting_viewer: viewer.viewer_name.clone(),
            acting_action: request.action.clone(),
        })
    }
}

/// Escapes text for HTML element content and attribute values.
pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn render_value(value: &PieceValue) -> String {
    match value {
        PieceValue::ItemPointer(id) => format!("<a class=\"item-ref\" data-item-id=\"{id}\">#{id}</a>"),
        PieceValue::PiecePointer(p) => format!(
            "<a class=\"piece-ref\" data-item-id=\"{}\" data-piece=\"{}\">#{}.{}</a>",
            p.item_id,
            escape_html(&p.piece_name),
            p.item_id,
            escape_html(&p.piece_name)
        ),
        PieceValue::DestroyedReference(id) => {
            format!("<span class=\"destroyed-ref\" data-item-id=\"{id}\">#{id} (destroyed)</span>")
        }
        PieceValue::Null => "<span class=\"null\"></span>".to_string(),
        other => escape_html(&other.to_string()),
    }
}

fn article_open(item: &VisibleItem, class: &str) -> String {
    format!(
        "<article class=\"{class}\" data-item-id=\"{}\" data-type=\"{}\" data-version=\"{}\">",
        item.id,
        escape_html(&item.type_name),
        item.version
    )
}

fn piece_list(item: &VisibleItem, skip: &[&str]) -> String {
    let mut out = String::from("<dl class=\"pieces\">");
    for piece in item.pieces.iter().filter(|p| !skip.contains(&p.name.as_str())) {
        let _ = write!(
            out,
            "<dt>{}</dt><dd data-kind=\"{}\">{}</dd>",
            escape_html(&piece.name),
            piece.kind,
            render_value(&piece.value)
        );
    }
    out.push_str("</dl>");
    out
}

fn annotation_list(annotations: &[AnnotationView]) -> String {
    if annotations.is_empty() {
        return String::new();
    }
    let mut out = String::from("<ul class=\"annotations\">");
    for view in annotations {
        let a = &view.annotation;
        let kind = match a.kind {
            AnnotationKind::Comment => "comment",
            AnnotationKind::Transclusion => "transclusion",
        };
        let _ = write!(
            out,
            "<li class=\"{kind}\" data-item-id=\"{}\" data-anchor-version=\"{}\">",
            a.id, a.anchor.version
        );
        if !view.on_this_version {
            let _ = write!(out, "<span class=\"version-note\">anchored to version {}</span>", a.anchor.version);
        }
        out.push_str("</li>");
    }
    out.push_str("</ul>");
    out
}

fn item_data(item: &VisibleItem) -> Value {
    let pieces: serde_json::Map<String, Value> = item
        .pieces
        .iter()
        .map(|p| (p.name.clone(), json!({ "kind": p.kind, "value": p.value.to_json() })))
        .collect();
    json!({
        "id": item.id,
        "type_name": item.type_name,
        "version": item.version,
        "active": item.active,
        "pieces": pieces,
    })
}

/// Generic viewer: lists every visible piece by name.
pub fn item_viewer() -> ViewerRegistration {
    ViewerRegistration::new(ITEM_VIEWER, ROOT_TYPE)
        .action(ITEM_SHOW, |ctx| {
            let mut html = article_open(&ctx.item, "item");
            let _ = write!(html, "<h1>{} #{}</h1>", escape_html(&ctx.item.type_name), ctx.item.id);
            html.push_str(&piece_list(&ctx.item, &[]));
            html.push_str(&annotation_list(&ctx.annotations));
            html.push_str("</article>");
            Ok(ViewOutput::html(html))
        })
        .action("item_data", |ctx| Ok(ViewOutput::data(item_data(&ctx.item))))
}

/// Renders a TextDocument body with transclusion markers at their offsets.
pub fn text_document_viewer() -> ViewerRegistration {
    ViewerRegistration::new("TextDocumentViewer", crate::annotations::TEXT_DOCUMENT_TYPE).action(ITEM_SHOW, |ctx| {
        let mut html = article_open(&ctx.item, "text-document");
        if let Some(body) = ctx.item.piece("body") {
            let text = body.as_text().unwrap_or("");
            let mut markers: Vec<&Annotation> = ctx
                .annotations
                .iter()
                .filter(|v| v.on_this_version && v.annotation.kind == AnnotationKind::Transclusion)
                .map(|v| &v.annotation)
                .collect();
            markers.sort_by_key(|a| (a.anchor.offset, a.id));
            html.push_str("<div class=\"body\">");
            let mut next = markers.iter().peekable();
            for (index, c) in text.chars().chain(std::iter::once('\0')).enumerate() {
                while let Some(marker) = next.next_if(|m| m.anchor.offset == Some(index as u64)) {
                    let _ = write!(
                        html,
                        "<span class=\"transclusion\" data-item-id=\"{}\" data-offset=\"{index}\" data-target=\"{}\"></span>",
                        marker.id,
                        marker.target.map(|t| t.to_string()).unwrap_or_default()
                    );
                }
                if index < text.chars().count() {
                    html.push_str(&escape_html(c.encode_utf8(&mut [0; 4])));
                }
            }
            html.push_str("</div>");
        }
        html.push_str(&piece_list(&ctx.item, &["body"]));
        html.push_str(&annotation_list(&ctx.annotations));
        html.push_str("</article>");
        Ok(ViewOutput::html(html))
    })
}

/// Lists collection members; `list_members` takes `indirect=1` and
/// `sort=<piece>`.
pub fn collection_viewer() -> ViewerRegistration {
    ViewerRegistration::new("CollectionViewer", COLLECTION_TYPE)
        .action(ITEM_SHOW, |ctx| {
            let mut html = article_open(&ctx.item, "collection");
            html.push_str(&piece_list(&ctx.item, &[]));
            html.push_str("<ul class=\"members\">");
            for member in ctx.direct_members(ctx.item.id) {
                let _ = write!(html, "<li>{}</li>", render_value(&PieceValue::ItemPointer(member)));
            }
            html.push_str("</ul></article>");
            Ok(ViewOutput::html(html))
        })
        .action("list_members", |ctx| {
            let ids = if ctx.param("indirect") == Some("1") {
                ctx.indirect_members(ctx.item.id)
            } else {
                ctx.direct_members(ctx.item.id)
            };
            let mut members: Vec<VisibleItem> = ids.into_iter().filter_map(|id| ctx.visible_item(id)).collect();
            if let Some(piece) = ctx.param("sort") {
                members.sort_by(|a, b| a.piece(piece).cmp(&b.piece(piece)).then(a.id.cmp(&b.id)));
            }
            Ok(ViewOutput::data(Value::Array(members.iter().map(item_data).collect())))
        })
}
