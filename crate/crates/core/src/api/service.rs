//! The HTTP/JSON surface, independent of any server framework.
//!
//! [`Service::handle`] maps one [`ApiRequest`] to one [`ApiResponse`]. A
//! server only has to translate its own request type; the `itemgraph`
//! binary does so with axum. Reads take a shared lock and never modify
//! state; mutations take the single writer lock and, when a store file is
//! configured, save it before answering.
//!
//! Bearer tokens map to agents through [`ServiceConfig::tokens`]. Requests
//! without a token act as the anonymous visitor.

use std::collections::BTreeMap;
use std::str::FromStr;

use parking_lot::{RwLock, RwLockReadGuard};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::annotations::Annotation;
use crate::api::config::ServiceConfig;
use crate::api::export::ExportBundle;
use crate::api::wire::{item_link, version_link, WireItem, WireType, WIRE_FORMAT};
use crate::collections::{membership_listing, MembershipGraph};
use crate::engine::{Actor, Engine};
use crate::error::{Error, Result};
use crate::permissions::{Ability, Effect, GrantTarget, PermissionGrant, Subject};
use crate::schema::parse_schema;
use crate::store::{ListQuery, Row};
use crate::value::{ItemId, PieceValue};
use crate::viewers::{DispatchRequest, ViewerRegistry, ITEM_SHOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
    Delete,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Delete => "DELETE",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GET" => Ok(Method::Get),
            "POST" => Ok(Method::Post),
            "DELETE" => Ok(Method::Delete),
            other => Err(Error::BadRequest(format!("unsupported method {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiRequest {
    pub method: Method,
    pub path: String,
    pub query: BTreeMap<String, String>,
    pub body: Option<Value>,
    pub token: Option<String>,
}

impl ApiRequest {
    /// `target` may carry a simple `?k=v&k2=v2` query; values are taken
    /// verbatim.
    pub fn new(method: Method, target: &str) -> Self {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let query = query
            .split('&')
            .filter(|pair| !pair.is_empty())
            .map(|pair| {
                let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
                (k.to_string(), v.to_string())
            })
            .collect();
        ApiRequest {
            method,
            path: path.to_string(),
            query,
            body: None,
            token: None,
        }
    }

    pub fn get(target: &str) -> Self {
        ApiRequest::new(Method::Get, target)
    }

    pub fn post(target: &str, body: Value) -> Self {
        ApiRequest {
            body: Some(body),
            ..ApiRequest::new(Method::Post, target)
        }
    }

    pub fn delete(target: &str) -> Self {
        ApiRequest::new(Method::Delete, target)
    }

    pub fn token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
}

pub const JSON: &str = "application/json";
pub const HTML: &str = "text/html; charset=utf-8";

impl ApiResponse {
    pub fn json(status: u16, value: &impl Serialize) -> Self {
        ApiResponse {
            status,
            content_type: JSON,
            body: serde_json::to_string(value).expect("response serializes"),
        }
    }

    pub fn error(error: &Error) -> Self {
        ApiResponse {
            status: error.http_status(),
            content_type: JSON,
            body: error.to_json().to_string(),
        }
    }

    /// The body parsed as JSON; `Value::Null` for non-JSON bodies.
    pub fn json_body(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or(Value::Null)
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Serialize)]
struct GrantView {
    id: u64,
    #[serde(flatten)]
    grant: PermissionGrant,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default)]
    pieces: serde_json::Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpdateBody {
    #[serde(default)]
    pieces: serde_json::Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberBody {
    member: ItemId,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommentBody {
    version: u32,
    body: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransclusionBody {
    version: u32,
    offset: i64,
    target: ItemId,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExcerptBody {
    piece: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GrantBody {
    subject: Subject,
    ability: Ability,
    #[serde(default)]
    piece: Option<String>,
    effect: Effect,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeGrantBody {
    subject: Subject,
    effect: Effect,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaBody {
    schema: String,
}

pub struct Service {
    engine: RwLock<Engine>,
    viewers: ViewerRegistry,
    config: ServiceConfig,
}

impl Service {
    /// Serves `engine` with the standard viewers.
    pub fn new(engine: Engine, config: ServiceConfig) -> Self {
        let viewers = ViewerRegistry::standard(&engine);
        Service::with_viewers(engine, viewers, config)
    }

    pub fn with_viewers(engine: Engine, viewers: ViewerRegistry, config: ServiceConfig) -> Self {
        Service {
            engine: RwLock::new(engine),
            viewers,
            config,
        }
    }

    /// Opens the configured store file, or starts empty when it does not
    /// exist yet.
    pub fn open(config: ServiceConfig) -> Result<Self> {
        let engine = match &config.store {
            Some(path) if path.exists() => Engine::open(path)?,
            _ => Engine::new(),
        };
        Ok(Service::new(engine, config))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn viewers(&self) -> &ViewerRegistry {
        &self.viewers
    }

    pub fn engine(&self) -> RwLockReadGuard<'_, Engine> {
        self.engine.read()
    }

    pub fn handle(&self, request: &ApiRequest) -> ApiResponse {
        match self.route(request) {
            Ok(response) => response,
            Err(error) => ApiResponse::error(&error),
        }
    }

    fn actor(&self, token: Option<&str>) -> Result<Actor> {
        let Some(token) = token else {
            return Ok(Actor::anonymous());
        };
        let agent = *self.config.tokens.get(token).ok_or(Error::InvalidToken)?;
        Ok(Actor {
            agent: Some(agent),
            admin: self.config.admins.contains(&agent),
        })
    }

    fn route(&self, request: &ApiRequest) -> Result<ApiResponse> {
        let actor = self.actor(request.token.as_deref())?;
        let segments: Vec<&str> = request.path.split('/').filter(|s| !s.is_empty()).collect();
        let no_route = || Error::NoRoute {
            method: request.method.as_str().to_string(),
            path: request.path.clone(),
        };
        match request.method {
            Method::Get => self.get(actor, &segments, &request.query).map(|r| r.ok_or_else(no_route))?,
            Method::Post | Method::Delete => {
                let mut engine = self.engine.write();
                let response = self.mutate(&mut engine, actor, request.method, &segments, request.body.as_ref())?;
                let response = response.ok_or_else(no_route)?;
                if let Some(path) = &self.config.store {
                    engine.save(path)?;
                }
                Ok(response)
            }
        }
    }

    fn base(&self) -> &str {
        &self.config.base_url
    }

    fn get(&self, actor: Actor, segments: &[&str], query: &BTreeMap<String, String>) -> Result<Option<ApiResponse>> {
        let engine = self.engine.read();
        let engine = &*engine;
        let ok = |value: Value| Ok(Some(ApiResponse::json(200, &value)));
        match segments {
            [] => ok(json!({
                "format": WIRE_FORMAT,
                "types": format!("{}/types", self.base()),
                "viewers": format!("{}/viewers", self.base()),
            })),
            ["types"] => {
                let types: Vec<Value> = engine
                    .schema()
                    .descriptors()
                    .map(|t| json!({ "name": t.name, "parents": t.parents, "link": format!("{}/type/{}", self.base(), t.name) }))
                    .collect();
                ok(Value::Array(types))
            }
            ["type", name] => {
                let actions = self.viewers.list_actions(engine, name)?;
                ok(serde_json::to_value(WireType::new(engine.schema(), name, actions)?)?)
            }
            ["type", name, "items"] => self.list_type(engine, actor, name, query).map(Some),
            ["item", id] => self.render(engine, actor, parse_id(id)?, None, None, ITEM_SHOW, query).map(Some),
            ["item", id, "version", n] => {
                let version = parse_version(n)?;
                self.render(engine, actor, parse_id(id)?, Some(version), None, ITEM_SHOW, query).map(Some)
            }
            ["viewer", viewer, action, id] => {
                let version = query.get("version").map(|v| parse_version(v)).transpose()?;
                self.render(engine, actor, parse_id(id)?, version, Some(viewer), action, query).map(Some)
            }
            ["item", id, "json"] => self.item_json(engine, actor, parse_id(id)?, query).map(Some),
            ["item", id, "versions"] => {
                let id = parse_id(id)?;
                let current = engine.read_item(actor, id, None)?.current_version;
                let versions: Vec<Value> = (1..=current)
                    .map(|v| json!({ "version": v, "link": version_link(self.base(), id, v) }))
                    .collect();
                ok(json!({ "id": id, "current_version": current, "versions": versions }))
            }
            ["item", id, "annotations"] => {
                let id = parse_id(id)?;
                engine.read_item(actor, id, None)?;
                let version = query.get("version").map(|v| parse_version(v)).transpose()?;
                let annotations = engine.annotations_for(actor, id, version)?;
                ok(Value::Array(annotations.iter().map(|a| self.annotation_json(a)).collect()))
            }
            ["item", id, "containers"] => {
                let id = parse_id(id)?;
                engine.read_item(actor, id, None)?;
                let direct_only = query.get("direct").is_some_and(|v| v == "1");
                let graph = MembershipGraph::build(engine.store());
                let ids = self.viewable(engine, actor, graph.containing(id, direct_only));
                ok(json!({ "item": id, "direct_only": direct_only, "collections": ids }))
            }
            ["item", id, "permissions"] => {
                let id = parse_id(id)?;
                engine.store().live_record(id)?;
                engine.require(actor, &Ability::MODIFY_PERMISSIONS, id, None)?;
                let grants: Vec<GrantView> = engine
                    .grants()
                    .on_item(id)
                    .map(|(id, grant)| GrantView { id, grant: grant.clone() })
                    .collect();
                ok(serde_json::to_value(grants)?)
            }
            ["collection", id, "members"] => {
                let id = parse_id(id)?;
                engine.read_item(actor, id, None)?;
                let indirect = query.get("indirect").is_some_and(|v| v == "1");
                let listing = membership_listing(engine.store(), id)?;
                let graph = MembershipGraph::build(engine.store());
                let members = if indirect { graph.indirect(id) } else { graph.direct(id) };
                let resolver = engine.resolver();
                let memberships: Vec<Value> = listing
                    .into_iter()
                    .filter(|e| actor.admin || resolver.can(actor.agent, &Ability::VIEW, e.membership, None).unwrap_or(false))
                    .map(|e| json!({ "membership": e.membership, "member": e.member, "status": e.status }))
                    .collect();
                ok(json!({
                    "collection": id,
                    "indirect": indirect,
                    "members": self.viewable(engine, actor, members),
                    "memberships": memberships,
                }))
            }
            ["excerpt", id] => {
                let resolved = engine.resolve_excerpt(actor, parse_id(id)?)?;
                ok(serde_json::to_value(resolved)?)
            }
            ["viewers"] => {
                let viewers: Vec<Value> = self
                    .viewers
                    .registrations()
                    .map(|v| json!({ "viewer": v.viewer_name, "accepted_type": v.accepted_type, "actions": v.actions.keys().collect::<Vec<_>>() }))
                    .collect();
                ok(Value::Array(viewers))
            }
            ["export"] => {
                require_admin(actor, "export")?;
                ok(serde_json::to_value(engine.export())?)
            }
            _ => Ok(None),
        }
    }

    fn viewable(&self, engine: &Engine, actor: Actor, ids: impl IntoIterator<Item = ItemId>) -> Vec<ItemId> {
        let resolver = engine.resolver();
        ids.into_iter()
            .filter(|id| engine.store().live_record(*id).is_ok_and(|r| r.is_active()))
            .filter(|id| actor.admin || resolver.can(actor.agent, &Ability::VIEW, *id, None).unwrap_or(false))
            .collect()
    }

    fn annotation_json(&self, annotation: &Annotation) -> Value {
        let mut value = serde_json::to_value(annotation).expect("annotation serializes");
        value["links"] = json!({
            "self": item_link(self.base(), annotation.id),
            "anchor": version_link(self.base(), annotation.anchor.item, annotation.anchor.version),
        });
        value
    }

    fn list_type(&self, engine: &Engine, actor: Actor, name: &str, query: &BTreeMap<String, String>) -> Result<ApiResponse> {
        let mut list = ListQuery::new();
        if flag(query, "subtypes") {
            list = list.subtypes();
        }
        if flag(query, "inactive") {
            list = list.inactive();
        }
        for (key, raw) in query {
            if let Some(piece) = key.strip_prefix("filter.") {
                let def = engine.schema().piece(name, piece).map_err(|_| Error::UnknownFilterPiece(piece.to_string()))?;
                list = list.filter(piece, PieceValue::parse_literal(piece, def.kind, raw)?);
            }
        }
        let page = query.get("page").map(|p| parse_positive(p, "page")).transpose()?.unwrap_or(1);
        let page_size = query
            .get("page_size")
            .map(|p| parse_positive(p, "page_size"))
            .transpose()?
            .unwrap_or(self.config.page_size);
        let mut ids = engine.list_items(actor, name, &list)?;
        if list.include_inactive && !actor.admin {
            ids.retain(|id| {
                engine.store().record(*id).is_ok_and(|r| r.is_active())
                    || engine.can(actor.agent, &Ability::DEACTIVATE, *id, None).unwrap_or(false)
            });
        }
        let total = ids.len();
        let items: Vec<ItemId> = ids.into_iter().skip((page - 1).saturating_mul(page_size)).take(page_size).collect();
        Ok(ApiResponse::json(
            200,
            &json!({ "type_name": name, "items": items, "total": total, "page": page, "page_size": page_size }),
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn render(
        &self,
        engine: &Engine,
        actor: Actor,
        id: ItemId,
        version: Option<u32>,
        viewer: Option<&str>,
        action: &str,
        query: &BTreeMap<String, String>,
    ) -> Result<ApiResponse> {
        let mut request = DispatchRequest::new(actor, action, id);
        request.viewer = viewer.map(str::to_string);
        request.version = version;
        request.params = query
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "format" | "version"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let view = self.viewers.dispatch(engine, &request)?;
        if query.get("format").is_some_and(|f| f == "html") {
            if let Value::String(html) = &view.body {
                return Ok(ApiResponse {
                    status: 200,
                    content_type: HTML,
                    body: html.clone(),
                });
            }
        }
        let mut value = serde_json::to_value(&view)?;
        value["item"] = json!(id);
        value["version"] = json!(engine.read_item(actor, id, version)?.version);
        value["links"] = serde_json::to_value(crate::api::wire::WireLinks::for_item(self.base(), id))?;
        Ok(ApiResponse::json(200, &value))
    }

    fn item_json(&self, engine: &Engine, actor: Actor, id: ItemId, query: &BTreeMap<String, String>) -> Result<ApiResponse> {
        let version = query.get("version").map(|v| parse_version(v)).transpose()?;
        let reader = match query.get("as") {
            None => actor,
            Some(who) => {
                engine.store().live_record(id)?;
                engine.require(actor, &Ability::MODIFY_PERMISSIONS, id, None)?;
                if who == "anonymous" {
                    Actor::anonymous()
                } else {
                    Actor::agent(parse_id(who)?)
                }
            }
        };
        let item = engine.read_item(reader, id, version)?;
        Ok(ApiResponse::json(200, &WireItem::new(&item, self.base())))
    }

    fn mutate(
        &self,
        engine: &mut Engine,
        actor: Actor,
        method: Method,
        segments: &[&str],
        body: Option<&Value>,
    ) -> Result<Option<ApiResponse>> {
        let created = |value: Value| Ok(Some(ApiResponse::json(201, &value)));
        let ok = |value: Value| Ok(Some(ApiResponse::json(200, &value)));
        match (method, segments) {
            (Method::Post, ["item"]) => {
                let body: CreateBody = parse_body(body)?;
                let pieces = decode_pieces(engine, &body.type_name, body.pieces)?;
                let snapshot = engine.create_item(actor, &body.type_name, pieces)?;
                let item = engine.read_item(actor, snapshot.id, None)?;
                created(serde_json::to_value(WireItem::new(&item, self.base()))?)
            }
            (Method::Post, ["item", id]) => {
                let id = parse_id(id)?;
                let body: UpdateBody = parse_body(body)?;
                let type_name = engine.store().live_record(id)?.type_name.clone();
                let pieces = decode_pieces(engine, &type_name, body.pieces)?;
                engine.update_item(actor, id, pieces)?;
                let item = engine.read_item(actor, id, None)?;
                ok(serde_json::to_value(WireItem::new(&item, self.base()))?)
            }
            (Method::Post, ["item", id, step @ ("deactivate" | "reactivate" | "destroy")]) => {
                let id = parse_id(id)?;
                match *step {
                    "deactivate" => engine.deactivate(actor, id)?,
                    "reactivate" => engine.reactivate(actor, id)?,
                    _ => engine.destroy(actor, id)?,
                }
                let state = engine.store().record(id)?.state;
                ok(json!({ "id": id, "state": state }))
            }
            (Method::Post, ["collection", id, "members"]) => {
                let collection = parse_id(id)?;
                let body: MemberBody = parse_body(body)?;
                let membership = engine.add_membership(actor, collection, body.member)?;
                created(json!({ "membership": membership, "collection": collection, "member": body.member, "links": { "self": item_link(self.base(), membership) } }))
            }
            (Method::Delete, ["collection", id, "members", membership]) => {
                let collection = parse_id(id)?;
                let membership = parse_id(membership)?;
                engine.remove_membership(actor, collection, membership)?;
                ok(json!({ "membership": membership, "removed": true }))
            }
            (Method::Post, ["item", id, "comments"]) => {
                let body: CommentBody = parse_body(body)?;
                let comment = engine.create_comment(actor, parse_id(id)?, body.version, &body.body)?;
                created(json!({ "id": comment, "links": { "self": item_link(self.base(), comment) } }))
            }
            (Method::Post, ["document", id, "transclusions"]) => {
                let body: TransclusionBody = parse_body(body)?;
                let t = engine.create_transclusion(actor, parse_id(id)?, body.version, body.offset, body.target)?;
                created(json!({ "id": t, "links": { "self": item_link(self.base(), t) } }))
            }
            (Method::Post, ["item", id, "excerpts"]) => {
                let body: ExcerptBody = parse_body(body)?;
                let excerpt = engine.create_excerpt(actor, parse_id(id)?, &body.piece)?;
                created(json!({ "id": excerpt, "links": { "self": format!("{}/excerpt/{excerpt}", self.base()) } }))
            }
            (Method::Post, ["item", id, "permissions"]) => {
                let body: GrantBody = parse_body(body)?;
                let grant = PermissionGrant {
                    subject: body.subject,
                    ability: body.ability,
                    target: GrantTarget::Item(parse_id(id)?),
                    piece: body.piece,
                    effect: body.effect,
                };
                let grant_id = engine.grant(actor, grant)?;
                created(json!({ "grant_id": grant_id }))
            }
            (Method::Delete, ["item", id, "permissions", grant_id]) => {
                let id = parse_id(id)?;
                let grant_id: u64 = grant_id.parse().map_err(|_| Error::BadRequest(format!("`{grant_id}` is not a grant id")))?;
                if engine.grants().get(grant_id).map(|g| &g.target) != Some(&GrantTarget::Item(id)) {
                    return Err(Error::UnknownGrant(grant_id));
                }
                engine.revoke(actor, grant_id)?;
                ok(json!({ "grant_id": grant_id, "revoked": true }))
            }
            (Method::Post, ["type", name, "permissions"]) => {
                let body: TypeGrantBody = parse_body(body)?;
                let grant_id = engine.grant(actor, PermissionGrant::create_on_type(body.subject, *name, body.effect))?;
                created(json!({ "grant_id": grant_id }))
            }
            (Method::Post, ["types"]) => {
                let body: SchemaBody = parse_body(body)?;
                let batch = parse_schema(&body.schema)?;
                let names: Vec<String> = batch.iter().map(|t| t.name.clone()).collect();
                engine.define_types(actor, batch)?;
                created(json!({ "defined": names }))
            }
            (Method::Post, ["import"]) => {
                require_admin(actor, "import")?;
                let text = body.ok_or_else(|| Error::BadRequest("missing bundle".into()))?.to_string();
                engine.import_into(ExportBundle::parse(&text)?)?;
                ok(json!({ "imported": engine.store().records().count() }))
            }
            _ => Ok(None),
        }
    }
}

fn require_admin(actor: Actor, what: &str) -> Result<()> {
    if actor.admin {
        Ok(())
    } else {
        Err(Error::PermissionDenied {
            ability: what.to_string(),
            item: "installation".to_string(),
        })
    }
}

fn flag(query: &BTreeMap<String, String>, key: &str) -> bool {
    query.get(key).is_some_and(|v| v == "1" || v == "true")
}

fn parse_id(raw: &str) -> Result<ItemId> {
    raw.parse()
}

fn parse_version(raw: &str) -> Result<u32> {
    raw.parse().map_err(|_| Error::BadRequest(format!("`{raw}` is not a version number")))
}

fn parse_positive(raw: &str, what: &str) -> Result<usize> {
    raw.parse::<usize>()
        .ok()
        .filter(|v| *v > 0)
        .ok_or_else(|| Error::BadRequest(format!("{what} must be a positive integer")))
}

fn parse_body<T: DeserializeOwned>(body: Option<&Value>) -> Result<T> {
    let body = body.cloned().unwrap_or_else(|| json!({}));
    serde_json::from_value(body).map_err(|e| Error::BadRequest(e.to_string()))
}

fn decode_pieces(engine: &Engine, type_name: &str, raw: serde_json::Map<String, Value>) -> Result<Row> {
    raw.into_iter()
        .map(|(name, value)| {
            let def = engine.schema().piece(type_name, &name)?;
            let value = PieceValue::from_json(&name, def.kind, &value)?;
            Ok((name, value))
        })
        .collect()
}
