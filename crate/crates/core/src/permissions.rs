//! Per-item and per-piece access control.
//!
//! A grant allows or denies one ability to a subject (an agent, every agent
//! indirectly contained in a Collection, or everyone) on one item, or on a
//! single piece of it. Decisions resolve as follows:
//!
//! 1. piece-scoped grants beat item-scoped grants, which beat the defaults;
//! 2. within a scope, agent subjects beat collection subjects beat everyone;
//! 3. at equal scope and specificity, deny beats allow;
//! 4. a collection subject matches every agent it contains, directly or
//!    through chained memberships;
//! 5. with no matching grant, the item's creator holds every ability and
//!    everyone else is denied.
//!
//! `create` is scoped to item types instead of items; see
//! [`Resolver::can_create`].

use std::borrow::Cow;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::collections::{MembershipGraph, COLLECTION_TYPE};
use crate::error::{Error, Result};
use crate::store::{Store, AGENT_TYPE};
use crate::value::ItemId;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ability(Cow<'static, str>);

impl Ability {
    pub const VIEW: Ability = Ability(Cow::Borrowed("view"));
    pub const EDIT: Ability = Ability(Cow::Borrowed("edit"));
    pub const COMMENT_ON: Ability = Ability(Cow::Borrowed("comment_on"));
    pub const DEACTIVATE: Ability = Ability(Cow::Borrowed("deactivate"));
    pub const DESTROY: Ability = Ability(Cow::Borrowed("destroy"));
    pub const MODIFY_PERMISSIONS: Ability = Ability(Cow::Borrowed("modify_permissions"));
    pub const CREATE: Ability = Ability(Cow::Borrowed("create"));

    pub const BUILTIN: [Ability; 7] = [
        Ability::VIEW,
        Ability::EDIT,
        Ability::COMMENT_ON,
        Ability::DEACTIVATE,
        Ability::DESTROY,
        Ability::MODIFY_PERMISSIONS,
        Ability::CREATE,
    ];

    pub fn new(name: impl Into<String>) -> Self {
        Ability(Cow::Owned(name.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Only view and edit may target a single piece.
    pub fn is_piece_scopable(&self) -> bool {
        *self == Ability::VIEW || *self == Ability::EDIT
    }
}

impl fmt::Display for Ability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Agent(ItemId),
    Collection(ItemId),
    Everyone,
}

impl Subject {
    /// Higher is more specific.
    pub fn specificity(&self) -> u8 {
        match self {
            Subject::Agent(_) => 2,
            Subject::Collection(_) => 1,
            Subject::Everyone => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrantTarget {
    Item(ItemId),
    Type(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Allow,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionGrant {
    pub subject: Subject,
    pub ability: Ability,
    pub target: GrantTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piece: Option<String>,
    pub effect: Effect,
}

impl PermissionGrant {
    pub fn on_item(subject: Subject, ability: Ability, item: ItemId, effect: Effect) -> Self {
        PermissionGrant {
            subject,
            ability,
            target: GrantTarget::Item(item),
            piece: None,
            effect,
        }
    }

    pub fn on_piece(subject: Subject, ability: Ability, item: ItemId, piece: impl Into<String>, effect: Effect) -> Self {
        PermissionGrant {
            piece: Some(piece.into()),
            ..PermissionGrant::on_item(subject, ability, item, effect)
        }
    }

    pub fn create_on_type(subject: Subject, type_name: impl Into<String>, effect: Effect) -> Self {
        PermissionGrant {
            subject,
            ability: Ability::CREATE,
            target: GrantTarget::Type(type_name.into()),
            piece: None,
            effect,
        }
    }
}

/// Recorded grants and the set of known abilities. Grants live outside the
/// item graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantSet {
    next_id: u64,
    abilities: BTreeSet<Ability>,
    grants: BTreeMap<u64, PermissionGrant>,
}

impl Default for GrantSet {
    fn default() -> Self {
        GrantSet {
            next_id: 1,
            abilities: Ability::BUILTIN.into_iter().collect(),
            grants: BTreeMap::new(),
        }
    }
}

impl GrantSet {
    pub fn new() -> Self {
        GrantSet::default()
    }

    /// Adds an ability beyond the built-in ones. Returns false if known.
    pub fn register_ability(&mut self, ability: Ability) -> bool {
        self.abilities.insert(ability)
    }

    pub fn abilities(&self) -> impl Iterator<Item = &Ability> {
        self.abilities.iter()
    }

    pub fn check_ability(&self, ability: &Ability) -> Result<()> {
        if self.abilities.contains(ability) {
            Ok(())
        } else {
            Err(Error::UnknownAbility(ability.to_string()))
        }
    }

    /// Stores a grant that has already been validated.
    pub(crate) fn insert(&mut self, grant: PermissionGrant) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.grants.insert(id, grant);
        id
    }

    pub(crate) fn restore(&mut self, id: u64, grant: PermissionGrant) {
        self.next_id = self.next_id.max(id + 1);
        self.grants.insert(id, grant);
    }

    pub(crate) fn reserve_ids_below(&mut self, next_id: u64) {
        self.next_id = self.next_id.max(next_id);
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn revoke(&mut self, id: u64) -> Result<PermissionGrant> {
        self.grants.remove(&id).ok_or(Error::UnknownGrant(id))
    }

    pub fn get(&self, id: u64) -> Option<&PermissionGrant> {
        self.grants.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &PermissionGrant)> {
        self.grants.iter().map(|(id, g)| (*id, g))
    }

    pub fn len(&self) -> usize {
        self.grants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    pub fn on_item(&self, item: ItemId) -> impl Iterator<Item = (u64, &PermissionGrant)> {
        self.iter().filter(move |(_, g)| g.target == GrantTarget::Item(item))
    }

    /// Drops every grant that targets `item` or names it as subject.
    pub(crate) fn purge_item(&mut self, item: ItemId) {
        self.grants.retain(|_, g| {
            g.target != GrantTarget::Item(item)
                && g.subject != Subject::Agent(item)
                && g.subject != Subject::Collection(item)
        });
    }

    /// Checks a grant against the store before it is recorded.
    pub fn validate(&self, store: &Store, grant: &PermissionGrant) -> Result<()> {
        self.check_ability(&grant.ability)?;
        match &grant.subject {
            Subject::Agent(id) => {
                if !store.is_instance_of(*id, AGENT_TYPE).unwrap_or(false) {
                    return Err(Error::UnknownSubject(format!("agent {id}")));
                }
            }
            Subject::Collection(id) => {
                if !store.is_instance_of(*id, COLLECTION_TYPE).unwrap_or(false) {
                    return Err(Error::UnknownSubject(format!("collection {id}")));
                }
            }
            Subject::Everyone => {}
        }
        match &grant.target {
            GrantTarget::Item(item) => {
                if grant.ability == Ability::CREATE {
                    return Err(Error::InvalidGrantTarget("create is granted on item types".into()));
                }
                let record = store.live_record(*item)?;
                if let Some(piece) = &grant.piece {
                    if !grant.ability.is_piece_scopable() {
                        return Err(Error::InvalidPieceAbility(grant.ability.to_string()));
                    }
                    store.schema().piece(&record.type_name, piece)?;
                }
            }
            GrantTarget::Type(type_name) => {
                if grant.ability != Ability::CREATE {
                    return Err(Error::InvalidGrantTarget(format!(
                        "{} is granted on items, not types",
                        grant.ability
                    )));
                }
                if grant.piece.is_some() {
                    return Err(Error::InvalidPieceAbility(grant.ability.to_string()));
                }
                store.schema().get(type_name)?;
            }
        }
        Ok(())
    }
}

/// Answers permission questions against one state of the store. Group
/// membership is computed once per resolver and cached per collection.
pub struct Resolver<'a> {
    store: &'a Store,
    grants: &'a GrantSet,
    graph: MembershipGraph,
    groups: RefCell<HashMap<ItemId, BTreeSet<ItemId>>>,
}

impl<'a> Resolver<'a> {
    pub fn new(store: &'a Store, grants: &'a GrantSet) -> Self {
        Resolver {
            store,
            grants,
            graph: MembershipGraph::build(store),
            groups: RefCell::new(HashMap::new()),
        }
    }

    fn subject_matches(&self, subject: &Subject, agent: Option<ItemId>) -> bool {
        match (subject, agent) {
            (Subject::Everyone, _) => true,
            (Subject::Agent(a), Some(agent)) => *a == agent,
            (Subject::Collection(c), Some(agent)) => {
                if self.store.live_record(*c).is_err() {
                    return false;
                }
                let mut groups = self.groups.borrow_mut();
                groups
                    .entry(*c)
                    .or_insert_with(|| self.graph.indirect(*c))
                    .contains(&agent)
            }
            (_, None) => false,
        }
    }

    /// Applies rules 2 and 3 to the grants of one scope; `None` if no
    /// grant in the scope matches.
    fn decide<'g>(&self, grants: impl Iterator<Item = &'g PermissionGrant>, agent: Option<ItemId>) -> Option<bool> {
        let mut best: Option<(u8, bool)> = None;
        for grant in grants.filter(|g| self.subject_matches(&g.subject, agent)) {
            let rank = grant.subject.specificity();
            let denies = grant.effect == Effect::Deny;
            best = match best {
                Some((r, d)) if r > rank => Some((r, d)),
                Some((r, d)) if r == rank => Some((r, d || denies)),
                _ => Some((rank, denies)),
            };
        }
        best.map(|(_, denied)| !denied)
    }

    /// Whether `agent` (or an anonymous visitor, for `None`) may exercise
    /// `ability` on `item`, or on one of its pieces.
    pub fn can(&self, agent: Option<ItemId>, ability: &Ability, item: ItemId, piece: Option<&str>) -> Result<bool> {
        self.grants.check_ability(ability)?;
        if *ability == Ability::CREATE {
            return Err(Error::InvalidGrantTarget("create is granted on item types".into()));
        }
        let record = self.store.live_record(item)?;
        if let Some(agent) = agent {
            self.store.record(agent)?;
        }
        if let Some(piece) = piece {
            self.store.schema().piece(&record.type_name, piece)?;
        }
        let relevant = || {
            self.grants
                .grants
                .values()
                .filter(move |g| g.target == GrantTarget::Item(item) && g.ability == *ability)
        };
        if let Some(piece) = piece {
            let piece_scope = relevant().filter(|g| g.piece.as_deref() == Some(piece));
            if let Some(decision) = self.decide(piece_scope, agent) {
                return Ok(decision);
            }
        }
        if let Some(decision) = self.decide(relevant().filter(|g| g.piece.is_none()), agent) {
            return Ok(decision);
        }
        let creator = self.store.get_item(item)?.creator();
        Ok(agent.is_some() && creator == agent)
    }

    /// The pieces `agent` may view; empty when the item itself is hidden.
    pub fn visible_pieces(&self, agent: Option<ItemId>, item: ItemId) -> Result<BTreeSet<String>> {
        let record = self.store.live_record(item)?;
        if !self.can(agent, &Ability::VIEW, item, None)? {
            return Ok(BTreeSet::new());
        }
        let mut visible = BTreeSet::new();
        for piece in self.store.schema().all_pieces(&record.type_name)? {
            if self.can(agent, &Ability::VIEW, item, Some(&piece.name))? {
                visible.insert(piece.name.clone());
            }
        }
        Ok(visible)
    }

    /// Type-scoped `create`: grants on `type_name` or any of its ancestors
    /// apply, resolved by subject specificity with deny winning ties. With
    /// no matching grant, any identified agent may create and anonymous
    /// visitors may not.
    pub fn can_create(&self, agent: Option<ItemId>, type_name: &str) -> Result<bool> {
        let schema = self.store.schema();
        schema.get(type_name)?;
        let applicable = self.grants.grants.values().filter(|g| {
            g.ability == Ability::CREATE
                && matches!(&g.target, GrantTarget::Type(t) if schema.is_subtype(type_name, t).unwrap_or(false))
        });
        Ok(self.decide(applicable, agent).unwrap_or(agent.is_some()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collections::add_membership;
    use crate::store::Row;
    use crate::value::PieceValue;

    struct Fixture {
        store: Store,
        owner: ItemId,
        alice: ItemId,
        bob: ItemId,
        doc: ItemId,
        group: ItemId,
    }

    fn fixture() -> Fixture {
        let mut store = Store::default();
        let owner = store.create_item("Person", Row::new(), None).unwrap().id;
        let alice = store.create_item("Person", Row::new(), Some(owner)).unwrap().id;
        let bob = store.create_item("Person", Row::new(), Some(owner)).unwrap().id;
        let body: Row = [("body".to_string(), PieceValue::text("hello"))].into_iter().collect();
        let doc = store.create_item("TextDocument", body, Some(owner)).unwrap().id;
        let group = store.create_item("Collection", Row::new(), Some(owner)).unwrap().id;
        Fixture { store, owner, alice, bob, doc, group }
    }

    fn add(grants: &mut GrantSet, store: &Store, grant: PermissionGrant) -> u64 {
        grants.validate(store, &grant).unwrap();
        grants.insert(grant)
    }

    #[test]
    fn creator_default() {
        let f = fixture();
        let grants = GrantSet::new();
        let r = Resolver::new(&f.store, &grants);
        assert!(r.can(Some(f.owner), &Ability::EDIT, f.doc, None).unwrap());
        assert!(!r.can(Some(f.alice), &Ability::VIEW, f.doc, None).unwrap());
        assert!(!r.can(None, &Ability::VIEW, f.doc, None).unwrap());
    }

    #[test]
    fn everyone_view() {
        let f = fixture();
        let mut grants = GrantSet::new();
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Everyone, Ability::VIEW, f.doc, Effect::Allow));
        let r = Resolver::new(&f.store, &grants);
        assert!(r.can(Some(f.bob), &Ability::VIEW, f.doc, None).unwrap());
        assert!(r.can(None, &Ability::VIEW, f.doc, None).unwrap());
        assert!(!r.can(Some(f.bob), &Ability::EDIT, f.doc, None).unwrap());
    }

    #[test]
    fn agent_allow_beats_everyone_deny() {
        let f = fixture();
        let mut grants = GrantSet::new();
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Agent(f.alice), Ability::VIEW, f.doc, Effect::Allow));
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Everyone, Ability::VIEW, f.doc, Effect::Deny));
        let r = Resolver::new(&f.store, &grants);
        assert!(r.can(Some(f.alice), &Ability::VIEW, f.doc, None).unwrap());
        assert!(!r.can(Some(f.bob), &Ability::VIEW, f.doc, None).unwrap());
        // explicit deny overrides the creator default
        assert!(!r.can(Some(f.owner), &Ability::VIEW, f.doc, None).unwrap());
    }

    #[test]
    fn piece_deny_under_item_allow() {
        let f = fixture();
        let mut grants = GrantSet::new();
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Everyone, Ability::VIEW, f.doc, Effect::Allow));
        add(&mut grants, &f.store, PermissionGrant::on_piece(Subject::Everyone, Ability::VIEW, f.doc, "body", Effect::Deny));
        let r = Resolver::new(&f.store, &grants);
        assert!(r.can(Some(f.alice), &Ability::VIEW, f.doc, None).unwrap());
        assert!(!r.can(Some(f.alice), &Ability::VIEW, f.doc, Some("body")).unwrap());
        let visible = r.visible_pieces(Some(f.alice), f.doc).unwrap();
        let all: BTreeSet<String> = f.store.schema().all_pieces("TextDocument").unwrap().iter().map(|p| p.name.clone()).collect();
        assert_eq!(visible.len(), all.len() - 1);
        assert!(!visible.contains("body"));
        // grants outrank the creator default, so the owner loses `body` too
        assert_eq!(r.visible_pieces(Some(f.owner), f.doc).unwrap(), visible);
        assert_eq!(r.visible_pieces(Some(f.owner), f.alice).unwrap().len(), 3);
    }

    #[test]
    fn equal_rank_deny_wins() {
        let f = fixture();
        let mut grants = GrantSet::new();
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Agent(f.alice), Ability::EDIT, f.doc, Effect::Allow));
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Agent(f.alice), Ability::EDIT, f.doc, Effect::Deny));
        let r = Resolver::new(&f.store, &grants);
        assert!(!r.can(Some(f.alice), &Ability::EDIT, f.doc, None).unwrap());
    }

    #[test]
    fn nested_groups_are_fluid() {
        let mut f = fixture();
        let outer = f.group;
        let inner = f.store.create_item("Collection", Row::new(), Some(f.owner)).unwrap().id;
        let mut grants = GrantSet::new();
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Collection(outer), Ability::VIEW, f.doc, Effect::Allow));
        assert!(!Resolver::new(&f.store, &grants).can(Some(f.bob), &Ability::VIEW, f.doc, None).unwrap());
        add_membership(&mut f.store, outer, inner, f.owner).unwrap();
        add_membership(&mut f.store, inner, f.bob, f.owner).unwrap();
        assert!(Resolver::new(&f.store, &grants).can(Some(f.bob), &Ability::VIEW, f.doc, None).unwrap());
    }

    #[test]
    fn grant_validation() {
        let f = fixture();
        let grants = GrantSet::new();
        let bad_piece = PermissionGrant::on_piece(Subject::Everyone, Ability::DESTROY, f.doc, "body", Effect::Deny);
        assert_eq!(grants.validate(&f.store, &bad_piece), Err(Error::InvalidPieceAbility("destroy".into())));
        let unknown_piece = PermissionGrant::on_piece(Subject::Everyone, Ability::VIEW, f.doc, "email", Effect::Deny);
        assert!(matches!(grants.validate(&f.store, &unknown_piece), Err(Error::UnknownPiece { .. })));
        let not_agent = PermissionGrant::on_item(Subject::Agent(f.doc), Ability::VIEW, f.doc, Effect::Allow);
        assert!(matches!(grants.validate(&f.store, &not_agent), Err(Error::UnknownSubject(_))));
        let not_group = PermissionGrant::on_item(Subject::Collection(f.alice), Ability::VIEW, f.doc, Effect::Allow);
        assert!(matches!(grants.validate(&f.store, &not_group), Err(Error::UnknownSubject(_))));
        let odd = PermissionGrant::on_item(Subject::Everyone, Ability::new("teleport"), f.doc, Effect::Allow);
        assert_eq!(grants.validate(&f.store, &odd), Err(Error::UnknownAbility("teleport".into())));
        let r = Resolver::new(&f.store, &grants);
        assert_eq!(
            r.can(Some(f.alice), &Ability::new("teleport"), f.doc, None),
            Err(Error::UnknownAbility("teleport".into()))
        );
        assert_eq!(r.can(Some(f.alice), &Ability::VIEW, ItemId(404), None), Err(Error::UnknownItem(ItemId(404))));
    }

    #[test]
    fn registered_abilities_resolve_like_builtins() {
        let f = fixture();
        let mut grants = GrantSet::new();
        assert!(grants.register_ability(Ability::new("publish")));
        add(&mut grants, &f.store, PermissionGrant::on_item(Subject::Agent(f.bob), Ability::new("publish"), f.doc, Effect::Allow));
        let r = Resolver::new(&f.store, &grants);
        assert!(r.can(Some(f.bob), &Ability::new("publish"), f.doc, None).unwrap());
        assert!(!r.can(Some(f.alice), &Ability::new("publish"), f.doc, None).unwrap());
    }

    #[test]
    fn create_is_type_scoped() {
        let f = fixture();
        let mut grants = GrantSet::new();
        add(&mut grants, &f.store, PermissionGrant::create_on_type(Subject::Everyone, "Document", Effect::Deny));
        add(&mut grants, &f.store, PermissionGrant::create_on_type(Subject::Agent(f.alice), "TextDocument", Effect::Allow));
        let r = Resolver::new(&f.store, &grants);
        assert!(!r.can_create(Some(f.bob), "TextDocument").unwrap());
        assert!(r.can_create(Some(f.alice), "TextDocument").unwrap());
        assert!(!r.can_create(Some(f.alice), "Document").unwrap());
        assert!(r.can_create(Some(f.bob), "Collection").unwrap());
        assert!(!r.can_create(None, "Collection").unwrap());
    }
}
