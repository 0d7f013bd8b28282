//! Referential collections.
//!
//! A Collection holds no piece values of its own; its contents are the
//! Membership items whose `collection_pointer` names it. Members are never
//! copied, so one item can sit in any number of collections. Collections
//! contain items directly through a Membership, and indirectly through
//! chains of Memberships that pass through other Collections. Cycles are
//! allowed and traversals stop at already visited nodes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{ListQuery, Row, Store};
use crate::value::{ItemId, PieceValue};

pub const COLLECTION_TYPE: &str = "Collection";
pub const MEMBERSHIP_TYPE: &str = "Membership";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberStatus {
    Live,
    /// The Membership itself has been deactivated (removed).
    Removed,
    MemberInactive,
    /// The member was destroyed; the Membership dangles.
    MemberDestroyed,
}

/// One Membership item, as seen from its collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipEdge {
    pub membership: ItemId,
    pub collection: ItemId,
    pub member: ItemId,
    pub status: MemberStatus,
}

/// Every non-destroyed Membership item, in id order.
pub fn membership_edges(store: &Store) -> Vec<MembershipEdge> {
    let query = ListQuery::new().subtypes().inactive();
    let Ok(ids) = store.list_items(MEMBERSHIP_TYPE, &query) else {
        return Vec::new();
    };
    ids.into_iter()
        .filter_map(|membership| {
            let pieces = store.raw_version(membership, store.record(membership).ok()?.version).ok()?;
            let collection = pieces.get("collection_pointer")?.as_item_pointer()?;
            let member = pieces.get("member_pointer")?.as_item_pointer()?;
            let status = if !store.record(membership).ok()?.is_active() {
                MemberStatus::Removed
            } else {
                match store.record(member) {
                    Ok(r) if r.is_destroyed() => MemberStatus::MemberDestroyed,
                    Ok(r) if !r.is_active() => MemberStatus::MemberInactive,
                    Ok(_) => MemberStatus::Live,
                    Err(_) => MemberStatus::MemberDestroyed,
                }
            };
            Some(MembershipEdge {
                membership,
                collection,
                member,
                status,
            })
        })
        .collect()
}

/// Containment edges of live memberships, built with one scan so that
/// repeated traversals do not rescan the store.
#[derive(Debug, Clone, Default)]
pub struct MembershipGraph {
    members: BTreeMap<ItemId, BTreeSet<ItemId>>,
    containers: BTreeMap<ItemId, BTreeSet<ItemId>>,
}

impl MembershipGraph {
    pub fn build(store: &Store) -> Self {
        let mut graph = MembershipGraph::default();
        for edge in membership_edges(store) {
            if edge.status == MemberStatus::Live {
                graph.members.entry(edge.collection).or_default().insert(edge.member);
                graph.containers.entry(edge.member).or_default().insert(edge.collection);
            }
        }
        graph
    }

    pub fn direct(&self, collection: ItemId) -> BTreeSet<ItemId> {
        self.members.get(&collection).cloned().unwrap_or_default()
    }

    /// Everything reachable from `collection` along membership edges. The
    /// start is included only when a cycle leads back to it.
    pub fn indirect(&self, collection: ItemId) -> BTreeSet<ItemId> {
        reach(&self.members, collection)
    }

    pub fn containing(&self, item: ItemId, direct_only: bool) -> BTreeSet<ItemId> {
        if direct_only {
            self.containers.get(&item).cloned().unwrap_or_default()
        } else {
            reach(&self.containers, item)
        }
    }
}

fn reach(edges: &BTreeMap<ItemId, BTreeSet<ItemId>>, start: ItemId) -> BTreeSet<ItemId> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        for next in edges.get(&node).into_iter().flatten() {
            if seen.insert(*next) {
                queue.push_back(*next);
            }
        }
    }
    seen
}

fn require_collection(store: &Store, id: ItemId) -> Result<()> {
    if store.is_instance_of(id, COLLECTION_TYPE)? {
        Ok(())
    } else {
        Err(Error::NotACollection(id))
    }
}

/// The active Membership linking `member` to `collection`, if any.
pub fn find_membership(store: &Store, collection: ItemId, member: ItemId) -> Result<Option<ItemId>> {
    let query = ListQuery::new()
        .subtypes()
        .filter("collection_pointer", PieceValue::ItemPointer(collection))
        .filter("member_pointer", PieceValue::ItemPointer(member));
    Ok(store.list_items(MEMBERSHIP_TYPE, &query)?.into_iter().next())
}

/// Creates a Membership item. Neither endpoint is modified.
pub fn add_membership(store: &mut Store, collection: ItemId, member: ItemId, agent: ItemId) -> Result<ItemId> {
    require_collection(store, collection)?;
    store.live_record(member)?;
    if find_membership(store, collection, member)?.is_some() {
        return Err(Error::DuplicateMembership { collection, member });
    }
    let pieces: Row = [
        ("collection_pointer".to_string(), PieceValue::ItemPointer(collection)),
        ("member_pointer".to_string(), PieceValue::ItemPointer(member)),
    ]
    .into_iter()
    .collect();
    Ok(store.create_item(MEMBERSHIP_TYPE, pieces, Some(agent))?.id)
}

/// Removal deactivates the Membership, so it can be restored.
pub fn remove_membership(store: &mut Store, collection: ItemId, membership: ItemId) -> Result<()> {
    require_collection(store, collection)?;
    let is_edge = membership_edges(store)
        .iter()
        .any(|e| e.membership == membership && e.collection == collection);
    if !is_edge {
        return Err(Error::NotAMembership(membership));
    }
    store.deactivate(membership)
}

pub fn direct_members(store: &Store, collection: ItemId) -> Result<BTreeSet<ItemId>> {
    require_collection(store, collection)?;
    Ok(MembershipGraph::build(store).direct(collection))
}

pub fn indirect_members(store: &Store, collection: ItemId) -> Result<BTreeSet<ItemId>> {
    require_collection(store, collection)?;
    Ok(MembershipGraph::build(store).indirect(collection))
}

pub fn collections_containing(store: &Store, item: ItemId, direct_only: bool) -> Result<BTreeSet<ItemId>> {
    store.live_record(item)?;
    Ok(MembershipGraph::build(store).containing(item, direct_only))
}

/// All Membership items of one collection, flagged with their status.
pub fn membership_listing(store: &Store, collection: ItemId) -> Result<Vec<MembershipEdge>> {
    require_collection(store, collection)?;
    Ok(membership_edges(store)
        .into_iter()
        .filter(|e| e.collection == collection)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Store, ItemId) {
        let mut store = Store::default();
        let agent = store.create_item("Agent", Row::new(), None).unwrap().id;
        (store, agent)
    }

    fn collection(store: &mut Store, agent: ItemId) -> ItemId {
        store.create_item(COLLECTION_TYPE, Row::new(), Some(agent)).unwrap().id
    }

    #[test]
    fn one_item_many_collections() {
        let (mut store, agent) = setup();
        let x = store.create_item("Document", Row::new(), Some(agent)).unwrap().id;
        let c1 = collection(&mut store, agent);
        let c2 = collection(&mut store, agent);
        let before = store.get_item(x).unwrap();
        add_membership(&mut store, c1, x, agent).unwrap();
        add_membership(&mut store, c2, x, agent).unwrap();
        assert_eq!(store.get_item(x).unwrap(), before);
        assert_eq!(direct_members(&store, c1).unwrap(), BTreeSet::from([x]));
        assert_eq!(direct_members(&store, c2).unwrap(), BTreeSet::from([x]));
        assert_eq!(collections_containing(&store, x, true).unwrap(), BTreeSet::from([c1, c2]));
        assert_eq!(
            add_membership(&mut store, c1, x, agent),
            Err(Error::DuplicateMembership { collection: c1, member: x })
        );
    }

    #[test]
    fn removal_hides_member_without_touching_it() {
        let (mut store, agent) = setup();
        let x = store.create_item("Document", Row::new(), Some(agent)).unwrap().id;
        let c = collection(&mut store, agent);
        let m = add_membership(&mut store, c, x, agent).unwrap();
        let before = store.get_item(x).unwrap();
        remove_membership(&mut store, c, m).unwrap();
        assert!(direct_members(&store, c).unwrap().is_empty());
        assert_eq!(store.get_item(x).unwrap(), before);
        assert_eq!(membership_listing(&store, c).unwrap()[0].status, MemberStatus::Removed);
        // re-adding after removal is allowed
        add_membership(&mut store, c, x, agent).unwrap();
        assert_eq!(remove_membership(&mut store, c, x), Err(Error::NotAMembership(x)));
    }

    #[test]
    fn chained_and_cyclic_membership() {
        let (mut store, agent) = setup();
        let c1 = collection(&mut store, agent);
        let c2 = collection(&mut store, agent);
        let x = store.create_item("Document", Row::new(), Some(agent)).unwrap().id;
        add_membership(&mut store, c1, c2, agent).unwrap();
        add_membership(&mut store, c2, x, agent).unwrap();
        assert_eq!(indirect_members(&store, c1).unwrap(), BTreeSet::from([c2, x]));
        assert_eq!(indirect_members(&store, c2).unwrap(), direct_members(&store, c2).unwrap());
        add_membership(&mut store, c2, c1, agent).unwrap();
        assert_eq!(indirect_members(&store, c1).unwrap(), BTreeSet::from([c1, c2, x]));
        assert_eq!(collections_containing(&store, x, false).unwrap(), BTreeSet::from([c1, c2]));
    }

    #[test]
    fn destroyed_member_is_flagged() {
        let (mut store, agent) = setup();
        let c = collection(&mut store, agent);
        let x = store.create_item("Document", Row::new(), Some(agent)).unwrap().id;
        add_membership(&mut store, c, x, agent).unwrap();
        store.deactivate(x).unwrap();
        assert!(direct_members(&store, c).unwrap().is_empty());
        assert_eq!(membership_listing(&store, c).unwrap()[0].status, MemberStatus::MemberInactive);
        store.destroy(x).unwrap();
        assert_eq!(membership_listing(&store, c).unwrap()[0].status, MemberStatus::MemberDestroyed);
    }

    #[test]
    fn errors() {
        let (mut store, agent) = setup();
        let doc = store.create_item("Document", Row::new(), Some(agent)).unwrap().id;
        assert_eq!(direct_members(&store, doc), Err(Error::NotACollection(doc)));
        assert_eq!(indirect_members(&store, ItemId(99)), Err(Error::UnknownItem(ItemId(99))));
        let c = collection(&mut store, agent);
        assert_eq!(add_membership(&mut store, c, ItemId(99), agent), Err(Error::UnknownItem(ItemId(99))));
        assert!(direct_members(&store, c).unwrap().is_empty());
        assert!(collections_containing(&store, doc, false).unwrap().is_empty());
    }
}
