//! Invariants checked over generated schemas and operation sequences.

use std::collections::BTreeSet;

use itemgraph::api::{ApiRequest, Service, ServiceConfig};
use itemgraph::viewers::{ViewOutput, ViewerRegistration, ViewerRegistry, ITEM_SHOW};
use itemgraph::{Actor, Engine, ItemId, PieceDefinition, PieceKind, PieceValue, Row, TypeDescriptor};
use proptest::prelude::*;

/// A generated type: indices of its parents among earlier types, and how
/// many own pieces it declares.
type TypePlan = (Vec<prop::sample::Index>, usize);

fn type_plans() -> impl Strategy<Value = Vec<TypePlan>> {
    prop::collection::vec((prop::collection::vec(any::<prop::sample::Index>(), 1..=3), 0..3usize), 0..8)
}

fn build_types(engine: &mut Engine, plans: &[TypePlan]) -> Vec<String> {
    let mut names: Vec<String> = engine.schema().type_names().map(str::to_string).collect();
    for (i, (parents, own)) in plans.iter().enumerate() {
        let parents: BTreeSet<String> = parents.iter().map(|p| p.get(&names).clone()).collect();
        let pieces = (0..*own).map(|k| PieceDefinition::new(format!("p{i}_{k}"), PieceKind::Text)).collect();
        let name = format!("Gen{i}");
        engine
            .define_types(Actor::admin(None), vec![TypeDescriptor::new(name.clone(), parents, pieces)])
            .expect("generated type is valid");
        names.push(name);
    }
    names
}

/// Operations applied against a small population of items.
#[derive(Debug, Clone)]
enum Op {
    Create(prop::sample::Index),
    Update(prop::sample::Index, String),
    Deactivate(prop::sample::Index),
    Reactivate(prop::sample::Index),
    Destroy(prop::sample::Index),
    Comment(prop::sample::Index, String),
    Join(prop::sample::Index, prop::sample::Index),
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    let text = "[a-zé字 ]{0,8}";
    prop::collection::vec(
        prop_oneof![
            3 => any::<prop::sample::Index>().prop_map(Op::Create),
            2 => (any::<prop::sample::Index>(), text).prop_map(|(i, t)| Op::Update(i, t)),
            1 => any::<prop::sample::Index>().prop_map(Op::Deactivate),
            1 => any::<prop::sample::Index>().prop_map(Op::Reactivate),
            1 => any::<prop::sample::Index>().prop_map(Op::Destroy),
            1 => (any::<prop::sample::Index>(), text).prop_map(|(i, t)| Op::Comment(i, t)),
            1 => (any::<prop::sample::Index>(), any::<prop::sample::Index>()).prop_map(|(a, b)| Op::Join(a, b)),
        ],
        0..40,
    )
}

const CREATABLE: &[&str] = &["Document", "TextDocument", "Collection", "Person"];

/// Applies `ops` as an admin; operations the engine refuses are skipped.
fn populate(ops: &[Op]) -> (Engine, ItemId) {
    let mut engine = Engine::new();
    let owner = engine.create_item(Actor::admin(None), "Person", Row::new()).unwrap().id;
    let actor = Actor::admin(Some(owner));
    let mut items = vec![owner];
    for op in ops {
        match op {
            Op::Create(t) => {
                if let Ok(s) = engine.create_item(actor, t.get(CREATABLE), Row::new()) {
                    items.push(s.id);
                }
            }
            Op::Update(i, t) => {
                let _ = engine.update_item(actor, *i.get(&items), Row::from([("description".into(), PieceValue::text(t))]));
            }
            Op::Deactivate(i) => {
                let _ = engine.deactivate(actor, *i.get(&items));
            }
            Op::Reactivate(i) => {
                let _ = engine.reactivate(actor, *i.get(&items));
            }
            Op::Destroy(i) if *i.get(&items) != owner => {
                let _ = engine.destroy(actor, *i.get(&items));
            }
            Op::Destroy(_) => {}
            Op::Comment(i, t) => {
                if let Ok(id) = engine.create_comment(actor, *i.get(&items), 1, t) {
                    items.push(id);
                }
            }
            Op::Join(c, m) => {
                if let Ok(id) = engine.add_membership(actor, *c.get(&items), *m.get(&items)) {
                    items.push(id);
                }
            }
        }
    }
    (engine, owner)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn all_pieces_grow_along_parent_edges(plans in type_plans()) {
        let mut engine = Engine::new();
        let names = build_types(&mut engine, &plans);
        let schema = engine.schema();
        for name in &names {
            let own: BTreeSet<&str> = schema.all_pieces(name).unwrap().iter().map(|p| p.name.as_str()).collect();
            for parent in &schema.get(name).unwrap().parents {
                for piece in schema.all_pieces(parent).unwrap() {
                    prop_assert!(own.contains(piece.name.as_str()), "{name} lacks {} from {parent}", piece.name);
                }
            }
        }
    }

    #[test]
    fn each_table_holds_one_row_per_descendant_item(plans in type_plans(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..20)) {
        let mut engine = Engine::new();
        let names = build_types(&mut engine, &plans);
        let mut created = Vec::new();
        for pick in &picks {
            let name = pick.get(&names);
            if engine.create_item(Actor::admin(None), name, Row::new()).is_ok() {
                created.push(name.clone());
            }
        }
        let schema = engine.schema();
        for (table, rows) in engine.store().table_counts() {
            let expected = created.iter().filter(|t| schema.is_subtype(t, &table).unwrap()).count();
            prop_assert_eq!(rows, expected, "table {}", table);
        }
    }

    #[test]
    fn annotating_leaves_the_target_untouched(ops in ops(), remarks in prop::collection::vec("[a-z字]{0,6}", 1..5)) {
        let (mut engine, owner) = populate(&ops);
        let targets: Vec<ItemId> = engine.store().records().filter(|(_, r)| r.is_active()).map(|(id, _)| id).collect();
        for target in targets {
            let before = engine.store().get_item(target).unwrap();
            let history: Vec<_> = (1..=before.version).map(|v| engine.store().get_version(target, v).unwrap()).collect();
            for remark in &remarks {
                engine.create_comment(Actor::admin(Some(owner)), target, before.version, remark).unwrap();
            }
            prop_assert_eq!(engine.store().get_item(target).unwrap(), before.clone());
            for (v, snapshot) in history.iter().enumerate() {
                prop_assert_eq!(&engine.store().get_version(target, v as u32 + 1).unwrap(), snapshot);
            }
        }
    }

    #[test]
    fn a_new_leaf_type_and_viewer_leave_existing_resolution_alone(plans in type_plans(), parent in any::<prop::sample::Index>()) {
        let mut engine = Engine::new();
        let names = build_types(&mut engine, &plans);
        let mut registry = ViewerRegistry::standard(&engine);
        let before: Vec<_> = names.iter().map(|n| registry.resolve_viewer(&engine, n, None).map(str::to_string).ok()).collect();
        let leaf = TypeDescriptor::new("Leaf", [parent.get(&names).clone()], Vec::new());
        engine.define_types(Actor::admin(None), vec![leaf]).unwrap();
        registry
            .register(&engine, ViewerRegistration::new("LeafViewer", "Leaf").action(ITEM_SHOW, |_| Ok(ViewOutput::data(serde_json::Value::Null))))
            .unwrap();
        let after: Vec<_> = names.iter().map(|n| registry.resolve_viewer(&engine, n, None).map(str::to_string).ok()).collect();
        prop_assert_eq!(before, after);
        prop_assert_eq!(registry.resolve_viewer(&engine, "Leaf", None).unwrap(), "LeafViewer");
    }

    #[test]
    fn reads_change_nothing_and_export_is_deterministic(ops in ops()) {
        let (engine, owner) = populate(&ops);
        let text = engine.export().to_text();
        prop_assert_eq!(&engine.export().to_text(), &text);
        let reimported = Engine::import(&text).unwrap();
        prop_assert_eq!(&reimported.export().to_text(), &text);

        let config = ServiceConfig {
            tokens: [("t".to_string(), owner)].into(),
            admins: vec![owner],
            ..ServiceConfig::default()
        };
        let service = Service::new(engine, config);
        let stored = service.engine().to_json();
        let last = service.engine().store().next_id().get();
        for raw in 1..last {
            for path in [
                format!("/item/{raw}"),
                format!("/item/{raw}/json"),
                format!("/item/{raw}/versions"),
                format!("/item/{raw}/annotations"),
                format!("/item/{raw}/containers"),
                format!("/collection/{raw}/members?indirect=1"),
            ] {
                service.handle(&ApiRequest::get(&path).token("t"));
                service.handle(&ApiRequest::get(&path));
            }
        }
        service.handle(&ApiRequest::get("/export").token("t"));
        prop_assert_eq!(service.engine().to_json(), stored);
    }
}
