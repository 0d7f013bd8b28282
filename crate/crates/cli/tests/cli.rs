use std::path::Path;
use std::process::{Command, Output};

use itemgraph::Engine;
use serde_json::Value;

fn run(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itemgraph"))
        .arg("--store")
        .arg(store)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(store: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = run(store, &full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn init(dir: &Path) -> std::path::PathBuf {
    let store = dir.join("store.json");
    let out = Command::new(env!("CARGO_BIN_EXE_itemgraph"))
        .arg("init")
        .arg(&store)
        .output()
        .unwrap();
    assert!(out.status.success());
    store
}

#[test]
fn show_on_fresh_store_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let store = init(dir.path());
    let out = run(&store, &["item", "show", "1"]);
    assert!(!out.status.success());
    let error: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(error["error"]["code"], "unknown_item");
    assert_eq!(error["error"]["status"], 404);
}

#[test]
fn mike_and_robot_table_counts() {
    let dir = tempfile::tempdir().unwrap();
    let store = init(dir.path());
    let mike = ok_json(&store, &["item", "create", "Person", "--set", "first_name=Mike"]);
    let mike_id = mike["id"].to_string();
    ok_json(&store, &["--agent", &mike_id, "item", "create", "Agent", "--set", "description=Robot"]);
    let tables = ok_json(&store, &["debug", "tables"]);
    assert_eq!(tables["tables"]["Person"]["rows"], 1);
    assert_eq!(tables["tables"]["Agent"]["rows"], 2);
    assert_eq!(tables["tables"]["Item"]["rows"], 2);
}

#[test]
fn export_import_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let store = init(dir.path());
    ok_json(&store, &["item", "create", "Person", "--set", "first_name=Mike"]);
    let doc = ok_json(&store, &["--agent", "1", "item", "create", "TextDocument", "--set", "body=draft"]);
    let doc = doc["id"].to_string();
    ok_json(&store, &["--agent", "1", "item", "update", &doc, "--set", "body=final"]);
    let c = ok_json(&store, &["--agent", "1", "item", "create", "Collection"])["id"].to_string();
    ok_json(&store, &["--agent", "1", "collection", "add", &c, &doc]);
    ok_json(&store, &["grant", &doc, "--subject", "everyone", "--ability", "view"]);
    ok_json(&store, &["grant", &doc, "--subject", "agent:1", "--ability", "view", "--piece", "body", "--deny"]);

    let bundle = dir.path().join("bundle.json");
    ok_json(&store, &["export", "-o", bundle.to_str().unwrap()]);
    let cli_text = std::fs::read_to_string(&bundle).unwrap();
    let library_text = Engine::open(&store).unwrap().export().to_text();
    assert_eq!(cli_text, library_text);

    let copy = dir.path().join("copy.json");
    ok_json(&copy, &["import", "-i", bundle.to_str().unwrap()]);
    assert_eq!(Engine::open(&copy).unwrap(), Engine::open(&store).unwrap());
    let again = dir.path().join("again.json");
    ok_json(&copy, &["export", "-o", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&again).unwrap(), cli_text.as_bytes());

    let out = run(&copy, &["import", "-i", bundle.to_str().unwrap()]);
    assert!(!out.status.success());
    let error: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(error["error"]["code"], "non_empty_target");
}

#[test]
fn deletion_protocol_and_collections() {
    let dir = tempfile::tempdir().unwrap();
    let store = init(dir.path());
    ok_json(&store, &["item", "create", "Person"]);
    let a = ["--agent", "1"];
    let create = |t: &str| ok_json(&store, &[&a[..], &["item", "create", t]].concat())["id"].to_string();
    let outer = create("Collection");
    let inner = create("Collection");
    let doc = create("Document");
    ok_json(&store, &["--agent", "1", "collection", "add", &outer, &inner]);
    let m = ok_json(&store, &["--agent", "1", "collection", "add", &inner, &doc])["membership"].to_string();
    let listed = ok_json(&store, &["collection", "list", &outer, "--indirect"]);
    assert_eq!(listed["members"].as_array().unwrap().len(), 2);
    ok_json(&store, &["collection", "remove", &inner, &m]);
    assert_eq!(ok_json(&store, &["collection", "list", &inner])["members"], serde_json::json!([]));

    let out = run(&store, &["item", "destroy", &doc]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_deactivated"));
    ok_json(&store, &["item", "deactivate", &doc]);
    assert_eq!(ok_json(&store, &["item", "destroy", &doc])["state"], "destroyed");
    let out = run(&store, &["item", "show", &doc]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"status\":410"));
}

#[test]
fn type_define_from_schema_file() {
    let dir = tempfile::tempdir().unwrap();
    let store = init(dir.path());
    let schema = dir.path().join("blog.schema");
    std::fs::write(&schema, "type BlogPost : TextDocument\n    title: text required\n").unwrap();
    ok_json(&store, &["type", "define", "-f", schema.to_str().unwrap()]);
    let shown = ok_json(&store, &["type", "show", "BlogPost"]);
    let names: Vec<&str> = shown["pieces"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["body", "description", "creator", "title"]);
    let out = run(&store, &["type", "define", "-f", schema.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate_type_name"));
    ok_json(&store, &["item", "create", "Person"]);
    let out = run(&store, &["--agent", "1", "item", "create", "BlogPost"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_required_piece"));
}
