use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use itemgraph::api::{Service, ServiceConfig};
use itemgraph::{Actor, Engine, ItemId, PieceValue, Row};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (axum::Router, ItemId) {
    let mut engine = Engine::new();
    let mike = engine
        .create_item(Actor::admin(None), "Person", Row::from([("first_name".into(), PieceValue::text("Mike"))]))
        .unwrap()
        .id;
    let config = ServiceConfig {
        tokens: BTreeMap::from([("mike-token".to_string(), mike)]),
        ..ServiceConfig::default()
    }
    .with_base_url("https://cms.example.org");
    (itemgraph_cli::http::router(Arc::new(Service::new(engine, config))), mike)
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut builder = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::AUTHORIZATION, "Bearer mike-token");
    let body = match body {
        Some(value) => {
            builder = builder.header(header::CONTENT_TYPE, "application/json");
            Body::from(value.to_string())
        }
        None => Body::empty(),
    };
    let response = app.clone().oneshot(builder.body(body).unwrap()).await.unwrap();
    let status = response.status();
    let bytes = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::test]
async fn routes_over_http() {
    let (app, mike) = app();
    let (status, created) =
        call(&app, "POST", "/item", Some(json!({ "type": "TextDocument", "pieces": { "body": "héllo world" } }))).await;
    assert_eq!(status, StatusCode::CREATED);
    let doc = created["id"].as_u64().unwrap();
    assert_eq!(created["links"]["self"], format!("https://cms.example.org/item/{doc}"));
    assert_eq!(created["pieces"]["creator"]["value"], mike.get());

    let (status, _) = call(
        &app,
        "POST",
        &format!("/document/{doc}/transclusions"),
        Some(json!({ "version": 1, "offset": 5, "target": mike.get() })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, annotations) = call(&app, "GET", &format!("/item/{doc}/annotations?version=1"), None).await;
    assert_eq!(annotations[0]["anchor"]["offset"], 5);

    let (status, items) = call(&app, "GET", "/type/Document/items?subtypes=1", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(items["items"], json!([doc]));

    let (status, err) = call(&app, "POST", &format!("/item/{doc}/destroy"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "not_deactivated");

    let (status, rendered) = call(&app, "GET", &format!("/viewer/TextDocumentViewer/item_show/{doc}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(rendered["body"].as_str().unwrap().contains("héllo<span class=\"transclusion\""));

    let (status, _) = call(&app, "PUT", "/item", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, err) = call(&app, "POST", "/item", Some(json!({ "kind": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"]["code"], "bad_request");
}

#[tokio::test]
async fn anonymous_and_bad_tokens() {
    let (app, mike) = app();
    let anonymous = Request::builder().uri(format!("/item/{mike}")).body(Body::empty()).unwrap();
    let response = app.clone().oneshot(anonymous).await.unwrap();
    assert_eq!(response.status(), StatusCode::FORBIDDEN);
    let bad = Request::builder()
        .uri("/types")
        .header(header::AUTHORIZATION, "Bearer wrong")
        .body(Body::empty())
        .unwrap();
    assert_eq!(app.oneshot(bad).await.unwrap().status(), StatusCode::UNAUTHORIZED);
}
