//! Adapts [`Service`] to axum.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, Method as HttpMethod, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use itemgraph::api::{ApiRequest, ApiResponse, Method, Service};
use itemgraph::Error;

pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(handle).with_state(service)
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    value.strip_prefix("Bearer ").map(|t| t.trim().to_string())
}

fn to_request(
    method: &HttpMethod,
    uri: &Uri,
    query: BTreeMap<String, String>,
    headers: &HeaderMap,
    body: &Bytes,
) -> Result<ApiRequest, Error> {
    let method: Method = method.as_str().parse()?;
    let body = if body.iter().all(u8::is_ascii_whitespace) {
        None
    } else {
        Some(serde_json::from_slice(body)?)
    };
    Ok(ApiRequest {
        method,
        path: uri.path().to_string(),
        query,
        body,
        token: bearer(headers),
    })
}

async fn handle(
    State(service): State<Arc<Service>>,
    method: HttpMethod,
    uri: Uri,
    Query(query): Query<BTreeMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let response = match to_request(&method, &uri, query, &headers, &body) {
        Ok(request) => tokio::task::spawn_blocking(move || service.handle(&request))
            .await
            .unwrap_or_else(|e| ApiResponse::error(&Error::Io(e.to_string()))),
        Err(error) => ApiResponse::error(&error),
    };
    let status = StatusCode::from_u16(response.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, response.content_type)], response.body).into_response()
}
