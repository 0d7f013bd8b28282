//! The `itemgraph` command-line tool and HTTP server.

pub mod commands;
pub mod http;

use std::sync::Arc;

use itemgraph::api::{Service, ServiceConfig};
use itemgraph::Result;

/// Builds the service for `serve`: the config file (if any), then the
/// command-line store path and base URL on top.
pub fn service_for(cli: &commands::Cli, args: &commands::ServeArgs) -> Result<Service> {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    if cli.store.is_some() || config.store.is_none() {
        config.store = Some(cli.store_path());
    }
    if let Some(base) = &args.base_url {
        config = config.with_base_url(base.clone());
    }
    Service::open(config)
}

pub async fn serve(service: Service, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, http::router(Arc::new(service))).await
}
