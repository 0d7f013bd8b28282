//! The service surface: wire formats, the export bundle, configuration,
//! and the request router.

pub mod config;
pub mod export;
pub mod service;
pub mod wire;

pub use config::ServiceConfig;
pub use export::ExportBundle;
pub use service::{ApiRequest, ApiResponse, Method, Service};
pub use wire::{WireItem, WireType};
