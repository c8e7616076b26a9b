//! Case service: model registry and version pinning, per-case event logs and
//! snapshots, reasoner recovery, role-gated actions, and an HTTP+JSON API.

pub mod error;
pub mod http;
pub mod service;
pub mod store;
pub mod types;

pub use error::ServiceError;
pub use http::router;
pub use service::{CaseService, Clock, ServiceConfig, ADMIN_ROLE, ADMIN_USER};
pub use types::*;
