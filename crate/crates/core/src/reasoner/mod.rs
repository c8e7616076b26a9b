//! Case reasoning over a compiled model.

mod eval;
mod explain;
mod logic;
mod model;
mod snapshot;
mod state;
mod types;

pub use eval::Value;
pub use explain::{explain_event, Explanation};
pub use logic::TruthValue;
pub use model::{version_id, Model};
pub use snapshot::{canonicalize, to_canonical_json};
pub use state::ReasonerState;
pub use types::*;
