//! Workloads shared by the benchmarks in `benches/`.

use std::sync::Arc;

use normcase_core::fixtures::QUITTANCE;
use normcase_core::{ActRequest, InputEvent, Instance, Model, ReasonerState, TruthValue};

pub fn fixture() -> Arc<Model> {
    Arc::new(Model::from_source(QUITTANCE).expect("fixture compiles"))
}

/// A deterministic input log of `n` events cycling through fact updates and
/// acts on the fixture.
pub fn event_log(n: usize) -> Vec<InputEvent> {
    (0..n)
        .map(|i| match i % 4 {
            0 => InputEvent::set(Instance::with_arg("applicant-income", (i as i64 * 37) % 3000), TruthValue::True),
            1 => InputEvent::set(Instance::unit("applicant-is-married"), (i % 3 == 0).into()),
            2 => InputEvent::act(&ActRequest::new("submit-application", "alice").to("client"), true),
            _ => InputEvent::act(&ActRequest::new("review-application", "alice").to("client"), true),
        })
        .collect()
}

pub fn state_after(n: usize) -> ReasonerState {
    ReasonerState::replay(fixture(), &event_log(n)).expect("log replays")
}
