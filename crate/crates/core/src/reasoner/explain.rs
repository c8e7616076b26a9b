use serde::{Deserialize, Serialize};

use super::state::ReasonerState;
use super::types::*;
use crate::lang::Literal;

/// A human-readable line for one trace event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Explanation {
    pub seq: u64,
    pub kind: String,
    pub summary: String,
}

/// Identifiers read better without string quotes.
fn party(l: &Literal) -> String {
    match l {
        Literal::Str(s) => s.clone(),
        other => other.to_string(),
    }
}

fn describe_changes(changes: &[FactChange]) -> String {
    if changes.is_empty() {
        return "no fact changed".into();
    }
    changes
        .iter()
        .map(|c| {
            let show = |v: Option<_>| v.map_or("unset".to_string(), |t: crate::TruthValue| t.to_string());
            format!("{}: {} -> {}", c.instance, show(c.before), show(c.after))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn explain_event(e: &TraceEvent) -> Explanation {
    let summary = match &e.event {
        TraceKind::InitStatement { statement, changes } => {
            format!("initial statement {statement} ({})", describe_changes(changes))
        }
        TraceKind::FactSet { instance, value, changes } => {
            format!("{instance} set to {value} ({})", describe_changes(changes))
        }
        TraceKind::ActExecuted {
            act,
            institutional,
            confirmed,
            status,
            changes,
        } => {
            let to = act
                .recipient
                .as_ref()
                .map(|r| format!(" for {}", party(r)))
                .unwrap_or_default();
            let note = match (status, confirmed) {
                (Enablement::Enabled, _) => String::new(),
                (s, _) => format!(" while {s:?}, confirmed by the user"),
            };
            format!(
                "{} performed {} ({institutional}){to}{note} ({})",
                party(&act.actor),
                act.act,
                describe_changes(changes)
            )
        }
        TraceKind::DutyCreated { duty } => format!("duty {duty} created"),
        TraceKind::DutyTerminated { duty, cause } => match cause {
            TerminationCause::Terminates(act) => format!("duty {duty} terminated by {act}"),
            TerminationCause::TerminatedBy(act) => format!("duty {duty} discharged by {act}"),
        },
        TraceKind::ViolationRaised { violation } => format!("violation: {violation}"),
    };
    Explanation {
        seq: e.seq,
        kind: e.event.name().to_string(),
        summary,
    }
}

impl ReasonerState {
    /// One explanation per trace event, in order.
    pub fn explain(&self) -> Vec<Explanation> {
        self.trace.iter().map(explain_event).collect()
    }
}
