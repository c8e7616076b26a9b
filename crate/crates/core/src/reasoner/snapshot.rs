//! Canonical JSON snapshots of a reasoner state.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::logic::TruthValue;
use super::model::Model;
use super::state::ReasonerState;
use super::types::*;
use crate::lang::{DeclKind, Literal};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Snapshot {
    model_version: String,
    seq: u64,
    base_facts: Vec<BaseFact>,
    duties: Vec<DutyInstance>,
    violations: Vec<Violation>,
    trace: Vec<TraceEvent>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BaseFact {
    #[serde(rename = "type")]
    type_name: String,
    arg: Option<Literal>,
    value: TruthValue,
}

/// Rewrites every object with its keys in lexicographic order.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, canonicalize(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Compact JSON with sorted keys.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serialisable");
    canonicalize(v).to_string()
}

impl ReasonerState {
    /// Canonical JSON text of the full state. Equal states give equal bytes.
    pub fn snapshot(&self) -> String {
        let snap = Snapshot {
            model_version: self.model.version().to_string(),
            seq: self.seq(),
            base_facts: self
                .facts
                .iter()
                .map(|(k, v)| BaseFact {
                    type_name: k.type_name.clone(),
                    arg: k.arg.clone(),
                    value: *v,
                })
                .collect(),
            duties: self.duties.clone(),
            violations: self.violations.clone(),
            trace: self.trace.clone(),
        };
        to_canonical_json(&snap)
    }

    /// Rebuilds a state from [`snapshot`](Self::snapshot) output. A snapshot
    /// taken under another model version is accepted as long as every name it
    /// mentions still exists with a compatible shape.
    pub fn restore(model: Arc<Model>, text: &str) -> Result<ReasonerState, ReasonerError> {
        let snap: Snapshot =
            serde_json::from_str(text).map_err(|e| ReasonerError::Malformed(e.to_string()))?;
        if snap.seq != snap.trace.len() as u64 {
            return Err(ReasonerError::Malformed(format!(
                "seq {} does not match trace length {}",
                snap.seq,
                snap.trace.len()
            )));
        }
        if let Some((i, e)) = snap
            .trace
            .iter()
            .enumerate()
            .find(|(i, e)| e.seq != *i as u64 + 1)
        {
            return Err(ReasonerError::Malformed(format!(
                "trace event {i} has seq {}",
                e.seq
            )));
        }

        let incompatible = |what: String| ReasonerError::IncompatibleModel(what);
        let mut state = ReasonerState {
            model: Arc::clone(&model),
            facts: BTreeMap::new(),
            duties: Vec::new(),
            violations: snap.violations,
            trace: Vec::new(),
        };
        for f in snap.base_facts {
            let inst = Instance::new(f.type_name, f.arg);
            let decl = model
                .decl(&inst.type_name)
                .filter(|d| d.kind.is_fact_type() && !d.is_derived())
                .ok_or_else(|| incompatible(format!("no storable fact type `{}`", inst.type_name)))?;
            let fits = match &inst.arg {
                None => decl.domain.arity() == 0,
                Some(l) => l.fits(decl.domain),
            };
            if !fits {
                return Err(incompatible(format!("`{inst}` does not fit its declaration")));
            }
            state.facts.insert(inst, f.value);
        }
        for d in &snap.duties {
            if model.decl(&d.type_name).map(|x| x.kind) != Some(DeclKind::Duty) {
                return Err(incompatible(format!("no duty type `{}`", d.type_name)));
            }
        }
        state.duties = snap.duties;
        for e in &snap.trace {
            match &e.event {
                TraceKind::ActExecuted { act, .. }
                    if model.decl(&act.act).map(|d| d.kind) != Some(DeclKind::PhysicalAct) =>
                {
                    return Err(incompatible(format!("no physical act `{}`", act.act)));
                }
                TraceKind::FactSet { instance, .. } if model.decl(&instance.type_name).is_none() => {
                    return Err(incompatible(format!("no fact type `{}`", instance.type_name)));
                }
                _ => {}
            }
        }
        state.trace = snap.trace;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_recursively() {
        let v = json!({"b": 1, "a": {"z": [ {"y": 1, "x": 2} ], "c": null}});
        assert_eq!(
            canonicalize(v).to_string(),
            r#"{"a":{"c":null,"z":[{"x":2,"y":1}]},"b":1}"#
        );
    }

    #[test]
    fn fresh_state_round_trips() {
        let model = Arc::new(Model::from_source(crate::fixtures::QUITTANCE).unwrap());
        let s = ReasonerState::new(Arc::clone(&model)).unwrap();
        let text = s.snapshot();
        let back = ReasonerState::restore(model, &text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.snapshot(), text);
    }

    #[test]
    fn rejects_garbage_and_bad_seq() {
        let model = Arc::new(Model::from_source(crate::fixtures::QUITTANCE).unwrap());
        assert!(matches!(
            ReasonerState::restore(Arc::clone(&model), "{not json"),
            Err(ReasonerError::Malformed(_))
        ));
        let s = ReasonerState::new(Arc::clone(&model)).unwrap();
        let mut v: Value = serde_json::from_str(&s.snapshot()).unwrap();
        v["seq"] = json!(99);
        assert!(matches!(
            ReasonerState::restore(model, &v.to_string()),
            Err(ReasonerError::Malformed(_))
        ));
    }

    #[test]
    fn unknown_type_is_incompatible() {
        let model = Arc::new(Model::from_source(crate::fixtures::QUITTANCE).unwrap());
        let mut s = ReasonerState::new(Arc::clone(&model)).unwrap();
        s.set_fact(Instance::unit("quittance-granted"), TruthValue::True)
            .unwrap();
        let other = Arc::new(Model::from_source("Fact unrelated.").unwrap());
        assert!(matches!(
            ReasonerState::restore(other, &s.snapshot()),
            Err(ReasonerError::IncompatibleModel(_))
        ));
    }
}
