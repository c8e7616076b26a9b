use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::logic::TruthValue;
use crate::lang::{ClauseKind, Literal};

/// A ground fact instance: type name plus optional identifier argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "type")]
    pub type_name: String,
    pub arg: Option<Literal>,
}

impl Instance {
    pub fn new(type_name: impl Into<String>, arg: Option<Literal>) -> Self {
        Instance {
            type_name: type_name.into(),
            arg,
        }
    }

    pub fn unit(type_name: impl Into<String>) -> Self {
        Instance::new(type_name, None)
    }

    pub fn with_arg(type_name: impl Into<String>, arg: impl Into<Literal>) -> Self {
        Instance::new(type_name, Some(arg.into()))
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            Some(a) => write!(f, "{}({a})", self.type_name),
            None => f.write_str(&self.type_name),
        }
    }
}

/// Values for the Actor and Recipient placeholders.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Binding {
    pub actor: Option<Literal>,
    pub recipient: Option<Literal>,
}

impl Binding {
    pub fn new(actor: impl Into<Literal>, recipient: Option<Literal>) -> Self {
        Binding {
            actor: Some(actor.into()),
            recipient,
        }
    }
}

/// Identity of a duty instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DutyRef {
    #[serde(rename = "type")]
    pub type_name: String,
    pub holder: Literal,
    pub claimant: Literal,
}

impl fmt::Display for DutyRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.type_name, self.holder, self.claimant)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DutyInstance {
    #[serde(rename = "type")]
    pub type_name: String,
    pub holder: Literal,
    pub claimant: Literal,
    pub created_at_seq: u64,
    pub violated: bool,
}

impl DutyInstance {
    pub fn key(&self) -> DutyRef {
        DutyRef {
            type_name: self.type_name.clone(),
            holder: self.holder.clone(),
            claimant: self.claimant.clone(),
        }
    }
}

/// One execution of a physical act.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActRequest {
    pub act: String,
    pub actor: Literal,
    pub recipient: Option<Literal>,
}

impl ActRequest {
    pub fn new(act: impl Into<String>, actor: impl Into<Literal>) -> Self {
        ActRequest {
            act: act.into(),
            actor: actor.into(),
            recipient: None,
        }
    }

    pub fn to(mut self, recipient: impl Into<Literal>) -> Self {
        self.recipient = Some(recipient.into());
        self
    }

    pub fn binding(&self) -> Binding {
        Binding {
            actor: Some(self.actor.clone()),
            recipient: self.recipient.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    NonCompliantAct,
    DutyViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum Violation {
    /// An act executed while not enabled.
    NonCompliantAct {
        act: ActRequest,
        institutional: String,
        status: Enablement,
        at_seq: u64,
    },
    /// A duty's `Violated when` condition became true.
    DutyViolation { duty: DutyRef, at_seq: u64 },
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::NonCompliantAct { .. } => ViolationKind::NonCompliantAct,
            Violation::DutyViolation { .. } => ViolationKind::DutyViolation,
        }
    }

    pub fn at_seq(&self) -> u64 {
        match self {
            Violation::NonCompliantAct { at_seq, .. } | Violation::DutyViolation { at_seq, .. } => {
                *at_seq
            }
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonCompliantAct { act, status, .. } => {
                write!(f, "non-compliant act {} by {} ({status:?})", act.act, act.actor)
            }
            Violation::DutyViolation { duty, .. } => write!(f, "duty {duty} violated"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Enablement {
    Enabled,
    Disabled,
    Undetermined,
}

impl Enablement {
    /// Enabled iff every clause is true; Disabled iff some clause is false.
    pub fn from_clauses(values: impl IntoIterator<Item = TruthValue>) -> Enablement {
        let all = values.into_iter().fold(TruthValue::True, TruthValue::and);
        match all {
            TruthValue::True => Enablement::Enabled,
            TruthValue::False => Enablement::Disabled,
            TruthValue::Unknown => Enablement::Undetermined,
        }
    }
}

/// A pre-condition clause and its current value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Reason {
    /// Declaration the clause belongs to (physical or institutional act).
    pub act: String,
    pub clause: ClauseKind,
    pub condition: String,
    pub value: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActStatus {
    pub act: String,
    pub institutional: String,
    pub physical: bool,
    pub status: Enablement,
    pub reasons: Vec<Reason>,
}

/// Change of one base-fact assignment; `None` means unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactChange {
    pub instance: Instance,
    pub before: Option<TruthValue>,
    pub after: Option<TruthValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCause {
    /// The act's `Terminates` clause named the duty.
    Terminates(String),
    /// The duty's `Terminated by` clause lists the act.
    TerminatedBy(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub event: TraceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum TraceKind {
    InitStatement {
        statement: String,
        changes: Vec<FactChange>,
    },
    FactSet {
        instance: Instance,
        value: TruthValue,
        changes: Vec<FactChange>,
    },
    ActExecuted {
        act: ActRequest,
        institutional: String,
        confirmed: bool,
        status: Enablement,
        changes: Vec<FactChange>,
    },
    DutyCreated {
        duty: DutyRef,
    },
    DutyTerminated {
        duty: DutyRef,
        cause: TerminationCause,
    },
    ViolationRaised {
        violation: Violation,
    },
}

impl TraceKind {
    pub fn name(&self) -> &'static str {
        match self {
            TraceKind::InitStatement { .. } => "InitStatement",
            TraceKind::FactSet { .. } => "FactSet",
            TraceKind::ActExecuted { .. } => "ActExecuted",
            TraceKind::DutyCreated { .. } => "DutyCreated",
            TraceKind::DutyTerminated { .. } => "DutyTerminated",
            TraceKind::ViolationRaised { .. } => "ViolationRaised",
        }
    }

    /// Whether this event records an external input (as opposed to an
    /// initial statement or a consequence of another event).
    pub fn is_input(&self) -> bool {
        matches!(self, TraceKind::FactSet { .. } | TraceKind::ActExecuted { .. })
    }
}

/// An external input to the reasoner; the unit of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum InputEvent {
    FactSet {
        instance: Instance,
        value: TruthValue,
    },
    ActExecuted {
        act: String,
        actor: Literal,
        recipient: Option<Literal>,
        confirmed: bool,
    },
}

impl InputEvent {
    pub fn set(instance: Instance, value: TruthValue) -> Self {
        InputEvent::FactSet { instance, value }
    }

    pub fn act(request: &ActRequest, confirmed: bool) -> Self {
        InputEvent::ActExecuted {
            act: request.act.clone(),
            actor: request.actor.clone(),
            recipient: request.recipient.clone(),
            confirmed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Executed,
    /// The act is not enabled and the caller did not confirm; nothing changed.
    RequiresConfirmation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionReport {
    pub outcome: Outcome,
    pub status: ActStatus,
    pub changes: Vec<FactChange>,
    pub duties_created: Vec<DutyRef>,
    pub duties_terminated: Vec<DutyRef>,
    pub violations: Vec<Violation>,
    /// Trace events appended by the execution.
    pub events: Vec<TraceEvent>,
}

impl ExecutionReport {
    pub fn executed(&self) -> bool {
        self.outcome == Outcome::Executed
    }
}

/// Projection of an act execution that was never committed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WhatIfReport {
    pub report: ExecutionReport,
    pub statuses_after: Vec<ActStatus>,
    pub duties_after: Vec<DutyInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("placeholder `{0}` is not bound")]
    UnboundPlaceholder(&'static str),
    #[error("ill-typed expression: {0}")]
    IllTyped(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonerError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("`{0}` is not a fact type")]
    NotAFact(String),
    #[error("derived fact not storable: `{0}`")]
    DerivedFact(String),
    #[error("`{type_name}` expects {expected} argument(s) of its domain; got {found}")]
    Arity {
        type_name: String,
        expected: usize,
        found: String,
    },
    #[error("unknown act `{0}`")]
    UnknownAct(String),
    #[error("`{0}` is not a physical act")]
    NotPhysical(String),
    #[error("act `{0}` requires a recipient")]
    MissingRecipient(String),
    #[error("invalid initial statement `{0}`")]
    InvalidStatement(String),
    #[error("incompatible model version: {0}")]
    IncompatibleModel(String),
    #[error("replay diverged at event {index}: {reason}")]
    ReplayDiverged { index: usize, reason: String },
    #[error("malformed snapshot: {0}")]
    Malformed(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
