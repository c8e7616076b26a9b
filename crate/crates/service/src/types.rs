use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use normcase_core::lang::{Domain, Literal, Openness};
use normcase_core::{ActStatus, DutyInstance, ExecutionReport, InputEvent, TruthValue, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelVersion {
    pub version_id: String,
    pub source: String,
    pub registered_at: DateTime<Utc>,
}

/// Listing entry for a model version, without its source.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelSummary {
    pub version_id: String,
    pub registered_at: DateTime<Utc>,
    pub active: bool,
    pub declarations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseRecord {
    pub case_id: String,
    pub client_ref: String,
    pub model_version_id: String,
    pub status: CaseStatus,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub event_count: u64,
    pub snapshot_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseEventKind {
    FactSet,
    ActExecuted,
    CaseClosed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseEvent {
    pub case_id: String,
    pub seq: u64,
    pub kind: CaseEventKind,
    pub user_id: String,
    /// Reasoner input; absent for `CaseClosed`.
    pub payload: Option<InputEvent>,
    /// First approver of a four-eyes act.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approved_by: Option<String>,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserAccount {
    pub user_id: String,
    pub display_name: String,
    pub roles: BTreeSet<String>,
    pub token: String,
}

/// What holders of a role may do. The `admin` role may do everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RolePermissions {
    /// Physical act names, or `*` for all acts.
    pub acts: BTreeSet<String>,
    pub edit_facts: bool,
    pub manage_cases: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Widget {
    NumberBox,
    TextBox,
    TriStateRadio,
}

impl Widget {
    /// Int domains get a number box, String domains a text box, everything
    /// without a domain three radios.
    pub fn for_domain(domain: Domain) -> Widget {
        match domain {
            Domain::Int => Widget::NumberBox,
            Domain::String => Widget::TextBox,
            Domain::NoArg => Widget::TriStateRadio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Truth(TruthValue),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeldInstance {
    pub arg: Literal,
    pub value: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FactSlot {
    pub type_name: String,
    pub kind: String,
    pub domain: Domain,
    pub openness: Openness,
    pub derived: bool,
    pub widget: Widget,
    /// Var: the held argument; no-argument types: the truth value. `None`
    /// for a Var means unknown.
    pub value: Option<SlotValue>,
    /// Assigned instances of an identified Fact type.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<HeldInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionEntry {
    #[serde(flatten)]
    pub status: ActStatus,
    pub permitted: bool,
    pub executable: bool,
    pub four_eyes: bool,
    pub pending_approval_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseView {
    pub case: CaseRecord,
    pub fact_slots: Vec<FactSlot>,
    pub actions: Vec<ActionEntry>,
    pub duties: Vec<DutyInstance>,
    pub violations: Vec<Violation>,
    pub trace_length: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceEntry {
    pub seq: u64,
    pub kind: String,
    pub summary: String,
    pub user_id: Option<String>,
    pub at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FactUpdate {
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default)]
    pub arg: Option<Literal>,
    /// `true`, `false`, `"unknown"` or null. For a Var, a literal selects the
    /// held instance.
    #[serde(default)]
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActCommand {
    pub act: String,
    /// Defaults to the calling user's id.
    #[serde(default)]
    pub actor: Option<Literal>,
    #[serde(default)]
    pub recipient: Option<Literal>,
    #[serde(default)]
    pub confirm_violation: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ActOutcome {
    Executed {
        view: Box<CaseView>,
        report: ExecutionReport,
    },
    ConfirmationRequired {
        report: ExecutionReport,
    },
    PendingApproval {
        first_approver: String,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseFilter {
    pub status: Option<CaseStatus>,
    pub client: Option<String>,
    /// Case-insensitive substring of case id or client reference.
    pub q: Option<String>,
    /// `createdAt` or `status`, optionally suffixed with `:asc` or `:desc`.
    pub sort: Option<String>,
}
