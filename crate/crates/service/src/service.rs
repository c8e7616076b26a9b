//! Case management on top of the reasoner: model registry, per-case event
//! logs and snapshots, recovery, and role-gated mutations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};

use normcase_core::lang::{DeclKind, Domain, Literal};
use normcase_core::{
    explain_event, ActRequest, InputEvent, Instance, Model, ReasonerState,
    TraceKind, TruthValue, WhatIfReport,
};

use crate::error::ServiceError;
use crate::store::Store;
use crate::types::*;

pub const ADMIN_ROLE: &str = "admin";
pub const ADMIN_USER: &str = "admin";

const USERS_KEY: &str = "users";
const ROLES_KEY: &str = "roles";
const ACTIVE_KEY: &str = "activeModel";
const FOUR_EYES_KEY: &str = "fourEyes";

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub store_dir: PathBuf,
    /// Token of the bootstrap `admin` user.
    pub admin_token: Option<String>,
    /// Model source registered and made active at startup.
    pub bootstrap_model: Option<String>,
}

struct CaseSlot {
    record: CaseRecord,
    reasoner: Option<ReasonerState>,
    unavailable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ApprovalKey {
    case_id: String,
    act: String,
    /// As requested; `None` when the actor defaults to the first approver.
    actor: Option<Literal>,
    recipient: Option<Literal>,
}

#[derive(Default)]
struct Auth {
    users: BTreeMap<String, UserAccount>,
    roles: BTreeMap<String, RolePermissions>,
}

impl Auth {
    fn grants(&self, user: &UserAccount, check: impl Fn(&RolePermissions) -> bool) -> bool {
        user.roles.iter().any(|r| {
            r == ADMIN_ROLE || self.roles.get(r).is_some_and(&check)
        })
    }
}

pub struct CaseService {
    store: Store,
    models: RwLock<HashMap<String, Arc<Model>>>,
    active: RwLock<Option<String>>,
    cases: Mutex<HashMap<String, Arc<Mutex<CaseSlot>>>>,
    auth: RwLock<Auth>,
    four_eyes: RwLock<BTreeSet<String>>,
    approvals: Mutex<HashMap<ApprovalKey, String>>,
    clock: Clock,
}

fn invalid_fact(msg: impl Into<String>) -> ServiceError {
    ServiceError::BadRequest(msg.into())
}

impl CaseService {
    pub fn open(config: &ServiceConfig) -> Result<CaseService, ServiceError> {
        Self::open_with_clock(config, Arc::new(Utc::now))
    }

    pub fn open_with_clock(config: &ServiceConfig, clock: Clock) -> Result<CaseService, ServiceError> {
        let store = Store::open(&config.store_dir)?;
        let mut auth = Auth {
            users: store
                .setting::<Vec<UserAccount>>(USERS_KEY)?
                .unwrap_or_default()
                .into_iter()
                .map(|u| (u.user_id.clone(), u))
                .collect(),
            roles: store.setting(ROLES_KEY)?.unwrap_or_default(),
        };
        if let Some(token) = &config.admin_token {
            let admin = auth
                .users
                .entry(ADMIN_USER.to_string())
                .or_insert_with(|| UserAccount {
                    user_id: ADMIN_USER.into(),
                    display_name: "Administrator".into(),
                    roles: BTreeSet::new(),
                    token: token.clone(),
                });
            admin.token = token.clone();
            admin.roles.insert(ADMIN_ROLE.into());
        }
        let service = CaseService {
            active: RwLock::new(store.setting(ACTIVE_KEY)?),
            four_eyes: RwLock::new(store.setting(FOUR_EYES_KEY)?.unwrap_or_default()),
            store,
            models: RwLock::new(HashMap::new()),
            cases: Mutex::new(HashMap::new()),
            auth: RwLock::new(auth),
            approvals: Mutex::new(HashMap::new()),
            clock,
        };
        service.save_auth()?;
        if let Some(source) = &config.bootstrap_model {
            let version = service.register(source)?;
            service.activate(&version.version_id)?;
        }
        Ok(service)
    }

    /// Direct access to durable storage, for maintenance and tests.
    pub fn store(&self) -> &Store {
        &self.store
    }

    fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    fn save_auth(&self) -> Result<(), ServiceError> {
        let auth = self.auth.read();
        let users: Vec<&UserAccount> = auth.users.values().collect();
        self.store.put_setting(USERS_KEY, &users)?;
        self.store.put_setting(ROLES_KEY, &auth.roles)
    }

    // ---- authentication and authorization

    pub fn authenticate(&self, token: &str) -> Result<UserAccount, ServiceError> {
        self.auth
            .read()
            .users
            .values()
            .find(|u| !u.token.is_empty() && u.token == token)
            .cloned()
            .ok_or(ServiceError::Unauthenticated)
    }

    pub fn user(&self, user_id: &str) -> Result<UserAccount, ServiceError> {
        self.auth
            .read()
            .users
            .get(user_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("user `{user_id}`")))
    }

    fn require(
        &self,
        caller: &UserAccount,
        what: &str,
        check: impl Fn(&RolePermissions) -> bool,
    ) -> Result<(), ServiceError> {
        // re-read the account so role changes apply immediately
        let auth = self.auth.read();
        let current = auth.users.get(&caller.user_id).ok_or(ServiceError::Unauthenticated)?;
        if auth.grants(current, check) {
            Ok(())
        } else {
            Err(ServiceError::PermissionDenied(format!("{} may not {what}", caller.user_id)))
        }
    }

    fn require_admin(&self, caller: &UserAccount) -> Result<(), ServiceError> {
        self.require(caller, "administer the service", |_| false)
    }

    fn may_perform(&self, caller: &UserAccount, act: &str) -> bool {
        let auth = self.auth.read();
        auth.users
            .get(&caller.user_id)
            .is_some_and(|u| auth.grants(u, |p| p.acts.contains(act) || p.acts.contains("*")))
    }

    pub fn create_user(&self, caller: &UserAccount, account: UserAccount) -> Result<UserAccount, ServiceError> {
        self.require_admin(caller)?;
        if account.user_id.is_empty() || account.token.is_empty() {
            return Err(ServiceError::BadRequest("userId and token are required".into()));
        }
        {
            let mut auth = self.auth.write();
            if auth.users.contains_key(&account.user_id) {
                return Err(ServiceError::Conflict(format!("user `{}` exists", account.user_id)));
            }
            if auth.users.values().any(|u| u.token == account.token) {
                return Err(ServiceError::Conflict("token already in use".into()));
            }
            check_roles(&auth, &account.roles)?;
            auth.users.insert(account.user_id.clone(), account.clone());
        }
        self.save_auth()?;
        Ok(account)
    }

    /// Grants and revokes roles of a user.
    pub fn update_roles(
        &self,
        caller: &UserAccount,
        user_id: &str,
        grant: &BTreeSet<String>,
        revoke: &BTreeSet<String>,
    ) -> Result<UserAccount, ServiceError> {
        self.require_admin(caller)?;
        let updated = {
            let mut auth = self.auth.write();
            check_roles(&auth, grant)?;
            let user = auth
                .users
                .get_mut(user_id)
                .ok_or_else(|| ServiceError::NotFound(format!("user `{user_id}`")))?;
            user.roles.extend(grant.iter().cloned());
            user.roles.retain(|r| !revoke.contains(r));
            user.clone()
        };
        self.save_auth()?;
        Ok(updated)
    }

    pub fn set_role_permissions(
        &self,
        caller: &UserAccount,
        role: &str,
        permissions: RolePermissions,
    ) -> Result<RolePermissions, ServiceError> {
        self.require_admin(caller)?;
        if role == ADMIN_ROLE {
            return Err(ServiceError::BadRequest("the admin role cannot be redefined".into()));
        }
        if role.is_empty() {
            return Err(ServiceError::BadRequest("role name is empty".into()));
        }
        self.auth.write().roles.insert(role.to_string(), permissions.clone());
        self.save_auth()?;
        Ok(permissions)
    }

    pub fn roles(&self) -> BTreeMap<String, RolePermissions> {
        self.auth.read().roles.clone()
    }

    // ---- model registry

    fn register(&self, source: &str) -> Result<ModelVersion, ServiceError> {
        let model = Model::from_source(source).map_err(ServiceError::InvalidModel)?;
        let id = model.version().to_string();
        if let Some(existing) = self.store.models()?.into_iter().find(|m| m.version_id == id) {
            return Ok(existing);
        }
        let version = ModelVersion {
            version_id: id.clone(),
            source: source.to_string(),
            registered_at: self.now(),
        };
        self.store.put_model(&version)?;
        self.models.write().insert(id, Arc::new(model));
        tracing::info!(version = %version.version_id, "model registered");
        Ok(version)
    }

    fn activate(&self, version_id: &str) -> Result<(), ServiceError> {
        self.model(version_id)?;
        self.store.put_setting(ACTIVE_KEY, &version_id)?;
        *self.active.write() = Some(version_id.to_string());
        Ok(())
    }

    /// Parses, validates and stores a model. Registering the same bytes again
    /// returns the existing version.
    pub fn register_model(&self, caller: &UserAccount, source: &str) -> Result<ModelVersion, ServiceError> {
        self.require_admin(caller)?;
        self.register(source)
    }

    pub fn set_active_model(&self, caller: &UserAccount, version_id: &str) -> Result<(), ServiceError> {
        self.require_admin(caller)?;
        self.activate(version_id)
    }

    pub fn active_model(&self) -> Option<String> {
        self.active.read().clone()
    }

    /// Designates the acts that need two distinct approvers.
    pub fn set_four_eyes(&self, caller: &UserAccount, acts: BTreeSet<String>) -> Result<(), ServiceError> {
        self.require_admin(caller)?;
        self.store.put_setting(FOUR_EYES_KEY, &acts)?;
        *self.four_eyes.write() = acts;
        Ok(())
    }

    pub fn four_eyes(&self) -> BTreeSet<String> {
        self.four_eyes.read().clone()
    }

    /// The compiled model of a registered version.
    pub fn model(&self, version_id: &str) -> Result<Arc<Model>, ServiceError> {
        if let Some(m) = self.models.read().get(version_id) {
            return Ok(Arc::clone(m));
        }
        let source = self
            .store
            .model_source(version_id)?
            .ok_or_else(|| ServiceError::NotFound(format!("model `{version_id}`")))?;
        let model = Model::from_source(&source).map_err(|d| {
            ServiceError::Storage(format!("stored model {version_id} no longer compiles: {} errors", d.len()))
        })?;
        let model = Arc::new(model);
        self.models
            .write()
            .insert(version_id.to_string(), Arc::clone(&model));
        Ok(model)
    }

    pub fn get_model(&self, version_id: &str) -> Result<ModelVersion, ServiceError> {
        self.store
            .models()?
            .into_iter()
            .find(|m| m.version_id == version_id)
            .ok_or_else(|| ServiceError::NotFound(format!("model `{version_id}`")))
    }

    pub fn list_models(&self) -> Result<Vec<ModelSummary>, ServiceError> {
        let active = self.active_model();
        let mut out = Vec::new();
        for m in self.store.models()? {
            let declarations = self.model(&m.version_id)?.declarations().len();
            out.push(ModelSummary {
                active: active.as_deref() == Some(m.version_id.as_str()),
                version_id: m.version_id,
                registered_at: m.registered_at,
                declarations,
            });
        }
        out.sort_by(|a, b| (a.registered_at, &a.version_id).cmp(&(b.registered_at, &b.version_id)));
        Ok(out)
    }

    // ---- cases

    fn slot(&self, case_id: &str) -> Result<Arc<Mutex<CaseSlot>>, ServiceError> {
        let mut cases = self.cases.lock();
        if let Some(slot) = cases.get(case_id) {
            return Ok(Arc::clone(slot));
        }
        let record = self
            .store
            .case(case_id)?
            .ok_or_else(|| ServiceError::NotFound(format!("case `{case_id}`")))?;
        let slot = Arc::new(Mutex::new(CaseSlot {
            record,
            reasoner: None,
            unavailable: None,
        }));
        cases.insert(case_id.to_string(), Arc::clone(&slot));
        Ok(slot)
    }

    /// Makes sure the case has a live reasoner, rebuilding it from the latest
    /// snapshot or, failing that, from the event log.
    fn ensure_reasoner<'s>(&self, slot: &'s mut CaseSlot) -> Result<&'s mut ReasonerState, ServiceError> {
        if slot.reasoner.is_none() {
            match self.recover(&slot.record) {
                Ok(state) => {
                    slot.reasoner = Some(state);
                    slot.unavailable = None;
                }
                Err(reason) => {
                    tracing::error!(case_id = %slot.record.case_id, %reason, "case unavailable");
                    slot.unavailable = Some(reason.clone());
                    return Err(ServiceError::Unavailable {
                        case: slot.record.case_id.clone(),
                        reason,
                    });
                }
            }
        }
        Ok(slot.reasoner.as_mut().expect("reasoner present"))
    }

    fn recover(&self, record: &CaseRecord) -> Result<ReasonerState, String> {
        let case_id = record.case_id.as_str();
        let model = self.model(&record.model_version_id).map_err(|e| e.to_string())?;
        let log = self.store.events(case_id).map_err(|e| e.to_string())?;
        let inputs: Vec<InputEvent> = log.iter().filter_map(|e| e.payload.clone()).collect();
        let snapshot = self.store.snapshot(&record.snapshot_ref).map_err(|e| e.to_string())?;
        let restored = match snapshot {
            Some(text) => ReasonerState::restore(Arc::clone(&model), &text).map_err(|e| e.to_string()),
            None => Err("no snapshot".to_string()),
        };
        let snapshot_error = match restored {
            Ok(state) if state.input_events() == inputs => return Ok(state),
            Ok(_) => "snapshot disagrees with the event log".to_string(),
            Err(e) => e,
        };
        tracing::warn!(case_id, reason = %snapshot_error, "rebuilding case from its event log");
        match ReasonerState::replay(model, &inputs) {
            Ok(state) => {
                if let Err(e) = self.store.put_snapshot(&record.snapshot_ref, &state.snapshot()) {
                    tracing::warn!(case_id, error = %e, "could not refresh snapshot");
                }
                Ok(state)
            }
            Err(e) => Err(format!("snapshot: {snapshot_error}; replay: {e}")),
        }
    }

    pub fn create_case(&self, caller: &UserAccount, client_ref: &str) -> Result<CaseRecord, ServiceError> {
        self.require(caller, "create cases", |p| p.manage_cases)?;
        let version = self.active_model().ok_or(ServiceError::NoActiveModel)?;
        let model = self.model(&version)?;
        let state = ReasonerState::new(model)?;
        let case_id = uuid::Uuid::new_v4().simple().to_string();
        let record = CaseRecord {
            snapshot_ref: format!("case/{case_id}"),
            case_id: case_id.clone(),
            client_ref: client_ref.to_string(),
            model_version_id: version,
            status: CaseStatus::Open,
            created_at: self.now(),
            closed_at: None,
            event_count: 0,
        };
        self.store.put_snapshot(&record.snapshot_ref, &state.snapshot())?;
        self.store.put_case(&record)?;
        self.cases.lock().insert(
            case_id,
            Arc::new(Mutex::new(CaseSlot {
                record: record.clone(),
                reasoner: Some(state),
                unavailable: None,
            })),
        );
        Ok(record)
    }

    pub fn case(&self, case_id: &str) -> Result<CaseRecord, ServiceError> {
        Ok(self.slot(case_id)?.lock().record.clone())
    }

    /// Cases matching every given filter, in a total order.
    pub fn list_cases(&self, filter: &CaseFilter) -> Result<Vec<CaseRecord>, ServiceError> {
        let (key, descending) = parse_sort(filter.sort.as_deref())?;
        let needle = filter.q.as_ref().map(|q| q.to_lowercase());
        let mut cases: Vec<CaseRecord> = self
            .store
            .cases()?
            .into_iter()
            .filter(|c| filter.status.is_none_or(|s| c.status == s))
            .filter(|c| filter.client.as_ref().is_none_or(|r| &c.client_ref == r))
            .filter(|c| {
                needle.as_ref().is_none_or(|n| {
                    c.case_id.to_lowercase().contains(n) || c.client_ref.to_lowercase().contains(n)
                })
            })
            .collect();
        cases.sort_by(|a, b| {
            let primary = match key {
                SortKey::CreatedAt => a.created_at.cmp(&b.created_at),
                SortKey::Status => a.status.cmp(&b.status),
            };
            let primary = if descending { primary.reverse() } else { primary };
            primary.then_with(|| a.case_id.cmp(&b.case_id))
        });
        Ok(cases)
    }

    pub fn case_view(&self, caller: &UserAccount, case_id: &str) -> Result<CaseView, ServiceError> {
        let slot = self.slot(case_id)?;
        let mut slot = slot.lock();
        self.ensure_reasoner(&mut slot)?;
        Ok(self.build_view(caller, &slot))
    }

    fn build_view(&self, caller: &UserAccount, slot: &CaseSlot) -> CaseView {
        let state = slot.reasoner.as_ref().expect("reasoner present");
        let model = state.model();
        let open = slot.record.status == CaseStatus::Open;
        let four_eyes = self.four_eyes.read();
        let approvals = self.approvals.lock();

        let fact_slots = model
            .fact_types()
            .map(|d| {
                let (value, instances) = if d.domain == Domain::NoArg {
                    (Some(SlotValue::Truth(state.truth_of(&Instance::unit(&d.name)))), Vec::new())
                } else if d.kind.is_single_instance() {
                    let held = state.held(&d.name).and_then(|i| i.arg.clone());
                    (held.map(SlotValue::Literal), Vec::new())
                } else {
                    let instances = state
                        .base_facts()
                        .iter()
                        .filter(|(i, _)| i.type_name == d.name)
                        .filter_map(|(i, v)| {
                            i.arg.clone().map(|arg| HeldInstance { arg, value: *v })
                        })
                        .collect();
                    (None, instances)
                };
                FactSlot {
                    type_name: d.name.clone(),
                    kind: d.kind.keyword().to_string(),
                    domain: d.domain,
                    openness: d.effective_openness(),
                    derived: d.is_derived(),
                    widget: Widget::for_domain(d.domain),
                    value,
                    instances,
                }
            })
            .collect();

        let actions = state
            .act_statuses()
            .into_iter()
            .map(|status| {
                let permitted = self.may_perform(caller, &status.act);
                let pending_approval_by = approvals
                    .iter()
                    .filter(|(k, _)| k.case_id == slot.record.case_id && k.act == status.act)
                    .map(|(_, who)| who.clone())
                    .min();
                ActionEntry {
                    permitted,
                    executable: open && permitted,
                    four_eyes: four_eyes.contains(&status.act),
                    pending_approval_by,
                    status,
                }
            })
            .collect();

        CaseView {
            case: slot.record.clone(),
            fact_slots,
            actions,
            duties: state.active_duties().to_vec(),
            violations: state.violations().to_vec(),
            trace_length: state.seq(),
        }
    }

    /// Appends a log event for an already computed next state, then installs
    /// the state and refreshes the snapshot.
    fn commit(
        &self,
        slot: &mut CaseSlot,
        kind: CaseEventKind,
        user: &UserAccount,
        payload: Option<InputEvent>,
        approved_by: Option<String>,
        next: Option<ReasonerState>,
    ) -> Result<(), ServiceError> {
        let now = self.now();
        let mut record = slot.record.clone();
        record.event_count += 1;
        if kind == CaseEventKind::CaseClosed {
            record.status = CaseStatus::Closed;
            record.closed_at = Some(now);
        }
        let event = CaseEvent {
            case_id: record.case_id.clone(),
            seq: record.event_count,
            kind,
            user_id: user.user_id.clone(),
            payload,
            approved_by,
            at: now,
        };
        self.store.append_event(&event, &record)?;
        slot.record = record;
        if let Some(next) = next {
            slot.reasoner = Some(next);
            let state = slot.reasoner.as_ref().expect("reasoner present");
            // the log is already durable; a stale snapshot is repaired on recovery
            if let Err(e) = self.store.put_snapshot(&slot.record.snapshot_ref, &state.snapshot()) {
                tracing::warn!(case_id = %slot.record.case_id, error = %e, "snapshot write failed");
            }
        }
        Ok(())
    }

    fn open_slot(&self, case_id: &str) -> Result<Arc<Mutex<CaseSlot>>, ServiceError> {
        let slot = self.slot(case_id)?;
        if slot.lock().record.status == CaseStatus::Closed {
            return Err(ServiceError::CaseClosed(case_id.to_string()));
        }
        Ok(slot)
    }

    pub fn update_fact(
        &self,
        caller: &UserAccount,
        case_id: &str,
        update: &FactUpdate,
    ) -> Result<CaseView, ServiceError> {
        self.require(caller, "edit facts", |p| p.edit_facts)?;
        let slot = self.open_slot(case_id)?;
        let mut slot = slot.lock();
        if slot.record.status == CaseStatus::Closed {
            return Err(ServiceError::CaseClosed(case_id.to_string()));
        }
        let state = self.ensure_reasoner(&mut slot)?;
        let (instance, value) = interpret_update(state.model(), update)?;
        let mut next = state.clone();
        next.set_fact(instance.clone(), value)?;
        self.commit(
            &mut slot,
            CaseEventKind::FactSet,
            caller,
            Some(InputEvent::set(instance, value)),
            None,
            Some(next),
        )?;
        Ok(self.build_view(caller, &slot))
    }

    pub fn perform_act(
        &self,
        caller: &UserAccount,
        case_id: &str,
        command: &ActCommand,
    ) -> Result<ActOutcome, ServiceError> {
        if !self.may_perform(caller, &command.act) {
            return Err(ServiceError::PermissionDenied(format!(
                "{} may not perform `{}`",
                caller.user_id, command.act
            )));
        }
        let slot = self.open_slot(case_id)?;
        let mut slot = slot.lock();
        if slot.record.status == CaseStatus::Closed {
            return Err(ServiceError::CaseClosed(case_id.to_string()));
        }
        // a four-eyes act is pending until a second, different user repeats it;
        // without an explicit actor the first approver performs it
        let four_eyes = self.four_eyes.read().contains(&command.act);
        let key = ApprovalKey {
            case_id: case_id.to_string(),
            act: command.act.clone(),
            actor: command.actor.clone(),
            recipient: command.recipient.clone(),
        };
        let first_approver = if four_eyes {
            self.approvals.lock().get(&key).cloned()
        } else {
            None
        };
        if let Some(first) = &first_approver {
            if *first == caller.user_id {
                return Err(ServiceError::SameApprover(first.clone()));
            }
        }
        let default_actor = first_approver.as_ref().unwrap_or(&caller.user_id);
        let request = ActRequest {
            act: command.act.clone(),
            actor: command
                .actor
                .clone()
                .unwrap_or_else(|| Literal::Str(default_actor.clone())),
            recipient: command.recipient.clone(),
        };
        let state = self.ensure_reasoner(&mut slot)?;
        let mut next = state.clone();
        let report = next.execute_act(&request, command.confirm_violation)?;
        if !report.executed() {
            return Ok(ActOutcome::ConfirmationRequired { report });
        }
        if four_eyes && first_approver.is_none() {
            self.approvals.lock().insert(key, caller.user_id.clone());
            return Ok(ActOutcome::PendingApproval {
                first_approver: caller.user_id.clone(),
            });
        }
        let approved_by = first_approver;

        self.commit(
            &mut slot,
            CaseEventKind::ActExecuted,
            caller,
            Some(InputEvent::act(&request, command.confirm_violation)),
            approved_by.clone(),
            Some(next),
        )?;
        if approved_by.is_some() {
            self.approvals.lock().remove(&key);
        }
        Ok(ActOutcome::Executed {
            view: Box::new(self.build_view(caller, &slot)),
            report,
        })
    }

    /// Projects an act on a copy of the case; nothing is stored.
    pub fn simulate(
        &self,
        caller: &UserAccount,
        case_id: &str,
        act: &str,
        actor: Option<Literal>,
        recipient: Option<Literal>,
    ) -> Result<WhatIfReport, ServiceError> {
        let slot = self.slot(case_id)?;
        let mut slot = slot.lock();
        let state = self.ensure_reasoner(&mut slot)?;
        let request = ActRequest {
            act: act.to_string(),
            actor: actor.unwrap_or_else(|| Literal::Str(caller.user_id.clone())),
            recipient,
        };
        Ok(state.what_if(&request)?)
    }

    /// The reasoner's explanation, with the user and time of each input taken
    /// from the event log. Consequences of an input inherit its user.
    pub fn trace(&self, case_id: &str) -> Result<Vec<TraceEntry>, ServiceError> {
        let slot = self.slot(case_id)?;
        let mut slot = slot.lock();
        let case = slot.record.case_id.clone();
        let state = self.ensure_reasoner(&mut slot)?;
        let log = self.store.events(&case)?;
        let mut inputs = log.iter().filter(|e| e.payload.is_some());
        let mut current: Option<&CaseEvent> = None;
        let mut out = Vec::with_capacity(state.trace().len());
        for event in state.trace() {
            if event.event.is_input() {
                current = inputs.next();
            } else if matches!(event.event, TraceKind::InitStatement { .. }) {
                current = None;
            }
            let e = explain_event(event);
            out.push(TraceEntry {
                seq: e.seq,
                kind: e.kind,
                summary: e.summary,
                user_id: current.map(|c| c.user_id.clone()),
                at: current.map(|c| c.at),
            });
        }
        Ok(out)
    }

    pub fn close_case(&self, caller: &UserAccount, case_id: &str) -> Result<CaseRecord, ServiceError> {
        self.require(caller, "close cases", |p| p.manage_cases)?;
        let slot = self.open_slot(case_id)?;
        let mut slot = slot.lock();
        if slot.record.status == CaseStatus::Closed {
            return Err(ServiceError::CaseClosed(case_id.to_string()));
        }
        self.commit(&mut slot, CaseEventKind::CaseClosed, caller, None, None, None)?;
        self.approvals.lock().retain(|k, _| k.case_id != case_id);
        Ok(slot.record.clone())
    }

    /// Drops the in-memory reasoner of a case, as if it had crashed.
    pub fn evict_reasoner(&self, case_id: &str) -> Result<(), ServiceError> {
        self.slot(case_id)?.lock().reasoner = None;
        Ok(())
    }

    /// Whether the last recovery attempt for the case failed.
    pub fn unavailable_reason(&self, case_id: &str) -> Result<Option<String>, ServiceError> {
        Ok(self.slot(case_id)?.lock().unavailable.clone())
    }

    /// Runs `f` on the live reasoner of a case without logging anything.
    /// Meant for diagnostics and tests.
    pub fn with_live_reasoner<T>(
        &self,
        case_id: &str,
        f: impl FnOnce(&mut ReasonerState) -> T,
    ) -> Result<T, ServiceError> {
        let slot = self.slot(case_id)?;
        let mut slot = slot.lock();
        Ok(f(self.ensure_reasoner(&mut slot)?))
    }

    /// Starts a reasoner for every stored case. Returns the ids of cases that
    /// could not be recovered.
    pub fn warm_all(&self) -> Result<Vec<String>, ServiceError> {
        let mut failed = Vec::new();
        for record in self.store.cases()? {
            let slot = self.slot(&record.case_id)?;
            let mut slot = slot.lock();
            if self.ensure_reasoner(&mut slot).is_err() {
                failed.push(record.case_id);
            }
        }
        Ok(failed)
    }
}

fn check_roles(auth: &Auth, roles: &BTreeSet<String>) -> Result<(), ServiceError> {
    match roles
        .iter()
        .find(|r| r.as_str() != ADMIN_ROLE && !auth.roles.contains_key(*r))
    {
        Some(r) => Err(ServiceError::BadRequest(format!("unknown role `{r}`"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy)]
enum SortKey {
    CreatedAt,
    Status,
}

fn parse_sort(sort: Option<&str>) -> Result<(SortKey, bool), ServiceError> {
    let Some(sort) = sort else {
        return Ok((SortKey::CreatedAt, false));
    };
    let (field, dir) = sort.split_once(':').unwrap_or((sort, "asc"));
    let key = match field {
        "createdAt" => SortKey::CreatedAt,
        "status" => SortKey::Status,
        other => return Err(ServiceError::BadRequest(format!("cannot sort by `{other}`"))),
    };
    match dir {
        "asc" => Ok((key, false)),
        "desc" => Ok((key, true)),
        other => Err(ServiceError::BadRequest(format!("unknown sort direction `{other}`"))),
    }
}

fn truth_from_json(v: &serde_json::Value) -> Option<TruthValue> {
    match v {
        serde_json::Value::Bool(b) => Some((*b).into()),
        serde_json::Value::Null => Some(TruthValue::Unknown),
        serde_json::Value::String(s) => match s.as_str() {
            "true" => Some(TruthValue::True),
            "false" => Some(TruthValue::False),
            "unknown" => Some(TruthValue::Unknown),
            _ => None,
        },
        _ => None,
    }
}

fn literal_from_json(v: &serde_json::Value) -> Option<Literal> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(Literal::Int),
        serde_json::Value::String(s) => Some(Literal::Str(s.clone())),
        _ => None,
    }
}

/// Turns a fact update into the instance and value to store. A Var may be
/// given its value directly as `value`.
fn interpret_update(model: &Model, update: &FactUpdate) -> Result<(Instance, TruthValue), ServiceError> {
    let decl = model
        .decl(&update.type_name)
        .ok_or_else(|| ServiceError::NotFound(format!("fact type `{}`", update.type_name)))?;
    if !decl.kind.is_fact_type() {
        return Err(invalid_fact(format!("`{}` is not a fact type", decl.name)));
    }
    if let Some(tv) = truth_from_json(&update.value) {
        if update.arg.is_none() && decl.domain != Domain::NoArg && tv != TruthValue::Unknown {
            return Err(invalid_fact(format!("`{}` needs an argument", decl.name)));
        }
        return Ok((Instance::new(&decl.name, update.arg.clone()), tv));
    }
    if decl.kind == DeclKind::Var && decl.domain != Domain::NoArg && update.arg.is_none() {
        if let Some(lit) = literal_from_json(&update.value) {
            if !lit.fits(decl.domain) {
                return Err(invalid_fact(format!("{lit} does not fit `{}`", decl.name)));
            }
            return Ok((Instance::with_arg(&decl.name, lit), TruthValue::True));
        }
    }
    Err(invalid_fact(format!(
        "`{}` cannot be set to {}",
        decl.name, update.value
    )))
}
