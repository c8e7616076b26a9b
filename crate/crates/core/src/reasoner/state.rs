use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::eval::Evaluator;
use super::logic::TruthValue;
use super::model::Model;
use super::types::*;
use crate::lang::{
    DeclKind, Declaration, Expr, InstanceTemplate, Literal, Openness, StatementKind, TemplateArg,
};

/// The state of one case: base-fact assignments, active duties, recorded
/// violations and the append-only trace that produced them.
#[derive(Debug, Clone)]
pub struct ReasonerState {
    pub(crate) model: Arc<Model>,
    pub(crate) facts: BTreeMap<Instance, TruthValue>,
    pub(crate) duties: Vec<DutyInstance>,
    pub(crate) violations: Vec<Violation>,
    pub(crate) trace: Vec<TraceEvent>,
}

impl PartialEq for ReasonerState {
    fn eq(&self, other: &Self) -> bool {
        self.model.version() == other.model.version()
            && self.facts == other.facts
            && self.duties == other.duties
            && self.violations == other.violations
            && self.trace == other.trace
    }
}

impl ReasonerState {
    /// Fresh state with the model's initial statements applied.
    pub fn new(model: Arc<Model>) -> Result<ReasonerState, ReasonerError> {
        let mut state = ReasonerState {
            model,
            facts: BTreeMap::new(),
            duties: Vec::new(),
            violations: Vec::new(),
            trace: Vec::new(),
        };
        let statements = state.model.spec().statements.clone();
        for stmt in &statements {
            let mut changes = Vec::new();
            let invalid = || ReasonerError::InvalidStatement(stmt.to_string());
            match &stmt.kind {
                StatementKind::Create { type_name, args } => {
                    let inst = Instance::new(type_name, args.first().cloned());
                    state.check_storable(&inst).map_err(|_| invalid())?;
                    state.store(inst, TruthValue::True, &mut changes);
                }
                StatementKind::Terminate { type_name, args } => {
                    let inst = Instance::new(type_name, args.first().cloned());
                    state.check_storable(&inst).map_err(|_| invalid())?;
                    state.store(inst, TruthValue::False, &mut changes);
                }
                StatementKind::Assign { type_name, value } => {
                    let decl = state.model.decl(type_name).ok_or_else(invalid)?;
                    let (inst, tv) = match (decl.kind, value) {
                        (DeclKind::Bool, Literal::Bool(b)) => (Instance::unit(type_name), (*b).into()),
                        (DeclKind::Var, l) if l.fits(decl.domain) => {
                            (Instance::new(type_name, Some(l.clone())), TruthValue::True)
                        }
                        _ => return Err(invalid()),
                    };
                    state.store(inst, tv, &mut changes);
                }
            }
            state.push(TraceKind::InitStatement {
                statement: stmt.to_string(),
                changes,
            });
        }
        Ok(state)
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn seq(&self) -> u64 {
        self.trace.len() as u64
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn active_duties(&self) -> &[DutyInstance] {
        &self.duties
    }

    /// Explicit base-fact assignments. Closed facts that are false are absent.
    pub fn base_facts(&self) -> &BTreeMap<Instance, TruthValue> {
        &self.facts
    }

    fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(&self.model, &self.facts)
    }

    pub fn truth_of(&self, inst: &Instance) -> TruthValue {
        self.evaluator().truth(inst)
    }

    pub fn evaluate(&self, expr: &Expr, binding: &Binding) -> Result<TruthValue, EvalError> {
        self.evaluator().eval_truth(expr, binding)
    }

    /// The instance a Var or Bool type currently holds, if any.
    pub fn held(&self, type_name: &str) -> Option<&Instance> {
        self.evaluator().held(type_name)
    }

    /// Status of every physical act with Actor and Recipient unbound. Clauses
    /// that mention a placeholder are reported as unknown.
    pub fn act_statuses(&self) -> Vec<ActStatus> {
        self.act_statuses_for(&Binding::default())
    }

    pub fn act_statuses_for(&self, binding: &Binding) -> Vec<ActStatus> {
        self.model
            .physical_acts()
            .map(|p| self.status_of(p, binding))
            .collect()
    }

    pub fn act_status(&self, act: &str, binding: &Binding) -> Result<ActStatus, ReasonerError> {
        let decl = self.physical(act)?;
        Ok(self.status_of(decl, binding))
    }

    fn physical(&self, act: &str) -> Result<&Declaration, ReasonerError> {
        let decl = self
            .model
            .decl(act)
            .filter(|d| d.kind.is_act())
            .ok_or_else(|| ReasonerError::UnknownAct(act.to_string()))?;
        if decl.kind != DeclKind::PhysicalAct {
            return Err(ReasonerError::NotPhysical(act.to_string()));
        }
        Ok(decl)
    }

    fn status_of(&self, physical: &Declaration, binding: &Binding) -> ActStatus {
        let institutional = self
            .model
            .institutional_of(physical)
            .expect("validated physical act syncs with an act");
        let eval = self.evaluator();
        let reasons: Vec<Reason> = [institutional, physical]
            .into_iter()
            .flat_map(|d| d.preconditions().map(move |(clause, e)| (d, clause, e)))
            .map(|(d, clause, e)| Reason {
                act: d.name.clone(),
                clause,
                condition: e.to_string(),
                value: eval.eval_truth(e, binding).unwrap_or(TruthValue::Unknown),
            })
            .collect();
        ActStatus {
            act: physical.name.clone(),
            institutional: institutional.name.clone(),
            physical: true,
            status: Enablement::from_clauses(reasons.iter().map(|r| r.value)),
            reasons,
        }
    }

    fn check_storable(&self, inst: &Instance) -> Result<&Declaration, ReasonerError> {
        let decl = self
            .model
            .decl(&inst.type_name)
            .ok_or_else(|| ReasonerError::UnknownType(inst.type_name.clone()))?;
        if !decl.kind.is_fact_type() {
            return Err(ReasonerError::NotAFact(inst.type_name.clone()));
        }
        if decl.is_derived() {
            return Err(ReasonerError::DerivedFact(inst.type_name.clone()));
        }
        let ok = match &inst.arg {
            None => decl.domain.arity() == 0,
            Some(l) => l.fits(decl.domain),
        };
        if !ok {
            return Err(ReasonerError::Arity {
                type_name: inst.type_name.clone(),
                expected: decl.domain.arity(),
                found: inst.arg.as_ref().map_or("none".into(), |l| l.to_string()),
            });
        }
        Ok(decl)
    }

    fn assign(&mut self, inst: Instance, value: Option<TruthValue>, changes: &mut Vec<FactChange>) {
        let before = self.facts.get(&inst).copied();
        if before == value {
            return;
        }
        match value {
            Some(v) => self.facts.insert(inst.clone(), v),
            None => self.facts.remove(&inst),
        };
        changes.push(FactChange {
            instance: inst,
            before,
            after: value,
        });
    }

    /// Writes a base-fact value, applying the single-instance rule and
    /// keeping closed-world falsity implicit.
    fn store(&mut self, inst: Instance, value: TruthValue, changes: &mut Vec<FactChange>) {
        let decl = self.model.decl(&inst.type_name).expect("checked type");
        let single = decl.kind.is_single_instance();
        let closed = decl.effective_openness() == Openness::Closed;
        let siblings = |s: &Self| -> Vec<Instance> {
            s.evaluator()
                .assigned(&inst.type_name)
                .map(|(k, _)| k.clone())
                .filter(|k| *k != inst)
                .collect()
        };
        if single {
            // at most one instance of the type carries an assignment; another
            // instance holding already makes this one false
            let held_elsewhere = self
                .evaluator()
                .held(&inst.type_name)
                .is_some_and(|h| *h != inst);
            if value == TruthValue::False && held_elsewhere {
                return;
            }
            for other in siblings(self) {
                self.assign(other, None, changes);
            }
        }
        match value {
            TruthValue::Unknown => self.assign(inst, None, changes),
            TruthValue::True => self.assign(inst, Some(TruthValue::True), changes),
            TruthValue::False if closed => self.assign(inst, None, changes),
            TruthValue::False => self.assign(inst, Some(TruthValue::False), changes),
        }
    }

    fn push(&mut self, event: TraceKind) -> u64 {
        let seq = self.seq() + 1;
        self.trace.push(TraceEvent { seq, event });
        seq
    }

    /// Sets a base fact. For Var and Bool types, `Unknown` clears the type and
    /// the argument may then be omitted.
    pub fn set_fact(&mut self, inst: Instance, value: TruthValue) -> Result<Vec<TraceEvent>, ReasonerError> {
        let decl = match self.check_storable(&inst) {
            Ok(d) => d,
            Err(ReasonerError::Arity { .. })
                if inst.arg.is_none() && value == TruthValue::Unknown =>
            {
                let d = self.model.decl(&inst.type_name).expect("checked type");
                if !d.kind.is_single_instance() {
                    return Err(ReasonerError::Arity {
                        type_name: inst.type_name.clone(),
                        expected: d.domain.arity(),
                        found: "none".into(),
                    });
                }
                d
            }
            Err(e) => return Err(e),
        };
        let single = decl.kind.is_single_instance();
        let start = self.trace.len();
        let mut changes = Vec::new();
        if single && value == TruthValue::Unknown {
            let all: Vec<Instance> = self
                .evaluator()
                .assigned(&inst.type_name)
                .map(|(k, _)| k.clone())
                .collect();
            for other in all {
                self.assign(other, None, &mut changes);
            }
        } else {
            self.store(inst.clone(), value, &mut changes);
        }
        let seq = self.push(TraceKind::FactSet {
            instance: inst,
            value,
            changes,
        });
        self.check_duty_violations(seq);
        Ok(self.trace[start..].to_vec())
    }

    /// Executes a physical act. When the act is not enabled and `confirm` is
    /// false nothing changes and the outcome is `RequiresConfirmation`.
    pub fn execute_act(&mut self, req: &ActRequest, confirm: bool) -> Result<ExecutionReport, ReasonerError> {
        let physical = self.physical(&req.act)?.clone();
        let institutional = self
            .model
            .institutional_of(&physical)
            .expect("validated physical act syncs with an act")
            .clone();
        if req.recipient.is_none()
            && (physical.recipient_param.is_some() || institutional.recipient_param.is_some())
        {
            return Err(ReasonerError::MissingRecipient(req.act.clone()));
        }
        let binding = req.binding();
        let status = self.status_of(&physical, &binding);
        if status.status != Enablement::Enabled && !confirm {
            return Ok(ExecutionReport {
                outcome: Outcome::RequiresConfirmation,
                status,
                changes: Vec::new(),
                duties_created: Vec::new(),
                duties_terminated: Vec::new(),
                violations: Vec::new(),
                events: Vec::new(),
            });
        }

        let mut next = self.clone();
        let start = next.trace.len();
        let seq = next.seq() + 1;
        let before: BTreeSet<DutyRef> = next.duties.iter().map(DutyInstance::key).collect();
        let mut changes = Vec::new();
        let mut follow = Vec::new();

        for decl in [&institutional, &physical] {
            for t in &decl.terminates {
                if next.is_duty(t) {
                    let key = duty_ref(t, &binding)?;
                    if next.remove_duty(&key) {
                        follow.push(TraceKind::DutyTerminated {
                            duty: key,
                            cause: TerminationCause::Terminates(decl.name.clone()),
                        });
                    }
                } else {
                    let inst = Evaluator::resolve_template(t, &binding)?;
                    if next.truth_of(&inst) == TruthValue::True {
                        next.store(inst, TruthValue::False, &mut changes);
                    }
                }
            }
        }
        for decl in [&institutional, &physical] {
            for t in &decl.creates {
                if next.is_duty(t) {
                    let key = duty_ref(t, &binding)?;
                    if !next.duties.iter().any(|d| d.key() == key) {
                        next.duties.push(DutyInstance {
                            type_name: key.type_name.clone(),
                            holder: key.holder.clone(),
                            claimant: key.claimant.clone(),
                            created_at_seq: seq,
                            violated: false,
                        });
                        follow.push(TraceKind::DutyCreated { duty: key });
                    }
                } else {
                    let inst = Evaluator::resolve_template(t, &binding)?;
                    next.store(inst, TruthValue::True, &mut changes);
                }
            }
        }

        next.push(TraceKind::ActExecuted {
            act: req.clone(),
            institutional: institutional.name.clone(),
            confirmed: confirm,
            status: status.status,
            changes: changes.clone(),
        });
        for event in follow {
            next.push(event);
        }

        if status.status != Enablement::Enabled {
            let violation = Violation::NonCompliantAct {
                act: req.clone(),
                institutional: institutional.name.clone(),
                status: status.status,
                at_seq: seq,
            };
            next.violations.push(violation.clone());
            next.push(TraceKind::ViolationRaised { violation });
        }

        let names = [institutional.name.as_str(), physical.name.as_str()];
        let model = Arc::clone(&next.model);
        let mut discharged = Vec::new();
        next.duties.retain(|d| {
            let key = d.key();
            let decl = model.decl(&d.type_name).expect("duty type exists");
            let hit = before.contains(&key)
                && d.holder == req.actor
                && names
                    .iter()
                    .find(|n| decl.terminated_by.iter().any(|t| t == *n))
                    .map(|n| discharged.push((key, n.to_string())))
                    .is_some();
            !hit
        });
        for (duty, act) in discharged {
            next.push(TraceKind::DutyTerminated {
                duty,
                cause: TerminationCause::TerminatedBy(act),
            });
        }

        next.check_duty_violations(seq);

        let events = next.trace[start..].to_vec();
        let mut report = ExecutionReport {
            outcome: Outcome::Executed,
            status,
            changes,
            duties_created: Vec::new(),
            duties_terminated: Vec::new(),
            violations: Vec::new(),
            events: Vec::new(),
        };
        for e in &events {
            match &e.event {
                TraceKind::DutyCreated { duty } => report.duties_created.push(duty.clone()),
                TraceKind::DutyTerminated { duty, .. } => report.duties_terminated.push(duty.clone()),
                TraceKind::ViolationRaised { violation } => report.violations.push(violation.clone()),
                _ => {}
            }
        }
        report.events = events;
        *self = next;
        Ok(report)
    }

    /// Projects the effect of executing an act, confirming it if necessary,
    /// without changing this state.
    pub fn what_if(&self, req: &ActRequest) -> Result<WhatIfReport, ReasonerError> {
        let mut copy = self.clone();
        let report = copy.execute_act(req, true)?;
        Ok(WhatIfReport {
            report,
            statuses_after: copy.act_statuses_for(&req.binding()),
            duties_after: copy.duties,
        })
    }

    fn is_duty(&self, t: &InstanceTemplate) -> bool {
        self.model
            .decl(&t.type_name)
            .is_some_and(|d| d.kind == DeclKind::Duty)
    }

    fn remove_duty(&mut self, key: &DutyRef) -> bool {
        let len = self.duties.len();
        self.duties.retain(|d| d.key() != *key);
        self.duties.len() != len
    }

    /// Records a violation for every active duty whose `Violated when` clause
    /// has become true. Each duty instance is reported at most once.
    fn check_duty_violations(&mut self, at_seq: u64) {
        let mut raised = Vec::new();
        for (i, duty) in self.duties.iter().enumerate() {
            if duty.violated {
                continue;
            }
            let Some(cond) = self
                .model
                .decl(&duty.type_name)
                .and_then(|d| d.violated_when.as_ref())
            else {
                continue;
            };
            let binding = Binding {
                actor: Some(duty.holder.clone()),
                recipient: Some(duty.claimant.clone()),
            };
            if self.evaluate(cond, &binding) == Ok(TruthValue::True) {
                raised.push(i);
            }
        }
        for i in raised {
            self.duties[i].violated = true;
            let violation = Violation::DutyViolation {
                duty: self.duties[i].key(),
                at_seq,
            };
            self.violations.push(violation.clone());
            self.push(TraceKind::ViolationRaised { violation });
        }
    }

    /// The external inputs recorded in the trace, in order.
    pub fn input_events(&self) -> Vec<InputEvent> {
        self.trace
            .iter()
            .filter_map(|e| match &e.event {
                TraceKind::FactSet { instance, value, .. } => {
                    Some(InputEvent::set(instance.clone(), *value))
                }
                TraceKind::ActExecuted { act, confirmed, .. } => Some(InputEvent::act(act, *confirmed)),
                _ => None,
            })
            .collect()
    }

    /// Applies one input event.
    pub fn apply(&mut self, event: &InputEvent) -> Result<Vec<TraceEvent>, ReasonerError> {
        match event {
            InputEvent::FactSet { instance, value } => self.set_fact(instance.clone(), *value),
            InputEvent::ActExecuted {
                act,
                actor,
                recipient,
                confirmed,
            } => {
                let req = ActRequest {
                    act: act.clone(),
                    actor: actor.clone(),
                    recipient: recipient.clone(),
                };
                let report = self.execute_act(&req, *confirmed)?;
                if report.executed() {
                    Ok(report.events)
                } else {
                    Err(ReasonerError::ReplayDiverged {
                        index: 0,
                        reason: format!("`{act}` is {:?} and was not confirmed", report.status.status),
                    })
                }
            }
        }
    }

    /// Rebuilds a state by applying input events to a fresh state.
    pub fn replay(model: Arc<Model>, events: &[InputEvent]) -> Result<ReasonerState, ReasonerError> {
        let mut state = ReasonerState::new(model)?;
        for (index, event) in events.iter().enumerate() {
            state.apply(event).map_err(|e| match e {
                ReasonerError::UnknownType(t) | ReasonerError::UnknownAct(t) => {
                    ReasonerError::IncompatibleModel(format!("event {index} refers to unknown `{t}`"))
                }
                ReasonerError::ReplayDiverged { reason, .. } => {
                    ReasonerError::ReplayDiverged { index, reason }
                }
                other => ReasonerError::ReplayDiverged {
                    index,
                    reason: other.to_string(),
                },
            })?;
        }
        Ok(state)
    }
}

fn duty_ref(t: &InstanceTemplate, b: &Binding) -> Result<DutyRef, EvalError> {
    let (holder, claimant) = match t.args.as_slice() {
        [] => (
            Evaluator::resolve_arg(&TemplateArg::Actor, b)?,
            Evaluator::resolve_arg(&TemplateArg::Recipient, b)?,
        ),
        [h, c] => (Evaluator::resolve_arg(h, b)?, Evaluator::resolve_arg(c, b)?),
        _ => {
            return Err(EvalError::IllTyped(format!(
                "duty `{}` takes 0 or 2 arguments",
                t.type_name
            )))
        }
    };
    Ok(DutyRef {
        type_name: t.type_name.clone(),
        holder,
        claimant,
    })
}
