#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use normcase_core::fixtures::QUITTANCE;
use normcase_service::*;
use tempfile::TempDir;

pub const ADMIN_TOKEN: &str = "admin-secret";

pub struct Harness {
    pub dir: TempDir,
    pub service: CaseService,
    pub admin: UserAccount,
}

/// A clock that advances one second per reading.
pub fn ticking_clock() -> Clock {
    let t = Arc::new(AtomicI64::new(1_700_000_000));
    Arc::new(move || -> DateTime<Utc> {
        Utc.timestamp_opt(t.fetch_add(1, Ordering::SeqCst), 0).unwrap()
    })
}

pub fn config(dir: &TempDir) -> ServiceConfig {
    ServiceConfig {
        store_dir: dir.path().to_path_buf(),
        admin_token: Some(ADMIN_TOKEN.into()),
        bootstrap_model: None,
    }
}

pub fn user(id: &str, roles: &[&str]) -> UserAccount {
    UserAccount {
        user_id: id.into(),
        display_name: id.to_uppercase(),
        roles: roles.iter().map(|r| r.to_string()).collect(),
        token: format!("{id}-token"),
    }
}

pub fn perms(acts: &[&str], edit_facts: bool, manage_cases: bool) -> RolePermissions {
    RolePermissions {
        acts: acts.iter().map(|a| a.to_string()).collect::<BTreeSet<_>>(),
        edit_facts,
        manage_cases,
    }
}

impl Harness {
    /// A service with the fixture active, a `clerk` role allowed everything,
    /// an `intake` role limited to submitting, and users alice, bob (clerks)
    /// and carol (intake).
    pub fn new() -> Harness {
        let dir = tempfile::tempdir().unwrap();
        let service = CaseService::open_with_clock(&config(&dir), ticking_clock()).unwrap();
        let admin = service.authenticate(ADMIN_TOKEN).unwrap();
        let version = service.register_model(&admin, QUITTANCE).unwrap();
        service.set_active_model(&admin, &version.version_id).unwrap();
        service
            .set_role_permissions(&admin, "clerk", perms(&["*"], true, true))
            .unwrap();
        service
            .set_role_permissions(&admin, "intake", perms(&["submit-application"], true, false))
            .unwrap();
        for u in [user("alice", &["clerk"]), user("bob", &["clerk"]), user("carol", &["intake"])] {
            service.create_user(&admin, u).unwrap();
        }
        Harness { dir, service, admin }
    }

    pub fn reopen(self) -> Harness {
        let Harness { dir, service, .. } = self;
        drop(service);
        let service = CaseService::open_with_clock(&config(&dir), ticking_clock()).unwrap();
        let admin = service.authenticate(ADMIN_TOKEN).unwrap();
        Harness { dir, service, admin }
    }

    pub fn who(&self, id: &str) -> UserAccount {
        self.service.user(id).unwrap()
    }

    pub fn new_case(&self, client: &str) -> String {
        self.service
            .create_case(&self.who("alice"), client)
            .unwrap()
            .case_id
    }

    pub fn set(&self, case: &str, user: &str, type_name: &str, value: serde_json::Value) -> CaseView {
        let update = FactUpdate {
            type_name: type_name.into(),
            arg: None,
            value,
        };
        self.service.update_fact(&self.who(user), case, &update).unwrap()
    }

    pub fn act(&self, case: &str, user: &str, act: &str, confirm: bool) -> Result<ActOutcome, ServiceError> {
        let command = ActCommand {
            act: act.into(),
            actor: None,
            recipient: Some("client-1".into()),
            confirm_violation: confirm,
        };
        self.service.perform_act(&self.who(user), case, &command)
    }

    pub fn view(&self, case: &str) -> CaseView {
        self.service.case_view(&self.who("alice"), case).unwrap()
    }

    pub fn log_len(&self, case: &str) -> u64 {
        self.service.store().event_count(case).unwrap()
    }
}

pub fn action<'v>(view: &'v CaseView, act: &str) -> &'v ActionEntry {
    view.actions
        .iter()
        .find(|a| a.status.act == act)
        .unwrap_or_else(|| panic!("no action {act}"))
}

pub fn slot<'v>(view: &'v CaseView, type_name: &str) -> &'v FactSlot {
    view.fact_slots
        .iter()
        .find(|s| s.type_name == type_name)
        .unwrap_or_else(|| panic!("no slot {type_name}"))
}
