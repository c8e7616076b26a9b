mod common;

use std::collections::BTreeSet;

use common::*;
use normcase_core::fixtures::QUITTANCE;
use normcase_core::lang::Literal;
use normcase_core::{version_id, Enablement, TruthValue, ViolationKind};
use normcase_service::*;
use serde_json::json;

#[test]
fn register_is_content_addressed() {
    let h = Harness::new();
    let v = h.service.register_model(&h.admin, QUITTANCE).unwrap();
    assert_eq!(v.version_id, version_id(QUITTANCE.as_bytes()));
    let again = h.service.register_model(&h.admin, QUITTANCE).unwrap();
    assert_eq!(again, v);
    assert_eq!(h.service.list_models().unwrap().len(), 1);

    let err = h.service.register_model(&h.admin, "Fact .").unwrap_err();
    match err {
        ServiceError::InvalidModel(d) => assert!(!d.is_empty()),
        other => panic!("{other:?}"),
    }
    assert_eq!(h.service.list_models().unwrap().len(), 1);
}

#[test]
fn active_model_errors() {
    let dir = tempfile::tempdir().unwrap();
    let s = CaseService::open(&config(&dir)).unwrap();
    let admin = s.authenticate(ADMIN_TOKEN).unwrap();
    assert!(matches!(s.create_case(&admin, "c"), Err(ServiceError::NoActiveModel)));
    assert!(matches!(
        s.set_active_model(&admin, "deadbeef"),
        Err(ServiceError::NotFound(_))
    ));
}

#[test]
fn create_and_list_cases() {
    let h = Harness::new();
    assert!(h.service.list_cases(&CaseFilter::default()).unwrap().is_empty());
    let a = h.new_case("client-a");
    let b = h.new_case("client-b");
    let c = h.new_case("client-a");
    assert_ne!(a, b);
    let rec = h.service.case(&a).unwrap();
    assert_eq!(rec.status, CaseStatus::Open);
    assert_eq!(rec.event_count, 0);

    let ids = |f: CaseFilter| -> Vec<String> {
        h.service.list_cases(&f).unwrap().into_iter().map(|c| c.case_id).collect()
    };
    let desc = ids(CaseFilter {
        sort: Some("createdAt:desc".into()),
        ..Default::default()
    });
    assert_eq!(desc, vec![c.clone(), b.clone(), a.clone()]);

    h.service.close_case(&h.who("alice"), &b).unwrap();
    let open = ids(CaseFilter {
        status: Some(CaseStatus::Open),
        ..Default::default()
    });
    assert_eq!(open, vec![a.clone(), c.clone()]);
    let closed = ids(CaseFilter {
        status: Some(CaseStatus::Closed),
        ..Default::default()
    });
    assert_eq!(closed, vec![b.clone()]);
    let client_a = ids(CaseFilter {
        client: Some("client-a".into()),
        status: Some(CaseStatus::Open),
        ..Default::default()
    });
    assert_eq!(client_a, vec![a.clone(), c.clone()]);
    let text = ids(CaseFilter {
        q: Some("NT-B".into()),
        ..Default::default()
    });
    assert_eq!(text, vec![b.clone()]);
    // status sort: Open before Closed, ties by case id
    let by_status = ids(CaseFilter {
        sort: Some("status".into()),
        ..Default::default()
    });
    let mut open_sorted = vec![a, c];
    open_sorted.sort();
    open_sorted.push(b);
    assert_eq!(by_status, open_sorted);
    assert!(h
        .service
        .list_cases(&CaseFilter {
            sort: Some("size".into()),
            ..Default::default()
        })
        .is_err());
}

#[test]
fn sort_ties_break_by_case_id() {
    let dir = tempfile::tempdir().unwrap();
    let fixed = chrono::DateTime::UNIX_EPOCH;
    let s = CaseService::open_with_clock(&config(&dir), std::sync::Arc::new(move || fixed)).unwrap();
    let admin = s.authenticate(ADMIN_TOKEN).unwrap();
    let v = s.register_model(&admin, QUITTANCE).unwrap();
    s.set_active_model(&admin, &v.version_id).unwrap();
    let mut made: Vec<String> = (0..5).map(|i| s.create_case(&admin, &format!("c{i}")).unwrap().case_id).collect();
    made.sort();
    for sort in ["createdAt:asc", "createdAt:desc"] {
        let got: Vec<String> = s
            .list_cases(&CaseFilter {
                sort: Some(sort.into()),
                ..Default::default()
            })
            .unwrap()
            .into_iter()
            .map(|c| c.case_id)
            .collect();
        assert_eq!(got, made, "{sort}");
    }
}

#[test]
fn fresh_view_widgets() {
    let h = Harness::new();
    let case = h.new_case("c");
    let view = h.view(&case);
    let married = slot(&view, "applicant-is-married");
    assert_eq!(married.widget, Widget::TriStateRadio);
    assert_eq!(married.value, Some(SlotValue::Truth(TruthValue::Unknown)));
    let income = slot(&view, "applicant-income");
    assert_eq!(income.widget, Widget::NumberBox);
    assert_eq!(income.value, None);
    assert_eq!(
        slot(&view, "income-threshold").value,
        Some(SlotValue::Literal(Literal::Int(1500)))
    );
    assert!(slot(&view, "decision-made").derived);
    assert_eq!(view.actions.len(), 5);
    assert!(view.actions.iter().all(|a| a.executable));
    assert_eq!(view.trace_length, 2);
}

#[test]
fn update_fact_flips_grant() {
    let h = Harness::new();
    let case = h.new_case("c");
    assert_eq!(action(&h.view(&case), "approve-quittance").status.status, Enablement::Undetermined);
    let view = h.set(&case, "alice", "applicant-income", json!(1000));
    assert_eq!(action(&view, "approve-quittance").status.status, Enablement::Enabled);
    assert_eq!(view.case.event_count, 1);

    let view = h.set(&case, "alice", "applicant-is-married", json!(true));
    assert_eq!(action(&view, "request-partner-income").status.status, Enablement::Enabled);
    let view = h.set(&case, "alice", "applicant-is-married", json!("unknown"));
    assert_eq!(
        slot(&view, "applicant-is-married").value,
        Some(SlotValue::Truth(TruthValue::Unknown))
    );
    assert_eq!(action(&view, "request-partner-income").status.status, Enablement::Undetermined);

    let view = h.set(&case, "alice", "applicant-income", json!(null));
    assert_eq!(slot(&view, "applicant-income").value, None);
}

#[test]
fn update_fact_errors() {
    let h = Harness::new();
    let case = h.new_case("c");
    let alice = h.who("alice");
    let bad = |t: &str, v: serde_json::Value| {
        let u = FactUpdate {
            type_name: t.into(),
            arg: None,
            value: v,
        };
        h.service.update_fact(&alice, &case, &u).unwrap_err()
    };
    assert!(matches!(bad("decision-made", json!(true)), ServiceError::BadRequest(_)));
    assert!(matches!(bad("no-such-type", json!(true)), ServiceError::NotFound(_)));
    assert!(matches!(bad("applicant-income", json!("lots")), ServiceError::BadRequest(_)));
    assert!(matches!(bad("applicant-income", json!(true)), ServiceError::BadRequest(_)));
    assert!(matches!(bad("submit-application", json!(true)), ServiceError::BadRequest(_)));
    assert_eq!(h.log_len(&case), 0);

    h.service.close_case(&alice, &case).unwrap();
    assert!(matches!(bad("applicant-income", json!(5)), ServiceError::CaseClosed(_)));
    assert_eq!(h.log_len(&case), 1);
}

#[test]
fn perform_act_outcomes() {
    let h = Harness::new();
    let case = h.new_case("c");
    match h.act(&case, "alice", "submit-application", false).unwrap() {
        ActOutcome::Executed { view, report } => {
            assert!(report.violations.is_empty());
            assert_eq!(view.duties.len(), 1);
        }
        other => panic!("{other:?}"),
    }
    let before = h.view(&case);
    match h.act(&case, "alice", "submit-application", false).unwrap() {
        ActOutcome::ConfirmationRequired { report } => {
            assert_eq!(report.status.status, Enablement::Disabled)
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(h.view(&case), before);
    assert_eq!(h.log_len(&case), 1);
    match h.act(&case, "alice", "submit-application", true).unwrap() {
        ActOutcome::Executed { view, .. } => {
            assert_eq!(view.violations.len(), 1);
            assert_eq!(view.violations[0].kind(), ViolationKind::NonCompliantAct);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        h.act(&case, "alice", "fly-away", false),
        Err(ServiceError::PermissionDenied(_) | ServiceError::NotFound(_))
    ));
    assert!(matches!(
        h.act(&case, "alice", "apply-for-quittance", false),
        Err(ServiceError::BadRequest(_))
    ));
}

#[test]
fn simulate_is_pure_and_matches_execution() {
    let h = Harness::new();
    let case = h.new_case("c");
    h.set(&case, "alice", "applicant-income", json!(1000));
    let before = h.view(&case);
    let projected = h
        .service
        .simulate(&h.who("alice"), &case, "approve-quittance", None, Some("client-1".into()))
        .unwrap();
    assert_eq!(h.view(&case), before);
    // a projection always confirms
    let executed = match h.act(&case, "alice", "approve-quittance", true).unwrap() {
        ActOutcome::Executed { report, .. } => report,
        other => panic!("{other:?}"),
    };
    assert_eq!(projected.report, executed);

    h.service.close_case(&h.who("alice"), &case).unwrap();
    assert!(h
        .service
        .simulate(&h.who("bob"), &case, "reject-quittance", None, Some("client-1".into()))
        .is_ok());
}

#[test]
fn trace_carries_users() {
    let h = Harness::new();
    let case = h.new_case("c");
    let fresh = h.service.trace(&case).unwrap();
    assert!(fresh.iter().all(|e| e.kind == "InitStatement" && e.user_id.is_none()));
    h.set(&case, "bob", "applicant-income", json!(1000));
    h.act(&case, "alice", "submit-application", false).unwrap();
    let trace = h.service.trace(&case).unwrap();
    let by_kind = |k: &str| trace.iter().find(|e| e.kind == k).unwrap();
    assert_eq!(by_kind("FactSet").user_id.as_deref(), Some("bob"));
    assert_eq!(by_kind("ActExecuted").user_id.as_deref(), Some("alice"));
    assert_eq!(by_kind("DutyCreated").user_id.as_deref(), Some("alice"));
    let seqs: Vec<u64> = trace.iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=trace.len() as u64).collect::<Vec<_>>());

    h.service.close_case(&h.who("alice"), &case).unwrap();
    assert_eq!(h.service.trace(&case).unwrap().len(), trace.len());
}

#[test]
fn close_case_rules() {
    let h = Harness::new();
    let case = h.new_case("c");
    let alice = h.who("alice");
    let rec = h.service.close_case(&alice, &case).unwrap();
    assert_eq!(rec.status, CaseStatus::Closed);
    assert!(rec.closed_at.is_some());
    assert!(matches!(h.service.close_case(&alice, &case), Err(ServiceError::CaseClosed(_))));
    assert!(matches!(
        h.act(&case, "alice", "submit-application", false),
        Err(ServiceError::CaseClosed(_))
    ));
    let view = h.view(&case);
    assert!(view.actions.iter().all(|a| !a.executable));
    assert_eq!(h.log_len(&case), 1);
    assert!(matches!(
        h.service.close_case(&h.who("carol"), &h.new_case("d")),
        Err(ServiceError::PermissionDenied(_))
    ));
}

#[test]
fn recovery_after_eviction_and_corruption() {
    let h = Harness::new();
    let case = h.new_case("c");
    h.set(&case, "alice", "applicant-income", json!(1000));
    h.act(&case, "alice", "submit-application", false).unwrap();
    let before = h.view(&case);

    h.service.evict_reasoner(&case).unwrap();
    assert_eq!(h.view(&case), before);

    let key = h.service.case(&case).unwrap().snapshot_ref;
    h.service.store().put_snapshot(&key, "{ not json").unwrap();
    h.service.evict_reasoner(&case).unwrap();
    assert_eq!(h.view(&case), before);
    // the snapshot was repaired from the log
    let repaired = h.service.store().snapshot(&key).unwrap().unwrap();
    assert!(repaired.starts_with('{') && repaired.contains("modelVersion"));
}

#[test]
fn unrecoverable_case_is_unavailable() {
    let h = Harness::new();
    let case = h.new_case("c");
    h.act(&case, "alice", "submit-application", false).unwrap();
    let key = h.service.case(&case).unwrap().snapshot_ref;
    h.service.store().put_snapshot(&key, "garbage").unwrap();
    // a log entry the pinned model cannot replay
    let mut record = h.service.case(&case).unwrap();
    record.event_count += 1;
    let bogus = CaseEvent {
        case_id: case.clone(),
        seq: 2,
        kind: CaseEventKind::FactSet,
        user_id: "alice".into(),
        payload: Some(normcase_core::InputEvent::set(
            normcase_core::Instance::unit("no-such-fact"),
            TruthValue::True,
        )),
        approved_by: None,
        at: chrono::Utc::now(),
    };
    h.service.store().append_event(&bogus, &record).unwrap();
    let h = h.reopen();
    assert!(matches!(
        h.service.case_view(&h.admin, &case),
        Err(ServiceError::Unavailable { .. })
    ));
    assert!(h.service.unavailable_reason(&case).unwrap().is_some());
    assert_eq!(h.service.warm_all().unwrap(), vec![case]);
}

#[test]
fn view_is_recomputed_from_the_reasoner() {
    let h = Harness::new();
    let case = h.new_case("c");
    let before = h.view(&case);
    h.service
        .with_live_reasoner(&case, |r| {
            r.set_fact(normcase_core::Instance::with_arg("applicant-income", 10), TruthValue::True)
                .unwrap();
        })
        .unwrap();
    let after = h.view(&case);
    assert_ne!(before, after);
    assert_eq!(action(&after, "approve-quittance").status.status, Enablement::Enabled);
}

#[test]
fn roles_and_permissions() {
    let h = Harness::new();
    let case = h.new_case("c");
    assert!(matches!(
        h.act(&case, "carol", "approve-quittance", false),
        Err(ServiceError::PermissionDenied(_))
    ));
    assert!(h.act(&case, "carol", "submit-application", false).is_ok());
    let view = h.service.case_view(&h.who("carol"), &case).unwrap();
    assert!(!action(&view, "approve-quittance").permitted);
    assert!(action(&view, "submit-application").permitted);

    let revoke: BTreeSet<String> = ["clerk".to_string()].into();
    h.service
        .update_roles(&h.admin, "bob", &BTreeSet::new(), &revoke)
        .unwrap();
    assert!(matches!(
        h.act(&case, "bob", "review-application", false),
        Err(ServiceError::PermissionDenied(_))
    ));
    let unknown: BTreeSet<String> = ["wizard".to_string()].into();
    assert!(h
        .service
        .update_roles(&h.admin, "bob", &unknown, &BTreeSet::new())
        .is_err());
    assert!(matches!(
        h.service.create_user(&h.who("alice"), user("dave", &[])),
        Err(ServiceError::PermissionDenied(_))
    ));
    assert!(matches!(
        h.service.create_user(&h.admin, user("alice", &[])),
        Err(ServiceError::Conflict(_))
    ));
    assert!(matches!(h.service.authenticate("nope"), Err(ServiceError::Unauthenticated)));
}

#[test]
fn four_eyes_queue() {
    let h = Harness::new();
    let case = h.new_case("c");
    h.set(&case, "alice", "applicant-income", json!(1000));
    h.service
        .set_four_eyes(&h.admin, ["approve-quittance".to_string()].into())
        .unwrap();
    let len = h.log_len(&case);
    match h.act(&case, "alice", "approve-quittance", false).unwrap() {
        ActOutcome::PendingApproval { first_approver } => assert_eq!(first_approver, "alice"),
        other => panic!("{other:?}"),
    }
    assert_eq!(h.log_len(&case), len);
    assert_eq!(
        action(&h.view(&case), "approve-quittance").pending_approval_by.as_deref(),
        Some("alice")
    );
    assert!(matches!(
        h.act(&case, "alice", "approve-quittance", false),
        Err(ServiceError::SameApprover(_))
    ));
    match h.act(&case, "bob", "approve-quittance", false).unwrap() {
        ActOutcome::Executed { report, .. } => {
            assert_eq!(report.status.act, "approve-quittance");
        }
        other => panic!("{other:?}"),
    }
    let log = h.service.store().events(&case).unwrap();
    let last = log.last().unwrap();
    assert_eq!(last.user_id, "bob");
    assert_eq!(last.approved_by.as_deref(), Some("alice"));
    assert!(matches!(
        &last.payload,
        Some(normcase_core::InputEvent::ActExecuted { actor, .. }) if *actor == Literal::from("alice")
    ));
    assert_eq!(h.log_len(&case), len + 1);
}

#[test]
fn settings_survive_restart() {
    let h = Harness::new();
    h.service
        .set_four_eyes(&h.admin, ["approve-quittance".to_string()].into())
        .unwrap();
    let active = h.service.active_model();
    let h = h.reopen();
    assert_eq!(h.service.active_model(), active);
    assert!(h.service.four_eyes().contains("approve-quittance"));
    assert!(h.service.authenticate("alice-token").is_ok());
    assert!(h.service.roles().contains_key("clerk"));
}

#[test]
fn bootstrap_model_becomes_active() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&dir);
    cfg.bootstrap_model = Some(QUITTANCE.into());
    let s = CaseService::open(&cfg).unwrap();
    assert_eq!(s.active_model(), Some(version_id(QUITTANCE.as_bytes())));
}
