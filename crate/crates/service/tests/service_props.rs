mod common;

use std::sync::Arc;

use common::*;
use normcase_core::{InputEvent, ReasonerState};
use normcase_service::*;
use proptest::prelude::*;
use serde_json::json;

#[derive(Debug, Clone)]
enum Call {
    Set(usize, &'static str, &'static str, serde_json::Value),
    Act(usize, &'static str, &'static str, bool),
    Simulate(usize, &'static str),
    Close(usize, &'static str),
    Evict(usize),
}

fn call() -> impl Strategy<Value = Call> {
    let case = 0usize..2;
    let user = prop::sample::select(vec!["alice", "bob", "carol"]);
    let act = prop::sample::select(vec![
        "submit-application",
        "review-application",
        "approve-quittance",
        "reject-quittance",
        "request-partner-income",
    ]);
    let fact = prop_oneof![
        (0i64..3000).prop_map(|n| ("applicant-income", json!(n))),
        (0i64..40).prop_map(|n| ("applicant-age", json!(n))),
        prop::sample::select(vec![json!(true), json!(false), json!("unknown")])
            .prop_map(|v| ("applicant-is-married", v)),
    ];
    prop_oneof![
        4 => (case.clone(), user.clone(), fact).prop_map(|(c, u, (t, v))| Call::Set(c, u, t, v)),
        4 => (case.clone(), user.clone(), act.clone(), any::<bool>()).prop_map(|(c, u, a, k)| Call::Act(c, u, a, k)),
        1 => (case.clone(), act).prop_map(|(c, a)| Call::Simulate(c, a)),
        1 => (case.clone(), user).prop_map(|(c, u)| Call::Close(c, u)),
        1 => case.prop_map(Call::Evict),
    ]
}

fn apply(h: &Harness, cases: &[String], c: &Call) {
    let s = &h.service;
    // errors are expected outcomes here; invariants are checked afterwards
    let _ = match c {
        Call::Set(i, u, t, v) => s
            .update_fact(
                &h.who(u),
                &cases[*i],
                &FactUpdate {
                    type_name: t.to_string(),
                    arg: None,
                    value: v.clone(),
                },
            )
            .map(drop),
        Call::Act(i, u, a, confirm) => h.act(&cases[*i], u, a, *confirm).map(drop),
        Call::Simulate(i, a) => s
            .simulate(&h.who("alice"), &cases[*i], a, None, Some("client-1".into()))
            .map(drop),
        Call::Close(i, u) => s.close_case(&h.who(u), &cases[*i]).map(drop),
        Call::Evict(i) => s.evict_reasoner(&cases[*i]),
    };
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn service_invariants(calls in prop::collection::vec(call(), 0..16)) {
        let h = Harness::new();
        h.service
            .set_four_eyes(&h.admin, ["reject-quittance".to_string()].into())
            .unwrap();
        let cases = vec![h.new_case("a"), h.new_case("b")];
        let mut lengths = vec![0u64; cases.len()];
        for c in &calls {
            apply(&h, &cases, c);
            for (i, case) in cases.iter().enumerate() {
                let log = h.service.store().events(case).unwrap();
                // append-only and gapless
                prop_assert!(log.len() as u64 >= lengths[i]);
                lengths[i] = log.len() as u64;
                prop_assert!(log.iter().enumerate().all(|(k, e)| e.seq == k as u64 + 1));
                prop_assert_eq!(h.service.case(case).unwrap().event_count, lengths[i]);

                // replay(log) == restore(snapshot) == live
                let record = h.service.case(case).unwrap();
                let model = h.service.model(&record.model_version_id).unwrap();
                let inputs: Vec<InputEvent> = log.iter().filter_map(|e| e.payload.clone()).collect();
                let live = h.service.with_live_reasoner(case, |r| r.snapshot()).unwrap();
                let replayed = ReasonerState::replay(Arc::clone(&model), &inputs).unwrap().snapshot();
                let stored = h.service.store().snapshot(&record.snapshot_ref).unwrap().unwrap();
                let restored = ReasonerState::restore(model, &stored).unwrap().snapshot();
                prop_assert_eq!(&replayed, &live);
                prop_assert_eq!(&restored, &live);

                // only carol is restricted: she may submit and edit facts
                for e in &log {
                    if e.user_id == "carol" {
                        let ok = match &e.payload {
                            Some(InputEvent::ActExecuted { act, .. }) => act == "submit-application",
                            Some(InputEvent::FactSet { .. }) => true,
                            None => false,
                        };
                        prop_assert!(ok, "{:?}", e);
                    }
                }
            }
        }
    }
}
