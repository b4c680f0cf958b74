use std::collections::BTreeSet;

use kop_core::gen::{formula_pool, random_ordered, random_simultaneous, random_system, RandomParams};
use kop_core::properties::{
    check_ckop, check_kop, check_nkop, is_conscious, is_necessary_condition, Outcome,
};
use kop_core::{AgentId, Formula, System};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn kop_never_fails_its_conclusion(seed in any::<u64>()) {
        let sys = random_system(&mut rng(seed), &RandomParams::default());
        for (i, a) in sys.actions() {
            for psi in formula_pool(&sys) {
                let report = check_kop(&sys, i, &a, &psi).unwrap();
                prop_assert_ne!(report.outcome(), Outcome::ConclusionFails, "{}", report);
                let hyps = is_conscious(&sys, i, &a).unwrap()
                    && is_necessary_condition(&sys, &psi, i, &a).unwrap();
                prop_assert_eq!(report.hypotheses_hold(), hyps);
                if hyps {
                    prop_assert!(is_necessary_condition(&sys, &Formula::know(i, psi.clone()), i, &a).unwrap());
                }
            }
        }
    }

    #[test]
    fn ckop_never_fails_its_conclusion(seed in any::<u64>()) {
        let inst = random_simultaneous(&mut rng(seed), &RandomParams::default());
        let sys = &inst.system;
        let group: BTreeSet<AgentId> = sys.agents().collect();
        for psi in formula_pool(sys) {
            for &i in &group {
                let report = check_ckop(sys, &group, &inst.actions, i, &psi).unwrap();
                prop_assert_ne!(report.outcome(), Outcome::ConclusionFails, "{}", report);
            }
        }
        // `pre` is necessary by construction, so the conclusion is asserted
        let report = check_ckop(sys, &group, &inst.actions, AgentId::new(1), &Formula::prop("pre")).unwrap();
        prop_assert_eq!(report.outcome(), Outcome::Holds, "{}", report);
        prop_assert!(report.lemmas.iter().all(|c| c.name.starts_with("observation1:")));
    }

    #[test]
    fn nkop_never_fails_its_conclusion(seed in any::<u64>()) {
        let inst = random_ordered(&mut rng(seed), &RandomParams::default());
        let sys = &inst.system;
        let mut pool = formula_pool(sys);
        pool.push(Formula::prop("psi"));
        for psi in &pool {
            let report = check_nkop(sys, &inst.sequence, psi).unwrap();
            prop_assert_ne!(report.outcome(), Outcome::ConclusionFails, "{}", report);
        }
        let report = check_nkop(sys, &inst.sequence, &Formula::prop("psi")).unwrap();
        prop_assert_eq!(report.outcome(), Outcome::Holds, "{}", report);
        prop_assert_eq!(report.obligations.len(), inst.sequence.len());
        prop_assert!(report.lemmas.iter().any(|c| c.name.starts_with("claim1:")));
        prop_assert!(report.lemmas.iter().any(|c| c.name.starts_with("claim2:")));
    }
}

/// `a` is performed in run 0 at time 0; runs 0 and 1 look the same to the
/// agent, so `a` is not conscious.
fn unconscious() -> System {
    use kop_core::{
        Action, EnvState, GlobalState, History, HistoryEvent, Interpretation, LocalState, Run,
        Value,
    };
    let state = |acted: bool| GlobalState {
        env: EnvState {
            history: if acted {
                [HistoryEvent::new(Action::new("a"), AgentId::new(1), 0)].into_iter().collect()
            } else {
                History::new()
            },
            payload: Value::Int(0),
        },
        locals: vec![LocalState(Value::Int(0))],
    };
    let runs = vec![
        Run::new("r0", vec![state(false), state(true)]),
        Run::new("r1", vec![state(false), state(false)]),
    ];
    let interp = Interpretation::tabulate(&["p"], &runs, 1, |_, r, t| r.name == "r0" && t == 0);
    System::new(vec!["i".into()], 1, runs, interp).unwrap()
}

#[test]
fn failed_hypotheses_are_reported_not_concluded() {
    let sys = unconscious();
    let a = kop_core::Action::new("a");
    let report = check_kop(&sys, AgentId::new(1), &a, &Formula::prop("p")).unwrap();
    assert_eq!(report.outcome(), Outcome::HypothesisFails);
    assert_eq!(report.conclusion_holds, None);
    assert!(report.note.contains("hypothesis conscious(i, a) fails at (0, 0)"), "{}", report.note);
    // p is necessary but not known: the theorem needs consciousness
    assert!(is_necessary_condition(&sys, &Formula::prop("p"), AgentId::new(1), &a).unwrap());
    assert!(!is_necessary_condition(&sys, &Formula::know(AgentId::new(1), Formula::prop("p")), AgentId::new(1), &a).unwrap());
}

#[test]
fn report_serializes_with_the_documented_field_names() {
    let sys = unconscious();
    let report =
        check_kop(&sys, AgentId::new(1), &kop_core::Action::new("a"), &Formula::prop("p")).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    for key in ["theorem", "hypotheses", "conclusion", "obligations", "lemmas", "counterexamples", "note"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["theorem"], "KOP");
}
