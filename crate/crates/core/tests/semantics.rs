mod support;

use std::collections::{BTreeMap, BTreeSet};

use kop_core::gen::{formula_pool, random_system, RandomParams};
use kop_core::logic::{
    eval, eval_common, extension, nested_everyone, parse_formula, valid, validly_implies,
};
use kop_core::properties::{earliest, is_conscious};
use kop_core::{AgentId, Formula, Interpretation, Point, System};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::kripke::Kripke;

fn system(seed: u64) -> System {
    random_system(&mut ChaCha8Rng::seed_from_u64(seed), &RandomParams::default())
}

fn subgroups(sys: &System) -> Vec<BTreeSet<AgentId>> {
    let n = sys.agent_count();
    (1u32..(1 << n))
        .map(|mask| {
            (0..n)
                .filter(|k| mask & (1 << k) != 0)
                .map(|k| AgentId::new(k + 1))
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knowledge_satisfies_s5(seed in any::<u64>()) {
        let sys = system(seed);
        for f in formula_pool(&sys) {
            for i in sys.agents() {
                let k = Formula::know(i, f.clone());
                prop_assert!(validly_implies(&sys, &k, &f).unwrap());
                prop_assert!(validly_implies(&sys, &k, &Formula::know(i, k.clone())).unwrap());
                let nk = Formula::not(k.clone());
                prop_assert!(validly_implies(&sys, &nk, &Formula::know(i, nk.clone())).unwrap());
            }
        }
    }

    #[test]
    fn evaluator_agrees_with_kripke_structure(seed in any::<u64>()) {
        let sys = system(seed);
        let kripke = Kripke::new(&sys);
        let mut pool = formula_pool(&sys);
        for (i, a) in sys.actions() {
            pool.push(Formula::Does(i, a.clone()));
            pool.push(Formula::know(i, Formula::Does(i, a)));
        }
        for f in &pool {
            let ext = extension(&sys, f).unwrap();
            for &p in kripke.worlds() {
                prop_assert_eq!(ext.contains(sys.point_index(p)), kripke.holds(p, f), "{} at {}", f, p);
            }
        }
    }

    #[test]
    fn common_knowledge_is_the_nested_fixed_point(seed in any::<u64>()) {
        let sys = system(seed);
        let n = sys.point_count();
        let group: BTreeSet<AgentId> = sys.agents().collect();
        for f in formula_pool(&sys).iter().take(6) {
            for p in sys.points() {
                let c = eval_common(&sys, p, &group, f).unwrap();
                prop_assert_eq!(c, nested_everyone(&sys, p, &group, f, n).unwrap());
                prop_assert_eq!(c, nested_everyone(&sys, p, &group, f, n + 1).unwrap());
            }
        }
    }

    #[test]
    fn common_knowledge_weakens_with_smaller_groups(seed in any::<u64>()) {
        let sys = system(seed);
        let groups = subgroups(&sys);
        let f = Formula::prop("p");
        for g in &groups {
            for h in groups.iter().filter(|h| h.is_subset(g)) {
                let cg = Formula::Common(g.clone(), Box::new(f.clone()));
                let ch = Formula::Common(h.clone(), Box::new(f.clone()));
                prop_assert!(validly_implies(&sys, &cg, &ch).unwrap());
            }
            if g.len() == 1 {
                let i = *g.iter().next().unwrap();
                let cg = Formula::Common(g.clone(), Box::new(f.clone()));
                prop_assert_eq!(extension(&sys, &cg).unwrap(), extension(&sys, &Formula::know(i, f.clone())).unwrap());
            }
            for j in g {
                let cg = Formula::Common(g.clone(), Box::new(f.clone()));
                prop_assert!(validly_implies(&sys, &cg, &Formula::know(*j, f.clone())).unwrap());
            }
        }
    }

    #[test]
    fn did_is_stable_and_implied_by_does(seed in any::<u64>()) {
        let sys = system(seed);
        for (i, a) in sys.actions() {
            let does = Formula::Does(i, a.clone());
            let did = Formula::Did(i, a.clone());
            prop_assert!(validly_implies(&sys, &does, &did).unwrap());
            let ext = extension(&sys, &did).unwrap();
            for r in 0..sys.runs().len() {
                for t in 0..sys.horizon() {
                    if ext.contains(sys.point_index(Point::new(r, t))) {
                        prop_assert!(ext.contains(sys.point_index(Point::new(r, t + 1))));
                    }
                }
                // nothing is attested at the horizon
                prop_assert!(!eval(&sys, Point::new(r, sys.horizon()), &does).unwrap());
            }
        }
    }

    #[test]
    fn duplicating_a_run_changes_no_truth_value(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let sys = system(seed);
        let r = pick.index(sys.runs().len());
        let width = sys.horizon() + 1;
        let rows: BTreeMap<String, Vec<bool>> = sys
            .interpretation()
            .prop_names()
            .map(|name| {
                let row = sys.interpretation().row(name).unwrap();
                (name.to_owned(), row[r * width..(r + 1) * width].to_vec())
            })
            .collect();
        let bigger = sys
            .with_runs_appended(vec![sys.runs()[r].clone()], Interpretation::from_table(rows))
            .unwrap();
        for f in formula_pool(&sys) {
            let before = extension(&sys, &f).unwrap();
            let after = extension(&bigger, &f).unwrap();
            prop_assert_eq!(before.bits(), &after.bits()[..before.len()]);
            // the copy agrees with its original
            prop_assert_eq!(&before.bits()[r * width..(r + 1) * width], &after.bits()[before.len()..]);
        }
        let back = bigger.deduplicated().unwrap();
        prop_assert!(back.runs().len() <= sys.runs().len());
    }

    #[test]
    fn conscious_actions_are_known_when_performed(seed in any::<u64>()) {
        let sys = system(seed);
        for (i, a) in sys.actions() {
            let does = Formula::Does(i, a.clone());
            let known = Formula::know(i, does.clone());
            let equivalent = extension(&sys, &does).unwrap() == extension(&sys, &known).unwrap();
            prop_assert_eq!(is_conscious(&sys, i, &a).unwrap(), equivalent);
        }
    }

    #[test]
    fn earliest_respects_valid_implication(seed in any::<u64>()) {
        let sys = system(seed);
        let pool = formula_pool(&sys);
        for f in pool.iter().take(12) {
            for g in pool.iter().take(12) {
                if !validly_implies(&sys, f, g).unwrap() {
                    continue;
                }
                for r in 0..sys.runs().len() {
                    if let Some(tf) = earliest(&sys, r, f).unwrap() {
                        let tg = earliest(&sys, r, g).unwrap();
                        prop_assert!(tg.is_some_and(|tg| tg <= tf));
                    }
                }
            }
        }
    }

    #[test]
    fn formulas_print_and_parse_back(seed in any::<u64>()) {
        let sys = system(seed);
        for f in formula_pool(&sys) {
            let text = f.to_string();
            prop_assert_eq!(parse_formula(&text, sys.agent_names()).unwrap(), f, "{}", text);
        }
    }

    #[test]
    fn indistinguishability_is_an_equivalence(seed in any::<u64>()) {
        let sys = system(seed);
        let pts: Vec<Point> = sys.points().collect();
        for i in sys.agents() {
            let same = |p: Point, q: Point| kop_core::logic::indistinguishable(&sys, p, q, i).unwrap();
            for &p in &pts {
                prop_assert!(same(p, p));
                for &q in &pts {
                    prop_assert_eq!(same(p, q), same(q, p));
                    if same(p, q) {
                        for &r in &pts {
                            if same(q, r) {
                                prop_assert!(same(p, r));
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn knowledge_implies_truth_is_valid_on_a_fixed_system() {
    let sys = system(42);
    for f in formula_pool(&sys) {
        for i in sys.agents() {
            assert!(valid(&sys, &Formula::implies(Formula::know(i, f.clone()), f.clone())).unwrap());
        }
    }
}
