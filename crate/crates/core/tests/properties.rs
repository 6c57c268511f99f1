//! Property suites for composition, effect-safe tasks, traces, refinement,
//! closure and the text formats.

mod common;

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::sync::Arc;
use tmacro_core::composer::{compose, compose_seq, CompositionOutcome};
use tmacro_core::effect_safe::build_effect_safe;
use tmacro_core::pddl::{all_pairs_shortest_paths, emit_plan, parse_plan};
use tmacro_core::refinement::{delta, refine_once};
use tmacro_core::semantics::unroll;
use tmacro_core::time::{parse_time, rat, Decimal, Fraction};
use tmacro_core::{validate_action, Atom, AtomSet, DurativeAction, Plan, PlanningTask, Time, TimedAction};

fn vars(n: usize) -> Vec<Atom> {
    (0..n).map(|i| Atom::nullary(format!("v{i}"))).collect()
}

fn three(seed: u64) -> [Arc<DurativeAction>; 3] {
    let mut rng = StdRng::seed_from_u64(seed);
    let v = vars(4);
    ["a", "b", "c"].map(|n| Arc::new(random_action(&mut rng, n, &v)))
}

/// A task over the given actions with a random plan on distinct stamps.
fn random_plan(seed: u64, actions: &[Arc<DurativeAction>], len: usize) -> (PlanningTask, Plan) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut universe = AtomSet::new();
    for a in actions {
        universe.extend(a.atoms());
    }
    let init: AtomSet = universe.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    let task = PlanningTask::new(universe, actions.iter().cloned(), init, AtomSet::new()).unwrap();
    loop {
        let steps = (0..len).map(|_| {
            let a = actions[rng.gen_range(0..actions.len())].clone();
            TimedAction::new(rat(rng.gen_range(1..40), 8), a)
        });
        let plan = Plan::new(steps);
        if plan.len() == len && well_shaped(&plan) {
            return (task, plan);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn composition_is_well_formed_and_additive(seed in any::<u64>()) {
        let [a, b, _] = three(seed);
        if let CompositionOutcome::Defined(m) = compose(&a, &b).unwrap() {
            prop_assert!(validate_action(&m).is_empty());
            prop_assert_eq!(&m.duration, &(&a.duration + &b.duration));
            prop_assert_eq!(m.constituents(), vec![&*a, &*b]);
            prop_assert!(m.pre_start.is_superset(&a.pre_start));
            prop_assert!(m.atoms().is_subset(&(&a.atoms() | &b.atoms())));
        }
    }

    #[test]
    fn right_nested_composition_keeps_inner_mutex_atoms(seed in any::<u64>()) {
        let [a, b, c] = three(seed);
        let inner = compose(&b, &c).unwrap();
        let seq = compose_seq(&[a.clone(), b.clone(), c.clone()]).unwrap();
        match inner {
            CompositionOutcome::Defined(bc) => {
                let bc = Arc::new(bc);
                prop_assert_eq!(&seq, &compose(&a, &bc).unwrap());
                if let CompositionOutcome::Defined(abc) = seq {
                    prop_assert!(abc.mutex().is_superset(bc.mutex()));
                    prop_assert_eq!(abc.duration, &(&a.duration + &b.duration) + &c.duration);
                }
            }
            CompositionOutcome::Undefined(_) => {
                let CompositionOutcome::Undefined(u) = seq else {
                    return Err(TestCaseError::fail("outer defined although inner is not"));
                };
                prop_assert_eq!(u.position, 1);
            }
        }
    }

    #[test]
    fn effect_safe_actions_agree_on_the_original_atoms(seed in any::<u64>()) {
        let [a, b, c] = three(seed);
        let mut actions = vec![a.clone(), b.clone(), c.clone()];
        for (x, y) in [(&a, &b), (&b, &c)] {
            if let CompositionOutcome::Defined(m) = compose(x, y).unwrap() {
                actions.push(Arc::new(m));
            }
        }
        let universe: AtomSet = actions.iter().flat_map(|x| x.atoms()).collect();
        let task = PlanningTask::new(universe.clone(), actions, AtomSet::new(), AtomSet::new()).unwrap();
        let hat = build_effect_safe(&task).unwrap();
        for (h, orig) in hat.pairs() {
            let keep = |s: &AtomSet| -> AtomSet { s.intersection(&universe).cloned().collect() };
            prop_assert_eq!(keep(&h.pre_start), orig.pre_start.clone());
            prop_assert_eq!(&h.pre_inv, &orig.pre_inv);
            prop_assert_eq!(keep(&h.pre_end), orig.pre_end.clone());
            let keep_lits = |s: &tmacro_core::LiteralSet| -> tmacro_core::LiteralSet {
                s.iter().filter(|l| universe.contains(&l.atom)).cloned().collect()
            };
            prop_assert_eq!(keep_lits(&h.eff_start), orig.eff_start.clone());
            prop_assert_eq!(keep_lits(&h.eff_end), orig.eff_end.clone());
            prop_assert!(validate_action(h).is_empty());
        }
        prop_assert!(hat.mutex_surface().is_subset(&hat.task.init));
    }

    #[test]
    fn traces_have_the_expected_shape(seed in any::<u64>(), len in 0usize..5) {
        let acts = three(seed);
        let (task, plan) = random_plan(seed, &acts, len);
        let trace = unroll(&task, &plan).unwrap();
        prop_assert_eq!(trace.len(), 2 * plan.len() + 1);
        prop_assert!(trace.entries.last().unwrap().scheduled.is_empty());
        prop_assert!(trace.stamps().windows(2).all(|w| w[0] < w[1]));
        let mut state = AtomSet::new();
        for ((added, removed), e) in trace.deltas().iter().zip(&trace.entries) {
            state = &(&state - removed) | added;
            prop_assert_eq!(&state, &e.state);
        }
        let oracle = simulate(&task.init, &plan);
        let stamps: Vec<Time> = oracle.iter().map(|e| e.stamp.clone()).collect();
        prop_assert_eq!(trace.stamps(), stamps);
    }

    #[test]
    fn refinement_stays_in_the_delta_neighbourhood(seed in any::<u64>(), len in 0usize..3) {
        let [a, b, c] = three(seed);
        let CompositionOutcome::Defined(m) = compose(&a, &b).unwrap() else { return Ok(()) };
        let m = Arc::new(m);
        let (_, rest) = random_plan(seed ^ 1, &[c.clone(), a.clone()], len);
        let mut rng = StdRng::seed_from_u64(seed);
        let step = TimedAction::new(rat(rng.gen_range(1..40), 7), m.clone());
        let plan = Plan::new(rest.steps.iter().cloned().chain([step.clone()]));
        prop_assume!(well_shaped(&plan));
        let d = delta(&plan, &step).unwrap();
        prop_assert!(d > rat(0, 1));
        let (refined, split) = refine_once(&plan, &step).unwrap();
        prop_assert_eq!(refined.len(), plan.len() + 1);
        prop_assert!(well_shaped(&refined));
        let (t1, t2) = (&split.inserted.0.start, &split.inserted.1.start);
        let mid = &step.start + &a.duration;
        prop_assert!(&(&step.start - &d) < t1 && t1 < &step.start);
        prop_assert!(&(&mid - &d) < t2 && *t2 < mid);
        prop_assert_eq!(split.inserted.1.end(), step.end() - &d / rat(4, 1));
    }

    #[test]
    fn shortest_paths_satisfy_the_triangle_inequality(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut edges = BTreeMap::new();
        for u in &nodes {
            for v in &nodes {
                if u != v && rng.gen_bool(0.4) {
                    edges.insert((u.clone(), v.clone()), rat(rng.gen_range(1..10), rng.gen_range(1..4)));
                }
            }
        }
        let d = all_pairs_shortest_paths(&nodes, &edges);
        for ((u, v), w) in &edges {
            prop_assert!(d[&(u.clone(), v.clone())] <= *w);
        }
        for ((u, v), x) in &d {
            for ((v2, w), y) in &d {
                if v == v2 && u != w {
                    let direct = d.get(&(u.clone(), w.clone()));
                    prop_assert!(direct.is_some_and(|z| *z <= x + y));
                }
            }
        }
    }

    #[test]
    fn plans_survive_a_text_round_trip(seed in any::<u64>(), len in 0usize..5) {
        let acts = three(seed);
        let (task, plan) = random_plan(seed, &acts, len);
        let text = emit_plan(&plan);
        prop_assert_eq!(parse_plan(&text, &task).unwrap(), plan);
    }

    #[test]
    fn time_text_round_trips(n in -10_000i64..10_000, d in 1i64..200) {
        let t = rat(n, d);
        prop_assert_eq!(parse_time(&Fraction(&t).to_string()).unwrap(), t.clone());
        prop_assert_eq!(parse_time(&Decimal(&t).to_string()).unwrap(), t);
    }
}
