//! The planner against exhaustive enumeration of grid-scheduled plans.

mod common;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::sync::Arc;
use tmacro_core::planner::{solve, solve_with_stats, SearchLimits, SearchResult};
use tmacro_core::time::{int, rat};
use tmacro_core::{Atom, AtomSet, DurativeAction, PlanningTask};

fn random_task(rng: &mut StdRng) -> PlanningTask {
    loop {
        let n = rng.gen_range(2..=4);
        let vars: Vec<Atom> = (0..n).map(|i| Atom::nullary(format!("v{i}"))).collect();
        let actions: Vec<Arc<DurativeAction>> = (0..rng.gen_range(1..=3))
            .map(|i| {
                let mut a = random_action(rng, &format!("a{i}"), &vars);
                a.duration = [rat(1, 2), int(1), rat(3, 2)][rng.gen_range(0..3)].clone();
                Arc::new(a)
            })
            .collect();
        let init: AtomSet = vars.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        let goal: AtomSet = vars.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
        if let Ok(t) = PlanningTask::new(vars.iter().cloned().collect(), actions, init, goal) {
            return t;
        }
    }
}

#[test]
fn bounded_completeness_on_the_grid() {
    let eps = rat(1, 2);
    let horizon = int(4);
    let limits = SearchLimits {
        max_steps: 3,
        horizon: horizon.clone(),
        epsilon: eps.clone(),
        node_budget: 1_000_000,
    };
    let mut rng = StdRng::seed_from_u64(11);
    let mut solved = 0;
    for _ in 0..60 {
        let task = random_task(&mut rng);
        let shortest = (0..=3).find(|&k| grid_search(&task, k, &eps, &horizon).is_some());
        match solve(&task, &limits) {
            SearchResult::Solved { plan } => {
                assert!(solves(&task, &plan), "{plan:?}");
                assert_eq!(Some(plan.len()), shortest);
                for s in &plan.steps {
                    let k = &s.start / &eps;
                    assert!(k.is_integer() && k >= int(1));
                    assert!(s.end() <= horizon);
                }
                solved += 1;
            }
            SearchResult::ExhaustedComplete => assert_eq!(shortest, None, "{task:?}"),
            SearchResult::BudgetExceeded => panic!("budget is ample"),
        }
    }
    assert!(solved >= 15, "only {solved} solvable tasks");
}

#[test]
fn exhaustion_is_reported_only_within_budget() {
    let mut rng = StdRng::seed_from_u64(3);
    let task = random_task(&mut rng);
    let tight = SearchLimits {
        node_budget: 1,
        ..SearchLimits::default()
    };
    let (result, stats) = solve_with_stats(&task, &tight);
    assert!(stats.expanded <= 1);
    assert!(matches!(result, SearchResult::BudgetExceeded | SearchResult::Solved { .. }));
}
