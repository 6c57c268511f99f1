//! Oracles and generators shared by the integration tests. Nothing here calls
//! into the library's semantics, composer or planner.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use std::collections::BTreeSet;
use std::sync::Arc;
use tmacro_core::composer::{compose_seq, CompositionOutcome};
use tmacro_core::time::{int, rat};
use tmacro_core::{
    validate_action, ActionName, Atom, AtomSet, DurativeAction, Literal, LiteralSet, Plan,
    PlanningTask, Time, TimedAction,
};

pub fn atom(s: &str) -> Atom {
    Atom::parse(s).unwrap()
}

pub fn lit(s: &str) -> Literal {
    Literal::parse(s).unwrap()
}

pub fn atoms(xs: &[&str]) -> AtomSet {
    xs.iter().map(|s| atom(s)).collect()
}

pub fn lits(xs: &[&str]) -> LiteralSet {
    xs.iter().map(|s| lit(s)).collect()
}

pub fn action(name: &str, dur: Time) -> DurativeAction {
    DurativeAction::new(ActionName::plain(name), dur)
}

pub fn plan(steps: &[(Time, &Arc<DurativeAction>)]) -> Plan {
    Plan::new(steps.iter().map(|(t, a)| TimedAction::new(t.clone(), (*a).clone())))
}

/// One state of the event-sorting simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimEntry {
    pub stamp: Time,
    pub state: AtomSet,
    /// Running steps as `(end, step)`, ascending.
    pub running: Vec<(Time, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Start,
    End,
}

fn apply(state: &mut AtomSet, effects: &LiteralSet) {
    for l in effects.iter().filter(|l| !l.positive) {
        state.remove(&l.atom);
    }
    for l in effects.iter().filter(|l| l.positive) {
        state.insert(l.atom.clone());
    }
}

fn events(plan: &Plan) -> Vec<(Time, Kind, usize)> {
    let mut ev = Vec::new();
    for (i, s) in plan.steps.iter().enumerate() {
        ev.push((s.start.clone(), Kind::Start, i));
        ev.push((&s.start + &s.action.duration, Kind::End, i));
    }
    ev.sort();
    ev
}

/// Sorts all start and end events by time and applies them one by one.
/// Assumes pairwise distinct event times.
pub fn simulate(init: &AtomSet, plan: &Plan) -> Vec<SimEntry> {
    let mut state = init.clone();
    let mut running: BTreeSet<(Time, usize)> = BTreeSet::new();
    let mut out = vec![SimEntry {
        stamp: int(0),
        state: state.clone(),
        running: vec![],
    }];
    for (t, kind, i) in events(plan) {
        let a = &plan.steps[i].action;
        match kind {
            Kind::Start => {
                apply(&mut state, &a.eff_start);
                running.insert((&t + &a.duration, i));
            }
            Kind::End => {
                apply(&mut state, &a.eff_end);
                running.remove(&(t.clone(), i));
            }
        }
        out.push(SimEntry {
            stamp: t,
            state: state.clone(),
            running: running.iter().cloned().collect(),
        });
    }
    out
}

/// Whether all event times are distinct and positive.
pub fn well_shaped(plan: &Plan) -> bool {
    let ev = events(plan);
    ev.iter().all(|e| e.0 > int(0)) && ev.windows(2).all(|w| w[0].0 != w[1].0)
}

/// Solution check straight from the definitions: start conditions hold
/// before the start event, end conditions before the end event, invariants
/// in every state while the action runs, and the goal in the final state.
pub fn solves(task: &PlanningTask, plan: &Plan) -> bool {
    if !well_shaped(plan) {
        return false;
    }
    let mut state = task.init.clone();
    let mut running: BTreeSet<usize> = BTreeSet::new();
    for (_, kind, i) in events(plan) {
        let a = &plan.steps[i].action;
        match kind {
            Kind::Start => {
                if !a.pre_start.is_subset(&state) {
                    return false;
                }
                apply(&mut state, &a.eff_start);
                running.insert(i);
            }
            Kind::End => {
                if !a.pre_end.is_subset(&state) {
                    return false;
                }
                apply(&mut state, &a.eff_end);
                running.remove(&i);
            }
        }
        if running
            .iter()
            .any(|&j| !plan.steps[j].action.pre_inv.is_subset(&state))
        {
            return false;
        }
    }
    task.goal.is_subset(&state)
}

/// Random well-formed ordinary action over `vars`.
pub fn random_action(rng: &mut StdRng, name: &str, vars: &[Atom]) -> DurativeAction {
    loop {
        let durations = [int(1), int(2), int(3), rat(1, 2), rat(3, 2)];
        let dur = durations[rng.gen_range(0..durations.len())].clone();
        let mut a = action(name, dur);
        for v in vars {
            let roll = |rng: &mut StdRng, p: f64| rng.gen_bool(p);
            if roll(rng, 0.2) {
                a.pre_start.insert(v.clone());
            }
            if roll(rng, 0.08) {
                a.pre_inv.insert(v.clone());
            }
            if roll(rng, 0.12) {
                a.pre_end.insert(v.clone());
            }
            match rng.gen_range(0..10) {
                0 | 1 => {
                    a.eff_start.insert(Literal::pos(v.clone()));
                }
                2 | 3 => {
                    a.eff_start.insert(Literal::neg(v.clone()));
                }
                _ => {}
            }
            match rng.gen_range(0..10) {
                0 | 1 => {
                    a.eff_end.insert(Literal::pos(v.clone()));
                }
                2 => {
                    a.eff_end.insert(Literal::neg(v.clone()));
                }
                _ => {}
            }
        }
        if validate_action(&a).is_empty() && !(a.eff_start.is_empty() && a.eff_end.is_empty()) {
            return a;
        }
    }
}

/// A random task with at most 6 atoms and at most 4 actions, one or two of
/// which are macros over two or three of the others. The first macro is applicable initially
/// and the goal holds the atoms it makes true, so that macros are useful;
/// no single ordinary action solves the task.
pub fn random_macro_task(rng: &mut StdRng) -> PlanningTask {
    loop {
        let n = rng.gen_range(3..=6);
        let vars: Vec<Atom> = (0..n).map(|i| Atom::nullary(format!("v{i}"))).collect();
        let ordinary_count = rng.gen_range(2..=3);
        let ordinary: Vec<Arc<DurativeAction>> = (0..ordinary_count)
            .map(|i| Arc::new(random_action(rng, &format!("o{i}"), &vars)))
            .collect();
        let macro_count = rng.gen_range(1..=(4 - ordinary_count).min(2));
        let mut macros = Vec::new();
        for _ in 0..20 {
            if macros.len() == macro_count {
                break;
            }
            let len = if rng.gen_bool(0.25) { 3 } else { 2 };
            let seq: Vec<Arc<DurativeAction>> =
                (0..len).map(|_| ordinary[rng.gen_range(0..ordinary.len())].clone()).collect();
            if let CompositionOutcome::Defined(m) = compose_seq(&seq).unwrap() {
                let m = Arc::new(m);
                if !macros.iter().any(|x: &Arc<DurativeAction>| x.name == m.name) {
                    macros.push(m);
                }
            }
        }
        if macros.len() != macro_count {
            continue;
        }
        let m = &macros[0];
        let mut init: AtomSet = vars.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
        init.extend(m.pre_start.iter().cloned());
        let mut goal: AtomSet = m.add_start().difference(&m.del_end()).cloned().collect();
        goal.extend(m.add_end());
        goal.retain(|v| !init.contains(v));
        for v in &vars {
            if rng.gen_bool(0.15) {
                goal.insert(v.clone());
            }
        }
        if goal.is_empty() || goal.is_subset(&init) {
            continue;
        }
        let lone = |a: &Arc<DurativeAction>| Plan::new([TimedAction::new(rat(1, 2), a.clone())]);
        let actions = ordinary.iter().cloned().chain(macros);
        if let Ok(task) = PlanningTask::new(vars.iter().cloned().collect(), actions, init, goal) {
            if !ordinary.iter().any(|o| solves(&task, &lone(o))) {
                return task;
            }
        }
    }
}

/// Every plan with at most `max_steps` steps whose starts lie on the grid
/// `k·eps`, `0 < k·eps < horizon`, and that ends by `horizon`; returns the
/// first one the oracle accepts.
pub fn grid_search(task: &PlanningTask, max_steps: usize, eps: &Time, horizon: &Time) -> Option<Plan> {
    let mut slots = Vec::new();
    let mut t = eps.clone();
    while t < *horizon {
        slots.push(t.clone());
        t = &t + eps;
    }
    let mut choices = Vec::new();
    for a in &task.actions {
        for s in &slots {
            if &(s + &a.duration) <= horizon {
                choices.push(TimedAction::new(s.clone(), a.clone()));
            }
        }
    }
    fn go(
        task: &PlanningTask,
        choices: &[TimedAction],
        from: usize,
        left: usize,
        current: &mut Vec<TimedAction>,
    ) -> Option<Plan> {
        let plan = Plan::new(current.iter().cloned());
        if solves(task, &plan) {
            return Some(plan);
        }
        if left == 0 {
            return None;
        }
        for i in from..choices.len() {
            current.push(choices[i].clone());
            if well_shaped(&Plan::new(current.iter().cloned())) {
                if let Some(p) = go(task, choices, i + 1, left - 1, current) {
                    return Some(p);
                }
            }
            current.pop();
        }
        None
    }
    go(task, &choices, 0, max_steps, &mut Vec::new())
}
