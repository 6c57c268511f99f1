//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;
use tmacro_core::composer::{compose, compose_seq, CompositionOutcome, ComposeError, UndefinedReason};
use tmacro_core::effect_safe::{base_plan, build_effect_safe};
use tmacro_core::pddl::{
    all_pairs_shortest_paths, instantiate, lift_compose, parse_domain, parse_problem,
    shortest_path_closure, ground_with_macros, GroundingStatus, MacroRecipe, MoveSpec, RecipeStep, Term,
};
use tmacro_core::planner::{solve, SearchLimits, SearchResult};
use tmacro_core::refinement::{event_descriptors, refine_all_ordered, refine_once, RefineOrder};
use tmacro_core::semantics::{check_plan, unroll};
use tmacro_core::time::{int, rat};
use tmacro_core::{
    ActionName, DurativeAction, Literal, MutexAtom, Plan, PlanningTask, Time,
};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()
}

/// The ground move and get actions of the pick-up example.
fn move_get() -> (Arc<DurativeAction>, Arc<DurativeAction>) {
    let mv = action("move", int(2))
        .with_pre_start([atom("at(r,l1)")])
        .with_pre_end([atom("free(l2)")])
        .with_eff_start(lits(&["!at(r,l1)", "free(l1)"]))
        .with_eff_end(lits(&["at(r,l2)", "!free(l2)"]));
    let get = action("get", int(3))
        .with_pre_start(atoms(&["at(r,l2)", "empty(r)"]))
        .with_pre_inv([atom("at(r,l2)")])
        .with_eff_start(lits(&["!empty(r)"]))
        .with_eff_end(lits(&["holding(r)"]));
    (Arc::new(mv), Arc::new(get))
}

fn golden_composition() {
    let (mv, get) = move_get();
    let m = compose(&mv, &get).unwrap().defined().expect("defined");
    assert_eq!(m.pre_start, atoms(&["at(r,l1)", "free(l2)", "empty(r)"]));
    assert!(m.pre_inv.is_empty());
    assert!(m.pre_end.is_empty());
    assert_eq!(m.eff_start, lits(&["!at(r,l1)", "free(l1)", "!free(l2)", "!empty(r)"]));
    assert_eq!(m.eff_end, lits(&["at(r,l2)", "holding(r)"]));
    assert_eq!(m.duration, int(5));

    // the same actions obtained from the PDDL fixture
    let dom = parse_domain(&fixture("toy-domain.pddl")).unwrap();
    let bind = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    };
    let gm = instantiate(dom.schema("move").unwrap(), &bind(&[("r", "r"), ("from", "l1"), ("to", "l2")])).unwrap();
    let gg = instantiate(dom.schema("get").unwrap(), &bind(&[("r", "r"), ("l", "l2")])).unwrap();
    let m2 = compose(&Arc::new(gm), &Arc::new(gg)).unwrap().defined().unwrap();
    assert!(m.same_body(&m2));
}

fn golden_mutex() {
    let (mv, get) = move_get();
    let m = compose(&mv, &get).unwrap().defined().unwrap();
    let expected: BTreeSet<MutexAtom> = [
        MutexAtom::del(atom("free(l2)")),
        MutexAtom::del(atom("empty(r)")),
        MutexAtom::del(atom("at(r,l2)")),
        MutexAtom::add(atom("free(l2)")),
        MutexAtom::add(atom("empty(r)")),
    ]
    .into_iter()
    .collect();
    assert_eq!(*m.mutex(), expected);
}

fn lost_solution() {
    let a1 = Arc::new(
        action("a1", int(2))
            .with_eff_start(lits(&["!v1"]))
            .with_eff_end(lits(&["!v2"])),
    );
    let a2 = Arc::new(action("a2", int(2)).with_pre_end([atom("v1")]).with_eff_end(lits(&["v3"])));
    let a0 = Arc::new(compose(&a1, &a2).unwrap().defined().unwrap());
    let a = Arc::new(action("a", int(1)).with_eff_start(lits(&["v1", "v2"])));
    let task = PlanningTask::new(atoms(&["v1", "v2", "v3"]), [a0.clone(), a], Default::default(), atoms(&["v3"])).unwrap();
    let limits = SearchLimits {
        max_steps: 3,
        horizon: int(10),
        ..SearchLimits::default()
    };

    let SearchResult::Solved { plan } = solve(&task, &limits) else {
        panic!("the original task is solvable")
    };
    assert!(solves(&task, &plan), "{plan:?}");
    let macro_step = plan.steps.iter().find(|s| s.action.name == a0.name).unwrap();
    let inside = plan.steps.iter().any(|s| {
        s.action.name.schema == "a" && macro_step.start < s.start && s.start < macro_step.end()
    });
    assert!(inside, "a starts within the macro's span");

    let hat = build_effect_safe(&task).unwrap();
    let a0_hat = hat.hat(&a0).unwrap();
    assert!(a0_hat.eff_start.contains(&Literal::neg(MutexAtom::add(atom("v2")).surface())));
    let started = Instant::now();
    assert_eq!(solve(&hat.task, &limits), SearchResult::ExhaustedComplete);
    assert!(started.elapsed().as_secs() < 60);

    // exhaustive enumeration on the half-unit grid agrees
    let half = rat(1, 2);
    assert!(grid_search(&task, 3, &half, &int(10)).is_some());
    assert!(grid_search(&hat.task, 3, &half, &int(10)).is_none());
}

struct Solved {
    task: PlanningTask,
    plan: Plan,
}

fn limits() -> SearchLimits {
    SearchLimits {
        max_steps: 3,
        horizon: int(12),
        epsilon: rat(1, 2),
        node_budget: 200_000,
    }
}

/// Solutions of effect-safe random tasks, as base plans over the originals.
fn random_solutions() -> (usize, Vec<Solved>) {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let tasks = 500;
    let mut out = Vec::new();
    for _ in 0..tasks {
        let task = random_macro_task(&mut rng);
        let hat = build_effect_safe(&task).unwrap();
        if let SearchResult::Solved { plan } = solve(&hat.task, &limits()) {
            assert!(solves(&hat.task, &plan));
            let base = base_plan(&plan, &hat).unwrap();
            out.push(Solved { task: task.clone(), plan: base });
        }
    }
    (tasks, out)
}

fn soundness(solutions: &[Solved], tasks: usize) {
    let with_macros = solutions.iter().filter(|s| s.plan.has_macros()).count();
    println!(
        "    {tasks} tasks, {} effect-safe solutions, {with_macros} using macros",
        solutions.len()
    );
    assert!(tasks >= 100);
    assert!(with_macros >= 50, "too few macro solutions to be meaningful");
    let failures: Vec<_> = solutions
        .iter()
        .filter(|s| !solves(&s.task, &s.plan) || !check_plan(&s.task, &s.plan).unwrap().solves)
        .collect();
    assert!(failures.is_empty(), "{} base plans fail", failures.len());
}

fn refinement(solutions: &[Solved]) {
    let started = Instant::now();
    let mut splits = 0;
    for s in solutions.iter().filter(|s| s.plan.has_macros()) {
        // every single step, latest macro first
        let mut current = s.plan.clone();
        while let Some(next) = current
            .steps
            .iter()
            .filter(|x| x.action.is_macro())
            .max_by(|a, b| a.start.cmp(&b.start))
            .cloned()
        {
            let (refined, _) = refine_once(&current, &next).unwrap();
            assert!(solves(&s.task.induced(&refined).unwrap(), &refined), "{refined:?}");
            current = refined;
            splits += 1;
        }
        assert!(!current.has_macros());

        let late = refine_all_ordered(&s.task, &s.plan, RefineOrder::LatestFirst).unwrap();
        let early = refine_all_ordered(&s.task, &s.plan, RefineOrder::EarliestFirst).unwrap();
        for r in [&late.plan, &early.plan] {
            assert!(solves(&s.task, r));
        }
        assert_eq!(late.plan, current);
        assert_eq!(event_descriptors(&late.plan).unwrap(), event_descriptors(&early.plan).unwrap());
    }
    println!("    {splits} refinement steps certified");
    assert!(splits > 0);
    assert!(started.elapsed().as_secs() < 300);
}

fn commutation() {
    let dom = parse_domain(&fixture("toy-domain.pddl")).unwrap();
    let prob = parse_problem(
        "(define (problem grid) (:domain toy)
           (:objects r1 r2 r3 - robot l1 l2 l3 l4 - location)
           (:init (at r1 l1) (free l2) (free l3) (free l4) (empty r1) (empty r2) (empty r3))
           (:goal (and (holding r1))))",
        &dom,
    )
    .unwrap();
    let var = |v: &str| Term::Var(v.into());
    let recipe = MacroRecipe {
        name: "move-get".into(),
        steps: vec![
            RecipeStep { schema: "move".into(), args: vec![var("r"), var("from"), var("to")] },
            RecipeStep { schema: "get".into(), args: vec![var("r"), var("to")] },
        ],
    };
    let (lifted, report) = lift_compose(&dom, &recipe, Some(&prob)).unwrap();
    let mut lifted_dom = dom.clone();
    lifted_dom.schemas.push(lifted.clone());
    let (task, _) = ground_with_macros(&lifted_dom, &prob, &[recipe]).unwrap();

    let robots = ["r1", "r2", "r3"];
    let places = ["l1", "l2", "l3", "l4"];
    let mut equal = 0;
    let mut aliased = 0;
    for r in robots {
        for from in places {
            for to in places {
                let b: BTreeMap<String, String> =
                    [("r", r), ("from", from), ("to", to)].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
                let mv = instantiate(dom.schema("move").unwrap(), &b).unwrap();
                let get_b: BTreeMap<String, String> =
                    [("r", r), ("l", to)].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
                let get = instantiate(dom.schema("get").unwrap(), &get_b).unwrap();
                let grounded = match compose_seq(&[Arc::new(mv), Arc::new(get)]) {
                    Ok(CompositionOutcome::Defined(m)) => Some(m),
                    _ => None,
                };
                let name = ActionName::new("move-get", [r, from, to]);
                let in_task = task.action(&name);
                let check = report.checks.iter().find(|c| c.args == [r, from, to]).unwrap();
                if from == to {
                    aliased += 1;
                    if let Some(g) = &grounded {
                        let inst = instantiate(&lifted, &b).unwrap();
                        let same = g.duration == inst.duration
                            && g.pre_start == inst.pre_start
                            && g.pre_inv == inst.pre_inv
                            && g.pre_end == inst.pre_end
                            && g.eff_start == inst.eff_start
                            && g.eff_end == inst.eff_end;
                        assert_eq!(same, check.status == GroundingStatus::Admitted);
                        assert_eq!(same, in_task.is_some());
                    } else {
                        assert!(in_task.is_none() && check.status != GroundingStatus::Admitted);
                    }
                    continue;
                }
                let g = grounded.expect("distinct arguments compose");
                let inst = instantiate(&lifted, &b).unwrap();
                assert_eq!(g.duration, inst.duration);
                assert_eq!(g.pre_start, inst.pre_start);
                assert_eq!(g.pre_inv, inst.pre_inv);
                assert_eq!(g.pre_end, inst.pre_end);
                assert_eq!(g.eff_start, inst.eff_start);
                assert_eq!(g.eff_end, inst.eff_end);
                assert_eq!(check.status, GroundingStatus::Admitted);
                let t = in_task.expect("admitted macro is in the task");
                assert!(t.same_body(&g), "{name}");
                assert_eq!(t.constituents(), g.constituents());
                equal += 1;
            }
        }
    }
    println!("    {equal} distinct groundings equal, {aliased} aliased groundings consistent");
    assert_eq!(equal, 36);
}

fn simple_path_oracle(n: usize, w: &BTreeMap<(usize, usize), Time>, from: usize, to: usize) -> Option<Time> {
    fn go(
        n: usize,
        w: &BTreeMap<(usize, usize), Time>,
        at: usize,
        to: usize,
        seen: &mut Vec<bool>,
        len: Time,
        best: &mut Option<Time>,
    ) {
        if at == to {
            if best.as_ref().map_or(true, |b| len < *b) {
                *best = Some(len);
            }
            return;
        }
        for next in 0..n {
            if let Some(x) = w.get(&(at, next)) {
                if !seen[next] {
                    seen[next] = true;
                    go(n, w, next, to, seen, &len + x, best);
                    seen[next] = false;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut best = None;
    go(n, w, from, to, &mut seen, int(0), &mut best);
    best
}

fn closure() {
    let dom = parse_domain(&fixture("drive-domain.pddl")).unwrap();
    let spec = MoveSpec {
        schema: "drive".into(),
        from_param: "from".into(),
        to_param: "to".into(),
        edge_predicate: "road".into(),
    };
    let mut rng = StdRng::seed_from_u64(7);
    let mut pairs = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let mut w = BTreeMap::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen_bool(0.35) {
                    w.insert((u, v), rat(rng.gen_range(1..=9), rng.gen_range(1..=4)));
                }
            }
        }
        let name = |i: usize| format!("p{i}");
        let objects: Vec<String> = (0..n).map(name).collect();
        let roads: String = w.keys().map(|(u, v)| format!(" (road p{u} p{v})")).collect();
        let prob = parse_problem(
            &format!(
                "(define (problem g) (:domain drive) (:objects t - truck {} - place) (:init (at t p0){roads}) (:goal (and (at t p{}))))",
                objects.join(" "),
                n - 1
            ),
            &dom,
        )
        .unwrap();
        let durations: BTreeMap<(String, String), Time> =
            w.iter().map(|((u, v), x)| ((name(*u), name(*v)), x.clone())).collect();
        let (closed, _) = shortest_path_closure(&dom, &prob, &spec, &durations).unwrap();
        let got: BTreeMap<String, Time> =
            closed.schemas.iter().map(|s| (s.name.clone(), s.duration.clone())).collect();
        let mut expected = BTreeMap::new();
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    if let Some(d) = simple_path_oracle(n, &w, u, v) {
                        expected.insert(format!("drive-p{u}-p{v}"), d);
                    }
                }
            }
        }
        assert_eq!(got, expected);
        let apsp = all_pairs_shortest_paths(&objects, &durations);
        assert_eq!(apsp.len(), expected.len());
        pairs += expected.len();
    }
    println!("    50 graphs, {pairs} connected pairs");
}

fn undefinedness() {
    let a1 = Arc::new(action("a1", int(1)).with_eff_end(lits(&["!p", "!q", "!s"])));
    let a2 = Arc::new(
        action("a2", int(1))
            .with_pre_inv(atoms(&["p", "u"]))
            .with_pre_end(atoms(&["q", "s"]))
            .with_eff_start(lits(&["s"])),
    );
    let CompositionOutcome::Undefined(u) = compose(&a1, &a2).unwrap() else {
        panic!("both provisos fail")
    };
    assert_eq!(u.witnesses(UndefinedReason::InvariantDeletedAtStart), Some(&atoms(&["p"])));
    assert_eq!(u.witnesses(UndefinedReason::EndPreFalsifiedInside), Some(&atoms(&["q"])));

    let only_inv = Arc::new(action("b", int(1)).with_pre_inv(atoms(&["p", "q"])));
    let CompositionOutcome::Undefined(u) = compose(&a1, &only_inv).unwrap() else { panic!() };
    assert_eq!(u.failures.len(), 1);
    assert_eq!(u.witnesses(UndefinedReason::InvariantDeletedAtStart), Some(&atoms(&["p", "q"])));

    let only_end = Arc::new(action("c", int(1)).with_pre_end(atoms(&["s"])));
    let CompositionOutcome::Undefined(u) = compose(&a1, &only_end).unwrap() else { panic!() };
    assert_eq!(u.failures.len(), 1);
    assert_eq!(u.witnesses(UndefinedReason::EndPreFalsifiedInside), Some(&atoms(&["s"])));

    // three actions composed from the right
    let x1 = Arc::new(action("x1", int(1)).with_eff_end(lits(&["!v"])));
    let x2 = Arc::new(action("x2", int(2)).with_eff_end(lits(&["w"])));
    let x3 = Arc::new(action("x3", int(3)).with_pre_end(atoms(&["v"])));
    let CompositionOutcome::Undefined(u) = compose_seq(&[x1.clone(), x2.clone(), x3.clone()]).unwrap() else {
        panic!("discarded")
    };
    assert_eq!(u.position, 0);
    assert_eq!(u.witnesses(UndefinedReason::EndPreFalsifiedInside), Some(&atoms(&["v"])));
    // composing from the left would hide v inside the macro's start effects
    let left = Arc::new(compose(&x1, &x2).unwrap().defined().unwrap());
    assert!(left.eff_start.contains(&lit("!v")));
    assert_eq!(compose(&left, &x3), Err(ComposeError::MacroLeftOperand(left.name.clone())));
}

fn semantics_oracle() {
    let (mv, get) = move_get();
    let back = Arc::new(
        action("back", int(2))
            .with_pre_start([atom("at(r,l2)")])
            .with_eff_start(lits(&["!at(r,l2)"]))
            .with_eff_end(lits(&["at(r,l1)", "free(l2)"])),
    );
    let toy = PlanningTask::new(
        atoms(&["at(r,l1)", "at(r,l2)", "free(l1)", "free(l2)", "empty(r)", "holding(r)"]),
        [mv.clone(), get.clone(), back.clone()],
        atoms(&["at(r,l1)", "free(l2)", "empty(r)"]),
        atoms(&["holding(r)"]),
    )
    .unwrap();

    let p = Arc::new(action("p", int(3)).with_eff_start(lits(&["x"])).with_eff_end(lits(&["!x", "y"])));
    let q = Arc::new(action("q", rat(1, 2)).with_pre_start([atom("x")]).with_eff_end(lits(&["z", "!y"])));
    let s = Arc::new(action("s", rat(7, 3)).with_eff_start(lits(&["!z", "y"])).with_eff_end(lits(&["x", "z"])));
    let abstract_task = PlanningTask::new(
        atoms(&["x", "y", "z"]),
        [p.clone(), q.clone(), s.clone()],
        atoms(&["z"]),
        atoms(&["y"]),
    )
    .unwrap();

    let t = |s: &str| tmacro_core::time::parse_time(s).unwrap();
    let plans: Vec<(&PlanningTask, Plan)> = vec![
        (&toy, plan(&[])),
        (&toy, plan(&[(t("1"), &mv)])),
        (&toy, plan(&[(t("1"), &mv), (t("3.5"), &get)])),
        (&toy, plan(&[(t("1"), &mv), (t("2.5"), &get)])),
        (&toy, plan(&[(t("0.5"), &get), (t("1"), &mv)])),
        (&toy, plan(&[(t("1"), &mv), (t("3.5"), &get), (t("4"), &back)])),
        (&toy, plan(&[(t("1"), &mv), (t("3.5"), &get), (t("7"), &back)])),
        (&toy, plan(&[(t("1/3"), &back), (t("1/2"), &mv), (t("2/3"), &get)])),
        (&toy, plan(&[(t("2"), &mv), (t("1"), &back)])),
        (&toy, plan(&[(t("0.1"), &get), (t("0.2"), &mv), (t("0.3"), &back)])),
        (&abstract_task, plan(&[(t("1"), &p)])),
        (&abstract_task, plan(&[(t("1"), &p), (t("2"), &q)])),
        (&abstract_task, plan(&[(t("1"), &p), (t("2"), &q), (t("2.25"), &s)])),
        (&abstract_task, plan(&[(t("1"), &s), (t("1.5"), &p), (t("2"), &q)])),
        (&abstract_task, plan(&[(t("4.5"), &q), (t("1"), &p), (t("2"), &s)])),
        (&abstract_task, plan(&[(t("1/7"), &s), (t("2/7"), &q), (t("3/7"), &p)])),
        (&abstract_task, plan(&[(t("1"), &p), (t("1.2"), &q), (t("1.8"), &s)])),
        (&abstract_task, plan(&[(t("5"), &s), (t("6"), &p), (t("8"), &q)])),
        (&abstract_task, plan(&[(t("0.25"), &q), (t("0.5"), &s), (t("1"), &p)])),
        (&abstract_task, plan(&[(t("1"), &p), (t("3.25"), &q), (t("1.25"), &s)])),
    ];
    assert_eq!(plans.len(), 20);
    let mut entries = 0;
    for (task, plan) in &plans {
        assert!(plan.len() <= 4 && well_shaped(plan), "{plan:?}");
        let trace = unroll(task, plan).unwrap();
        let oracle = simulate(&task.init, plan);
        assert_eq!(trace.entries.len(), oracle.len());
        for (e, o) in trace.entries.iter().zip(&oracle) {
            assert_eq!(e.stamp, o.stamp);
            assert_eq!(e.state, o.state);
            let running: Vec<(Time, usize)> = e.scheduled.iter().map(|f| (f.end.clone(), f.step)).collect();
            assert_eq!(running, o.running);
            for f in &e.scheduled {
                let a = &plan.steps[f.step].action;
                assert_eq!((&f.pre_inv, &f.pre_end, &f.eff_end), (&a.pre_inv, &a.pre_end, &a.eff_end));
            }
            entries += 1;
        }
        assert_eq!(check_plan(task, plan).unwrap().solves, solves(task, plan), "{plan:?}");
    }
    println!("    20 plans, {entries} trace entries");
}

fn main() {
    let mut failed = 0;
    let mut run = |n: usize, title: &str, f: &dyn Fn()| {
        let started = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n} {title}: {} ({:.2}s)",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    };
    run(1, "composition golden test", &golden_composition);
    run(2, "mutex golden test", &golden_mutex);
    run(3, "effect-safe task loses the concurrent solution", &lost_solution);
    let solutions = std::cell::RefCell::new(Vec::new());
    run(4, "base plans of effect-safe solutions solve the original", &|| {
        let (tasks, found) = random_solutions();
        soundness(&found, tasks);
        *solutions.borrow_mut() = found;
    });
    run(5, "refinement steps and orders", &|| refinement(&solutions.borrow()));
    run(6, "lifted and grounded composition commute", &commutation);
    run(7, "shortest-path closure vs simple paths", &closure);
    run(8, "undefined compositions", &undefinedness);
    run(9, "trace matches the event-sorting simulator", &semantics_oracle);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
