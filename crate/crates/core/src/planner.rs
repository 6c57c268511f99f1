//! Bounded decision-epoch forward search for small temporal tasks.
//!
//! The search branches over the next event: starting an action or ending a
//! running one. Start times live on the grid `k·ε` (`k ≥ 1`), and the order of
//! events chosen so far becomes a system of integer difference constraints
//! over the `k`s. A branch is kept only while that system has a solution
//! within the horizon, so every event order realizable on the grid is
//! explored and nothing else. Exhausting the space is therefore a
//! certificate that no grid-scheduled plan with at most `max_steps` steps
//! exists.

use crate::model::{AtomSet, DurativeAction, Plan, PlanningTask, TimedAction};
use crate::semantics::check_plan;
use crate::time::{int, rat, Time};
use num_traits::{Signed, ToPrimitive};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Maximum number of plan steps.
    pub max_steps: usize,
    /// Latest allowed end time.
    pub horizon: Time,
    /// Grid spacing of start times.
    pub epsilon: Time,
    /// Maximum number of expanded search nodes.
    pub node_budget: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_steps: 4,
            horizon: int(100),
            epsilon: rat(1, 100),
            node_budget: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchResult {
    Solved { plan: Plan },
    /// The bounded space was enumerated completely without a solution.
    ExhaustedComplete,
    BudgetExceeded,
}

impl SearchResult {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SearchResult::Solved { plan } => Some(plan),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expanded: usize,
}

/// Searches for a plan solving `task` within `limits`.
pub fn solve(task: &PlanningTask, limits: &SearchLimits) -> SearchResult {
    solve_with_stats(task, limits).0
}

pub fn solve_with_stats(task: &PlanningTask, limits: &SearchLimits) -> (SearchResult, SearchStats) {
    let mut search = Search::new(task, limits);
    let root = Node {
        state: task.init.clone(),
        steps: Vec::new(),
        running: Vec::new(),
        chain: Vec::new(),
    };
    // Iterative deepening on the step count, so the first plan found is
    // among the shortest. The budget is shared across depths.
    let mut outcome = Outcome::Exhausted;
    for cap in 0..=limits.max_steps {
        search.step_cap = cap;
        outcome = search.dfs(&root);
        if !matches!(outcome, Outcome::Exhausted) {
            break;
        }
    }
    let stats = SearchStats {
        expanded: search.expanded,
    };
    let result = match outcome {
        Outcome::Found(plan) => SearchResult::Solved { plan },
        Outcome::Exhausted => SearchResult::ExhaustedComplete,
        Outcome::OutOfBudget => SearchResult::BudgetExceeded,
    };
    (result, stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct EventRef {
    step: usize,
    end: bool,
}

#[derive(Clone, Debug)]
struct Node {
    state: AtomSet,
    /// Action index per step.
    steps: Vec<usize>,
    /// Steps started but not yet ended.
    running: Vec<usize>,
    chain: Vec<EventRef>,
}

enum Outcome {
    Found(Plan),
    Exhausted,
    OutOfBudget,
}

struct Search<'a> {
    task: &'a PlanningTask,
    limits: &'a SearchLimits,
    /// `⌊dur/ε⌋` and `⌊-dur/ε⌋` per action.
    floor_off: Vec<i64>,
    floor_neg_off: Vec<i64>,
    /// `⌊(dur_a − dur_b)/ε⌋`.
    floor_diff: Vec<Vec<i64>>,
    /// Largest admissible `k` per action.
    upper: Vec<i64>,
    step_cap: usize,
    expanded: usize,
}

fn floor_i64(t: &Time) -> i64 {
    t.floor()
        .to_integer()
        .to_i64()
        .expect("grid offsets fit in 64 bits")
}

impl<'a> Search<'a> {
    fn new(task: &'a PlanningTask, limits: &'a SearchLimits) -> Self {
        let eps = &limits.epsilon;
        assert!(eps.is_positive(), "epsilon must be positive");
        let offs: Vec<Time> = task.actions.iter().map(|a| &a.duration / eps).collect();
        let floor_off = offs.iter().map(floor_i64).collect();
        let floor_neg_off = offs.iter().map(|o| floor_i64(&-o)).collect();
        let floor_diff = offs
            .iter()
            .map(|a| offs.iter().map(|b| floor_i64(&(a - b))).collect())
            .collect();
        let upper = task
            .actions
            .iter()
            .map(|a| floor_i64(&((&limits.horizon - &a.duration) / eps)))
            .collect();
        Search {
            task,
            limits,
            floor_off,
            floor_neg_off,
            floor_diff,
            upper,
            step_cap: limits.max_steps,
            expanded: 0,
        }
    }

    fn action(&self, index: usize) -> &Arc<DurativeAction> {
        &self.task.actions[index]
    }

    /// Minimal `w` such that event `x` strictly precedes event `y` iff
    /// `k_y − k_x ≥ w` (steps of actions `ax`, `ay`).
    fn precedence_weight(&self, x: EventRef, ax: usize, y: EventRef, ay: usize) -> i64 {
        let base = match (x.end, y.end) {
            (false, false) => 0,
            (true, false) => self.floor_off[ax],
            (false, true) => self.floor_neg_off[ay],
            (true, true) => self.floor_diff[ax][ay],
        };
        base + 1
    }

    /// Earliest grid assignment satisfying the event chain of `node` plus the
    /// requirement that running actions end after the last event.
    fn schedule(&self, node: &Node) -> Option<Vec<i64>> {
        let n = node.steps.len();
        let mut edges: Vec<(usize, usize, i64)> = Vec::new();
        let push = |x: EventRef, y: EventRef, edges: &mut Vec<(usize, usize, i64)>| {
            if x.step != y.step {
                let w = self.precedence_weight(x, node.steps[x.step], y, node.steps[y.step]);
                edges.push((x.step, y.step, w));
            }
        };
        for pair in node.chain.windows(2) {
            push(pair[0], pair[1], &mut edges);
        }
        if let Some(&last) = node.chain.last() {
            for &r in &node.running {
                push(last, EventRef { step: r, end: true }, &mut edges);
            }
        }
        let mut k = vec![1i64; n];
        let mut changed = true;
        let mut rounds = 0;
        while changed {
            changed = false;
            rounds += 1;
            if rounds > n + 1 {
                return None;
            }
            for &(i, j, w) in &edges {
                if k[j] < k[i] + w {
                    k[j] = k[i] + w;
                    changed = true;
                }
            }
        }
        let fits = k
            .iter()
            .zip(&node.steps)
            .all(|(&ki, &a)| ki <= self.upper[a]);
        fits.then_some(k)
    }

    fn unmet_goals(&self, state: &AtomSet) -> usize {
        self.task.goal.iter().filter(|g| !state.contains(g)).count()
    }

    fn invariants_hold(&self, node: &Node, state: &AtomSet) -> bool {
        node.running.iter().all(|&s| {
            self.action(node.steps[s])
                .pre_inv
                .iter()
                .all(|v| state.contains(v))
        })
    }

    fn children(&self, node: &Node) -> Vec<Node> {
        let mut out = Vec::new();
        for (pos, &s) in node.running.iter().enumerate() {
            let a = self.action(node.steps[s]);
            if !a.pre_end.iter().all(|v| node.state.contains(v)) {
                continue;
            }
            let mut state = node.state.clone();
            for l in &a.eff_end {
                if !l.positive {
                    state.remove(&l.atom);
                }
            }
            state.extend(a.add_end());
            let mut child = node.clone();
            child.running.remove(pos);
            if !self.invariants_hold(&child, &state) {
                continue;
            }
            child.state = state;
            child.chain.push(EventRef { step: s, end: true });
            out.push(child);
        }
        if node.steps.len() < self.step_cap {
            for (ai, a) in self.task.actions.iter().enumerate() {
                if self.upper[ai] < 1 {
                    continue;
                }
                if !a.pre_start.iter().all(|v| node.state.contains(v)) {
                    continue;
                }
                let mut state = node.state.clone();
                for v in a.del_start() {
                    state.remove(&v);
                }
                state.extend(a.add_start());
                let mut child = node.clone();
                let step = child.steps.len();
                child.steps.push(ai);
                child.running.push(step);
                if !self.invariants_hold(&child, &state) {
                    continue;
                }
                child.state = state;
                child.chain.push(EventRef { step, end: false });
                out.push(child);
            }
        }
        out.retain(|c| self.schedule(c).is_some());
        out.sort_by_key(|c| self.unmet_goals(&c.state));
        out
    }

    fn to_plan(&self, node: &Node) -> Option<Plan> {
        let k = self.schedule(node)?;
        Some(Plan::new(node.steps.iter().zip(k).map(|(&a, ki)| {
            TimedAction::new(&self.limits.epsilon * int(ki), self.action(a).clone())
        })))
    }

    fn dfs(&mut self, node: &Node) -> Outcome {
        if node.running.is_empty() && self.unmet_goals(&node.state) == 0 {
            if let Some(plan) = self.to_plan(node) {
                let certified = check_plan(self.task, &plan).map(|r| r.solves).unwrap_or(false);
                debug_assert!(certified, "search produced an invalid plan");
                if certified {
                    return Outcome::Found(plan);
                }
            }
        }
        if self.expanded >= self.limits.node_budget {
            return Outcome::OutOfBudget;
        }
        self.expanded += 1;
        let mut exhausted = true;
        for child in self.children(node) {
            match self.dfs(&child) {
                Outcome::Found(p) => return Outcome::Found(p),
                Outcome::OutOfBudget => {
                    exhausted = false;
                    break;
                }
                Outcome::Exhausted => {}
            }
        }
        if exhausted {
            Outcome::Exhausted
        } else {
            Outcome::OutOfBudget
        }
    }
}
