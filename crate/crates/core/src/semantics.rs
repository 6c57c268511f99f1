//! Plan-to-trace induction and the consistency / solution checks.
//!
//! A plan `P` induces `2|P|+1` time-stamped states `(τ_i, s_i, F_i)`. Each
//! step is first applied at its start time, which schedules its end tuple in
//! `F`; the tuple is consumed again at the end time.

use crate::model::{
    validate_plan_shape, ActionName, Atom, AtomList, AtomSet, LiteralSet, ModelError, Plan,
    PlanningTask, ShapeReport,
};
use crate::time::{Fraction, Time};
use num_traits::Zero;
use serde_json::{json, Value};
use std::fmt::{self, Write as _};
use thiserror::Error;

/// An element of `F_i`: the end tuple of a step that started but has not
/// ended yet. Keyed by the owning step's index in the plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledEffect {
    pub end: Time,
    pub step: usize,
    pub pre_inv: AtomSet,
    pub pre_end: AtomSet,
    pub eff_end: LiteralSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Initial,
    Start { step: usize },
    End { step: usize },
}

impl Event {
    pub fn step(&self) -> Option<usize> {
        match *self {
            Event::Initial => None,
            Event::Start { step } | Event::End { step } => Some(step),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Event::Initial => "init",
            Event::Start { .. } => "start",
            Event::End { .. } => "end",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub index: usize,
    pub stamp: Time,
    pub state: AtomSet,
    /// `F_i`, ordered by end time.
    pub scheduled: Vec<ScheduledEffect>,
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("plan violates the distinct-event-times requirement")]
    ShapeViolation(ShapeReport),
    #[error("plan step uses action {0} which is not part of the task")]
    UnknownAction(ActionName),
    #[error("internal error: two events at t={}", Fraction(.0))]
    SimultaneousEvents(Time),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Unrolls `plan` into its trace by executing the time-stamp recurrence
/// literally: the next stamp is the smallest pending start time above the
/// previous stamp or the smallest scheduled end time.
pub fn unroll(task: &PlanningTask, plan: &Plan) -> Result<Trace, SemanticsError> {
    let shape = validate_plan_shape(plan);
    if !shape.is_empty() {
        return Err(SemanticsError::ShapeViolation(shape));
    }
    if let Some(step) = plan.steps.iter().find(|s| !task.contains(&s.action)) {
        return Err(SemanticsError::UnknownAction(step.action.name.clone()));
    }

    let mut entries = Vec::with_capacity(2 * plan.len() + 1);
    let mut stamp = Time::zero();
    let mut state = task.init.clone();
    let mut scheduled: Vec<ScheduledEffect> = Vec::new();
    entries.push(TraceEntry {
        index: 0,
        stamp: stamp.clone(),
        state: state.clone(),
        scheduled: Vec::new(),
        event: Event::Initial,
    });

    for index in 1..=2 * plan.len() {
        let next_start = plan
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.start > stamp)
            .min_by(|x, y| x.1.start.cmp(&y.1.start));
        let next_end = scheduled
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.end.cmp(&y.1.end));
        let event = match (next_start, next_end) {
            (Some((i, s)), Some((_, f))) if s.start < f.end => {
                stamp = s.start.clone();
                Event::Start { step: i }
            }
            (Some((_, s)), Some((j, f))) => {
                if s.start == f.end {
                    return Err(SemanticsError::SimultaneousEvents(s.start.clone()));
                }
                stamp = f.end.clone();
                Event::End { step: scheduled[j].step }
            }
            (Some((i, s)), None) => {
                stamp = s.start.clone();
                Event::Start { step: i }
            }
            (None, Some((_, f))) => {
                stamp = f.end.clone();
                Event::End { step: f.step }
            }
            (None, None) => unreachable!("fewer events than 2|P|"),
        };
        match event {
            Event::Start { step } => {
                let a = &plan.steps[step].action;
                for v in a.del_start() {
                    state.remove(&v);
                }
                state.extend(a.add_start());
                scheduled.push(ScheduledEffect {
                    end: &stamp + &a.duration,
                    step,
                    pre_inv: a.pre_inv.clone(),
                    pre_end: a.pre_end.clone(),
                    eff_end: a.eff_end.clone(),
                });
                scheduled.sort_by(|x, y| x.end.cmp(&y.end));
            }
            Event::End { step } => {
                let pos = scheduled.iter().position(|f| f.step == step).unwrap();
                let ending = scheduled.remove(pos);
                for l in &ending.eff_end {
                    if !l.positive {
                        state.remove(&l.atom);
                    }
                }
                for l in &ending.eff_end {
                    if l.positive {
                        state.insert(l.atom.clone());
                    }
                }
            }
            Event::Initial => unreachable!(),
        }
        entries.push(TraceEntry {
            index,
            stamp: stamp.clone(),
            state: state.clone(),
            scheduled: scheduled.clone(),
            event,
        });
    }
    Ok(Trace { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    InvariantBroken,
    StartPreMissing,
    EndPreMissing,
    GoalMissing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
    /// Owning step for condition violations; `None` for the goal.
    pub step: Option<usize>,
    pub atoms: AtomSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub consistent: bool,
    pub solves: bool,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn describe(&self, plan: &Plan) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| {
                let who = v
                    .step
                    .map(|i| format!(" of {}", plan.steps[i]))
                    .unwrap_or_default();
                let what = match v.kind {
                    ViolationKind::InvariantBroken => "invariant broken",
                    ViolationKind::StartPreMissing => "start condition missing",
                    ViolationKind::EndPreMissing => "end condition missing",
                    ViolationKind::GoalMissing => "goal not reached",
                };
                format!("state {}: {what}{who}: {}", v.index, AtomList(&v.atoms))
            })
            .collect()
    }
}

/// Checks consistency and goal achievement, collecting every violation.
pub fn check_plan(task: &PlanningTask, plan: &Plan) -> Result<CheckReport, SemanticsError> {
    let trace = unroll(task, plan)?;
    Ok(check_trace(task, plan, &trace))
}

/// Evaluates the consistency and goal conditions over an existing trace.
pub fn check_trace(task: &PlanningTask, plan: &Plan, trace: &Trace) -> CheckReport {
    let mut violations = Vec::new();
    let missing = |need: &AtomSet, have: &AtomSet| -> AtomSet { need.difference(have).cloned().collect() };
    for pair in trace.entries.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        match cur.event {
            Event::Start { step } => {
                let m = missing(&plan.steps[step].action.pre_start, &prev.state);
                if !m.is_empty() {
                    violations.push(Violation {
                        index: cur.index,
                        kind: ViolationKind::StartPreMissing,
                        step: Some(step),
                        atoms: m,
                    });
                }
            }
            Event::End { step } => {
                let m = missing(&plan.steps[step].action.pre_end, &prev.state);
                if !m.is_empty() {
                    violations.push(Violation {
                        index: cur.index,
                        kind: ViolationKind::EndPreMissing,
                        step: Some(step),
                        atoms: m,
                    });
                }
            }
            Event::Initial => {}
        }
        for f in &cur.scheduled {
            let m = missing(&f.pre_inv, &cur.state);
            if !m.is_empty() {
                violations.push(Violation {
                    index: cur.index,
                    kind: ViolationKind::InvariantBroken,
                    step: Some(f.step),
                    atoms: m,
                });
            }
        }
    }
    let consistent = violations.is_empty();
    let last = trace.entries.last().expect("trace has an initial entry");
    let goal_missing = missing(&task.goal, &last.state);
    if !goal_missing.is_empty() {
        violations.push(Violation {
            index: last.index,
            kind: ViolationKind::GoalMissing,
            step: None,
            atoms: goal_missing,
        });
    }
    let solves = violations.is_empty();
    CheckReport {
        consistent,
        solves,
        violations,
    }
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stamps(&self) -> Vec<Time> {
        self.entries.iter().map(|e| e.stamp.clone()).collect()
    }

    /// Per-entry state deltas `(added, removed)`; entry 0 is relative to the
    /// empty state, so replaying all deltas rebuilds every state.
    pub fn deltas(&self) -> Vec<(AtomSet, AtomSet)> {
        let empty = AtomSet::new();
        let mut out = Vec::with_capacity(self.entries.len());
        let mut prev = &empty;
        for e in &self.entries {
            let added = e.state.difference(prev).cloned().collect();
            let removed = prev.difference(&e.state).cloned().collect();
            out.push((added, removed));
            prev = &e.state;
        }
        out
    }

    /// Line-oriented form `i τ event action | state-delta`.
    pub fn to_text(&self, plan: &Plan) -> String {
        let mut out = String::new();
        for (e, (added, removed)) in self.entries.iter().zip(self.deltas()) {
            let action = e
                .event
                .step()
                .map(|i| plan.steps[i].action.name.to_string())
                .unwrap_or_else(|| "-".to_string());
            let _ = write!(
                out,
                "{} {} {} {} |",
                e.index,
                Fraction(&e.stamp),
                e.event.label(),
                action
            );
            for a in &removed {
                let _ = write!(out, " -{a}");
            }
            for a in &added {
                let _ = write!(out, " +{a}");
            }
            out.push('\n');
        }
        out
    }

    /// Machine-readable form: a JSON array with one object per entry.
    pub fn to_json(&self, plan: &Plan) -> Value {
        let atoms = |s: &AtomSet| -> Vec<String> { s.iter().map(Atom::to_string).collect() };
        let entries: Vec<Value> = self
            .entries
            .iter()
            .zip(self.deltas())
            .map(|(e, (added, removed))| {
                json!({
                    "index": e.index,
                    "stamp": Fraction(&e.stamp).to_string(),
                    "event": e.event.label(),
                    "action": e.event.step().map(|i| plan.steps[i].action.name.to_string()),
                    "state": atoms(&e.state),
                    "added": atoms(&added),
                    "removed": atoms(&removed),
                    "scheduled": e.scheduled.iter().map(|f| json!({
                        "end": Fraction(&f.end).to_string(),
                        "action": plan.steps[f.step].action.name.to_string(),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        Value::Array(entries)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Initial => write!(f, "init"),
            Event::Start { step } => write!(f, "start#{step}"),
            Event::End { step } => write!(f, "end#{step}"),
        }
    }
}
