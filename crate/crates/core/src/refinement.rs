//! Unfolding time-stamped macro-actions into their constituents.
//!
//! A step `(t0, a1 ▷ a2)` is replaced by `(t1, a1)` and `(t2, a2)` placed
//! inside the δ-neighbourhood of the macro's start and junction, where δ is
//! the smallest positive distance from any earlier event to the macro's
//! start, junction or end. Every intermediate plan is re-checked.

use crate::model::{
    ActionName, DurativeAction, ModelError, Plan, PlanningTask, TimedAction,
};
use crate::semantics::{check_plan, unroll, CheckReport, Event, SemanticsError};
use crate::time::{int, Fraction, Time};
use num_traits::Signed;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("{0} is not a macro-action")]
    NotAMacro(ActionName),
    #[error("step {0} is not part of the plan")]
    NotInPlan(String),
    #[error("input plan is not a solution ({} violations)", .0.violations.len())]
    NotASolution(CheckReport),
    #[error("refinement step {after_step} produced a plan that is not a solution")]
    CertificationFailure {
        after_step: usize,
        report: CheckReport,
    },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One application of the unfolding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementStep {
    pub removed: TimedAction,
    pub inserted: (TimedAction, TimedAction),
    pub delta: Time,
}

impl fmt::Display for RefinementStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "split {} with delta {} into {} and {}",
            self.removed,
            Fraction(&self.delta),
            self.inserted.0,
            self.inserted.1
        )
    }
}

fn macro_operands(step: &TimedAction) -> Result<(&Arc<DurativeAction>, &Arc<DurativeAction>), RefineError> {
    step.action
        .operands()
        .ok_or_else(|| RefineError::NotAMacro(step.action.name.clone()))
}

/// Stamps of the trace of `plan` over the task induced by the plan itself.
fn plan_stamps(plan: &Plan) -> Result<Vec<Time>, RefineError> {
    let empty = PlanningTask::new(Default::default(), [], Default::default(), Default::default())?;
    let task = empty.induced(plan)?;
    Ok(unroll(&task, plan)?.stamps())
}

/// δ for the macro step `step` of `plan`.
pub fn delta(plan: &Plan, step: &TimedAction) -> Result<Time, RefineError> {
    let (left, _) = macro_operands(step)?;
    if plan.position(step).is_none() {
        return Err(RefineError::NotInPlan(step.to_string()));
    }
    let stamps = plan_stamps(plan)?;
    let t0 = &step.start;
    let refs = [t0.clone(), t0 + &left.duration, t0 + &step.action.duration];
    let candidate_count = 2 * plan.len();
    stamps[..candidate_count]
        .iter()
        .flat_map(|tau| {
            refs.iter()
                .filter(move |r| tau < *r)
                .map(move |r| r - tau)
        })
        .min()
        .ok_or_else(|| RefineError::NotInPlan(step.to_string()))
}

/// Splits one macro step with the canonical stamps
/// `t1 = t0 − δ/2` and `t2 = t0 + dur(a1) − δ/4`.
pub fn refine_once(plan: &Plan, step: &TimedAction) -> Result<(Plan, RefinementStep), RefineError> {
    let d = delta(plan, step)?;
    let (left, right) = macro_operands(step)?;
    let t1 = &step.start - &d / int(2);
    let t2 = &step.start + &left.duration - &d / int(4);
    let first = TimedAction::new(t1, left.clone());
    let second = TimedAction::new(t2, right.clone());
    let steps = plan
        .steps
        .iter()
        .filter(|s| *s != step)
        .cloned()
        .chain([first.clone(), second.clone()]);
    let refined = Plan::new(steps);
    debug_assert!(d.is_positive());
    Ok((
        refined,
        RefinementStep {
            removed: step.clone(),
            inserted: (first, second),
            delta: d,
        },
    ))
}

/// Which macro is split next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RefineOrder {
    /// Latest-starting macro first.
    #[default]
    LatestFirst,
    EarliestFirst,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    pub plan: Plan,
    pub steps: Vec<RefinementStep>,
}

/// Unfolds every macro in `plan`, certifying each intermediate plan against
/// the task induced from `task` (its atoms, initial state and goal).
pub fn refine_all(task: &PlanningTask, plan: &Plan) -> Result<Refinement, RefineError> {
    refine_all_ordered(task, plan, RefineOrder::default())
}

pub fn refine_all_ordered(
    task: &PlanningTask,
    plan: &Plan,
    order: RefineOrder,
) -> Result<Refinement, RefineError> {
    let report = check_plan(&task.induced(plan)?, plan)?;
    if !report.solves {
        return Err(RefineError::NotASolution(report));
    }
    let mut current = plan.clone();
    let mut steps = Vec::new();
    loop {
        let macros = current.steps.iter().filter(|s| s.action.is_macro());
        let next = match order {
            RefineOrder::LatestFirst => macros.max_by(|a, b| a.start.cmp(&b.start)),
            RefineOrder::EarliestFirst => macros.min_by(|a, b| a.start.cmp(&b.start)),
        };
        let Some(next) = next.cloned() else { break };
        let (refined, step) = refine_once(&current, &next)?;
        let report = check_plan(&task.induced(&refined)?, &refined)?;
        if !report.solves {
            return Err(RefineError::CertificationFailure {
                after_step: steps.len(),
                report,
            });
        }
        steps.push(step);
        current = refined;
    }
    Ok(Refinement {
        plan: current,
        steps,
    })
}

/// Start/end marker of the action at one trace position, ignoring the stamp.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventDescriptor {
    pub start: bool,
    pub action: ActionName,
}

impl fmt::Display for EventDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.start { "start" } else { "end" };
        write!(f, "{tag} {}", self.action)
    }
}

/// The per-index event sequence of a plan's trace.
pub fn event_descriptors(plan: &Plan) -> Result<Vec<EventDescriptor>, RefineError> {
    let empty = PlanningTask::new(Default::default(), [], Default::default(), Default::default())?;
    let task = empty.induced(plan)?;
    let trace = unroll(&task, plan)?;
    Ok(trace
        .entries
        .iter()
        .filter_map(|e| match e.event {
            Event::Initial => None,
            Event::Start { step } => Some(EventDescriptor {
                start: true,
                action: plan.steps[step].action.name.clone(),
            }),
            Event::End { step } => Some(EventDescriptor {
                start: false,
                action: plan.steps[step].action.name.clone(),
            }),
        })
        .collect())
}

impl Refinement {
    /// Audit log lines, one per split.
    pub fn audit(&self) -> Vec<String> {
        self.steps.iter().map(ToString::to_string).collect()
    }
}
