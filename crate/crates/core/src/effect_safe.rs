//! Effect-safe tasks: every action is augmented with preconditions and
//! effects on mutex atoms, so that no concurrent action can interfere with
//! the internal structure of a running macro-action.

use crate::model::{
    ActionKind, ActionName, AtomSet, DurativeAction, Guard, Literal, ModelError, MutexAtom, Plan,
    PlanningTask, TimedAction,
};
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EffectSafeError {
    #[error("mutex predicate `{0}` collides with a predicate of the task")]
    NameClash(String),
    #[error("action {0} is not part of the effect-safe task")]
    UnknownAction(ActionName),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The transformed task together with the correspondence to the source
/// actions. `origin[i]` is the source of `task.actions[i]`.
#[derive(Clone, Debug)]
pub struct EffectSafeTask {
    pub task: PlanningTask,
    pub mutex_universe: BTreeSet<MutexAtom>,
    origin: Vec<Arc<DurativeAction>>,
}

impl EffectSafeTask {
    /// Source action of an effect-safe action.
    pub fn origin(&self, hat: &DurativeAction) -> Option<&Arc<DurativeAction>> {
        self.task
            .actions
            .iter()
            .position(|a| **a == *hat)
            .map(|i| &self.origin[i])
    }

    /// Effect-safe counterpart of a source action.
    pub fn hat(&self, source: &DurativeAction) -> Option<&Arc<DurativeAction>> {
        self.origin
            .iter()
            .position(|a| **a == *source)
            .map(|i| &self.task.actions[i])
    }

    /// `(effect-safe action, source action)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (&Arc<DurativeAction>, &Arc<DurativeAction>)> {
        self.task.actions.iter().zip(&self.origin)
    }

    /// Surface atoms of the mutex universe `X`.
    pub fn mutex_surface(&self) -> AtomSet {
        self.mutex_universe.iter().map(MutexAtom::surface).collect()
    }
}

/// Augments a single action given the global mutex universe.
pub fn augment(a: &DurativeAction, universe: &BTreeSet<MutexAtom>) -> DurativeAction {
    let own = a.mutex();
    let in_universe = |x: &MutexAtom| universe.contains(x);

    let mut pre_start = a.pre_start.clone();
    pre_start.extend(own.iter().map(MutexAtom::surface));
    pre_start.extend(
        own.iter()
            .filter(|x| x.guard == Guard::Del)
            .map(|x| MutexAtom::add(x.atom.clone()))
            .filter(in_universe)
            .map(|x| x.surface()),
    );
    pre_start.extend(
        a.eff_start
            .iter()
            .map(MutexAtom::for_literal)
            .filter(in_universe)
            .map(|x| x.surface()),
    );

    let mut pre_end = a.pre_end.clone();
    pre_end.extend(
        a.eff_end
            .iter()
            .map(MutexAtom::for_literal)
            .filter(|x| in_universe(x) && !own.contains(x))
            .map(|x| x.surface()),
    );

    let mut eff_start = a.eff_start.clone();
    eff_start.extend(own.iter().map(|x| Literal::neg(x.surface())));
    let mut eff_end = a.eff_end.clone();
    eff_end.extend(own.iter().map(|x| Literal::pos(x.surface())));

    DurativeAction {
        name: a.name.clone(),
        duration: a.duration.clone(),
        pre_start,
        pre_inv: a.pre_inv.clone(),
        pre_end,
        eff_start,
        eff_end,
        kind: ActionKind::Ordinary,
    }
}

/// Builds `T̂ = (V ∪ X, Â, s₀ ∪ X, s⋆)`.
pub fn build_effect_safe(task: &PlanningTask) -> Result<EffectSafeTask, EffectSafeError> {
    let universe: BTreeSet<MutexAtom> = task
        .actions
        .iter()
        .flat_map(|a| a.mutex().iter().cloned())
        .collect();

    let predicates: BTreeSet<&str> = task.atoms.iter().map(|v| v.predicate.as_str()).collect();
    for x in &universe {
        let surface = x.surface_predicate();
        if predicates.contains(surface.as_str()) {
            return Err(EffectSafeError::NameClash(surface));
        }
    }
    let surface: AtomSet = universe.iter().map(MutexAtom::surface).collect();
    let mut atoms = task.atoms.clone();
    atoms.extend(surface.iter().cloned());
    let mut init = task.init.clone();
    init.extend(surface);

    let hats: Vec<Arc<DurativeAction>> = task
        .actions
        .iter()
        .map(|a| Arc::new(augment(a, &universe)))
        .collect();
    let transformed = PlanningTask::new(atoms, hats, init, task.goal.clone())?;
    Ok(EffectSafeTask {
        task: transformed,
        mutex_universe: universe,
        origin: task.actions.clone(),
    })
}

/// Replaces every effect-safe action by its source; stamps are unchanged.
pub fn base_plan(plan_hat: &Plan, est: &EffectSafeTask) -> Result<Plan, EffectSafeError> {
    let steps = plan_hat
        .steps
        .iter()
        .map(|s| {
            est.origin(&s.action)
                .map(|a| TimedAction::new(s.start.clone(), a.clone()))
                .ok_or_else(|| EffectSafeError::UnknownAction(s.action.name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan::new(steps))
}
