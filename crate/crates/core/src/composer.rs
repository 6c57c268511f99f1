//! Right-associative composition of two durative actions into a sequential
//! macro-action, together with its mutex atoms.
//!
//! Delete effects that occur at the junction of the two actions (end of the
//! left one, start of the right one) are moved to the macro's start, add
//! effects at the junction are postponed to its end, and conditions that can
//! no longer be kept as invariants are protected by mutex atoms instead.

use crate::model::{
    validate_action, ActionKind, ActionName, AtomList, AtomSet, DurativeAction, Literal,
    LiteralSet, MutexAtom, WellFormednessReport,
};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Unions of conditions and effects of the two operands that the composition
/// clauses refer to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abbreviations {
    /// `pre_inv(a1) ∪ pre_e(a1)`
    pub pre1: AtomSet,
    /// `pre_inv(a2) ∪ pre_e(a2)`
    pub pre2: AtomSet,
    /// `eff_s⁺(a1) ∪ eff_e⁺(a1)`
    pub add1: AtomSet,
    /// `eff_s⁻(a1) ∪ eff_e⁻(a1)`
    pub del1: AtomSet,
    /// `eff_e⁺(a1) ∪ eff_s⁺(a2)`
    pub add12: AtomSet,
    /// `eff_e⁻(a1) ∪ eff_s⁻(a2)`
    pub del12: AtomSet,
    /// `eff_s⁻(a2) ∪ eff_e⁻(a2)`
    pub del2: AtomSet,
}

fn union(a: &AtomSet, b: &AtomSet) -> AtomSet {
    a.union(b).cloned().collect()
}

fn inter(a: &AtomSet, b: &AtomSet) -> AtomSet {
    a.intersection(b).cloned().collect()
}

fn minus(a: &AtomSet, b: &AtomSet) -> AtomSet {
    a.difference(b).cloned().collect()
}

impl Abbreviations {
    pub fn new(a1: &DurativeAction, a2: &DurativeAction) -> Self {
        Abbreviations {
            pre1: union(&a1.pre_inv, &a1.pre_end),
            pre2: union(&a2.pre_inv, &a2.pre_end),
            add1: union(&a1.add_start(), &a1.add_end()),
            del1: union(&a1.del_start(), &a1.del_end()),
            add12: union(&a1.add_end(), &a2.add_start()),
            del12: union(&a1.del_end(), &a2.del_start()),
            del2: union(&a2.del_start(), &a2.del_end()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UndefinedReason {
    /// `eff_s⁻(a) ∩ pre_inv(a) ≠ ∅` for the composed action.
    InvariantDeletedAtStart,
    /// `pre_e(a2) ∩ del12 ∖ eff_s⁺(a2) ≠ ∅`.
    EndPreFalsifiedInside,
}

impl fmt::Display for UndefinedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UndefinedReason::InvariantDeletedAtStart => "an invariant of the macro is deleted at its start",
            UndefinedReason::EndPreFalsifiedInside => {
                "an end condition of the second action is falsified inside the macro"
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProvisoFailure {
    pub reason: UndefinedReason,
    pub witnesses: AtomSet,
}

/// Why a composition is undefined. `position` is the index of the left
/// operand within the composed sequence (0 for a plain pair).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Undefined {
    pub position: usize,
    pub failures: Vec<ProvisoFailure>,
}

impl Undefined {
    pub fn has(&self, reason: UndefinedReason) -> bool {
        self.failures.iter().any(|f| f.reason == reason)
    }

    pub fn witnesses(&self, reason: UndefinedReason) -> Option<&AtomSet> {
        self.failures
            .iter()
            .find(|f| f.reason == reason)
            .map(|f| &f.witnesses)
    }
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "composition undefined at step {}", self.position)?;
        for fail in &self.failures {
            write!(f, "; {}: {}", fail.reason, AtomList(&fail.witnesses))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompositionOutcome {
    Defined(DurativeAction),
    Undefined(Undefined),
}

impl CompositionOutcome {
    pub fn defined(self) -> Option<DurativeAction> {
        match self {
            CompositionOutcome::Defined(a) => Some(a),
            CompositionOutcome::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, CompositionOutcome::Defined(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("cannot compose ill-formed action {name}: {report}")]
    IllFormedInput {
        name: ActionName,
        report: WellFormednessReport,
    },
    #[error("left operand {0} is a macro; macros are only extended to the left")]
    MacroLeftOperand(ActionName),
    #[error("a macro needs at least two actions, got {0}")]
    TooShort(usize),
}

/// Default name of `a1 ▷ a2`: schemas joined by `-`, arguments concatenated.
pub fn macro_name(a1: &DurativeAction, a2: &DurativeAction) -> ActionName {
    ActionName {
        schema: format!("{}-{}", a1.name.schema, a2.name.schema),
        args: a1.name.args.iter().chain(&a2.name.args).cloned().collect(),
    }
}

/// Composes `a1 ▷ a2`.
pub fn compose(
    a1: &Arc<DurativeAction>,
    a2: &Arc<DurativeAction>,
) -> Result<CompositionOutcome, ComposeError> {
    for a in [a1, a2] {
        let report = validate_action(a);
        if !report.is_empty() {
            return Err(ComposeError::IllFormedInput {
                name: a.name.clone(),
                report,
            });
        }
    }
    if a1.is_macro() {
        return Err(ComposeError::MacroLeftOperand(a1.name.clone()));
    }
    Ok(compose_unchecked(a1, a2))
}

fn compose_unchecked(a1: &Arc<DurativeAction>, a2: &Arc<DurativeAction>) -> CompositionOutcome {
    let ab = Abbreviations::new(a1, a2);
    let add_s1 = a1.add_start();
    let del_s1 = a1.del_start();
    let add_e1 = a1.add_end();
    let add_s2 = a2.add_start();
    let del_s2 = a2.del_start();

    // start conditions
    let mut pre_start = a1.pre_start.clone();
    pre_start.extend(minus(&inter(&ab.pre1, &ab.del12), &add_s1));
    pre_start.extend(minus(&inter(&a2.pre_start, &del_s2), &ab.add1));

    // invariants
    let mut pre_inv = minus(&ab.pre1, &minus(&ab.del12, &del_s1));
    pre_inv.extend(minus(
        &a2.pre_start,
        &union(&add_e1, &minus(&del_s2, &ab.del1)),
    ));
    pre_inv.extend(minus(&a2.pre_inv, &ab.add12));

    let pre_end = minus(&a2.pre_end, &ab.add12);

    // start effects: positive start effects of a1 whose atom is deleted at
    // the junction are dropped; the junction deletions move to the start
    let mut eff_start: LiteralSet = a1
        .eff_start
        .iter()
        .filter(|l| !(l.positive && ab.del12.contains(&l.atom)))
        .cloned()
        .collect();
    eff_start.extend(ab.del12.iter().cloned().map(Literal::neg));

    let mut eff_end = a2.eff_end.clone();
    eff_end.extend(minus(&ab.add12, &ab.del2).into_iter().map(Literal::pos));

    let mut failures = Vec::new();
    let deleted_at_start: AtomSet = eff_start
        .iter()
        .filter(|l| !l.positive)
        .map(|l| l.atom.clone())
        .collect();
    let clash = inter(&deleted_at_start, &pre_inv);
    if !clash.is_empty() {
        failures.push(ProvisoFailure {
            reason: UndefinedReason::InvariantDeletedAtStart,
            witnesses: clash,
        });
    }
    let falsified = minus(&inter(&a2.pre_end, &ab.del12), &add_s2);
    if !falsified.is_empty() {
        failures.push(ProvisoFailure {
            reason: UndefinedReason::EndPreFalsifiedInside,
            witnesses: falsified,
        });
    }
    if !failures.is_empty() {
        return CompositionOutcome::Undefined(Undefined {
            position: 0,
            failures,
        });
    }

    let mutex = mutex_atoms(a1, a2, &pre_inv);
    let macro_action = DurativeAction {
        name: macro_name(a1, a2),
        duration: &a1.duration + &a2.duration,
        pre_start,
        pre_inv,
        pre_end,
        eff_start,
        eff_end,
        kind: ActionKind::Macro {
            left: a1.clone(),
            right: a2.clone(),
            mutex,
        },
    };
    debug_assert!(validate_action(&macro_action).is_empty());
    CompositionOutcome::Defined(macro_action)
}

/// The mutex atoms of `a1 ▷ a2` given the macro's invariant set.
pub fn mutex_atoms(
    a1: &DurativeAction,
    a2: &DurativeAction,
    macro_pre_inv: &AtomSet,
) -> BTreeSet<MutexAtom> {
    let ab = Abbreviations::new(a1, a2);
    let mut guarded = minus(&ab.add12, &union(&a2.add_end(), &ab.del2));
    guarded.extend(inter(&ab.pre1, &ab.del12));
    guarded.extend(minus(&inter(&a2.pre_start, &a2.del_start()), &a1.add_end()));
    guarded.extend(inter(&ab.pre2, &ab.add12));

    let mut out: BTreeSet<MutexAtom> = minus(&guarded, macro_pre_inv)
        .into_iter()
        .map(MutexAtom::del)
        .collect();
    out.extend(ab.del12.iter().cloned().map(MutexAtom::add));
    out.extend(a2.mutex().iter().cloned());
    out
}

/// Folds `a1 ▷ (a2 ▷ (… ▷ an))` from the right.
pub fn compose_seq(actions: &[Arc<DurativeAction>]) -> Result<CompositionOutcome, ComposeError> {
    if actions.len() < 2 {
        return Err(ComposeError::TooShort(actions.len()));
    }
    let last = actions.len() - 1;
    for (i, a) in actions.iter().enumerate() {
        let report = validate_action(a);
        if !report.is_empty() {
            return Err(ComposeError::IllFormedInput {
                name: a.name.clone(),
                report,
            });
        }
        // only the innermost right operand may already be a macro
        if i < last && a.is_macro() {
            return Err(ComposeError::MacroLeftOperand(a.name.clone()));
        }
    }
    let mut acc = actions[actions.len() - 1].clone();
    for position in (0..actions.len() - 1).rev() {
        match compose_unchecked(&actions[position], &acc) {
            CompositionOutcome::Defined(m) => acc = Arc::new(m),
            CompositionOutcome::Undefined(mut u) => {
                u.position = position;
                return Ok(CompositionOutcome::Undefined(u));
            }
        }
    }
    Ok(CompositionOutcome::Defined(
        Arc::try_unwrap(acc).unwrap_or_else(|shared| (*shared).clone()),
    ))
}

/// Atoms of a set of mutex atoms, for display.
pub fn mutex_surface(mutex: &BTreeSet<MutexAtom>) -> AtomSet {
    mutex.iter().map(MutexAtom::surface).collect()
}
