//! Grounded domain model: atoms, literals, durative actions, tasks and plans.

use crate::time::{Fraction, Time};
use num_traits::Signed;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// A grounded predicate instance such as `(at r l1)`.
///
/// Lifted schemas reuse this type with `?var` arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<P, I, S>(predicate: P, args: I) -> Self
    where
        P: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn nullary(predicate: impl Into<String>) -> Self {
        Atom {
            predicate: predicate.into(),
            args: Vec::new(),
        }
    }

    /// Parses the compact `pred(a,b)` or PDDL `(pred a b)` notation. Meant for
    /// tests and fixtures; returns `None` on malformed input.
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
            let mut parts = inner.split_whitespace();
            let pred = parts.next()?;
            return Some(Atom::new(pred, parts));
        }
        match t.split_once('(') {
            Some((pred, rest)) => {
                let inner = rest.strip_suffix(')')?;
                let args = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty());
                Some(Atom::new(pred.trim(), args))
            }
            None if !t.is_empty() && !t.contains(char::is_whitespace) => Some(Atom::nullary(t)),
            None => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            positive: true,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            positive: false,
        }
    }

    pub fn complement(&self) -> Self {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    /// `p(a)` is positive, `!p(a)` / `not p(a)` negative. Test helper.
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix('!').or_else(|| t.strip_prefix('¬')) {
            return Atom::parse(rest).map(Literal::neg);
        }
        if let Some(rest) = t.strip_prefix("(not ").and_then(|s| s.strip_suffix(')')) {
            return Atom::parse(rest).map(Literal::neg);
        }
        Atom::parse(t).map(Literal::pos)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

pub type AtomSet = BTreeSet<Atom>;
pub type LiteralSet = BTreeSet<Literal>;

/// Atoms of the positive literals in `lits`.
pub fn positives(lits: &LiteralSet) -> AtomSet {
    lits.iter()
        .filter(|l| l.positive)
        .map(|l| l.atom.clone())
        .collect()
}

/// Atoms of the negative literals in `lits`.
pub fn negatives(lits: &LiteralSet) -> AtomSet {
    lits.iter()
        .filter(|l| !l.positive)
        .map(|l| l.atom.clone())
        .collect()
}

/// Which effect on the underlying atom a mutex atom guards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    /// Guards additions of the atom (`X_v`).
    Add,
    /// Guards deletions of the atom (`X_¬v`).
    Del,
}

/// Auxiliary lock atom, living outside the task's atom universe.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MutexAtom {
    pub guard: Guard,
    pub atom: Atom,
}

pub const ADD_PREFIX: &str = "can-add-";
pub const DEL_PREFIX: &str = "can-del-";

impl MutexAtom {
    pub fn add(atom: Atom) -> Self {
        MutexAtom {
            guard: Guard::Add,
            atom,
        }
    }

    pub fn del(atom: Atom) -> Self {
        MutexAtom {
            guard: Guard::Del,
            atom,
        }
    }

    /// The mutex atom `X_ℓ` associated with a literal: positive literals map
    /// to the add guard, negative literals to the delete guard.
    pub fn for_literal(lit: &Literal) -> Self {
        if lit.positive {
            MutexAtom::add(lit.atom.clone())
        } else {
            MutexAtom::del(lit.atom.clone())
        }
    }

    pub fn surface_predicate(&self) -> String {
        let prefix = match self.guard {
            Guard::Add => ADD_PREFIX,
            Guard::Del => DEL_PREFIX,
        };
        format!("{prefix}{}", self.atom.predicate)
    }

    /// The ordinary atom materializing this lock: `can-add-p` / `can-del-p`
    /// with the original arguments.
    pub fn surface(&self) -> Atom {
        Atom {
            predicate: self.surface_predicate(),
            args: self.atom.args.clone(),
        }
    }

    /// Inverse of [`MutexAtom::surface`].
    pub fn from_surface(atom: &Atom) -> Option<Self> {
        if let Some(p) = atom.predicate.strip_prefix(ADD_PREFIX) {
            return Some(MutexAtom::add(Atom::new(p, atom.args.iter().cloned())));
        }
        if let Some(p) = atom.predicate.strip_prefix(DEL_PREFIX) {
            return Some(MutexAtom::del(Atom::new(p, atom.args.iter().cloned())));
        }
        None
    }
}

impl fmt::Display for MutexAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.surface())
    }
}

/// Identity of a ground action: schema name plus object arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionName {
    pub schema: String,
    pub args: Vec<String>,
}

impl ActionName {
    pub fn new<I, S>(schema: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ActionName {
            schema: schema.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn plain(schema: impl Into<String>) -> Self {
        ActionName {
            schema: schema.into(),
            args: Vec::new(),
        }
    }

    /// Single-identifier form used when a ground action is emitted as a
    /// parameterless PDDL action.
    pub fn flat(&self) -> String {
        let mut s = self.schema.clone();
        for a in &self.args {
            s.push('_');
            s.push_str(a);
        }
        s
    }
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Ordinary,
    /// Sequential composition `left ▷ right`.
    Macro {
        left: Arc<DurativeAction>,
        right: Arc<DurativeAction>,
        mutex: BTreeSet<MutexAtom>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DurativeAction {
    pub name: ActionName,
    pub duration: Time,
    pub pre_start: AtomSet,
    pub pre_inv: AtomSet,
    pub pre_end: AtomSet,
    pub eff_start: LiteralSet,
    pub eff_end: LiteralSet,
    pub kind: ActionKind,
}

static NO_MUTEX: BTreeSet<MutexAtom> = BTreeSet::new();

impl DurativeAction {
    /// An ordinary action with no conditions or effects.
    pub fn new(name: ActionName, duration: Time) -> Self {
        DurativeAction {
            name,
            duration,
            pre_start: AtomSet::new(),
            pre_inv: AtomSet::new(),
            pre_end: AtomSet::new(),
            eff_start: LiteralSet::new(),
            eff_end: LiteralSet::new(),
            kind: ActionKind::Ordinary,
        }
    }

    pub fn with_pre_start(mut self, atoms: impl IntoIterator<Item = Atom>) -> Self {
        self.pre_start.extend(atoms);
        self
    }

    pub fn with_pre_inv(mut self, atoms: impl IntoIterator<Item = Atom>) -> Self {
        self.pre_inv.extend(atoms);
        self
    }

    pub fn with_pre_end(mut self, atoms: impl IntoIterator<Item = Atom>) -> Self {
        self.pre_end.extend(atoms);
        self
    }

    pub fn with_eff_start(mut self, lits: impl IntoIterator<Item = Literal>) -> Self {
        self.eff_start.extend(lits);
        self
    }

    pub fn with_eff_end(mut self, lits: impl IntoIterator<Item = Literal>) -> Self {
        self.eff_end.extend(lits);
        self
    }

    pub fn add_start(&self) -> AtomSet {
        positives(&self.eff_start)
    }

    pub fn del_start(&self) -> AtomSet {
        negatives(&self.eff_start)
    }

    pub fn add_end(&self) -> AtomSet {
        positives(&self.eff_end)
    }

    pub fn del_end(&self) -> AtomSet {
        negatives(&self.eff_end)
    }

    pub fn end_offset(&self) -> &Time {
        &self.duration
    }

    pub fn is_macro(&self) -> bool {
        matches!(self.kind, ActionKind::Macro { .. })
    }

    /// The mutex atoms `X(a)`; empty for ordinary actions.
    pub fn mutex(&self) -> &BTreeSet<MutexAtom> {
        match &self.kind {
            ActionKind::Ordinary => &NO_MUTEX,
            ActionKind::Macro { mutex, .. } => mutex,
        }
    }

    /// Left and right operands of a macro.
    pub fn operands(&self) -> Option<(&Arc<DurativeAction>, &Arc<DurativeAction>)> {
        match &self.kind {
            ActionKind::Ordinary => None,
            ActionKind::Macro { left, right, .. } => Some((left, right)),
        }
    }

    /// Ordinary constituents in execution order.
    pub fn constituents(&self) -> Vec<&DurativeAction> {
        match &self.kind {
            ActionKind::Ordinary => vec![self],
            ActionKind::Macro { left, right, .. } => {
                let mut out = left.constituents();
                out.extend(right.constituents());
                out
            }
        }
    }

    /// Every atom mentioned in a condition or effect.
    pub fn atoms(&self) -> AtomSet {
        let mut out = AtomSet::new();
        out.extend(self.pre_start.iter().cloned());
        out.extend(self.pre_inv.iter().cloned());
        out.extend(self.pre_end.iter().cloned());
        out.extend(self.eff_start.iter().map(|l| l.atom.clone()));
        out.extend(self.eff_end.iter().map(|l| l.atom.clone()));
        out
    }

    /// Equality of duration, conditions, effects and mutex set, ignoring the
    /// name and the constituent structure.
    pub fn same_body(&self, other: &DurativeAction) -> bool {
        self.duration == other.duration
            && self.pre_start == other.pre_start
            && self.pre_inv == other.pre_inv
            && self.pre_end == other.pre_end
            && self.eff_start == other.eff_start
            && self.eff_end == other.eff_end
            && self.mutex() == other.mutex()
    }

    pub fn renamed(mut self, name: ActionName) -> Self {
        self.name = name;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionViolation {
    /// `eff_s⁻ ∩ (eff_s⁺ ∪ pre_inv)` is not empty.
    StartEffectConflict { atoms: AtomSet },
    /// `eff_e⁻ ∩ eff_e⁺` is not empty.
    EndEffectConflict { atoms: AtomSet },
    NonPositiveDuration { duration: Time },
}

impl fmt::Display for ActionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionViolation::StartEffectConflict { atoms } => {
                write!(f, "start effects delete atoms they add or require throughout: {}", AtomList(atoms))
            }
            ActionViolation::EndEffectConflict { atoms } => {
                write!(f, "end effects both add and delete: {}", AtomList(atoms))
            }
            ActionViolation::NonPositiveDuration { duration } => {
                write!(f, "duration {} is not positive", Fraction(duration))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WellFormednessReport {
    pub violations: Vec<ActionViolation>,
}

impl WellFormednessReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for WellFormednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_action(a: &DurativeAction) -> WellFormednessReport {
    let mut violations = Vec::new();
    let del_s = a.del_start();
    let mut guarded = a.add_start();
    guarded.extend(a.pre_inv.iter().cloned());
    let clash: AtomSet = del_s.intersection(&guarded).cloned().collect();
    if !clash.is_empty() {
        violations.push(ActionViolation::StartEffectConflict { atoms: clash });
    }
    let clash: AtomSet = a.del_end().intersection(&a.add_end()).cloned().collect();
    if !clash.is_empty() {
        violations.push(ActionViolation::EndEffectConflict { atoms: clash });
    }
    if !a.duration.is_positive() {
        violations.push(ActionViolation::NonPositiveDuration {
            duration: a.duration.clone(),
        });
    }
    WellFormednessReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("atom {atom} used by {context} is not in the atom universe")]
    AtomOutsideUniverse { atom: Atom, context: String },
    #[error("two different actions are named {0}")]
    DuplicateActionName(ActionName),
    #[error("action {name} is ill-formed: {report}")]
    IllFormedAction {
        name: ActionName,
        report: WellFormednessReport,
    },
}

/// `T = (V, A, s₀, s⋆)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningTask {
    pub atoms: AtomSet,
    pub actions: Vec<Arc<DurativeAction>>,
    pub init: AtomSet,
    pub goal: AtomSet,
}

impl PlanningTask {
    /// Builds a task, checking well-formedness of every action, that every
    /// mentioned atom lies in `atoms`, and that action names are unique.
    /// Structurally identical duplicate actions are collapsed.
    pub fn new(
        atoms: AtomSet,
        actions: impl IntoIterator<Item = Arc<DurativeAction>>,
        init: AtomSet,
        goal: AtomSet,
    ) -> Result<Self, ModelError> {
        let mut seen: BTreeMap<ActionName, Arc<DurativeAction>> = BTreeMap::new();
        let mut kept = Vec::new();
        for a in actions {
            let report = validate_action(&a);
            if !report.is_empty() {
                return Err(ModelError::IllFormedAction {
                    name: a.name.clone(),
                    report,
                });
            }
            if let Some(atom) = a.atoms().into_iter().find(|v| !atoms.contains(v)) {
                return Err(ModelError::AtomOutsideUniverse {
                    atom,
                    context: format!("action {}", a.name),
                });
            }
            match seen.get(&a.name) {
                Some(prev) if **prev == *a => continue,
                Some(_) => return Err(ModelError::DuplicateActionName(a.name.clone())),
                None => {
                    seen.insert(a.name.clone(), a.clone());
                    kept.push(a);
                }
            }
        }
        for (set, what) in [(&init, "the initial state"), (&goal, "the goal")] {
            if let Some(atom) = set.iter().find(|v| !atoms.contains(v)) {
                return Err(ModelError::AtomOutsideUniverse {
                    atom: atom.clone(),
                    context: what.to_string(),
                });
            }
        }
        Ok(PlanningTask {
            atoms,
            actions: kept,
            init,
            goal,
        })
    }

    /// The task `(V ∪ atoms(P), {a | (t,a) ∈ P}, s₀, s⋆)` whose actions are
    /// exactly those used by `plan`.
    pub fn induced(&self, plan: &Plan) -> Result<Self, ModelError> {
        let mut atoms = self.atoms.clone();
        for step in &plan.steps {
            atoms.extend(step.action.atoms());
        }
        PlanningTask::new(
            atoms,
            plan.steps.iter().map(|s| s.action.clone()),
            self.init.clone(),
            self.goal.clone(),
        )
    }

    pub fn contains(&self, action: &DurativeAction) -> bool {
        self.actions.iter().any(|a| **a == *action)
    }

    pub fn action(&self, name: &ActionName) -> Option<&Arc<DurativeAction>> {
        self.actions.iter().find(|a| a.name == *name)
    }
}

/// A step `(t, a)` of a plan.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TimedAction {
    pub start: Time,
    pub action: Arc<DurativeAction>,
}

impl TimedAction {
    pub fn new(start: Time, action: Arc<DurativeAction>) -> Self {
        TimedAction { start, action }
    }

    pub fn end(&self) -> Time {
        &self.start + &self.action.duration
    }
}

impl fmt::Display for TimedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", Fraction(&self.start), self.action.name)
    }
}

/// A set of time-stamped actions, kept sorted by start time then name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<TimedAction>,
}

impl Plan {
    pub fn new(steps: impl IntoIterator<Item = TimedAction>) -> Self {
        let mut steps: Vec<TimedAction> = steps.into_iter().collect();
        steps.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then_with(|| a.action.name.cmp(&b.action.name))
        });
        steps.dedup();
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn position(&self, step: &TimedAction) -> Option<usize> {
        self.steps.iter().position(|s| s == step)
    }

    pub fn has_macros(&self) -> bool {
        self.steps.iter().any(|s| s.action.is_macro())
    }

    pub fn makespan(&self) -> Option<Time> {
        self.steps.iter().map(TimedAction::end).max()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Start,
    End,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Start => "start",
            EventKind::End => "end",
        })
    }
}

/// Two events of distinct steps sharing a time stamp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clash {
    pub time: Time,
    pub first: (usize, EventKind),
    pub second: (usize, EventKind),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShapeReport {
    pub clashes: Vec<Clash>,
    /// Steps whose start time is not strictly positive.
    pub non_positive_starts: Vec<usize>,
}

impl ShapeReport {
    pub fn is_empty(&self) -> bool {
        self.clashes.is_empty() && self.non_positive_starts.is_empty()
    }

    /// Human-readable lines naming the offending steps of `plan`.
    pub fn describe(&self, plan: &Plan) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.clashes {
            out.push(format!(
                "{} of {} coincides with {} of {} at t={}",
                c.first.1,
                plan.steps[c.first.0],
                c.second.1,
                plan.steps[c.second.0],
                Fraction(&c.time)
            ));
        }
        for &i in &self.non_positive_starts {
            out.push(format!("start time of {} is not positive", plan.steps[i]));
        }
        out
    }
}

/// Reports every pair of distinct steps whose start or end times coincide.
pub fn validate_plan_shape(plan: &Plan) -> ShapeReport {
    let mut events: Vec<(Time, usize, EventKind)> = Vec::with_capacity(2 * plan.len());
    for (i, s) in plan.steps.iter().enumerate() {
        events.push((s.start.clone(), i, EventKind::Start));
        events.push((s.end(), i, EventKind::End));
    }
    events.sort();
    let mut clashes = Vec::new();
    let mut lo = 0;
    while lo < events.len() {
        let mut hi = lo + 1;
        while hi < events.len() && events[hi].0 == events[lo].0 {
            hi += 1;
        }
        for x in lo..hi {
            for y in x + 1..hi {
                if events[x].1 != events[y].1 {
                    clashes.push(Clash {
                        time: events[x].0.clone(),
                        first: (events[x].1, events[x].2),
                        second: (events[y].1, events[y].2),
                    });
                }
            }
        }
        lo = hi;
    }
    let non_positive_starts = plan
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.start.is_positive())
        .map(|(i, _)| i)
        .collect();
    ShapeReport {
        clashes,
        non_positive_starts,
    }
}

/// Space-separated display of an atom set.
pub struct AtomList<'a>(pub &'a AtomSet);

impl fmt::Display for AtomList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in self.0 {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        if first {
            write!(f, "∅")?;
        }
        Ok(())
    }
}

/// Names appearing more than once among `actions`.
pub fn duplicate_names<'a>(actions: impl IntoIterator<Item = &'a DurativeAction>) -> Vec<ActionName> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for a in actions {
        if !seen.insert(&a.name) {
            dups.push(a.name.clone());
        }
    }
    dups
}
