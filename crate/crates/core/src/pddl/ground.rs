use super::domain::{LiftedAtom, LiftedDomain, LiftedSchema, Problem, Term, TypedName};
use super::lift::MacroRecipe;
use super::PddlError;
use crate::composer::{compose_seq, CompositionOutcome, Undefined};
use crate::model::{
    validate_action, ActionName, Atom, AtomSet, DurativeAction, Literal, PlanningTask,
    WellFormednessReport,
};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Domain constants followed by problem objects.
#[derive(Clone, Debug)]
pub struct ObjectTable {
    pub objects: Vec<TypedName>,
}

impl ObjectTable {
    pub fn new(dom: &LiftedDomain, prob: &Problem) -> Self {
        let mut objects = dom.constants.clone();
        for o in &prob.objects {
            if !objects.iter().any(|c| c.name == o.name) {
                objects.push(o.clone());
            }
        }
        ObjectTable { objects }
    }

    pub fn of_type(&self, dom: &LiftedDomain, ty: &str) -> Vec<String> {
        self.objects
            .iter()
            .filter(|o| dom.is_subtype(&o.ty, ty))
            .map(|o| o.name.clone())
            .collect()
    }

    /// Every type-consistent tuple of objects for `params`, in
    /// lexicographic order of declaration.
    pub fn assignments(&self, dom: &LiftedDomain, params: &[TypedName]) -> Vec<Vec<String>> {
        let domains: Vec<Vec<String>> = params.iter().map(|p| self.of_type(dom, &p.ty)).collect();
        let mut out = vec![Vec::new()];
        for d in &domains {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<String>| {
                    d.iter().map(move |o| {
                        let mut next = prefix.clone();
                        next.push(o.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }
}

fn subst(atom: &LiftedAtom, binding: &BTreeMap<String, String>, schema: &str) -> Result<Atom, PddlError> {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => binding
                .get(v)
                .cloned()
                .ok_or_else(|| PddlError::Type(format!("unbound variable ?{v} in `{schema}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Atom::new(atom.predicate.clone(), args))
}

/// Instantiates a schema; the action is named by the schema and the values
/// of its parameters.
pub fn instantiate(
    schema: &LiftedSchema,
    binding: &BTreeMap<String, String>,
) -> Result<DurativeAction, PddlError> {
    let name = ActionName::new(
        schema.name.clone(),
        schema
            .params
            .iter()
            .map(|p| {
                binding.get(&p.name).cloned().ok_or_else(|| {
                    PddlError::Type(format!("unbound variable ?{} in `{}`", p.name, schema.name))
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
    );
    let atoms = |set: &std::collections::BTreeSet<LiftedAtom>| -> Result<AtomSet, PddlError> {
        set.iter().map(|a| subst(a, binding, &schema.name)).collect()
    };
    let lits = |set: &std::collections::BTreeSet<super::domain::LiftedLiteral>| {
        set.iter()
            .map(|l| {
                subst(&l.atom, binding, &schema.name).map(|atom| Literal {
                    atom,
                    positive: l.positive,
                })
            })
            .collect::<Result<crate::model::LiteralSet, PddlError>>()
    };
    Ok(DurativeAction::new(name, schema.duration.clone())
        .with_pre_start(atoms(&schema.pre_start)?)
        .with_pre_inv(atoms(&schema.pre_inv)?)
        .with_pre_end(atoms(&schema.pre_end)?)
        .with_eff_start(lits(&schema.eff_start)?)
        .with_eff_end(lits(&schema.eff_end)?))
}

pub(crate) fn binding(params: &[TypedName], args: &[String]) -> BTreeMap<String, String> {
    params
        .iter()
        .zip(args)
        .map(|(p, a)| (p.name.clone(), a.clone()))
        .collect()
}

/// Binds each variable to its own `?name`, modelling pairwise distinct
/// values that differ from every constant.
pub(crate) fn symbolic_binding(params: &[TypedName]) -> BTreeMap<String, String> {
    params
        .iter()
        .map(|p| (p.name.clone(), format!("?{}", p.name)))
        .collect()
}

/// Equality of duration, conditions and effects.
pub(crate) fn same_conditions_and_effects(a: &DurativeAction, b: &DurativeAction) -> bool {
    a.duration == b.duration
        && a.pre_start == b.pre_start
        && a.pre_inv == b.pre_inv
        && a.pre_end == b.pre_end
        && a.eff_start == b.eff_start
        && a.eff_end == b.eff_end
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExclusionReason {
    /// The instance is ill-formed only because arguments coincide.
    Aliasing(WellFormednessReport),
    ConstituentExcluded(ActionName),
    Undefined(Undefined),
    /// The grounded composition differs from the lifted macro body.
    LiftedBodyDiffers,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExclusionReason::Aliasing(r) => write!(f, "ill-formed under aliasing: {r}"),
            ExclusionReason::ConstituentExcluded(n) => write!(f, "constituent {n} is ill-formed"),
            ExclusionReason::Undefined(u) => write!(f, "{u}"),
            ExclusionReason::LiftedBodyDiffers => {
                write!(f, "grounded composition differs from the lifted macro")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Excluded {
    pub name: ActionName,
    pub reason: ExclusionReason,
}

impl fmt::Display for Excluded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} excluded: {}", self.name, self.reason)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundingReport {
    pub excluded: Vec<Excluded>,
}

/// Grounds the constituents of `recipe` under `binding` (macro variable to
/// object) and composes them.
pub(crate) fn ground_recipe(
    dom: &LiftedDomain,
    recipe: &MacroRecipe,
    binding: &BTreeMap<String, String>,
) -> Result<Result<DurativeAction, ExclusionReason>, PddlError> {
    let mut actions = Vec::new();
    for step in &recipe.steps {
        let schema = dom
            .schema(&step.schema)
            .ok_or_else(|| PddlError::UnknownSchema(step.schema.clone()))?;
        let args = step
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Ok(c.clone()),
                Term::Var(v) => binding.get(v).cloned().ok_or_else(|| PddlError::Recipe {
                    name: recipe.name.clone(),
                    message: format!("variable ?{v} is unbound"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let a = instantiate(schema, &self::binding(&schema.params, &args))?;
        if !validate_action(&a).is_empty() {
            return Ok(Err(ExclusionReason::ConstituentExcluded(a.name)));
        }
        actions.push(Arc::new(a));
    }
    Ok(match compose_seq(&actions)? {
        CompositionOutcome::Defined(m) => Ok(m),
        CompositionOutcome::Undefined(u) => Err(ExclusionReason::Undefined(u)),
    })
}

/// Grounds a domain without macros.
pub fn ground(dom: &LiftedDomain, prob: &Problem) -> Result<(PlanningTask, GroundingReport), PddlError> {
    ground_with_macros(dom, prob, &[])
}

/// Grounds a domain. Schemas named like a recipe are grounded as macros:
/// each instance is the composition of its grounded constituents, checked
/// against the instantiated lifted body.
pub fn ground_with_macros(
    dom: &LiftedDomain,
    prob: &Problem,
    recipes: &[MacroRecipe],
) -> Result<(PlanningTask, GroundingReport), PddlError> {
    let table = ObjectTable::new(dom, prob);
    let mut atoms = AtomSet::new();
    for p in &dom.predicates {
        for args in table.assignments(dom, &p.params) {
            atoms.insert(Atom::new(p.name.clone(), args));
        }
    }
    let mut report = GroundingReport::default();
    let mut actions = Vec::new();
    for schema in &dom.schemas {
        let recipe = recipes.iter().find(|r| r.name == schema.name);
        if recipe.is_none() {
            let symbolic = instantiate(schema, &symbolic_binding(&schema.params))?;
            let r = validate_action(&symbolic);
            if !r.is_empty() {
                return Err(PddlError::IllFormedSchema {
                    name: schema.name.clone(),
                    report: r,
                });
            }
        }
        for args in table.assignments(dom, &schema.params) {
            let b = binding(&schema.params, &args);
            let lifted = instantiate(schema, &b)?;
            let name = lifted.name.clone();
            let outcome = match recipe {
                None => {
                    let r = validate_action(&lifted);
                    if r.is_empty() {
                        Ok(lifted)
                    } else {
                        Err(ExclusionReason::Aliasing(r))
                    }
                }
                Some(recipe) => match ground_recipe(dom, recipe, &b)? {
                    Ok(m) if same_conditions_and_effects(&m, &lifted) => Ok(m.renamed(name.clone())),
                    Ok(_) => Err(ExclusionReason::LiftedBodyDiffers),
                    Err(reason) => Err(reason),
                },
            };
            match outcome {
                Ok(a) => actions.push(Arc::new(a)),
                Err(reason) => report.excluded.push(Excluded { name, reason }),
            }
        }
    }
    let task = PlanningTask::new(atoms, actions, prob.init.clone(), prob.goal.clone())?;
    Ok((task, report))
}
