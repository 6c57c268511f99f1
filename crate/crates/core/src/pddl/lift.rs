use super::domain::{LiftedAtom, LiftedDomain, LiftedLiteral, LiftedSchema, Problem, Term, TypedName};
use super::ground::{
    binding, ground_recipe, instantiate, same_conditions_and_effects, symbolic_binding,
    ExclusionReason, ObjectTable,
};
use super::PddlError;
use crate::composer::{compose_seq, CompositionOutcome};
use crate::model::{validate_action, Atom, AtomSet, LiteralSet};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecipeStep {
    pub schema: String,
    pub args: Vec<Term>,
}

impl fmt::Display for RecipeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// A named sequence of schema applications. Variables shared between steps
/// denote the same object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroRecipe {
    pub name: String,
    pub steps: Vec<RecipeStep>,
}

impl MacroRecipe {
    /// Variables in order of first appearance; these become the macro
    /// parameters.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for v in self.steps.iter().flat_map(|s| s.args.iter().filter_map(Term::var)) {
            if !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
        out
    }
}

impl fmt::Display for MacroRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "macro {} =", self.name)?;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, " ;")?;
            }
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundingStatus {
    Admitted,
    Excluded(ExclusionReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundingCheck {
    pub args: Vec<String>,
    pub status: GroundingStatus,
}

/// Per-grounding comparison of the lifted macro with the grounded
/// composition over a problem's objects.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LiftReport {
    pub checks: Vec<GroundingCheck>,
}

impl LiftReport {
    pub fn admitted(&self) -> impl Iterator<Item = &GroundingCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == GroundingStatus::Admitted)
    }

    pub fn excluded(&self) -> impl Iterator<Item = &GroundingCheck> {
        self.checks
            .iter()
            .filter(|c| c.status != GroundingStatus::Admitted)
    }
}

fn recipe_error(recipe: &MacroRecipe, message: impl Into<String>) -> PddlError {
    PddlError::Recipe {
        name: recipe.name.clone(),
        message: message.into(),
    }
}

/// Most specific of the types a variable is used with.
fn parameter_types(dom: &LiftedDomain, recipe: &MacroRecipe) -> Result<Vec<TypedName>, PddlError> {
    let mut uses: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for step in &recipe.steps {
        let schema = dom
            .schema(&step.schema)
            .ok_or_else(|| PddlError::UnknownSchema(step.schema.clone()))?;
        if schema.params.len() != step.args.len() {
            return Err(recipe_error(
                recipe,
                format!(
                    "`{}` takes {} arguments, got {}",
                    schema.name,
                    schema.params.len(),
                    step.args.len()
                ),
            ));
        }
        for (arg, p) in step.args.iter().zip(&schema.params) {
            match arg {
                Term::Var(v) => uses.entry(v).or_default().push(&p.ty),
                Term::Const(c) => {
                    let ty = dom
                        .constant_type(c)
                        .ok_or_else(|| recipe_error(recipe, format!("`{c}` is not a domain constant")))?;
                    if !dom.is_subtype(ty, &p.ty) {
                        return Err(PddlError::Type(format!(
                            "constant `{c}` of type {ty} passed to `{}` as {}",
                            schema.name, p.ty
                        )));
                    }
                }
            }
        }
    }
    recipe
        .variables()
        .into_iter()
        .map(|v| {
            let tys = &uses[v.as_str()];
            tys.iter()
                .find(|t| tys.iter().all(|u| dom.is_subtype(t, u)))
                .map(|t| TypedName::new(v.clone(), *t))
                .ok_or_else(|| {
                    PddlError::Type(format!("?{v} is used with incompatible types {}", tys.join(", ")))
                })
        })
        .collect()
}

fn lift_atom(a: &Atom) -> LiftedAtom {
    LiftedAtom::new(a.predicate.clone(), a.args.iter().map(|s| Term::parse(s)))
}

fn lift_atoms(set: &AtomSet) -> BTreeSet<LiftedAtom> {
    set.iter().map(lift_atom).collect()
}

fn lift_lits(set: &LiteralSet) -> BTreeSet<LiftedLiteral> {
    set.iter()
        .map(|l| LiftedLiteral {
            atom: lift_atom(&l.atom),
            positive: l.positive,
        })
        .collect()
}

/// Composes a recipe at the lifted level, assuming distinct variables denote
/// distinct objects. With a problem, every grounding over its objects is
/// compared with the composition of the grounded constituents.
pub fn lift_compose(
    dom: &LiftedDomain,
    recipe: &MacroRecipe,
    prob: Option<&Problem>,
) -> Result<(LiftedSchema, LiftReport), PddlError> {
    if recipe.steps.len() < 2 {
        return Err(recipe_error(recipe, "a macro needs at least two steps"));
    }
    if dom.schema(&recipe.name).is_some() {
        return Err(recipe_error(recipe, "name is already used by a schema"));
    }
    let params = parameter_types(dom, recipe)?;

    let symbols = symbolic_binding(&params);
    let mut steps = Vec::new();
    for step in &recipe.steps {
        let schema = dom.schema(&step.schema).expect("checked above");
        let args: Vec<String> = step
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => symbols[v].clone(),
                Term::Const(c) => c.clone(),
            })
            .collect();
        let a = instantiate(schema, &binding(&schema.params, &args))?;
        let report = validate_action(&a);
        if !report.is_empty() {
            return Err(PddlError::IllFormedSchema {
                name: format!("{} in {}", a.name, recipe.name),
                report,
            });
        }
        steps.push(Arc::new(a));
    }

    let groundings = |prob: &Problem| {
        ObjectTable::new(dom, prob).assignments(dom, &params)
    };
    let composed = match compose_seq(&steps)? {
        CompositionOutcome::Defined(m) => m,
        CompositionOutcome::Undefined(witness) => {
            let defined = match prob {
                None => 0,
                Some(p) => {
                    let mut n = 0;
                    for args in groundings(p) {
                        if ground_recipe(dom, recipe, &binding(&params, &args))?.is_ok() {
                            n += 1;
                        }
                    }
                    n
                }
            };
            return Err(if defined == 0 {
                PddlError::UndefinedForAllGroundings {
                    name: recipe.name.clone(),
                    witness,
                }
            } else {
                PddlError::UndefinedForDistinctArguments {
                    name: recipe.name.clone(),
                    defined,
                }
            });
        }
    };

    let schema = LiftedSchema {
        name: recipe.name.clone(),
        params: params.clone(),
        duration: composed.duration.clone(),
        pre_start: lift_atoms(&composed.pre_start),
        pre_inv: lift_atoms(&composed.pre_inv),
        pre_end: lift_atoms(&composed.pre_end),
        eff_start: lift_lits(&composed.eff_start),
        eff_end: lift_lits(&composed.eff_end),
    };

    let mut report = LiftReport::default();
    if let Some(p) = prob {
        for args in groundings(p) {
            let b = binding(&params, &args);
            let status = match ground_recipe(dom, recipe, &b)? {
                Ok(m) if same_conditions_and_effects(&m, &instantiate(&schema, &b)?) => {
                    GroundingStatus::Admitted
                }
                Ok(_) => GroundingStatus::Excluded(ExclusionReason::LiftedBodyDiffers),
                Err(reason) => GroundingStatus::Excluded(reason),
            };
            report.checks.push(GroundingCheck { args, status });
        }
    }
    Ok((schema, report))
}
