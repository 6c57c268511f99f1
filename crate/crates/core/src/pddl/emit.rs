use super::domain::{
    LiftedAtom, LiftedDomain, LiftedLiteral, LiftedSchema, PredicateDecl, Problem, TypedName,
    OBJECT,
};
use super::PddlError;
use crate::model::{Atom, Literal, PlanningTask};
use crate::time::Decimal;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

fn typed(items: &[TypedName], prefix: &str) -> String {
    items
        .iter()
        .map(|t| {
            if t.ty == OBJECT {
                format!("{prefix}{}", t.name)
            } else {
                format!("{prefix}{} - {}", t.name, t.ty)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn schema_text(out: &mut String, s: &LiftedSchema) {
    let _ = writeln!(out, "  (:durative-action {}", s.name);
    let _ = writeln!(out, "    :parameters ({})", typed(&s.params, "?"));
    let _ = writeln!(out, "    :duration (= ?duration {})", Decimal(&s.duration));
    let conds: Vec<String> = s
        .pre_start
        .iter()
        .map(|a| format!("(at start {a})"))
        .chain(s.pre_inv.iter().map(|a| format!("(over all {a})")))
        .chain(s.pre_end.iter().map(|a| format!("(at end {a})")))
        .collect();
    let effs: Vec<String> = s
        .eff_start
        .iter()
        .map(|l| format!("(at start {l})"))
        .chain(s.eff_end.iter().map(|l| format!("(at end {l})")))
        .collect();
    for (key, items) in [(":condition", conds), (":effect", effs)] {
        if items.is_empty() {
            let _ = writeln!(out, "    {key} (and)");
        } else {
            let _ = writeln!(out, "    {key} (and");
            for i in items {
                let _ = writeln!(out, "      {i}");
            }
            let _ = writeln!(out, "    )");
        }
    }
    let _ = writeln!(out, "  )");
}

/// Prints a domain; `parse_domain` reads it back to an equal value.
pub fn emit_domain(dom: &LiftedDomain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", dom.name);
    if !dom.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", dom.requirements.join(" "));
    }
    if !dom.types.is_empty() {
        let _ = writeln!(out, "  (:types {})", typed(&dom.types, ""));
    }
    if !dom.constants.is_empty() {
        let _ = writeln!(out, "  (:constants {})", typed(&dom.constants, ""));
    }
    let _ = writeln!(out, "  (:predicates");
    for p in &dom.predicates {
        if p.params.is_empty() {
            let _ = writeln!(out, "    ({})", p.name);
        } else {
            let _ = writeln!(out, "    ({} {})", p.name, typed(&p.params, "?"));
        }
    }
    let _ = writeln!(out, "  )");
    for s in &dom.schemas {
        schema_text(&mut out, s);
    }
    out.push_str(")\n");
    out
}

/// Prints a problem; `parse_problem` reads it back to an equal value.
pub fn emit_problem(prob: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", prob.name);
    let _ = writeln!(out, "  (:domain {})", prob.domain);
    if !prob.objects.is_empty() {
        let _ = writeln!(out, "  (:objects {})", typed(&prob.objects, ""));
    }
    let _ = writeln!(out, "  (:init");
    for a in &prob.init {
        let _ = writeln!(out, "    {a}");
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:goal (and");
    for a in &prob.goal {
        let _ = writeln!(out, "    {a}");
    }
    let _ = writeln!(out, "  ))");
    out.push_str(")\n");
    out
}

fn lifted_lits(lits: &BTreeSet<Literal>) -> BTreeSet<LiftedLiteral> {
    lits.iter()
        .map(|l| LiftedLiteral {
            atom: LiftedAtom::from_ground(&l.atom),
            positive: l.positive,
        })
        .collect()
}

fn lifted_atoms(atoms: &BTreeSet<Atom>) -> BTreeSet<LiftedAtom> {
    atoms.iter().map(LiftedAtom::from_ground).collect()
}

/// A grounded task as a domain of parameterless actions, named by their
/// flat names, and a problem. Objects become domain constants.
pub fn emit_task(
    task: &PlanningTask,
    domain_name: &str,
    problem_name: &str,
) -> Result<(LiftedDomain, Problem), PddlError> {
    let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
    let mut objects = BTreeSet::new();
    // the task guarantees every action atom lies in `atoms`
    for atom in &task.atoms {
        match arity.insert(atom.predicate.as_str(), atom.args.len()) {
            Some(n) if n != atom.args.len() => {
                return Err(PddlError::Emit(format!(
                    "predicate `{}` is used with {} and {} arguments",
                    atom.predicate,
                    n,
                    atom.args.len()
                )))
            }
            _ => {}
        }
        objects.extend(atom.args.iter().cloned());
    }
    let predicates = arity
        .iter()
        .map(|(name, &n)| PredicateDecl {
            name: name.to_string(),
            params: (1..=n).map(|i| TypedName::new(format!("x{i}"), OBJECT)).collect(),
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut schemas = Vec::new();
    for a in &task.actions {
        let name = a.name.flat();
        if !seen.insert(name.clone()) {
            return Err(PddlError::Emit(format!("two actions flatten to `{name}`")));
        }
        schemas.push(LiftedSchema {
            name,
            params: Vec::new(),
            duration: a.duration.clone(),
            pre_start: lifted_atoms(&a.pre_start),
            pre_inv: lifted_atoms(&a.pre_inv),
            pre_end: lifted_atoms(&a.pre_end),
            eff_start: lifted_lits(&a.eff_start),
            eff_end: lifted_lits(&a.eff_end),
        });
    }
    let dom = LiftedDomain {
        name: domain_name.to_string(),
        requirements: vec![":durative-actions".to_string()],
        types: Vec::new(),
        constants: objects.into_iter().map(|o| TypedName::new(o, OBJECT)).collect(),
        predicates,
        schemas,
    };
    let prob = Problem {
        name: problem_name.to_string(),
        domain: domain_name.to_string(),
        objects: Vec::new(),
        init: task.init.clone(),
        goal: task.goal.clone(),
    };
    Ok((dom, prob))
}
