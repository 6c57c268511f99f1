use super::domain::{LiftedAtom, LiftedDomain, LiftedSchema, Problem, Term, TypedName};
use super::PddlError;
use crate::time::Time;
use std::collections::{BTreeMap, BTreeSet};

/// Which schema moves between locations and how its graph is encoded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveSpec {
    pub schema: String,
    pub from_param: String,
    pub to_param: String,
    /// Binary static predicate whose initial atoms are the edges.
    pub edge_predicate: String,
}

/// Floyd–Warshall over exact rationals. Only pairs `u ≠ v` with a path
/// appear in the result.
pub fn all_pairs_shortest_paths(
    nodes: &[String],
    edges: &BTreeMap<(String, String), Time>,
) -> BTreeMap<(String, String), Time> {
    let n = nodes.len();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut d: Vec<Vec<Option<Time>>> = vec![vec![None; n]; n];
    for ((u, v), w) in edges {
        if let (Some(&i), Some(&j)) = (index.get(u.as_str()), index.get(v.as_str())) {
            if i != j && d[i][j].as_ref().map_or(true, |x| w < x) {
                d[i][j] = Some(w.clone());
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k].clone() else { continue };
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(kj) = &d[k][j] {
                    let via = &ik + kj;
                    if d[i][j].as_ref().map_or(true, |x| via < *x) {
                        d[i][j] = Some(via);
                    }
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for (i, row) in d.into_iter().enumerate() {
        for (j, w) in row.into_iter().enumerate() {
            if let Some(w) = w {
                out.insert((nodes[i].clone(), nodes[j].clone()), w);
            }
        }
    }
    out
}

fn not_a_move(spec: &MoveSpec, reason: impl Into<String>) -> PddlError {
    PddlError::NotAMoveSchema {
        schema: spec.schema.clone(),
        reason: reason.into(),
    }
}

fn substitute(atom: &LiftedAtom, map: &BTreeMap<&str, &str>) -> LiftedAtom {
    LiftedAtom::new(
        atom.predicate.clone(),
        atom.args.iter().map(|t| match t {
            Term::Var(v) => match map.get(v.as_str()) {
                Some(c) => Term::Const(c.to_string()),
                None => t.clone(),
            },
            Term::Const(_) => t.clone(),
        }),
    )
}

/// Replaces the move schema by one schema `<schema>-<u>-<v>` per ordered
/// pair of distinct locations connected in the edge graph, lasting as long
/// as the shortest path from `u` to `v`. Locations become domain constants.
pub fn shortest_path_closure(
    dom: &LiftedDomain,
    prob: &Problem,
    spec: &MoveSpec,
    durations: &BTreeMap<(String, String), Time>,
) -> Result<(LiftedDomain, Problem), PddlError> {
    let position = dom
        .schemas
        .iter()
        .position(|s| s.name == spec.schema)
        .ok_or_else(|| not_a_move(spec, "no such schema"))?;
    let schema = &dom.schemas[position];
    if spec.from_param == spec.to_param {
        return Err(not_a_move(spec, "origin and destination are the same parameter"));
    }
    let from_ty = schema
        .param_type(&spec.from_param)
        .ok_or_else(|| not_a_move(spec, format!("no parameter ?{}", spec.from_param)))?;
    let to_ty = schema
        .param_type(&spec.to_param)
        .ok_or_else(|| not_a_move(spec, format!("no parameter ?{}", spec.to_param)))?;
    if from_ty != to_ty {
        return Err(not_a_move(spec, "origin and destination have different types"));
    }
    let edge_atom = LiftedAtom::new(
        spec.edge_predicate.clone(),
        [Term::Var(spec.from_param.clone()), Term::Var(spec.to_param.clone())],
    );
    if !schema.pre_start.contains(&edge_atom) {
        return Err(not_a_move(spec, format!("start condition {edge_atom} is missing")));
    }

    let locations: Vec<String> = dom
        .constants
        .iter()
        .chain(&prob.objects)
        .filter(|o| dom.is_subtype(&o.ty, from_ty))
        .map(|o| o.name.clone())
        .collect();
    let mut graph = BTreeMap::new();
    for atom in prob.init.iter().filter(|a| a.predicate == spec.edge_predicate) {
        let [u, v] = atom.args.as_slice() else {
            return Err(not_a_move(spec, format!("edge atom {atom} is not binary")));
        };
        let w = durations
            .get(&(u.clone(), v.clone()))
            .ok_or_else(|| PddlError::MissingEdgeDuration {
                from: u.clone(),
                to: v.clone(),
            })?;
        graph.insert((u.clone(), v.clone()), w.clone());
    }
    let dist = all_pairs_shortest_paths(&locations, &graph);

    let mut out = dom.clone();
    let remaining: Vec<TypedName> = schema
        .params
        .iter()
        .filter(|p| p.name != spec.from_param && p.name != spec.to_param)
        .cloned()
        .collect();
    let mut closed = Vec::new();
    let mut names: BTreeSet<String> = dom.schemas.iter().map(|s| s.name.clone()).collect();
    names.remove(&spec.schema);
    for ((u, v), d) in &dist {
        let name = format!("{}-{u}-{v}", spec.schema);
        if !names.insert(name.clone()) {
            return Err(not_a_move(spec, format!("generated name `{name}` is not unique")));
        }
        let map: BTreeMap<&str, &str> = [
            (spec.from_param.as_str(), u.as_str()),
            (spec.to_param.as_str(), v.as_str()),
        ]
        .into_iter()
        .collect();
        let edge = substitute(&edge_atom, &map);
        let atoms = |set: &BTreeSet<LiftedAtom>| -> BTreeSet<LiftedAtom> {
            set.iter()
                .map(|a| substitute(a, &map))
                .filter(|a| *a != edge)
                .collect()
        };
        let mut s = LiftedSchema::new(name, remaining.clone(), d.clone());
        s.pre_start = atoms(&schema.pre_start);
        s.pre_inv = atoms(&schema.pre_inv);
        s.pre_end = atoms(&schema.pre_end);
        for (src, dst) in [(&schema.eff_start, &mut s.eff_start), (&schema.eff_end, &mut s.eff_end)] {
            dst.extend(src.iter().map(|l| super::domain::LiftedLiteral {
                atom: substitute(&l.atom, &map),
                positive: l.positive,
            }));
        }
        closed.push(s);
    }
    out.schemas.splice(position..=position, closed);

    let mut problem = prob.clone();
    let moved: Vec<TypedName> = prob
        .objects
        .iter()
        .filter(|o| dom.is_subtype(&o.ty, from_ty))
        .cloned()
        .collect();
    problem.objects.retain(|o| !moved.contains(o));
    out.constants.extend(moved);
    Ok((out, problem))
}
