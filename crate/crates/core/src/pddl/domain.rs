use super::sexpr::{expected, read, Pos, Sexp};
use super::PddlError;
use crate::model::{Atom, AtomSet};
use crate::time::{parse_time, Time};
use num_traits::Signed;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The root type; untyped names have it.
pub const OBJECT: &str = "object";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// A variable, stored without the leading `?`.
    Var(String),
    Const(String),
}

impl Term {
    pub fn parse(text: &str) -> Term {
        match text.strip_prefix('?') {
            Some(v) => Term::Var(v.to_string()),
            None => Term::Const(text.to_string()),
        }
    }

    pub fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiftedAtom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl LiftedAtom {
    pub fn new(predicate: impl Into<String>, args: impl IntoIterator<Item = Term>) -> Self {
        LiftedAtom {
            predicate: predicate.into(),
            args: args.into_iter().collect(),
        }
    }

    /// The atom itself if it has no variables.
    pub fn to_ground(&self) -> Option<Atom> {
        let args: Option<Vec<&str>> = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Some(c.as_str()),
                Term::Var(_) => None,
            })
            .collect();
        Some(Atom::new(self.predicate.clone(), args?))
    }

    pub fn from_ground(atom: &Atom) -> Self {
        LiftedAtom::new(
            atom.predicate.clone(),
            atom.args.iter().map(|a| Term::Const(a.clone())),
        )
    }
}

impl fmt::Display for LiftedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiftedLiteral {
    pub atom: LiftedAtom,
    pub positive: bool,
}

impl fmt::Display for LiftedLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedSchema {
    pub name: String,
    /// Variables without the leading `?`.
    pub params: Vec<TypedName>,
    pub duration: Time,
    pub pre_start: BTreeSet<LiftedAtom>,
    pub pre_inv: BTreeSet<LiftedAtom>,
    pub pre_end: BTreeSet<LiftedAtom>,
    pub eff_start: BTreeSet<LiftedLiteral>,
    pub eff_end: BTreeSet<LiftedLiteral>,
}

impl LiftedSchema {
    pub fn new(name: impl Into<String>, params: Vec<TypedName>, duration: Time) -> Self {
        LiftedSchema {
            name: name.into(),
            params,
            duration,
            pre_start: BTreeSet::new(),
            pre_inv: BTreeSet::new(),
            pre_end: BTreeSet::new(),
            eff_start: BTreeSet::new(),
            eff_end: BTreeSet::new(),
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &LiftedAtom> {
        self.pre_start
            .iter()
            .chain(&self.pre_inv)
            .chain(&self.pre_end)
            .chain(self.eff_start.iter().map(|l| &l.atom))
            .chain(self.eff_end.iter().map(|l| &l.atom))
    }

    pub fn param_type(&self, var: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|p| p.name == var)
            .map(|p| p.ty.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LiftedDomain {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared types with their parent.
    pub types: Vec<TypedName>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub schemas: Vec<LiftedSchema>,
}

impl LiftedDomain {
    pub fn schema(&self, name: &str) -> Option<&LiftedSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    /// Declared types include those only named as a parent.
    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT || self.types.iter().any(|t| t.name == ty || t.ty == ty)
    }

    pub fn parent(&self, ty: &str) -> Option<&str> {
        self.types
            .iter()
            .find(|t| t.name == ty)
            .map(|t| t.ty.as_str())
    }

    /// Whether `sub` equals `sup` or lies below it in the hierarchy.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT {
            return true;
        }
        let mut cur = sub;
        for _ in 0..=self.types.len() {
            if cur == sup {
                return true;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    pub fn constant_type(&self, name: &str) -> Option<&str> {
        self.constants
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.ty.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: AtomSet,
    pub goal: AtomSet,
}

fn unsupported(pos: Pos, feature: &str) -> PddlError {
    PddlError::UnsupportedFeature {
        feature: feature.to_string(),
        line: pos.line,
        col: pos.col,
    }
}

fn invalid(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Invalid {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn sym<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, PddlError> {
    s.as_sym().ok_or_else(|| expected(s.pos(), what))
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], PddlError> {
    s.as_list().ok_or_else(|| expected(s.pos(), what))
}

fn is_number(s: &Sexp) -> bool {
    s.as_sym().is_some_and(|t| parse_time(t).is_ok())
}

fn check_requirement(s: &Sexp) -> Result<String, PddlError> {
    let r = sym(s, "a requirement flag")?;
    let feature = match r {
        ":strips" | ":typing" | ":durative-actions" => return Ok(r.to_string()),
        ":negative-preconditions" => "negative-precondition",
        ":fluents" | ":numeric-fluents" | ":object-fluents" => "numeric-fluents",
        ":conditional-effects" => "conditional-effects",
        ":duration-inequalities" => "duration-inequalities",
        ":timed-initial-literals" => "timed-initial-literals",
        ":continuous-effects" => "continuous-effects",
        other => other,
    };
    Err(unsupported(s.pos(), feature))
}

/// `a b - t c` style lists. Variables keep no `?`.
fn typed_list(items: &[Sexp], variables: bool) -> Result<Vec<(TypedName, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut it = items.iter();
    while let Some(s) = it.next() {
        let what = if variables { "a variable" } else { "a name" };
        let text = sym(s, what)?;
        if text == "-" {
            let ty = it.next().ok_or_else(|| expected(s.pos(), "a type after `-`"))?;
            if ty.head() == Some("either") {
                return Err(unsupported(ty.pos(), "either-types"));
            }
            let ty = sym(ty, "a type name")?;
            if pending.is_empty() {
                return Err(expected(s.pos(), "a name before `-`"));
            }
            out.extend(pending.drain(..).map(|(n, p)| (TypedName::new(n, ty), p)));
            continue;
        }
        let name = match (variables, text.strip_prefix('?')) {
            (true, Some(v)) if !v.is_empty() => v.to_string(),
            (false, None) => text.to_string(),
            _ => return Err(expected(s.pos(), what)),
        };
        pending.push((name, s.pos()));
    }
    out.extend(pending.into_iter().map(|(n, p)| (TypedName::new(n, OBJECT), p)));
    Ok(out)
}

fn parse_atom(s: &Sexp) -> Result<LiftedAtom, PddlError> {
    let items = list(s, "an atom")?;
    let (head, rest) = items.split_first().ok_or_else(|| expected(s.pos(), "an atom"))?;
    let predicate = sym(head, "a predicate name")?;
    let args = rest
        .iter()
        .map(|a| sym(a, "a term").map(Term::parse))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LiftedAtom::new(predicate, args))
}

/// Positions of atoms whose well-formedness is checked once the whole
/// domain is known.
struct PendingAtom {
    atom: LiftedAtom,
    pos: Pos,
    schema: usize,
}

#[derive(Clone, Copy)]
enum Slot {
    Start,
    Inv,
    End,
}

fn condition_atoms(s: &Sexp, out: &mut Vec<(LiftedAtom, Pos)>) -> Result<(), PddlError> {
    match s.head() {
        Some("and") => {
            for c in &s.as_list().unwrap()[1..] {
                condition_atoms(c, out)?;
            }
            Ok(())
        }
        Some("not") => Err(unsupported(s.pos(), "negative-precondition")),
        Some("or" | "imply" | "exists" | "forall") => {
            Err(unsupported(s.pos(), "disjunctive-or-quantified-conditions"))
        }
        Some("<" | ">" | "<=" | ">=") => Err(unsupported(s.pos(), "numeric-fluents")),
        Some("=") => {
            let items = s.as_list().unwrap();
            if items[1..].iter().any(|a| a.as_list().is_some() || is_number(a)) {
                Err(unsupported(s.pos(), "numeric-fluents"))
            } else {
                Err(unsupported(s.pos(), "equality"))
            }
        }
        _ => {
            out.push((parse_atom(s)?, s.pos()));
            Ok(())
        }
    }
}

fn timed_slot(items: &[Sexp], allow_inv: bool) -> Option<Slot> {
    if items.len() != 3 {
        return None;
    }
    match (items[0].as_sym()?, items[1].as_sym()?) {
        ("at", "start") => Some(Slot::Start),
        ("at", "end") => Some(Slot::End),
        ("over", "all") if allow_inv => Some(Slot::Inv),
        _ => None,
    }
}

fn parse_condition(
    s: &Sexp,
    out: &mut Vec<(Slot, LiftedAtom, Pos)>,
) -> Result<(), PddlError> {
    let items = list(s, "a condition")?;
    if items.is_empty() {
        return Ok(());
    }
    if s.head() == Some("and") {
        for c in &items[1..] {
            parse_condition(c, out)?;
        }
        return Ok(());
    }
    if s.head() == Some("not") {
        return Err(unsupported(s.pos(), "negative-precondition"));
    }
    let slot = timed_slot(items, true).ok_or_else(|| {
        expected(s.pos(), "a timed condition `(at start …)`, `(over all …)` or `(at end …)`")
    })?;
    let mut atoms = Vec::new();
    condition_atoms(&items[2], &mut atoms)?;
    out.extend(atoms.into_iter().map(|(a, p)| (slot, a, p)));
    Ok(())
}

fn effect_literals(s: &Sexp, out: &mut Vec<(LiftedLiteral, Pos)>) -> Result<(), PddlError> {
    match s.head() {
        Some("and") => {
            for e in &s.as_list().unwrap()[1..] {
                effect_literals(e, out)?;
            }
            Ok(())
        }
        Some("not") => {
            let items = s.as_list().unwrap();
            if items.len() != 2 {
                return Err(expected(s.pos(), "`(not <atom>)`"));
            }
            out.push((
                LiftedLiteral {
                    atom: parse_atom(&items[1])?,
                    positive: false,
                },
                s.pos(),
            ));
            Ok(())
        }
        Some("when") => Err(unsupported(s.pos(), "conditional-effects")),
        Some("forall") => Err(unsupported(s.pos(), "universal-effects")),
        Some("increase" | "decrease" | "assign" | "scale-up" | "scale-down") => {
            Err(unsupported(s.pos(), "numeric-fluents"))
        }
        _ => {
            out.push((
                LiftedLiteral {
                    atom: parse_atom(s)?,
                    positive: true,
                },
                s.pos(),
            ));
            Ok(())
        }
    }
}

fn parse_effect(s: &Sexp, out: &mut Vec<(Slot, LiftedLiteral, Pos)>) -> Result<(), PddlError> {
    let items = list(s, "an effect")?;
    if items.is_empty() {
        return Ok(());
    }
    match s.head() {
        Some("and") => {
            for e in &items[1..] {
                parse_effect(e, out)?;
            }
            return Ok(());
        }
        Some("when") => return Err(unsupported(s.pos(), "conditional-effects")),
        Some("forall") => return Err(unsupported(s.pos(), "universal-effects")),
        Some("increase" | "decrease" | "assign" | "scale-up" | "scale-down") => {
            return Err(unsupported(s.pos(), "numeric-fluents"))
        }
        _ => {}
    }
    let slot = timed_slot(items, false)
        .ok_or_else(|| expected(s.pos(), "a timed effect `(at start …)` or `(at end …)`"))?;
    let mut lits = Vec::new();
    effect_literals(&items[2], &mut lits)?;
    out.extend(lits.into_iter().map(|(l, p)| (slot, l, p)));
    Ok(())
}

fn parse_duration(s: &Sexp) -> Result<Time, PddlError> {
    let items = list(s, "`(= ?duration <number>)`")?;
    match s.head() {
        Some("=") => {}
        Some("and" | "<=" | ">=" | "<" | ">") => {
            return Err(unsupported(s.pos(), "duration-inequalities"))
        }
        _ => return Err(expected(s.pos(), "`(= ?duration <number>)`")),
    }
    if items.len() != 3 || items[1].as_sym() != Some("?duration") {
        return Err(expected(s.pos(), "`(= ?duration <number>)`"));
    }
    let value = match &items[2] {
        Sexp::List { pos, .. } => return Err(unsupported(*pos, "numeric-fluents")),
        Sexp::Sym { text, pos } => {
            parse_time(text).map_err(|_| expected(*pos, "a numeric duration"))?
        }
    };
    if !value.is_positive() {
        return Err(invalid(items[2].pos(), "duration must be positive"));
    }
    Ok(value)
}

fn parse_schema(items: &[Sexp], pos: Pos) -> Result<(LiftedSchema, Vec<(LiftedAtom, Pos)>), PddlError> {
    let name = sym(items.get(1).ok_or_else(|| expected(pos, "an action name"))?, "an action name")?;
    let mut params = Vec::new();
    let mut duration = None;
    let mut conditions = Vec::new();
    let mut effects = Vec::new();
    let mut it = items[2..].iter();
    while let Some(key) = it.next() {
        let k = sym(key, "`:parameters`, `:duration`, `:condition` or `:effect`")?;
        let value = it
            .next()
            .ok_or_else(|| expected(key.pos(), format!("a value for `{k}`")))?;
        match k {
            ":parameters" => {
                params = typed_list(list(value, "a parameter list")?, true)?;
            }
            ":duration" => duration = Some(parse_duration(value)?),
            ":condition" => parse_condition(value, &mut conditions)?,
            ":effect" => parse_effect(value, &mut effects)?,
            _ => {
                return Err(expected(
                    key.pos(),
                    "`:parameters`, `:duration`, `:condition` or `:effect`",
                ))
            }
        }
    }
    let duration = duration.ok_or_else(|| expected(pos, "a `:duration`"))?;
    let mut seen = BTreeSet::new();
    for (p, ppos) in &params {
        if !seen.insert(p.name.clone()) {
            return Err(invalid(*ppos, format!("parameter ?{} declared twice", p.name)));
        }
    }
    let mut schema = LiftedSchema::new(name, params.into_iter().map(|(p, _)| p).collect(), duration);
    let mut atoms = Vec::new();
    for (slot, atom, pos) in conditions {
        atoms.push((atom.clone(), pos));
        match slot {
            Slot::Start => schema.pre_start.insert(atom),
            Slot::Inv => schema.pre_inv.insert(atom),
            Slot::End => schema.pre_end.insert(atom),
        };
    }
    for (slot, lit, pos) in effects {
        atoms.push((lit.atom.clone(), pos));
        match slot {
            Slot::Start => schema.eff_start.insert(lit),
            _ => schema.eff_end.insert(lit),
        };
    }
    Ok((schema, atoms))
}

fn define_form<'a>(forms: &'a [Sexp], kind: &str) -> Result<(&'a [Sexp], String), PddlError> {
    let form = match forms {
        [f] => f,
        [] => return Err(expected(Pos { line: 1, col: 1 }, "`(define …)`")),
        [_, second, ..] => return Err(expected(second.pos(), "end of input")),
    };
    let items = list(form, "`(define …)`")?;
    if form.head() != Some("define") {
        return Err(expected(form.pos(), "`(define …)`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| expected(form.pos(), format!("`({kind} <name>)`")))?;
    match header.as_list() {
        Some([k, n]) if k.as_sym() == Some(kind) => {
            Ok((&items[2..], sym(n, "a name")?.to_string()))
        }
        _ => Err(expected(header.pos(), format!("`({kind} <name>)`"))),
    }
}

fn check_atom(
    dom: &LiftedDomain,
    atom: &LiftedAtom,
    pos: Pos,
    term_type: &dyn Fn(&Term) -> Option<String>,
) -> Result<(), PddlError> {
    let decl = dom
        .predicate(&atom.predicate)
        .ok_or_else(|| invalid(pos, format!("unknown predicate `{}`", atom.predicate)))?;
    if decl.params.len() != atom.args.len() {
        return Err(invalid(
            pos,
            format!(
                "`{}` takes {} arguments, got {}",
                atom.predicate,
                decl.params.len(),
                atom.args.len()
            ),
        ));
    }
    for (arg, param) in atom.args.iter().zip(&decl.params) {
        let ty = term_type(arg).ok_or_else(|| match arg {
            Term::Var(v) => invalid(pos, format!("undeclared variable ?{v}")),
            Term::Const(c) => invalid(pos, format!("unknown object `{c}`")),
        })?;
        if !dom.is_subtype(&ty, &param.ty) {
            return Err(PddlError::Type(format!(
                "{}:{}: `{arg}` of type {ty} used where `{}` expects {}",
                pos.line, pos.col, atom.predicate, param.ty
            )));
        }
    }
    Ok(())
}

fn check_types(dom: &LiftedDomain, names: &[(TypedName, Pos)]) -> Result<(), PddlError> {
    for (n, pos) in names {
        if !dom.has_type(&n.ty) {
            return Err(invalid(*pos, format!("unknown type `{}`", n.ty)));
        }
    }
    Ok(())
}

/// Parses a domain in the supported subset.
pub fn parse_domain(text: &str) -> Result<LiftedDomain, PddlError> {
    let forms = read(text)?;
    let (sections, name) = define_form(&forms, "domain")?;
    let mut dom = LiftedDomain {
        name,
        ..LiftedDomain::default()
    };
    let mut typed: Vec<(TypedName, Pos)> = Vec::new();
    let mut pending: Vec<PendingAtom> = Vec::new();
    let mut type_decls = Vec::new();
    for section in sections {
        let items = list(section, "a domain section")?;
        match section.head() {
            Some(":requirements") => {
                for r in &items[1..] {
                    dom.requirements.push(check_requirement(r)?);
                }
            }
            Some(":types") => {
                type_decls = typed_list(&items[1..], false)?;
                dom.types = type_decls.iter().map(|(t, _)| t.clone()).collect();
            }
            Some(":constants") => {
                let cs = typed_list(&items[1..], false)?;
                dom.constants = cs.iter().map(|(c, _)| c.clone()).collect();
                typed.extend(cs);
            }
            Some(":predicates") => {
                for p in &items[1..] {
                    let decl = list(p, "a predicate declaration")?;
                    let (head, rest) = decl
                        .split_first()
                        .ok_or_else(|| expected(p.pos(), "a predicate declaration"))?;
                    let name = sym(head, "a predicate name")?.to_string();
                    if dom.predicate(&name).is_some() {
                        return Err(invalid(p.pos(), format!("predicate `{name}` declared twice")));
                    }
                    let params = typed_list(rest, true)?;
                    dom.predicates.push(PredicateDecl {
                        name,
                        params: params.iter().map(|(t, _)| t.clone()).collect(),
                    });
                    typed.extend(params);
                }
            }
            Some(":durative-action") => {
                let (schema, atoms) = parse_schema(items, section.pos())?;
                if dom.schema(&schema.name).is_some() {
                    return Err(invalid(
                        section.pos(),
                        format!("action `{}` declared twice", schema.name),
                    ));
                }
                typed.extend(schema.params.iter().map(|p| (p.clone(), section.pos())));
                let index = dom.schemas.len();
                pending.extend(atoms.into_iter().map(|(atom, pos)| PendingAtom {
                    atom,
                    pos,
                    schema: index,
                }));
                dom.schemas.push(schema);
            }
            Some(":functions") => return Err(unsupported(section.pos(), "numeric-fluents")),
            Some(":action") => return Err(unsupported(section.pos(), "instantaneous-actions")),
            Some(":derived") => return Err(unsupported(section.pos(), "derived-predicates")),
            Some(":constraints") => return Err(unsupported(section.pos(), "constraints")),
            _ => return Err(expected(section.pos(), "a domain section")),
        }
    }
    for (t, pos) in &type_decls {
        if !dom.has_type(&t.ty) {
            return Err(invalid(*pos, format!("unknown type `{}`", t.ty)));
        }
        if t.ty != OBJECT && dom.is_subtype(&t.ty, &t.name) {
            return Err(invalid(*pos, format!("type `{}` is part of a cycle", t.name)));
        }
    }
    check_types(&dom, &typed)?;
    for p in &pending {
        let schema = &dom.schemas[p.schema];
        let term_type = |t: &Term| match t {
            Term::Var(v) => schema.param_type(v).map(str::to_string),
            Term::Const(c) => dom.constant_type(c).map(str::to_string),
        };
        check_atom(&dom, &p.atom, p.pos, &term_type)?;
    }
    Ok(dom)
}

fn ground_atoms(
    s: &Sexp,
    out: &mut Vec<(LiftedAtom, Pos)>,
    goal: bool,
) -> Result<(), PddlError> {
    match s.head() {
        Some("and") if goal => {
            for g in &s.as_list().unwrap()[1..] {
                ground_atoms(g, out, goal)?;
            }
            Ok(())
        }
        Some("not") if goal => Err(unsupported(s.pos(), "negative-goals")),
        Some("or" | "imply" | "exists" | "forall") if goal => {
            Err(unsupported(s.pos(), "disjunctive-or-quantified-goals"))
        }
        Some("<" | ">" | "<=" | ">=" | "=") => Err(unsupported(s.pos(), "numeric-fluents")),
        Some("at") if !goal && s.as_list().unwrap().get(1).is_some_and(is_number) => {
            Err(unsupported(s.pos(), "timed-initial-literals"))
        }
        Some("not") => Err(expected(s.pos(), "a positive ground atom")),
        _ => {
            if s.as_list().is_some_and(|l| l.is_empty()) && goal {
                return Ok(());
            }
            out.push((parse_atom(s)?, s.pos()));
            Ok(())
        }
    }
}

/// Parses a problem for `dom`.
pub fn parse_problem(text: &str, dom: &LiftedDomain) -> Result<Problem, PddlError> {
    let forms = read(text)?;
    let (sections, name) = define_form(&forms, "problem")?;
    let mut prob = Problem {
        name,
        ..Problem::default()
    };
    let mut objects = Vec::new();
    let mut init = Vec::new();
    let mut goal = Vec::new();
    for section in sections {
        let items = list(section, "a problem section")?;
        match section.head() {
            Some(":domain") => {
                let d = sym(
                    items.get(1).ok_or_else(|| expected(section.pos(), "a domain name"))?,
                    "a domain name",
                )?;
                if d != dom.name {
                    return Err(invalid(
                        section.pos(),
                        format!("problem is for domain `{d}`, not `{}`", dom.name),
                    ));
                }
                prob.domain = d.to_string();
            }
            Some(":requirements") => {
                for r in &items[1..] {
                    check_requirement(r)?;
                }
            }
            Some(":objects") => objects = typed_list(&items[1..], false)?,
            Some(":init") => {
                for a in &items[1..] {
                    ground_atoms(a, &mut init, false)?;
                }
            }
            Some(":goal") => {
                for g in &items[1..] {
                    ground_atoms(g, &mut goal, true)?;
                }
            }
            Some(":metric") => return Err(unsupported(section.pos(), "metric")),
            Some(":constraints") => return Err(unsupported(section.pos(), "constraints")),
            _ => return Err(expected(section.pos(), "a problem section")),
        }
    }
    if prob.domain.is_empty() {
        prob.domain = dom.name.clone();
    }
    check_types(dom, &objects)?;
    let mut types: BTreeMap<String, String> = dom
        .constants
        .iter()
        .map(|c| (c.name.clone(), c.ty.clone()))
        .collect();
    for (o, pos) in &objects {
        match types.get(&o.name) {
            Some(ty) if *ty != o.ty => {
                return Err(invalid(*pos, format!("object `{}` declared with two types", o.name)))
            }
            Some(_) if dom.constant_type(&o.name).is_some() => continue,
            Some(_) => return Err(invalid(*pos, format!("object `{}` declared twice", o.name))),
            None => {
                types.insert(o.name.clone(), o.ty.clone());
                prob.objects.push(o.clone());
            }
        }
    }
    let term_type = |t: &Term| match t {
        Term::Const(c) => types.get(c).cloned(),
        Term::Var(_) => None,
    };
    for (set, atoms) in [(&mut prob.init, init), (&mut prob.goal, goal)] {
        for (atom, pos) in atoms {
            if atom.args.iter().any(|a| a.var().is_some()) {
                return Err(invalid(pos, "variables are not allowed in a problem"));
            }
            check_atom(dom, &atom, pos, &term_type)?;
            set.insert(atom.to_ground().expect("checked ground"));
        }
    }
    Ok(prob)
}
