//! The line-oriented configuration document shared by macro recipes, the
//! macro manifest with its mutex lists, and the edge-duration table.
//!
//! ```text
//! # recipes
//! macro move-get = move ?r ?from ?to ; get ?r ?to
//! mutex (move-get r l1 l2) = (can-del-free l2) (can-add-empty r)
//! move-schema drive
//! from-param ?from
//! to-param ?to
//! edge-predicate road
//! edge l1 l2 = 3/2
//! ```

use super::closure::MoveSpec;
use super::domain::Term;
use super::lift::{MacroRecipe, RecipeStep};
use super::sexpr::{read, Sexp};
use super::PddlError;
use crate::model::{ActionName, Atom, AtomSet};
use crate::time::{parse_time, Decimal, Time};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutexEntry {
    pub action: ActionName,
    pub atoms: AtomSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    pub recipes: Vec<MacroRecipe>,
    pub mutex: Vec<MutexEntry>,
    pub move_schema: Option<String>,
    pub from_param: Option<String>,
    pub to_param: Option<String>,
    pub edge_predicate: Option<String>,
    pub edges: BTreeMap<(String, String), Time>,
}

fn config_error(line: usize, message: impl Into<String>) -> PddlError {
    PddlError::Config {
        line,
        message: message.into(),
    }
}

fn symbols(items: &[Sexp]) -> Option<Vec<&str>> {
    items.iter().map(Sexp::as_sym).collect()
}

fn parse_step(text: &str, line: usize) -> Result<RecipeStep, PddlError> {
    let t = text.trim();
    let t = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(t);
    let mut tokens = t.split_whitespace().map(str::to_lowercase);
    let schema = tokens
        .next()
        .ok_or_else(|| config_error(line, "empty macro step"))?;
    Ok(RecipeStep {
        schema,
        args: tokens.map(|a| Term::parse(&a)).collect(),
    })
}

fn parse_mutex(rest: &str, line: usize) -> Result<MutexEntry, PddlError> {
    let (lhs, rhs) = rest
        .split_once('=')
        .ok_or_else(|| config_error(line, "expected `mutex (<action>) = (<atom>) …`"))?;
    let bad = || config_error(line, "expected `mutex (<action>) = (<atom>) …`");
    let action = match read(lhs).map_err(|_| bad())?.as_slice() {
        [Sexp::List { items, .. }] if !items.is_empty() => {
            let s = symbols(items).ok_or_else(bad)?;
            ActionName::new(s[0], s[1..].iter().copied())
        }
        _ => return Err(bad()),
    };
    let mut atoms = AtomSet::new();
    for form in read(rhs).map_err(|_| bad())? {
        let items = form.as_list().ok_or_else(bad)?;
        let s = symbols(items).filter(|s| !s.is_empty()).ok_or_else(bad)?;
        atoms.insert(Atom::new(s[0], s[1..].iter().copied()));
    }
    Ok(MutexEntry { action, atoms })
}

fn single_word(rest: &str, key: &str, line: usize) -> Result<String, PddlError> {
    let words: Vec<&str> = rest.split_whitespace().collect();
    match words.as_slice() {
        [w] => Ok(w.to_lowercase()),
        _ => Err(config_error(line, format!("`{key}` takes one name"))),
    }
}

pub fn parse_config(text: &str) -> Result<Config, PddlError> {
    let mut cfg = Config::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        match key.to_lowercase().as_str() {
            "macro" => {
                let (name, steps) = rest
                    .split_once('=')
                    .ok_or_else(|| config_error(line, "expected `macro <name> = <step> ; <step> …`"))?;
                let name = single_word(name, "macro", line)?;
                if cfg.recipes.iter().any(|r| r.name == name) {
                    return Err(config_error(line, format!("macro `{name}` defined twice")));
                }
                let steps = steps
                    .split(';')
                    .map(|s| parse_step(s, line))
                    .collect::<Result<Vec<_>, _>>()?;
                cfg.recipes.push(MacroRecipe { name, steps });
            }
            "mutex" => cfg.mutex.push(parse_mutex(rest, line)?),
            "move-schema" => cfg.move_schema = Some(single_word(rest, key, line)?),
            "from-param" => {
                cfg.from_param = Some(single_word(rest, key, line)?.trim_start_matches('?').to_string())
            }
            "to-param" => {
                cfg.to_param = Some(single_word(rest, key, line)?.trim_start_matches('?').to_string())
            }
            "edge-predicate" => cfg.edge_predicate = Some(single_word(rest, key, line)?),
            "edge" => {
                let (pair, value) = rest
                    .split_once('=')
                    .ok_or_else(|| config_error(line, "expected `edge <from> <to> = <duration>`"))?;
                let ends: Vec<String> = pair.split_whitespace().map(str::to_lowercase).collect();
                let [from, to] = <[String; 2]>::try_from(ends)
                    .map_err(|_| config_error(line, "expected `edge <from> <to> = <duration>`"))?;
                let d = parse_time(value.trim())
                    .map_err(|_| config_error(line, format!("invalid duration `{}`", value.trim())))?;
                if cfg.edges.insert((from.clone(), to.clone()), d).is_some() {
                    return Err(config_error(line, format!("edge {from} {to} given twice")));
                }
            }
            other => return Err(config_error(line, format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

impl Config {
    /// The closure settings, if all four keys are present.
    pub fn move_spec(&self) -> Result<MoveSpec, PddlError> {
        let get = |v: &Option<String>, key: &str| {
            v.clone()
                .ok_or_else(|| config_error(0, format!("missing `{key}`")))
        };
        Ok(MoveSpec {
            schema: get(&self.move_schema, "move-schema")?,
            from_param: get(&self.from_param, "from-param")?,
            to_param: get(&self.to_param, "to-param")?,
            edge_predicate: get(&self.edge_predicate, "edge-predicate")?,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.recipes {
            let _ = writeln!(out, "{r}");
        }
        for m in &self.mutex {
            let atoms: Vec<String> = m.atoms.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "mutex {} = {}", m.action, atoms.join(" "));
        }
        for (key, v) in [
            ("move-schema", &self.move_schema),
            ("from-param", &self.from_param.as_ref().map(|p| format!("?{p}"))),
            ("to-param", &self.to_param.as_ref().map(|p| format!("?{p}"))),
            ("edge-predicate", &self.edge_predicate),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} {v}");
            }
        }
        for ((a, b), d) in &self.edges {
            let _ = writeln!(out, "edge {a} {b} = {}", Decimal(d));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::rat;

    const DOC: &str = "
        # recipes
        macro move-get = move ?r ?from ?to ; (get ?r ?to)
        mutex (move-get r l1 l2) = (can-del-free l2) (can-add-empty r)
        move-schema drive   # closure
        from-param ?from
        to-param to
        edge-predicate road
        edge a b = 1.5
        edge b c = 2/3
    ";

    #[test]
    fn parses_every_key() {
        let cfg = parse_config(DOC).unwrap();
        assert_eq!(cfg.recipes.len(), 1);
        let r = &cfg.recipes[0];
        assert_eq!(r.name, "move-get");
        assert_eq!(r.steps[1].schema, "get");
        assert_eq!(r.steps[1].args, vec![Term::Var("r".into()), Term::Var("to".into())]);
        assert_eq!(cfg.mutex[0].action, ActionName::new("move-get", ["r", "l1", "l2"]));
        assert_eq!(cfg.mutex[0].atoms.len(), 2);
        let spec = cfg.move_spec().unwrap();
        assert_eq!((spec.from_param.as_str(), spec.to_param.as_str()), ("from", "to"));
        assert_eq!(cfg.edges[&("b".into(), "c".into())], rat(2, 3));
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config(DOC).unwrap();
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("macro x", 1),
            ("\nfrobnicate 3", 2),
            ("edge a = 1", 1),
            ("edge a b = 1\nedge a b = 2", 2),
            ("macro m = a ?x ; b ?x\nmacro m = a ?x ; b ?x", 2),
            ("mutex x = (p)", 1),
        ] {
            match parse_config(text) {
                Err(PddlError::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_config("").unwrap().move_spec().is_err());
    }
}
