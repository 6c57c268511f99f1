use super::sexpr::{read, Sexp};
use super::PddlError;
use crate::model::{ActionName, Plan, PlanningTask, TimedAction};
use crate::time::{parse_time, Decimal};
use std::fmt::Write;

fn parse_error(line: usize, col: usize, expected: &str) -> PddlError {
    PddlError::Parse {
        line,
        col,
        expected: expected.to_string(),
    }
}

/// Reads `T: (name args...) [D]` lines. Actions are looked up by name, or
/// by flat name when the task was emitted with parameterless actions.
pub fn parse_plan(text: &str, task: &PlanningTask) -> Result<Plan, PddlError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split(';').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        let (stamp, rest) = body
            .split_once(':')
            .ok_or_else(|| parse_error(line, indent + 1, "`<time>: (<action> …)`"))?;
        let start = parse_time(stamp.trim())
            .map_err(|_| parse_error(line, indent + 1, "a time stamp"))?;
        let rest_col = stamp.len() + 2;
        let (action_text, duration_text) = match rest.find('[') {
            Some(b) => (&rest[..b], Some(&rest[b..])),
            None => (rest, None),
        };
        let forms = read(action_text).map_err(|_| parse_error(line, rest_col, "`(<action> …)`"))?;
        let tokens: Vec<&str> = match forms.as_slice() {
            [Sexp::List { items, .. }] if !items.is_empty() => items
                .iter()
                .map(|s| s.as_sym())
                .collect::<Option<_>>()
                .ok_or_else(|| parse_error(line, rest_col, "an action name and object names"))?,
            _ => return Err(parse_error(line, rest_col, "`(<action> …)`")),
        };
        let name = ActionName::new(tokens[0], tokens[1..].iter().copied());
        let action = task
            .action(&name)
            .or_else(|| {
                let flat = name.flat();
                task.actions.iter().find(|a| a.name.flat() == flat)
            })
            .ok_or_else(|| PddlError::UnknownAction {
                line,
                name: name.to_string(),
            })?;
        if let Some(d) = duration_text {
            let col = body.len() - d.len() + 1;
            let inner = d
                .trim()
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| parse_error(line, col, "`[<duration>]`"))?;
            let given = parse_time(inner.trim()).map_err(|_| parse_error(line, col, "a duration"))?;
            if given != action.duration {
                return Err(PddlError::DurationMismatch {
                    line,
                    action: name.to_string(),
                    declared: action.duration.clone(),
                    given,
                });
            }
        }
        steps.push(TimedAction::new(start, action.clone()));
    }
    Ok(Plan::new(steps))
}

pub fn emit_plan(plan: &Plan) -> String {
    let mut out = String::new();
    for s in &plan.steps {
        let _ = writeln!(
            out,
            "{}: {} [{}]",
            Decimal(&s.start),
            s.action.name,
            Decimal(&s.action.duration)
        );
    }
    out
}
