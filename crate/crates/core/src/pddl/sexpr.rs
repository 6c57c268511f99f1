//! S-expression reader with source positions. Symbols are lowercased.

use super::PddlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Sym { text: String, pos: Pos },
    List { items: Vec<Sexp>, pos: Pos },
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Sym { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Sym { .. } => None,
        }
    }

    /// Leading symbol of a list.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_sym()
    }
}

pub(crate) fn expected(pos: Pos, what: impl Into<String>) -> PddlError {
    PddlError::Parse {
        line: pos.line,
        col: pos.col,
        expected: what.into(),
    }
}

/// Reads every top-level expression of `text`.
pub fn read(text: &str) -> Result<Vec<Sexp>, PddlError> {
    let mut stack: Vec<(Pos, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut chars = text.chars().peekable();
    let mut symbol: Option<(Pos, String)> = None;

    fn flush(symbol: &mut Option<(Pos, String)>, stack: &mut [(Pos, Vec<Sexp>)], top: &mut Vec<Sexp>) {
        if let Some((pos, text)) = symbol.take() {
            let s = Sexp::Sym { text, pos };
            match stack.last_mut() {
                Some((_, items)) => items.push(s),
                None => top.push(s),
            }
        }
    }

    while let Some(c) = chars.next() {
        col += 1;
        let pos = Pos { line, col };
        match c {
            '\n' => {
                flush(&mut symbol, &mut stack, &mut top);
                line += 1;
                col = 0;
            }
            ';' => {
                flush(&mut symbol, &mut stack, &mut top);
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '(' => {
                flush(&mut symbol, &mut stack, &mut top);
                stack.push((pos, Vec::new()));
            }
            ')' => {
                flush(&mut symbol, &mut stack, &mut top);
                let (open, items) = stack
                    .pop()
                    .ok_or_else(|| expected(pos, "an expression before `)`"))?;
                let list = Sexp::List { items, pos: open };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
            }
            c if c.is_whitespace() => flush(&mut symbol, &mut stack, &mut top),
            c => match &mut symbol {
                Some((_, s)) => s.extend(c.to_lowercase()),
                None => symbol = Some((pos, c.to_lowercase().collect())),
            },
        }
    }
    flush(&mut symbol, &mut stack, &mut top);
    if !stack.is_empty() {
        return Err(expected(Pos { line, col: col + 1 }, "`)`"));
    }
    Ok(top)
}
