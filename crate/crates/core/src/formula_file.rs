//! Text format for formula specs.
//!
//! ```text
//! # comment
//! name = "e_cf1"
//! b0 = "2"
//! prefix = "1, 1"
//! a = "n - 1"
//! b = "n"
//! ```
//!
//! `name`, `b0`, `a` and `b` are required and may appear once. `prefix` may
//! repeat; each gives one explicit `a_i, b_i` pair (integers or fractions
//! like `-3/4`) in order starting at `i = 1`.

use std::fs;
use std::path::Path;

use num::BigRational;
use thiserror::Error;

use crate::engine::{EngineError, FormulaSpec};
use crate::expr::{Expr, ParseError};

#[derive(Debug, Error)]
pub enum FormulaFileError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: in `{key}`: {source}")]
    Expr {
        line: usize,
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: prefix must be two rationals `a, b`, got `{value}`")]
    Prefix { line: usize, value: String },
    #[error(transparent)]
    Spec(#[from] EngineError),
}

fn split_line(line: usize, text: &str) -> Result<(&str, &str), FormulaFileError> {
    let syntax = |reason: &str| FormulaFileError::Syntax {
        line,
        reason: reason.to_string(),
    };
    let (key, value) = text.split_once('=').ok_or_else(|| syntax("expected `key = \"value\"`"))?;
    let key = key.trim();
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(syntax("expected a key before `=`"));
    }
    let value = value
        .trim()
        .strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .ok_or_else(|| syntax("value must be double-quoted"))?;
    if value.contains('"') {
        return Err(syntax("value must not contain `\"`"));
    }
    Ok((key, value))
}

fn parse_prefix(line: usize, value: &str) -> Result<(BigRational, BigRational), FormulaFileError> {
    let bad = || FormulaFileError::Prefix {
        line,
        value: value.to_string(),
    };
    let (a, b) = value.split_once(',').ok_or_else(bad)?;
    let a = a.trim().parse::<BigRational>().map_err(|_| bad())?;
    let b = b.trim().parse::<BigRational>().map_err(|_| bad())?;
    Ok((a, b))
}

pub fn parse_formula_file(text: &str) -> Result<FormulaSpec, FormulaFileError> {
    let mut name = None;
    let mut b0 = None;
    let mut a = None;
    let mut b = None;
    let mut prefix = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = split_line(line, trimmed)?;
        let expr = |value: &str| {
            Expr::parse(value).map_err(|source| FormulaFileError::Expr {
                line,
                key: key.to_string(),
                source,
            })
        };
        let slot_taken = match key {
            "name" => name.replace(value.to_string()).is_some(),
            "b0" => b0.replace(expr(value)?).is_some(),
            "a" => a.replace(expr(value)?).is_some(),
            "b" => b.replace(expr(value)?).is_some(),
            "prefix" => {
                prefix.push(parse_prefix(line, value)?);
                false
            }
            _ => {
                return Err(FormulaFileError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        };
        if slot_taken {
            return Err(FormulaFileError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }

    let name = name.ok_or(FormulaFileError::MissingKey("name"))?;
    let b0 = b0.ok_or(FormulaFileError::MissingKey("b0"))?;
    let a = a.ok_or(FormulaFileError::MissingKey("a"))?;
    let b = b.ok_or(FormulaFileError::MissingKey("b"))?;
    Ok(FormulaSpec::new(name, b0, prefix, a, b)?)
}

pub fn load_formula_file(path: &Path) -> Result<FormulaSpec, FormulaFileError> {
    let text = fs::read_to_string(path).map_err(|source| FormulaFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_formula_file(&text)
}

pub fn render_formula_file(spec: &FormulaSpec) -> String {
    let mut out = format!("name = \"{}\"\nb0 = \"{}\"\n", spec.name, spec.b0);
    for (a, b) in &spec.prefix {
        out.push_str(&format!("prefix = \"{a}, {b}\"\n"));
    }
    out.push_str(&format!("a = \"{}\"\nb = \"{}\"\n", spec.a_tail, spec.b_tail));
    out
}
