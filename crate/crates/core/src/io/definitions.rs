//! Merit-function and variable definition files.
//!
//! Merit rows read `KIND target weight [mode] [field]`, for example
//! `SPOT-RMS 0 10 less-than 2` (field indices are 0-based). Variable rows
//! read `CURV i [min max]`, `THICK i [min max]` or `GLASS i`. Blank lines
//! and `#` comments are ignored in both.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::numfmt::sig17;
use crate::optimizer::{Mode, Operand, OperandKind, Variable, VariableSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DefinitionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

fn err(line: usize, message: impl Into<String>) -> DefinitionError {
    DefinitionError::Parse {
        line,
        message: message.into(),
    }
}

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn number(line: usize, token: &str) -> Result<f64, DefinitionError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("`{token}` is not a finite number")))
}

fn index(line: usize, token: &str) -> Result<usize, DefinitionError> {
    token
        .parse::<usize>()
        .map_err(|_| err(line, format!("`{token}` is not a non-negative integer")))
}

fn read(path: &Path) -> Result<String, DefinitionError> {
    std::fs::read_to_string(path)
        .map_err(|e| DefinitionError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_merit(text: &str) -> Result<Vec<Operand>, DefinitionError> {
    rows(text)
        .map(|(line, tokens)| {
            if !(3..=5).contains(&tokens.len()) {
                return Err(err(line, "expected `KIND target weight [mode] [field]`"));
            }
            let target = number(line, tokens[1])?;
            let weight = number(line, tokens[2])?;
            let mut mode = Mode::Equals;
            let mut field = None;
            for t in &tokens[3..] {
                if let Ok(m) = t.parse::<Mode>() {
                    mode = m;
                } else if field.is_none() {
                    field = Some(index(line, t)?);
                } else {
                    return Err(err(line, format!("unexpected `{t}`")));
                }
            }
            let keyword = tokens[0].to_ascii_uppercase();
            let needs_field = |f: Option<usize>| {
                f.ok_or_else(|| err(line, format!("{keyword} needs a field index")))
            };
            let kind = match keyword.as_str() {
                "EFFL" => OperandKind::Effl,
                "TOTR" => OperandKind::Totr,
                "DIST-MAX" => OperandKind::DistMax,
                "SPOT-RMS" => OperandKind::SpotRms(needs_field(field)?),
                "OPD-RMS" => OperandKind::OpdRms(needs_field(field)?),
                other => return Err(err(line, format!("unknown operand `{other}`"))),
            };
            if kind.field().is_none() && field.is_some() {
                return Err(err(line, format!("{keyword} takes no field index")));
            }
            if weight < 0.0 {
                return Err(err(line, "weights must be non-negative"));
            }
            Ok(Operand {
                kind,
                target,
                weight,
                mode,
            })
        })
        .collect()
}

pub fn read_merit(path: impl AsRef<Path>) -> Result<Vec<Operand>, DefinitionError> {
    parse_merit(&read(path.as_ref())?)
}

pub fn merit_to_text(operands: &[Operand]) -> String {
    let mut out = String::new();
    for o in operands {
        let _ = write!(
            out,
            "{} {} {} {}",
            o.kind.keyword(),
            sig17(o.target),
            sig17(o.weight),
            o.mode.keyword()
        );
        if let Some(f) = o.kind.field() {
            let _ = write!(out, " {f}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_variables(text: &str) -> Result<VariableSet, DefinitionError> {
    let entries = rows(text)
        .map(|(line, tokens)| {
            let keyword = tokens[0].to_ascii_uppercase();
            let surface = index(
                line,
                tokens
                    .get(1)
                    .ok_or_else(|| err(line, "missing surface index"))?,
            )?;
            let bounds = match tokens.len() {
                2 => None,
                4 if keyword != "GLASS" => {
                    Some((number(line, tokens[2])?, number(line, tokens[3])?))
                }
                _ => return Err(err(line, format!("wrong number of fields for {keyword}"))),
            };
            match keyword.as_str() {
                "CURV" => Ok(Variable::Curvature { surface, bounds }),
                "THICK" => Ok(Variable::Thickness { surface, bounds }),
                "GLASS" => Ok(Variable::Material { surface }),
                other => Err(err(line, format!("unknown variable `{other}`"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VariableSet::new(entries))
}

pub fn read_variables(path: impl AsRef<Path>) -> Result<VariableSet, DefinitionError> {
    parse_variables(&read(path.as_ref())?)
}

pub fn variables_to_text(set: &VariableSet) -> String {
    let mut out = String::new();
    for v in &set.entries {
        let (keyword, surface, bounds) = match *v {
            Variable::Curvature { surface, bounds } => ("CURV", surface, bounds),
            Variable::Thickness { surface, bounds } => ("THICK", surface, bounds),
            Variable::Material { surface } => ("GLASS", surface, None),
        };
        let _ = write!(out, "{keyword} {surface}");
        if let Some((lo, hi)) = bounds {
            let _ = write!(out, " {} {}", sig17(lo), sig17(hi));
        }
        out.push('\n');
    }
    out
}
