//! Reading point sets, inequality systems and groups from JSON or plain
//! whitespace-separated text.
//!
//! Accepted JSON shapes:
//!
//! - points: `[[x, y], ...]` or `{"points": [[x, y], ...]}`
//! - halfspaces: `[{"normal": [..], "offset": b}, ...]`,
//!   `{"halfspaces": [...]}`, or rows `[a₁, …, aₙ, b]`
//! - groups: `[{"matrix": [[..]], "offset": [..]}, ...]` or
//!   `{"builtin": "signed-permutations", "dim": 3}`
//!
//! Text input has one row per line; blank lines and lines starting with `#`
//! are skipped. Halfspace rows end with the offset.

use nalgebra::DVector;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{check_dim, Error, Result};
use crate::polytope::Halfspace;
use crate::symmetry::FiniteGroup;

fn parse_error(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn looks_like_json(text: &str) -> bool {
    matches!(text.trim_start().chars().next(), Some('[' | '{'))
}

fn text_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn rectangular(rows: &[Vec<f64>]) -> Result<usize> {
    let width = rows.first().ok_or(Error::EmptyBody)?.len();
    if width == 0 {
        return Err(Error::InvalidDimension(0));
    }
    for r in rows {
        check_dim(width, r.len())?;
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite number".into()));
    }
    Ok(width)
}

fn rows_from_value(v: Value) -> Result<Vec<Vec<f64>>> {
    serde_json::from_value(v).map_err(parse_error)
}

pub fn parse_points(text: &str) -> Result<Vec<DVector<f64>>> {
    let rows = if looks_like_json(text) {
        let v: Value = serde_json::from_str(text).map_err(parse_error)?;
        match v {
            Value::Object(mut m) => {
                rows_from_value(m.remove("points").ok_or_else(|| Error::Parse("missing \"points\"".into()))?)?
            }
            other => rows_from_value(other)?,
        }
    } else {
        text_rows(text)?
    };
    rectangular(&rows)?;
    Ok(rows.into_iter().map(DVector::from_vec).collect())
}

fn halfspaces_from_rows(rows: Vec<Vec<f64>>) -> Result<Vec<Halfspace>> {
    let width = rectangular(&rows)?;
    if width < 2 {
        return Err(Error::Parse("halfspace rows need a normal and an offset".into()));
    }
    Ok(rows
        .into_iter()
        .map(|mut r| {
            let b = r.pop().expect("width checked");
            Halfspace::new(DVector::from_vec(r), b)
        })
        .collect())
}

fn halfspaces_from_value(v: Value) -> Result<Vec<Halfspace>> {
    let list = match v {
        Value::Object(mut m) => m
            .remove("halfspaces")
            .or_else(|| m.remove("constraints"))
            .ok_or_else(|| Error::Parse("missing \"halfspaces\"".into()))?,
        other => other,
    };
    let is_rows = list.as_array().and_then(|a| a.first()).is_some_and(Value::is_array);
    let h = if is_rows {
        halfspaces_from_rows(rows_from_value(list)?)?
    } else {
        let h: Vec<Halfspace> = serde_json::from_value(list).map_err(parse_error)?;
        let n = h.first().ok_or(Error::EmptyBody)?.normal.len();
        for f in &h {
            check_dim(n, f.normal.len())?;
        }
        h
    };
    if h.iter().any(|f| f.normal.iter().all(|&x| x == 0.0)) {
        return Err(Error::InvalidDirection);
    }
    Ok(h)
}

pub fn parse_halfspaces(text: &str) -> Result<Vec<Halfspace>> {
    if looks_like_json(text) {
        halfspaces_from_value(serde_json::from_str(text).map_err(parse_error)?)
    } else {
        halfspaces_from_rows(text_rows(text)?)
    }
}

#[derive(Deserialize)]
struct BuiltinGroup {
    builtin: String,
    dim: usize,
}

pub fn parse_group(text: &str) -> Result<FiniteGroup> {
    let v: Value = serde_json::from_str(text).map_err(parse_error)?;
    if v.is_object() {
        let b: BuiltinGroup = serde_json::from_value(v).map_err(parse_error)?;
        return FiniteGroup::builtin(&b.builtin, b.dim);
    }
    match serde_json::from_value::<FiniteGroup>(v) {
        Ok(g) => Ok(g),
        // Group axioms fail inside serde; keep the error kind.
        Err(e) if e.to_string().contains("not a group") => Err(Error::NotAGroup(e.to_string())),
        Err(e) if e.to_string().contains("dimension mismatch") => Err(Error::Parse(e.to_string())),
        Err(e) => Err(parse_error(e)),
    }
}
