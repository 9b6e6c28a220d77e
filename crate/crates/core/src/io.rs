//! JSON lines: one event object per input line, one row object per output
//! line.

use std::collections::HashMap;

use serde_json::{Map, Number, Value as Json};
use thiserror::Error;

use crate::ast::Specification;
use crate::engine::{event_from_map, OutputRow};
use crate::value::{EnumValue, Value, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct EventError {
    pub line: usize,
    pub message: String,
}

/// Parses one event line into positional input values. Returns `Ok(None)`
/// for blank lines.
pub fn read_event_line(
    line: &str,
    line_no: usize,
    spec: &Specification,
) -> Result<Option<Vec<Value>>, EventError> {
    let err = |message: String| EventError {
        line: line_no,
        message,
    };
    if line.trim().is_empty() {
        return Ok(None);
    }
    let json: Json = serde_json::from_str(line).map_err(|e| err(format!("invalid JSON: {e}")))?;
    let Json::Object(obj) = json else {
        return Err(err("event must be a JSON object".to_owned()));
    };
    let mut event = HashMap::with_capacity(obj.len());
    for (name, v) in obj {
        let Some(decl) = spec.decl(&name).filter(|d| d.is_input()) else {
            return Err(err(format!("unknown input `{name}`")));
        };
        let value = from_json(&v, decl.ty()).map_err(|m| err(format!("input `{name}`: {m}")))?;
        event.insert(name, value);
    }
    event_from_map(spec, event)
        .map(Some)
        .map_err(|e| err(e.to_string()))
}

fn from_json(v: &Json, ty: &ValueType) -> Result<Value, String> {
    let bad = || format!("expected {ty}, got {v}");
    match (ty, v) {
        (ValueType::Bool, Json::Bool(b)) => Ok(Value::Bool(*b)),
        (ValueType::Int, Json::Number(n)) => n.as_i64().map(Value::Int).ok_or_else(bad),
        (ValueType::Float, Json::Number(n)) => n.as_f64().map(Value::Float).ok_or_else(bad),
        (ValueType::Text, Json::String(s)) => Ok(Value::text(s)),
        (ValueType::Enum(e), Json::String(s)) => EnumValue::new(e.clone(), s)
            .map(Value::Enum)
            .ok_or_else(|| format!("`{s}` is not a variant of {}", e.name())),
        _ => Err(bad()),
    }
}

/// Non-finite floats have no JSON form and are written as `null`.
pub fn to_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(i) => Json::from(*i),
        Value::Float(d) => Number::from_f64(*d).map_or(Json::Null, Json::Number),
        Value::Text(s) => Json::String(s.to_string()),
        Value::Enum(e) => Json::String(e.variant().to_owned()),
    }
}

/// `{"instant": j, <output>: value, ...}` in declaration order.
pub fn row_to_json(row: &OutputRow) -> Json {
    let mut m = Map::with_capacity(row.values.len() + 1);
    m.insert("instant".to_owned(), Json::from(row.instant));
    for (name, v) in &row.values {
        m.insert(name.to_string(), to_json(v));
    }
    Json::Object(m)
}

pub fn write_row(out: &mut (impl std::io::Write + ?Sized), row: &OutputRow) -> std::io::Result<()> {
    writeln!(out, "{}", row_to_json(row))
}
