//! Trace evaluation: the incremental bounded-memory engine and the reference
//! evaluator it is tested against.

mod compile;
mod incremental;
mod oracle;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::ZeroCycle;
use crate::ast::Specification;
use crate::value::{EvalError, Value, ValueType};

pub use incremental::{Engine, EngineOptions, Evaluation};
pub use oracle::{oracle_evaluate, oracle_evaluate_in_order};

/// Values of all outputs at one instant, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRow {
    pub instant: u64,
    pub values: Vec<(Arc<str>, Value)>,
}

impl OutputRow {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }
}

/// Counters over one run; all are monotone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub events: u64,
    pub rows: u64,
    /// Most instants held at once: past window, focus and lookahead.
    pub max_retained: u64,
    /// Most instants read beyond the focus before it resolved.
    pub max_lookahead: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("specification is not efficiently monitorable: positive cycle {cycle}")]
    NotEfficientlyMonitorable { cycle: String },
    #[error(transparent)]
    ZeroCycle(#[from] ZeroCycle),
    #[error("event is missing input `{0}`")]
    MissingInput(String),
    #[error("event has unknown input `{0}`")]
    UnknownInput(String),
    #[error("event has {found} values but {expected} inputs are declared")]
    Arity { expected: usize, found: usize },
    #[error("input `{name}` expects {expected}, got {found}")]
    TypeMismatch {
        name: String,
        expected: ValueType,
        found: ValueType,
    },
    #[error("event pushed after the end of the trace")]
    EventAfterFinish,
    #[error("end of trace signalled twice")]
    DoubleFinish,
    #[error("instant {instant} of `{stream}` is no longer retained")]
    WindowViolation { stream: String, instant: u64 },
    #[error("evaluating `{stream}` at instant {instant}: {source}")]
    Eval {
        stream: String,
        instant: u64,
        source: EvalError,
    },
    #[error("`{stream}` at instant {instant} depends on itself")]
    Cyclic { stream: String, instant: u64 },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Checks one positional event (inputs in declaration order).
pub(crate) fn check_event(spec: &Specification, values: &[Value]) -> Result<(), EngineError> {
    let inputs: Vec<_> = spec.inputs().collect();
    if values.len() < inputs.len() {
        return Err(EngineError::MissingInput(
            inputs[values.len()].name().to_owned(),
        ));
    }
    if values.len() > inputs.len() {
        return Err(EngineError::Arity {
            expected: inputs.len(),
            found: values.len(),
        });
    }
    for (d, v) in inputs.iter().zip(values) {
        if !v.has_type(d.ty()) {
            return Err(EngineError::TypeMismatch {
                name: d.name().to_owned(),
                expected: d.ty().clone(),
                found: v.type_of(),
            });
        }
    }
    Ok(())
}

/// Orders a named event positionally.
pub fn event_from_map(
    spec: &Specification,
    mut event: HashMap<String, Value>,
) -> Result<Vec<Value>, EngineError> {
    let mut values = Vec::with_capacity(event.len());
    for d in spec.inputs() {
        match event.remove(d.name()) {
            Some(v) => values.push(v),
            None => return Err(EngineError::MissingInput(d.name().to_owned())),
        }
    }
    if let Some(extra) = event.into_keys().min() {
        return Err(EngineError::UnknownInput(extra));
    }
    check_event(spec, &values)?;
    Ok(values)
}
