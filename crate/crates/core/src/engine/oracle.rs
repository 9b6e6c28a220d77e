//! Reference evaluator: whole-trace, strict, memoized evaluation of the stream
//! equations. Shares no evaluation code with the incremental engine.

use std::collections::{HashMap, HashSet};

use super::{check_event, EngineError, OutputRow};
use crate::ast::{Callee, Expr, TypedSpec};
use crate::value::Value;

/// Computes every output at every instant of `trace` (positional events).
pub fn oracle_evaluate(
    spec: &TypedSpec,
    trace: &[Vec<Value>],
) -> Result<Vec<OutputRow>, EngineError> {
    oracle_evaluate_in_order(spec, trace, std::iter::empty())
}

/// Like [`oracle_evaluate`], first demanding the cells in `first` in the
/// given order; the result must not depend on it.
pub fn oracle_evaluate_in_order(
    spec: &TypedSpec,
    trace: &[Vec<Value>],
    first: impl IntoIterator<Item = (String, u64)>,
) -> Result<Vec<OutputRow>, EngineError> {
    for event in trace {
        check_event(spec, event)?;
    }
    let mut o = Oracle::new(spec, trace);
    for (name, j) in first {
        let s = *o
            .index
            .get(name.as_str())
            .ok_or_else(|| EngineError::Internal(format!("unknown stream `{name}`")))?;
        if j < o.len {
            o.demand(s, j)?;
        }
    }
    let outputs: Vec<usize> = (0..o.bodies.len())
        .filter(|&s| o.bodies[s].is_some())
        .collect();
    let mut rows = Vec::with_capacity(trace.len());
    for j in 0..o.len {
        let mut values = Vec::with_capacity(outputs.len());
        for &s in &outputs {
            o.demand(s, j)?;
            values.push((
                o.spec.decls()[s].name().into(),
                o.memo[s][j as usize].clone().expect("demanded"),
            ));
        }
        rows.push(OutputRow { instant: j, values });
    }
    Ok(rows)
}

struct Oracle<'a> {
    spec: &'a TypedSpec,
    index: HashMap<&'a str, usize>,
    bodies: Vec<Option<&'a Expr>>,
    len: u64,
    memo: Vec<Vec<Option<Value>>>,
}

impl<'a> Oracle<'a> {
    fn new(spec: &'a TypedSpec, trace: &[Vec<Value>]) -> Self {
        let decls = spec.decls();
        let mut memo = vec![vec![None; trace.len()]; decls.len()];
        let mut k = 0;
        for (s, d) in decls.iter().enumerate() {
            if d.is_input() {
                for (j, event) in trace.iter().enumerate() {
                    memo[s][j] = Some(event[k].clone());
                }
                k += 1;
            }
        }
        Oracle {
            spec,
            index: decls
                .iter()
                .enumerate()
                .map(|(i, d)| (d.name(), i))
                .collect(),
            bodies: decls.iter().map(|d| d.body()).collect(),
            len: trace.len() as u64,
            memo,
        }
    }

    fn in_range(&self, j: u64, offset: i64) -> Option<u64> {
        let t = i128::from(j) + i128::from(offset);
        (0..i128::from(self.len)).contains(&t).then_some(t as u64)
    }

    /// The first cell the strict evaluation of `e` at `j` needs but which
    /// is not computed yet.
    fn missing(&self, e: &Expr, j: u64) -> Option<(usize, u64)> {
        match e {
            Expr::Leaf(_) => None,
            Expr::Now(s) => {
                let s = self.index[s.as_str()];
                self.memo[s][j as usize].is_none().then_some((s, j))
            }
            Expr::At {
                stream,
                offset,
                default,
            } => match self.in_range(j, *offset) {
                Some(t) => {
                    let s = self.index[stream.as_str()];
                    self.memo[s][t as usize].is_none().then_some((s, t))
                }
                None => self.missing(default, j),
            },
            Expr::App { args, .. } => args.iter().find_map(|a| self.missing(a, j)),
        }
    }

    /// Depth-first over cells with an explicit stack: each entry waits on the
    /// one above it, so meeting an entry again means a real cycle.
    fn demand(&mut self, s: usize, j: u64) -> Result<(), EngineError> {
        if self.memo[s][j as usize].is_some() {
            return Ok(());
        }
        let mut stack = vec![(s, j)];
        let mut on_stack = HashSet::from([(s, j)]);
        while let Some(&(s, j)) = stack.last() {
            let body = self.bodies[s].expect("inputs are prefilled");
            match self.missing(body, j) {
                Some(cell) => {
                    if !on_stack.insert(cell) {
                        let name = self.spec.decls()[cell.0].name().to_owned();
                        return Err(EngineError::Cyclic {
                            stream: name,
                            instant: cell.1,
                        });
                    }
                    stack.push(cell);
                }
                None => {
                    let v = self.eval(body, s, j)?;
                    self.memo[s][j as usize] = Some(v);
                    on_stack.remove(&(s, j));
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Evaluates `e` at `j`; every cell it reads is already computed.
    fn eval(&self, e: &Expr, s: usize, j: u64) -> Result<Value, EngineError> {
        match e {
            Expr::Leaf(v) => Ok(v.clone()),
            Expr::Now(t) => Ok(self.memo[self.index[t.as_str()]][j as usize]
                .clone()
                .expect("computed")),
            Expr::At {
                stream,
                offset,
                default,
            } => match self.in_range(j, *offset) {
                Some(t) => Ok(self.memo[self.index[stream.as_str()]][t as usize]
                    .clone()
                    .expect("computed")),
                None => self.eval(default, s, j),
            },
            Expr::App {
                callee: Callee::Bound(f),
                args,
            } => {
                let args = args
                    .iter()
                    .map(|a| self.eval(a, s, j))
                    .collect::<Result<Vec<_>, _>>()?;
                f.apply_total(&args).map_err(|source| EngineError::Eval {
                    stream: self.spec.decls()[s].name().to_owned(),
                    instant: j,
                    source,
                })
            }
            Expr::App {
                callee: Callee::Named(n),
                ..
            } => Err(EngineError::Internal(format!(
                "application of `{n}` was not type checked"
            ))),
        }
    }
}
