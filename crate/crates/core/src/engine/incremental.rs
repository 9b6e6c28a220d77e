//! Online evaluation over a sliding window of instants.
//!
//! Instants `base..base + columns.len()` are held in memory. Everything
//! before `focus` is resolved; `focus` is the earliest instant with an
//! unresolved output. Cells are resolved on demand and partially evaluated
//! expressions are stored back, so work survives until the next event.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use super::compile::{compile, Node};
use super::{check_event, event_from_map, EngineError, OutputRow, Stats};
use crate::analysis::{analyze, fmt_edges, AnalysisResult};
use crate::ast::{Expr, TypedSpec};
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Use simplifiers to resolve applications before all arguments are known.
    pub simplify: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { simplify: true }
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Unevaluated,
    Pending(Node),
    Resolved(Value),
    /// Being evaluated further up the call stack.
    Busy,
}

enum Eval {
    Value(Value),
    Blocked(Node),
}

/// Result of [`Engine::evaluate_at`].
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Resolved(Value),
    /// Cells `(stream, instant)` whose values are still needed.
    Blocked(BTreeSet<(String, u64)>),
}

pub struct Engine {
    spec: TypedSpec,
    analysis: AnalysisResult,
    names: Vec<Arc<str>>,
    index: HashMap<String, usize>,
    is_input: Vec<bool>,
    outputs: Vec<usize>,
    order: Vec<usize>,
    bodies: Arc<[Option<Node>]>,
    window: u64,
    simplify: bool,
    columns: VecDeque<Vec<Cell>>,
    spare: Vec<Vec<Cell>>,
    base: u64,
    focus: u64,
    trace_len: Option<u64>,
    stats: Stats,
    poisoned: Option<EngineError>,
}

impl Engine {
    /// Analyzes `spec` and prepares an engine at instant 0.
    pub fn new(spec: TypedSpec, options: EngineOptions) -> Result<Engine, EngineError> {
        let analysis = analyze(&spec)?;
        Engine::with_analysis(spec, analysis, options)
    }

    pub fn with_analysis(
        spec: TypedSpec,
        analysis: AnalysisResult,
        options: EngineOptions,
    ) -> Result<Engine, EngineError> {
        if let Some(cycle) = &analysis.positive_cycle {
            return Err(EngineError::NotEfficientlyMonitorable {
                cycle: fmt_edges(cycle),
            });
        }
        let names: Vec<Arc<str>> = spec.decls().iter().map(|d| Arc::from(d.name())).collect();
        let index: HashMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect();
        let bodies = spec
            .decls()
            .iter()
            .map(|d| d.body().map(|b| compile(b, &index)).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        let order = analysis
            .zero_order
            .iter()
            .map(|n| index[n])
            .filter(|&i| bodies[i].is_some())
            .collect();
        Ok(Engine {
            is_input: spec.decls().iter().map(|d| d.is_input()).collect(),
            outputs: (0..names.len()).filter(|&i| bodies[i].is_some()).collect(),
            order,
            bodies: bodies.into(),
            window: analysis.window(),
            simplify: options.simplify,
            columns: VecDeque::new(),
            spare: Vec::new(),
            base: 0,
            focus: 0,
            trace_len: None,
            stats: Stats::default(),
            poisoned: None,
            names,
            index,
            analysis,
            spec,
        })
    }

    pub fn spec(&self) -> &TypedSpec {
        &self.spec
    }

    pub fn analysis(&self) -> &AnalysisResult {
        &self.analysis
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn focus(&self) -> u64 {
        self.focus
    }

    pub fn is_finished(&self) -> bool {
        self.trace_len.is_some()
    }

    /// Number of declared streams, inputs included.
    pub fn stream_count(&self) -> usize {
        self.names.len()
    }

    /// Instants currently held in memory.
    pub fn retained(&self) -> u64 {
        self.columns.len() as u64
    }

    fn materialized(&self) -> u64 {
        self.base + self.columns.len() as u64
    }

    fn live(&self) -> Result<(), EngineError> {
        match &self.poisoned {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    fn guard<T>(&mut self, r: Result<T, EngineError>) -> Result<T, EngineError> {
        if let Err(e) = &r {
            self.poisoned = Some(e.clone());
        }
        r
    }

    /// Adds the next instant's inputs by name and returns every row that
    /// became resolved.
    pub fn push_event(
        &mut self,
        event: HashMap<String, Value>,
    ) -> Result<Vec<OutputRow>, EngineError> {
        let values = event_from_map(&self.spec, event)?;
        self.push_values(values)
    }

    /// Like [`Engine::push_event`] with inputs in declaration order.
    pub fn push_values(&mut self, values: Vec<Value>) -> Result<Vec<OutputRow>, EngineError> {
        self.live()?;
        if self.trace_len.is_some() {
            return Err(EngineError::EventAfterFinish);
        }
        check_event(&self.spec, &values)?;
        let mut column = self
            .spare
            .pop()
            .unwrap_or_else(|| Vec::with_capacity(self.names.len()));
        let mut values = values.into_iter();
        for &input in &self.is_input {
            column.push(if input {
                Cell::Resolved(values.next().expect("checked arity"))
            } else {
                Cell::Unevaluated
            });
        }
        self.columns.push_back(column);
        self.stats.events += 1;
        self.stats.max_retained = self.stats.max_retained.max(self.columns.len() as u64);
        self.stats.max_lookahead = self
            .stats
            .max_lookahead
            .max(self.materialized() - self.focus - 1);
        let rows = self.drain();
        self.guard(rows)
    }

    /// Marks the end of the trace and resolves all remaining instants.
    pub fn finish(&mut self) -> Result<Vec<OutputRow>, EngineError> {
        self.live()?;
        if self.trace_len.is_some() {
            return Err(EngineError::DoubleFinish);
        }
        self.trace_len = Some(self.materialized());
        let rows = self.drain().and_then(|rows| {
            if self.focus == self.materialized() {
                Ok(rows)
            } else {
                Err(EngineError::Internal(format!(
                    "instant {} did not resolve at end of trace",
                    self.focus
                )))
            }
        });
        self.guard(rows)
    }

    fn drain(&mut self) -> Result<Vec<OutputRow>, EngineError> {
        let mut rows = Vec::new();
        while let Some(row) = self.step()? {
            rows.push(row);
        }
        Ok(rows)
    }

    /// Tries to resolve every output at the focus; on success emits its row
    /// and advances.
    pub fn step_focus(&mut self) -> Result<Option<OutputRow>, EngineError> {
        self.live()?;
        let r = self.step();
        self.guard(r)
    }

    fn step(&mut self) -> Result<Option<OutputRow>, EngineError> {
        if self.focus >= self.materialized() {
            return Ok(None);
        }
        let t = self.focus;
        let mut done = true;
        for k in 0..self.order.len() {
            done &= self.resolve(self.order[k], t)?.is_some();
        }
        if !done {
            return Ok(None);
        }
        let column = &self.columns[(t - self.base) as usize];
        let values = self
            .outputs
            .iter()
            .map(|&s| match &column[s] {
                Cell::Resolved(v) => (self.names[s].clone(), v.clone()),
                _ => unreachable!("all outputs resolved"),
            })
            .collect();
        self.focus += 1;
        self.stats.rows += 1;
        while self.focus - self.base > self.window {
            let mut old = self.columns.pop_front().expect("window is non-empty");
            self.base += 1;
            old.clear();
            self.spare.push(old);
        }
        Ok(Some(OutputRow { instant: t, values }))
    }

    /// Evaluates a type-checked expression at instant `j` against the
    /// current state, resolving cells it needs where possible.
    pub fn evaluate_at(&mut self, e: &Expr, j: u64) -> Result<Evaluation, EngineError> {
        self.live()?;
        let node = compile(e, &self.index)?;
        match self.eval(&node, None, j)? {
            Eval::Value(v) => Ok(Evaluation::Resolved(v)),
            Eval::Blocked(residual) => {
                let mut demands = BTreeSet::new();
                self.demands(&residual, j, &mut demands);
                Ok(Evaluation::Blocked(demands))
            }
        }
    }

    fn demands(&self, node: &Node, j: u64, out: &mut BTreeSet<(String, u64)>) {
        match node {
            Node::Leaf(_) => {}
            Node::App { args, .. } => args.iter().for_each(|a| self.demands(a, j, out)),
            Node::At { stream, offset, .. } => {
                out.insert((
                    self.names[*stream].to_string(),
                    (i128::from(j) + i128::from(*offset)) as u64,
                ));
            }
        }
    }

    /// The value of `(s, t)`, or `None` if it cannot be resolved yet.
    fn resolve(&mut self, s: usize, t: u64) -> Result<Option<Value>, EngineError> {
        let idx = (t - self.base) as usize;
        match &self.columns[idx][s] {
            Cell::Resolved(v) => return Ok(Some(v.clone())),
            Cell::Busy => {
                return Err(EngineError::Cyclic {
                    stream: self.names[s].to_string(),
                    instant: t,
                })
            }
            _ => {}
        }
        let state = std::mem::replace(&mut self.columns[idx][s], Cell::Busy);
        let bodies = Arc::clone(&self.bodies);
        let pending;
        let node = match state {
            Cell::Pending(n) => {
                pending = n;
                &pending
            }
            _ => bodies[s].as_ref().ok_or_else(|| {
                EngineError::Internal(format!("input `{}` has no value", self.names[s]))
            })?,
        };
        let r = self.eval(node, Some(s), t)?;
        // Eviction only happens in `step`, so `idx` is still valid.
        let cell = &mut self.columns[idx][s];
        debug_assert!(
            matches!(cell, Cell::Busy),
            "cell overwritten during its own evaluation"
        );
        Ok(match r {
            Eval::Value(v) => {
                *cell = Cell::Resolved(v.clone());
                Some(v)
            }
            Eval::Blocked(residual) => {
                *cell = Cell::Pending(residual);
                None
            }
        })
    }

    fn eval(&mut self, node: &Node, s: Option<usize>, j: u64) -> Result<Eval, EngineError> {
        match node {
            Node::Leaf(v) => Ok(Eval::Value(v.clone())),
            Node::At {
                stream,
                offset,
                default,
            } => {
                let t = i128::from(j) + i128::from(*offset);
                if t < 0 || self.trace_len.is_some_and(|n| t >= i128::from(n)) {
                    return match default {
                        Some(d) => self.eval(d, s, j),
                        None => Err(EngineError::Internal(format!(
                            "instant {t} is outside the trace"
                        ))),
                    };
                }
                if t >= i128::from(self.materialized()) {
                    return Ok(Eval::Blocked(node.clone()));
                }
                let t = t as u64;
                if t < self.base {
                    return Err(EngineError::WindowViolation {
                        stream: self.names[*stream].to_string(),
                        instant: t,
                    });
                }
                Ok(match self.resolve(*stream, t)? {
                    Some(v) => Eval::Value(v),
                    None => Eval::Blocked(node.clone()),
                })
            }
            Node::App { f, args } => {
                let mut results = Vec::with_capacity(args.len());
                let mut blocked = false;
                for a in args {
                    let r = self.eval(a, s, j)?;
                    blocked |= matches!(r, Eval::Blocked(_));
                    results.push(r);
                }
                let context = |source| EngineError::Eval {
                    stream: s
                        .map_or_else(|| "<expression>".to_owned(), |s| self.names[s].to_string()),
                    instant: j,
                    source,
                };
                if !blocked {
                    let values: Vec<Value> = results
                        .into_iter()
                        .map(|r| match r {
                            Eval::Value(v) => v,
                            Eval::Blocked(_) => unreachable!(),
                        })
                        .collect();
                    return f.apply_total(&values).map(Eval::Value).map_err(context);
                }
                if self.simplify && f.has_simplifier() {
                    let partial: Vec<Option<Value>> = results
                        .iter()
                        .map(|r| match r {
                            Eval::Value(v) => Some(v.clone()),
                            Eval::Blocked(_) => None,
                        })
                        .collect();
                    if let Some(v) = f.apply_partial(&partial).map_err(context)? {
                        return Ok(Eval::Value(v));
                    }
                }
                let args = results
                    .into_iter()
                    .map(|r| match r {
                        Eval::Value(v) => Node::Leaf(v),
                        Eval::Blocked(n) => n,
                    })
                    .collect();
                Ok(Eval::Blocked(Node::App { f: f.clone(), args }))
            }
        }
    }

    /// Declared type of each output, in row order.
    pub fn output_types(&self) -> Vec<(Arc<str>, ValueType)> {
        self.outputs
            .iter()
            .map(|&s| (self.names[s].clone(), self.spec.decls()[s].ty().clone()))
            .collect()
    }
}
