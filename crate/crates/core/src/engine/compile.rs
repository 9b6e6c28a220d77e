use std::collections::HashMap;
use std::sync::Arc;

use super::EngineError;
use crate::ast::{Callee, Expr};
use crate::value::{FunctionSymbol, Value};

/// An expression with streams resolved to indices.
#[derive(Debug, Clone)]
pub(crate) enum Node {
    Leaf(Value),
    App {
        f: Arc<FunctionSymbol>,
        args: Vec<Node>,
    },
    /// `default` is `None` for a plain current-instant read.
    At {
        stream: usize,
        offset: i64,
        default: Option<Box<Node>>,
    },
}

pub(crate) fn compile(e: &Expr, index: &HashMap<String, usize>) -> Result<Node, EngineError> {
    let stream = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| EngineError::Internal(format!("unknown stream `{s}`")))
    };
    Ok(match e {
        Expr::Leaf(v) => Node::Leaf(v.clone()),
        Expr::Now(s) => Node::At {
            stream: stream(s)?,
            offset: 0,
            default: None,
        },
        Expr::At {
            stream: s,
            offset,
            default,
        } => Node::At {
            stream: stream(s)?,
            offset: *offset,
            default: Some(Box::new(compile(default, index)?)),
        },
        Expr::App {
            callee: Callee::Bound(f),
            args,
        } => Node::App {
            f: f.clone(),
            args: args
                .iter()
                .map(|a| compile(a, index))
                .collect::<Result<_, _>>()?,
        },
        Expr::App {
            callee: Callee::Named(n),
            ..
        } => {
            return Err(EngineError::Internal(format!(
                "application of `{n}` was not type checked"
            )))
        }
    })
}
