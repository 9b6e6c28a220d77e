//! Expression trees, stream declarations and type elaboration.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use thiserror::Error;

use crate::value::{join_types, EnumType, FunctionRegistry, FunctionSymbol, Value, ValueType};

/// The function position of an application: a bare name before elaboration,
/// a concrete symbol afterwards.
#[derive(Debug, Clone)]
pub enum Callee {
    Named(String),
    Bound(Arc<FunctionSymbol>),
}

impl Callee {
    pub fn name(&self) -> &str {
        match self {
            Callee::Named(n) => n,
            Callee::Bound(f) => f.name(),
        }
    }
}

impl PartialEq for Callee {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Callee::Named(a), Callee::Named(b)) => a == b,
            (Callee::Bound(a), Callee::Bound(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Leaf(Value),
    App {
        callee: Callee,
        args: Vec<Expr>,
    },
    /// Current value of a stream.
    Now(String),
    /// `stream[offset, default]`; the default is evaluated at the referencing
    /// instant whenever the access falls outside the trace.
    At {
        stream: String,
        offset: i64,
        default: Box<Expr>,
    },
}

impl Expr {
    pub fn app(name: &str, args: Vec<Expr>) -> Expr {
        Expr::App {
            callee: Callee::Named(name.to_owned()),
            args,
        }
    }

    pub fn now(stream: &str) -> Expr {
        Expr::Now(stream.to_owned())
    }

    pub fn at(stream: &str, offset: i64, default: Expr) -> Expr {
        Expr::At {
            stream: stream.to_owned(),
            offset,
            default: Box::new(default),
        }
    }

    pub fn leaf(v: impl Into<Value>) -> Expr {
        Expr::Leaf(v.into())
    }
}

/// Every `(stream, offset)` access in `e`, defaults included (at their own
/// offsets relative to the evaluating instant).
pub fn free_streams(e: &Expr) -> BTreeSet<(String, i64)> {
    fn go(e: &Expr, out: &mut BTreeSet<(String, i64)>) {
        match e {
            Expr::Leaf(_) => {}
            Expr::App { args, .. } => args.iter().for_each(|a| go(a, out)),
            Expr::Now(s) => {
                out.insert((s.clone(), 0));
            }
            Expr::At {
                stream,
                offset,
                default,
            } => {
                out.insert((stream.clone(), *offset));
                go(default, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamDecl {
    Input {
        name: String,
        ty: ValueType,
    },
    Output {
        name: String,
        ty: ValueType,
        body: Expr,
    },
}

impl StreamDecl {
    pub fn name(&self) -> &str {
        match self {
            StreamDecl::Input { name, .. } | StreamDecl::Output { name, .. } => name,
        }
    }

    pub fn ty(&self) -> &ValueType {
        match self {
            StreamDecl::Input { ty, .. } | StreamDecl::Output { ty, .. } => ty,
        }
    }

    pub fn body(&self) -> Option<&Expr> {
        match self {
            StreamDecl::Input { .. } => None,
            StreamDecl::Output { body, .. } => Some(body),
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, StreamDecl::Input { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("stream `{0}` is declared more than once")]
    DuplicateStream(String),
    #[error("stream `{referrer}` refers to undeclared stream `{name}`")]
    UnknownStream { referrer: String, name: String },
}

/// A flat Lola specification: inputs and outputs in declaration order.
///
/// Names are unique and every referenced stream is declared.
#[derive(Debug, Clone)]
pub struct Specification {
    enums: Vec<Arc<EnumType>>,
    decls: Vec<StreamDecl>,
    registry: Arc<FunctionRegistry>,
}

impl Specification {
    pub fn new(
        enums: Vec<Arc<EnumType>>,
        decls: Vec<StreamDecl>,
        registry: Arc<FunctionRegistry>,
    ) -> Result<Self, SpecError> {
        let mut seen = HashSet::new();
        for d in &decls {
            if !seen.insert(d.name()) {
                return Err(SpecError::DuplicateStream(d.name().to_owned()));
            }
        }
        for d in &decls {
            if let Some(body) = d.body() {
                for (s, _) in free_streams(body) {
                    if !seen.contains(s.as_str()) {
                        return Err(SpecError::UnknownStream {
                            referrer: d.name().to_owned(),
                            name: s,
                        });
                    }
                }
            }
        }
        Ok(Specification {
            enums,
            decls,
            registry,
        })
    }

    pub fn enums(&self) -> &[Arc<EnumType>] {
        &self.enums
    }

    pub fn decls(&self) -> &[StreamDecl] {
        &self.decls
    }

    pub fn registry(&self) -> &Arc<FunctionRegistry> {
        &self.registry
    }

    pub fn decl(&self, name: &str) -> Option<&StreamDecl> {
        self.decls.iter().find(|d| d.name() == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &StreamDecl> {
        self.decls.iter().filter(|d| d.is_input())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &StreamDecl> {
        self.decls.iter().filter(|d| !d.is_input())
    }
}

/// Equality ignores the registry: two specs are equal when they declare the
/// same enums and streams.
impl PartialEq for Specification {
    fn eq(&self, other: &Self) -> bool {
        self.enums == other.enums && self.decls == other.decls
    }
}

/// A specification whose applications are all bound to concrete symbols and
/// whose output bodies have their declared types.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedSpec(Specification);

impl TypedSpec {
    pub fn spec(&self) -> &Specification {
        &self.0
    }

    pub fn into_inner(self) -> Specification {
        self.0
    }
}

impl Deref for TypedSpec {
    type Target = Specification;

    fn deref(&self) -> &Specification {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("in `{stream}` at {}: {message}", fmt_path(.path))]
pub struct TypeError {
    pub stream: String,
    /// Child indices from the output body to the offending node.
    pub path: Vec<usize>,
    pub expected: Option<ValueType>,
    pub found: Option<ValueType>,
    pub message: String,
}

fn fmt_path(path: &[usize]) -> String {
    if path.is_empty() {
        "body".to_owned()
    } else {
        format!(
            "body/{}",
            path.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("/")
        )
    }
}

struct Checker<'a> {
    types: HashMap<&'a str, &'a ValueType>,
    registry: &'a FunctionRegistry,
    stream: &'a str,
    errors: Vec<TypeError>,
}

impl Checker<'_> {
    fn error(
        &mut self,
        path: &[usize],
        expected: Option<ValueType>,
        found: Option<ValueType>,
        message: String,
    ) {
        self.errors.push(TypeError {
            stream: self.stream.to_owned(),
            path: path.to_vec(),
            expected,
            found,
            message,
        });
    }

    /// Elaborates `e`, returning its type, or `None` after recording an error.
    fn elaborate(&mut self, e: &Expr, path: &mut Vec<usize>) -> Option<(Expr, ValueType)> {
        match e {
            Expr::Leaf(v) => Some((e.clone(), v.type_of())),
            Expr::Now(s) => Some((e.clone(), (*self.types.get(s.as_str())?).clone())),
            Expr::At {
                stream,
                offset,
                default,
            } => {
                let ty = (*self.types.get(stream.as_str())?).clone();
                path.push(0);
                let elaborated = self.elaborate(default, path);
                let result = match elaborated {
                    Some((d, dty)) if dty == ty => Some((Expr::at(stream, *offset, d), ty)),
                    Some((_, dty)) => {
                        self.error(
                            path,
                            Some(ty.clone()),
                            Some(dty.clone()),
                            format!("default of `{stream}[{offset}, ..]` has type {dty}, stream has type {ty}"),
                        );
                        None
                    }
                    None => None,
                };
                path.pop();
                result
            }
            Expr::App { callee, args } => {
                let mut typed = Vec::with_capacity(args.len());
                let mut types = Vec::with_capacity(args.len());
                let mut ok = true;
                for (i, a) in args.iter().enumerate() {
                    path.push(i);
                    match self.elaborate(a, path) {
                        Some((a, t)) => {
                            typed.push(a);
                            types.push(t);
                        }
                        None => ok = false,
                    }
                    path.pop();
                }
                if !ok {
                    return None;
                }
                match self.registry.lookup(callee.name(), &types) {
                    Some(f) => {
                        let ty = f.result_type().clone();
                        Some((
                            Expr::App {
                                callee: Callee::Bound(f.clone()),
                                args: typed,
                            },
                            ty,
                        ))
                    }
                    None => {
                        let msg = if self.registry.contains_name(callee.name()) {
                            format!(
                                "no `{}` for argument types ({})",
                                callee.name(),
                                join_types(&types)
                            )
                        } else {
                            format!("unknown function `{}`", callee.name())
                        };
                        self.error(path, None, None, msg);
                        None
                    }
                }
            }
        }
    }
}

/// Resolves every application to a concrete symbol and checks output types.
pub fn type_check(spec: &Specification) -> Result<TypedSpec, Vec<TypeError>> {
    let mut checker = Checker {
        types: spec.decls.iter().map(|d| (d.name(), d.ty())).collect(),
        registry: &spec.registry,
        stream: "",
        errors: Vec::new(),
    };
    let mut decls = Vec::with_capacity(spec.decls.len());
    for d in &spec.decls {
        match d {
            StreamDecl::Input { .. } => decls.push(d.clone()),
            StreamDecl::Output { name, ty, body } => {
                checker.stream = name;
                match checker.elaborate(body, &mut Vec::new()) {
                    Some((body, found)) if found == *ty => decls.push(StreamDecl::Output {
                        name: name.clone(),
                        ty: ty.clone(),
                        body,
                    }),
                    Some((_, found)) => checker.error(
                        &[],
                        Some(ty.clone()),
                        Some(found.clone()),
                        format!("`{name}` is declared {ty} but its body has type {found}"),
                    ),
                    None => {}
                }
            }
        }
    }
    if checker.errors.is_empty() {
        Ok(TypedSpec(Specification {
            enums: spec.enums.clone(),
            decls,
            registry: spec.registry.clone(),
        }))
    } else {
        Err(checker.errors)
    }
}

/// A template argument as it appears in a mangled stream name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MangleParam {
    Int(i64),
    Stream(String),
    /// Pretty-printed value expression.
    Value(String),
}

impl fmt::Display for MangleParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MangleParam::Int(i) => write!(f, "{i}"),
            MangleParam::Stream(s) => f.write_str(s),
            MangleParam::Value(text) => {
                for c in text.chars() {
                    if matches!(c, '<' | '>' | '\\') {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// `historically` + `[p]` gives `historically<p>`.
pub fn mangle_name(base: &str, params: &[MangleParam]) -> String {
    debug_assert!(!base.is_empty());
    let mut out = base.to_owned();
    for p in params {
        out.push('<');
        out.push_str(&p.to_string());
        out.push('>');
    }
    out
}
