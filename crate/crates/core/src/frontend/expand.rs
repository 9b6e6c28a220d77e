//! Template expansion: surface syntax to a flat [`Specification`].

use std::collections::HashMap;
use std::sync::Arc;

use super::surface::*;
use super::{ExpandError, ExpandErrorKind as K, Span};
use crate::ast::{mangle_name, Expr, MangleParam, Specification, StreamDecl};
use crate::value::{
    builtin_registry, join_types, EnumType, EnumValue, FunctionRegistry, Value, ValueType,
};

/// Template expansions allowed per top-level output.
pub const DEFAULT_MAX_DEPTH: usize = 10_000;

// Deeply recursive templates nest one native frame group per expansion.
const EXPAND_STACK: usize = 512 << 20;

type EResult<T> = Result<T, Box<ExpandError>>;

pub fn expand(surface: &SurfaceSpec, max_depth: usize) -> Result<Specification, ExpandError> {
    expand_with_registry(surface, max_depth, builtin_registry())
}

/// Like [`expand`], starting from a caller-supplied function registry.
pub fn expand_with_registry(
    surface: &SurfaceSpec,
    max_depth: usize,
    registry: FunctionRegistry,
) -> Result<Specification, ExpandError> {
    std::thread::scope(|s| {
        let worker = std::thread::Builder::new()
            .name("lola-expand".into())
            .stack_size(EXPAND_STACK)
            .spawn_scoped(s, move || run(surface, max_depth, registry))
            .expect("failed to spawn expansion thread");
        match worker.join() {
            Ok(r) => r.map_err(|e| *e),
            Err(panic) => std::panic::resume_unwind(panic),
        }
    })
}

#[derive(Clone)]
enum Binding {
    Int(i64),
    Stream(String),
    Value(Expr),
}

type Env = HashMap<String, Binding>;

struct Frame {
    name: String,
    /// Offset at which the enclosing stream refers to this instance, if known.
    entry: Option<i64>,
}

struct Expander<'a> {
    registry: FunctionRegistry,
    enum_types: HashMap<String, Arc<EnumType>>,
    variants: HashMap<String, EnumValue>,
    templates: HashMap<&'a str, &'a Template>,
    stream_types: HashMap<String, ValueType>,
    /// Instance name to whether its body is complete.
    instances: HashMap<String, bool>,
    instance_decls: Vec<Option<StreamDecl>>,
    frames: Vec<Frame>,
    trail: Vec<String>,
    budget: usize,
    used: usize,
}

fn run(
    surface: &SurfaceSpec,
    max_depth: usize,
    registry: FunctionRegistry,
) -> EResult<Specification> {
    let mut x = Expander {
        registry,
        enum_types: HashMap::new(),
        variants: HashMap::new(),
        templates: HashMap::new(),
        stream_types: HashMap::new(),
        instances: HashMap::new(),
        instance_decls: Vec::new(),
        frames: Vec::new(),
        trail: Vec::new(),
        budget: max_depth,
        used: 0,
    };
    let mut enums = Vec::new();
    for e in surface.enums() {
        if x.enum_types.contains_key(&e.name) {
            return Err(x.err(
                e.span,
                K::Duplicate,
                format!("enum `{}` is declared more than once", e.name),
            ));
        }
        let ty = EnumType::new(e.name.clone(), e.variants.clone())
            .map_err(|err| x.err(e.span, K::Duplicate, err.to_string()))?;
        let ty = Arc::new(ty);
        x.registry
            .register_enum(&ty)
            .map_err(|err| x.err(e.span, K::Duplicate, err.to_string()))?;
        for v in &e.variants {
            if let Some(prev) = x.variants.get(v) {
                let msg = format!(
                    "variant `{v}` is declared by both `{}` and `{}`",
                    prev.ty().name(),
                    e.name
                );
                return Err(x.err(e.span, K::Duplicate, msg));
            }
            x.variants.insert(
                v.clone(),
                EnumValue::new(ty.clone(), v).expect("declared variant"),
            );
        }
        x.enum_types.insert(e.name.clone(), ty.clone());
        enums.push(ty);
    }

    for t in surface.templates() {
        if x.templates.contains_key(t.name.as_str()) {
            return Err(x.err(
                t.span,
                K::Duplicate,
                format!("template `{}` is defined more than once", t.name),
            ));
        }
        if x.registry.contains_name(&t.name) {
            return Err(x.err(
                t.span,
                K::Duplicate,
                format!("template `{}` clashes with a builtin function", t.name),
            ));
        }
        x.resolve(&t.result, t.span)?;
        for (i, p) in t.params.iter().enumerate() {
            if t.params[..i].iter().any(|q| q.name == p.name) {
                let msg = format!("parameter `{}` of `{}` is declared twice", p.name, t.name);
                return Err(x.err(p.span, K::Duplicate, msg));
            }
            if let ParamKind::Stream(ty) | ParamKind::Value(ty) = &p.kind {
                x.resolve(ty, p.span)?;
            }
        }
        x.templates.insert(&t.name, t);
    }

    let mut user = Vec::new();
    for item in &surface.items {
        let (name, ty, span) = match item {
            Item::Input(d) => (&d.name, &d.ty, d.span),
            Item::Output(d) => (&d.name, &d.ty, d.span),
            _ => continue,
        };
        let ty = x.resolve(ty, span)?;
        if x.stream_types.contains_key(name) {
            return Err(x.err(
                span,
                K::Duplicate,
                format!("stream `{name}` is declared more than once"),
            ));
        }
        if x.variants.contains_key(name) {
            return Err(x.err(
                span,
                K::Duplicate,
                format!("stream `{name}` has the same name as an enum variant"),
            ));
        }
        x.stream_types.insert(name.clone(), ty);
        user.push(item);
    }

    let mut decls = Vec::with_capacity(user.len());
    for item in user {
        match item {
            Item::Input(d) => decls.push(StreamDecl::Input {
                name: d.name.clone(),
                ty: x.stream_types[&d.name].clone(),
            }),
            Item::Output(d) => {
                x.used = 0;
                x.trail.push(format!("output `{}`", d.name));
                let body = x.expr(&d.body, &Env::new(), Some(0));
                x.trail.pop();
                let body = body?;
                let ty = x.stream_types[&d.name].clone();
                decls.push(StreamDecl::Output {
                    name: d.name.clone(),
                    ty,
                    body,
                });
            }
            _ => unreachable!(),
        }
    }
    decls.extend(
        x.instance_decls
            .drain(..)
            .map(|d| d.expect("instance body completed")),
    );
    Specification::new(enums, decls, Arc::new(x.registry)).map_err(|e| {
        Box::new(ExpandError::new(
            Span::default(),
            K::Duplicate,
            e.to_string(),
        ))
    })
}

fn int_literal(u: u64, negative: bool) -> Option<i64> {
    if negative {
        if u == 1 << 63 {
            Some(i64::MIN)
        } else {
            i64::try_from(u).ok().map(|i| -i)
        }
    } else {
        i64::try_from(u).ok()
    }
}

impl<'a> Expander<'a> {
    fn err(&self, span: Span, kind: K, message: impl Into<String>) -> Box<ExpandError> {
        let mut e = ExpandError::new(span, kind, message);
        e.backtrace = self.trail.iter().rev().cloned().collect();
        Box::new(e)
    }

    fn resolve(&self, ty: &SurfaceType, span: Span) -> EResult<ValueType> {
        Ok(match ty {
            SurfaceType::Bool => ValueType::Bool,
            SurfaceType::Int => ValueType::Int,
            SurfaceType::Float => ValueType::Float,
            SurfaceType::Text => ValueType::Text,
            SurfaceType::Named(n) => match self.enum_types.get(n) {
                Some(t) => ValueType::Enum(t.clone()),
                None => return Err(self.err(span, K::UnknownName, format!("unknown type `{n}`"))),
            },
        })
    }

    fn charge(&mut self, span: Span) -> EResult<()> {
        self.used += 1;
        if self.used > self.budget {
            let msg = format!(
                "template expansion exceeded the limit of {} steps",
                self.budget
            );
            return Err(self.err(span, K::Depth, msg));
        }
        Ok(())
    }

    /// `ctx` is the offset, relative to the stream being defined, at which
    /// the value of `e` is consumed; `None` when it is not known statically.
    fn expr(&mut self, e: &SExpr, env: &Env, ctx: Option<i64>) -> EResult<Expr> {
        let span = e.span;
        match &e.kind {
            SExprKind::Int(u) => self.int_leaf(*u, false, span),
            SExprKind::Float(v) => Ok(Expr::leaf(*v)),
            SExprKind::Bool(b) => Ok(Expr::leaf(*b)),
            SExprKind::Str(s) => Ok(Expr::Leaf(Value::text(s))),
            SExprKind::Name(n) => self.name(n, span, env),
            SExprKind::Call { name, args } => self.call(name, args, span, env, ctx),
            SExprKind::Offset {
                target,
                offset,
                default,
            } => {
                let k = self.eval_int(offset, env)?;
                let stream = self.stream_ref(target, env, ctx.and_then(|c| c.checked_add(k)))?;
                let default = self.expr(default, env, ctx)?;
                Ok(Expr::At {
                    stream,
                    offset: k,
                    default: Box::new(default),
                })
            }
            SExprKind::Unary {
                op: UnOp::Neg,
                operand,
            } => match &operand.kind {
                SExprKind::Int(u) => self.int_leaf(*u, true, operand.span),
                SExprKind::Float(v) => Ok(Expr::leaf(-*v)),
                _ => Ok(Expr::app("neg", vec![self.expr(operand, env, ctx)?])),
            },
            SExprKind::Unary {
                op: UnOp::Not,
                operand,
            } => Ok(Expr::app("not", vec![self.expr(operand, env, ctx)?])),
            SExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, env, ctx)?;
                let r = self.expr(rhs, env, ctx)?;
                Ok(Expr::app(op.function(), vec![l, r]))
            }
            SExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.expr(cond, env, ctx)?;
                let t = self.expr(then, env, ctx)?;
                let o = self.expr(otherwise, env, ctx)?;
                Ok(Expr::app("ite", vec![c, t, o]))
            }
        }
    }

    fn int_leaf(&self, u: u64, negative: bool, span: Span) -> EResult<Expr> {
        match int_literal(u, negative) {
            Some(i) => Ok(Expr::leaf(i)),
            None => Err(self.err(
                span,
                K::Type,
                format!("integer literal {u} does not fit in 64 bits"),
            )),
        }
    }

    fn name(&self, n: &str, span: Span, env: &Env) -> EResult<Expr> {
        match env.get(n) {
            Some(Binding::Int(i)) => return Ok(Expr::leaf(*i)),
            Some(Binding::Stream(s)) => return Ok(Expr::now(s)),
            Some(Binding::Value(e)) => return Ok(e.clone()),
            None => {}
        }
        if self.stream_types.contains_key(n) {
            return Ok(Expr::now(n));
        }
        if let Some(v) = self.variants.get(n) {
            return Ok(Expr::Leaf(Value::Enum(v.clone())));
        }
        if self.templates.contains_key(n) {
            return Err(self.err(
                span,
                K::Argument,
                format!("template `{n}` is used without arguments"),
            ));
        }
        Err(self.err(span, K::UnknownName, format!("unknown name `{n}`")))
    }

    fn call(
        &mut self,
        name: &str,
        args: &[SExpr],
        span: Span,
        env: &Env,
        ctx: Option<i64>,
    ) -> EResult<Expr> {
        if let Some(&t) = self.templates.get(name) {
            return if t.inline {
                self.inline(t, args, span, env, ctx)
            } else {
                self.instantiate(t, args, span, env, ctx).map(Expr::Now)
            };
        }
        if !self.registry.contains_name(name) {
            return Err(self.err(
                span,
                K::UnknownTemplate,
                format!("unknown function or template `{name}`"),
            ));
        }
        let args = args
            .iter()
            .map(|a| self.expr(a, env, ctx))
            .collect::<EResult<Vec<_>>>()?;
        Ok(Expr::app(name, args))
    }

    /// Resolves an expression that must denote a stream to its name.
    fn stream_ref(&mut self, e: &SExpr, env: &Env, ctx: Option<i64>) -> EResult<String> {
        match &e.kind {
            SExprKind::Name(n) => match env.get(n) {
                Some(Binding::Stream(s)) => Ok(s.clone()),
                Some(_) => Err(self.err(e.span, K::Argument, format!("parameter `{n}` is not a stream"))),
                None if self.stream_types.contains_key(n) => Ok(n.clone()),
                None => Err(self.err(e.span, K::UnknownName, format!("unknown stream `{n}`"))),
            },
            SExprKind::Call { name, args } => match self.templates.get(name.as_str()) {
                Some(&t) if !t.inline => self.instantiate(t, args, e.span, env, ctx),
                Some(_) => Err(self.err(
                    e.span,
                    K::Argument,
                    format!("inline template `{name}` does not define a stream; declare an output for it"),
                )),
                None => Err(self.err(e.span, K::Argument, format!("`{name}(..)` is not a stream"))),
            },
            _ => Err(self.err(e.span, K::Argument, "expected a stream name or template instance")),
        }
    }

    fn bind_args(
        &mut self,
        t: &Template,
        args: &[SExpr],
        span: Span,
        env: &Env,
    ) -> EResult<(Env, Vec<MangleParam>)> {
        if args.len() != t.params.len() {
            let msg = format!(
                "`{}` takes {} arguments, {} given",
                t.name,
                t.params.len(),
                args.len()
            );
            return Err(self.err(span, K::Argument, msg));
        }
        let mut bound = Env::new();
        let mut mangled = Vec::with_capacity(args.len());
        for (p, a) in t.params.iter().zip(args) {
            let (b, m) = match &p.kind {
                ParamKind::Int => {
                    let i = self.eval_int(a, env)?;
                    (Binding::Int(i), MangleParam::Int(i))
                }
                ParamKind::Stream(ty) => {
                    let want = self.resolve(ty, p.span)?;
                    let s = self.stream_ref(a, env, None)?;
                    let found = &self.stream_types[&s];
                    if *found != want {
                        let msg = format!(
                            "`{}` expects a {want} stream for `{}`, `{s}` is {found}",
                            t.name, p.name
                        );
                        return Err(self.err(a.span, K::Type, msg));
                    }
                    (Binding::Stream(s.clone()), MangleParam::Stream(s))
                }
                ParamKind::Value(ty) => {
                    let want = self.resolve(ty, p.span)?;
                    let e = self.expr(a, env, None)?;
                    let found = self.infer(&e, a.span)?;
                    if found != want {
                        let msg = format!(
                            "`{}` expects a {want} value for `{}`, found {found}",
                            t.name, p.name
                        );
                        return Err(self.err(a.span, K::Type, msg));
                    }
                    let text = e.to_string();
                    (Binding::Value(e), MangleParam::Value(text))
                }
            };
            bound.insert(p.name.clone(), b);
            mangled.push(m);
        }
        Ok((bound, mangled))
    }

    fn instantiate(
        &mut self,
        t: &Template,
        args: &[SExpr],
        span: Span,
        env: &Env,
        ctx: Option<i64>,
    ) -> EResult<String> {
        let (bound, mangled) = self.bind_args(t, args, span, env)?;
        let name = mangle_name(&t.name, &mangled);
        if let Some(&done) = self.instances.get(&name) {
            if !done {
                let at = self
                    .frames
                    .iter()
                    .rposition(|f| f.name == name)
                    .expect("in-progress instance is on the stack");
                let weight = self.frames[at + 1..]
                    .iter()
                    .map(|f| f.entry)
                    .chain([ctx])
                    .try_fold(0i64, |acc, k| acc.checked_add(k?));
                if weight == Some(0) {
                    let msg = format!(
                        "unguarded recursion: `{name}` refers to itself with total offset 0"
                    );
                    return Err(self.err(span, K::Depth, msg));
                }
            }
            return Ok(name);
        }
        if self.stream_types.contains_key(&name) {
            return Err(self.err(
                span,
                K::Duplicate,
                format!("instance `{name}` clashes with a declared stream"),
            ));
        }
        self.charge(span)?;
        let ty = self.resolve(&t.result, t.span)?;
        self.instances.insert(name.clone(), false);
        self.stream_types.insert(name.clone(), ty.clone());
        let slot = self.instance_decls.len();
        self.instance_decls.push(None);
        self.frames.push(Frame {
            name: name.clone(),
            entry: ctx,
        });
        self.trail.push(format!("`{name}`"));
        let body = self.template_body(t, &bound, Some(0));
        self.trail.pop();
        self.frames.pop();
        let body = body?;
        self.instances.insert(name.clone(), true);
        self.instance_decls[slot] = Some(StreamDecl::Output {
            name: name.clone(),
            ty,
            body,
        });
        Ok(name)
    }

    fn inline(
        &mut self,
        t: &Template,
        args: &[SExpr],
        span: Span,
        env: &Env,
        ctx: Option<i64>,
    ) -> EResult<Expr> {
        let (bound, mangled) = self.bind_args(t, args, span, env)?;
        self.charge(span)?;
        self.trail
            .push(format!("inline `{}`", mangle_name(&t.name, &mangled)));
        let body = self.template_body(t, &bound, ctx);
        let checked = body.and_then(|b| {
            let want = self.resolve(&t.result, t.span)?;
            let found = self.infer(&b, span)?;
            if found != want {
                let msg = format!(
                    "`{}` is declared {want} but its body has type {found}",
                    t.name
                );
                return Err(self.err(span, K::Type, msg));
            }
            Ok(b)
        });
        self.trail.pop();
        checked
    }

    fn template_body(&mut self, t: &Template, env: &Env, ctx: Option<i64>) -> EResult<Expr> {
        match &t.body {
            TemplateBody::Plain(e) => self.expr(e, env, ctx),
            TemplateBody::Guarded(guards) => {
                for g in guards {
                    let taken = match &g.cond {
                        None => true,
                        Some(c) => self.eval_cond(c, env)?,
                    };
                    if taken {
                        return self.expr(&g.body, env, ctx);
                    }
                }
                let mut ints: Vec<_> = t
                    .params
                    .iter()
                    .filter_map(|p| match env.get(&p.name) {
                        Some(Binding::Int(i)) => Some(format!("{} = {i}", p.name)),
                        _ => None,
                    })
                    .collect();
                if ints.is_empty() {
                    ints.push("no integer parameters".into());
                }
                Err(self.err(
                    t.span,
                    K::Guard,
                    format!("no guard of `{}` matches ({})", t.name, ints.join(", ")),
                ))
            }
        }
    }

    /// Result type of an expanded expression, without binding it.
    fn infer(&self, e: &Expr, span: Span) -> EResult<ValueType> {
        match e {
            Expr::Leaf(v) => Ok(v.type_of()),
            Expr::Now(s) | Expr::At { stream: s, .. } => Ok(self.stream_types[s].clone()),
            Expr::App { callee, args } => {
                let types = args
                    .iter()
                    .map(|a| self.infer(a, span))
                    .collect::<EResult<Vec<_>>>()?;
                match self.registry.lookup(callee.name(), &types) {
                    Some(f) => Ok(f.result_type().clone()),
                    None => {
                        let msg = format!(
                            "no `{}` for argument types ({})",
                            callee.name(),
                            join_types(&types)
                        );
                        Err(self.err(span, K::Type, msg))
                    }
                }
            }
        }
    }

    fn eval_int(&self, e: &SExpr, env: &Env) -> EResult<i64> {
        let overflow = || {
            self.err(
                e.span,
                K::Argument,
                "integer overflow in compile-time arithmetic",
            )
        };
        match &e.kind {
            SExprKind::Int(u) => int_literal(*u, false).ok_or_else(overflow),
            SExprKind::Name(n) => match env.get(n) {
                Some(Binding::Int(i)) => Ok(*i),
                Some(_) => Err(self.err(
                    e.span,
                    K::Argument,
                    format!("`{n}` is not an integer parameter"),
                )),
                None => Err(self.err(
                    e.span,
                    K::Argument,
                    format!("`{n}` is not a compile-time integer"),
                )),
            },
            SExprKind::Unary {
                op: UnOp::Neg,
                operand,
            } => match operand.kind {
                SExprKind::Int(u) => int_literal(u, true).ok_or_else(overflow),
                _ => self
                    .eval_int(operand, env)?
                    .checked_neg()
                    .ok_or_else(overflow),
            },
            SExprKind::Binary { op, lhs, rhs }
                if matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div) =>
            {
                let (a, b) = (self.eval_int(lhs, env)?, self.eval_int(rhs, env)?);
                let r = match op {
                    BinOp::Add => a.checked_add(b),
                    BinOp::Sub => a.checked_sub(b),
                    BinOp::Mul => a.checked_mul(b),
                    _ if b == 0 => {
                        return Err(self.err(
                            e.span,
                            K::Argument,
                            "division by zero in compile-time arithmetic",
                        ))
                    }
                    _ => a.checked_div(b),
                };
                r.ok_or_else(overflow)
            }
            SExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.eval_cond(cond, env)? {
                    self.eval_int(then, env)
                } else {
                    self.eval_int(otherwise, env)
                }
            }
            _ => Err(self.err(
                e.span,
                K::Argument,
                "expected a compile-time integer expression",
            )),
        }
    }

    fn eval_cond(&self, e: &SExpr, env: &Env) -> EResult<bool> {
        match &e.kind {
            SExprKind::Bool(b) => Ok(*b),
            SExprKind::Unary {
                op: UnOp::Not,
                operand,
            } => Ok(!self.eval_cond(operand, env)?),
            SExprKind::Binary { op, lhs, rhs } => match op {
                BinOp::And => Ok(self.eval_cond(lhs, env)? && self.eval_cond(rhs, env)?),
                BinOp::Or => Ok(self.eval_cond(lhs, env)? || self.eval_cond(rhs, env)?),
                BinOp::Implies => Ok(!self.eval_cond(lhs, env)? || self.eval_cond(rhs, env)?),
                BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Leq | BinOp::Gt | BinOp::Geq => {
                    let (a, b) = (self.guard_int(lhs, env)?, self.guard_int(rhs, env)?);
                    Ok(match op {
                        BinOp::Eq => a == b,
                        BinOp::Neq => a != b,
                        BinOp::Lt => a < b,
                        BinOp::Leq => a <= b,
                        BinOp::Gt => a > b,
                        _ => a >= b,
                    })
                }
                _ => Err(self.err(
                    e.span,
                    K::Guard,
                    "a guard must be a condition, not arithmetic",
                )),
            },
            SExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.eval_cond(cond, env)? {
                    self.eval_cond(then, env)
                } else {
                    self.eval_cond(otherwise, env)
                }
            }
            SExprKind::Name(n) if !matches!(env.get(n), Some(Binding::Int(_))) => Err(self.err(
                e.span,
                K::Guard,
                format!("guard on non-integer parameter `{n}`"),
            )),
            _ => Err(self.err(e.span, K::Guard, "a guard must compare integer parameters")),
        }
    }

    fn guard_int(&self, e: &SExpr, env: &Env) -> EResult<i64> {
        self.eval_int(e, env).map_err(|mut err| {
            err.kind = K::Guard;
            if let SExprKind::Name(n) = &e.kind {
                err.message = format!("guard on non-integer parameter `{n}`");
            }
            err
        })
    }
}
