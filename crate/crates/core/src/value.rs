//! Runtime values, interpreted function symbols and the function registry.
//!
//! The data theory is first order: every stream carries values of one of five
//! kinds. Functions are registered by `(name, parameter types)` so the same
//! surface operator (`==`, `+`, `if`) resolves to one monomorphic symbol per
//! argument type. A symbol may carry a *simplifier*, a partial-application
//! rule that can produce the result before every argument is known.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A user-declared enumeration (`data SndrState = Get | Send | WaitForAck`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnumType {
    name: String,
    variants: Vec<String>,
}

impl EnumType {
    pub fn new(name: impl Into<String>, variants: Vec<String>) -> Result<Self, ValueError> {
        let name = name.into();
        if variants.is_empty() {
            return Err(ValueError::EmptyEnum(name));
        }
        for (i, v) in variants.iter().enumerate() {
            if variants[..i].contains(v) {
                return Err(ValueError::DuplicateVariant {
                    ty: name,
                    variant: v.clone(),
                });
            }
        }
        Ok(EnumType { name, variants })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variants(&self) -> &[String] {
        &self.variants
    }

    pub fn index_of(&self, variant: &str) -> Option<usize> {
        self.variants.iter().position(|v| v == variant)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueType {
    Bool,
    Int,
    Float,
    Text,
    Enum(Arc<EnumType>),
}

impl ValueType {
    /// The four built-in kinds, in a stable order.
    pub const PRIMITIVES: [ValueType; 4] = [
        ValueType::Bool,
        ValueType::Int,
        ValueType::Float,
        ValueType::Text,
    ];
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Bool => f.write_str("bool"),
            ValueType::Int => f.write_str("int"),
            ValueType::Float => f.write_str("float"),
            ValueType::Text => f.write_str("text"),
            ValueType::Enum(e) => f.write_str(&e.name),
        }
    }
}

/// A variant of an [`EnumType`]. The index is always in range.
#[derive(Debug, Clone)]
pub struct EnumValue {
    ty: Arc<EnumType>,
    index: usize,
}

impl EnumValue {
    pub fn new(ty: Arc<EnumType>, variant: &str) -> Option<Self> {
        let index = ty.index_of(variant)?;
        Some(EnumValue { ty, index })
    }

    pub fn ty(&self) -> &Arc<EnumType> {
        &self.ty
    }

    pub fn variant(&self) -> &str {
        &self.ty.variants[self.index]
    }
}

impl PartialEq for EnumValue {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index && (Arc::ptr_eq(&self.ty, &other.ty) || self.ty == other.ty)
    }
}

impl Eq for EnumValue {}

#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(Arc<str>),
    Enum(EnumValue),
}

impl Value {
    pub fn type_of(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int(_) => ValueType::Int,
            Value::Float(_) => ValueType::Float,
            Value::Text(_) => ValueType::Text,
            Value::Enum(e) => ValueType::Enum(e.ty.clone()),
        }
    }

    pub fn has_type(&self, ty: &ValueType) -> bool {
        match (self, ty) {
            (Value::Bool(_), ValueType::Bool)
            | (Value::Int(_), ValueType::Int)
            | (Value::Float(_), ValueType::Float)
            | (Value::Text(_), ValueType::Text) => true,
            (Value::Enum(e), ValueType::Enum(t)) => Arc::ptr_eq(&e.ty, t) || *e.ty == **t,
            _ => false,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn text(s: &str) -> Value {
        Value::Text(Arc::from(s))
    }
}

/// Floats compare by bit pattern, so `NaN == NaN` and `0.0 != -0.0`.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Enum(a), Value::Enum(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        '\r' => f.write_str("\\r")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Enum(e) => f.write_str(e.variant()),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("enum `{0}` has no variants")]
    EmptyEnum(String),
    #[error("enum `{ty}` declares variant `{variant}` twice")]
    DuplicateVariant { ty: String, variant: String },
    #[error("function `{name}` is already registered for ({params})")]
    DuplicateFunction { name: String, params: String },
}

/// Failure while applying an interpreted function.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("`{function}` applied to ill-typed arguments: {detail}")]
    Contract { function: String, detail: String },
}

pub type TotalFn = Arc<dyn Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync>;
pub type SimplifyFn = Arc<dyn Fn(&[Option<Value>]) -> Option<Value> + Send + Sync>;

/// An interpreted function symbol of the data theory.
#[derive(Clone)]
pub struct FunctionSymbol {
    name: String,
    params: Vec<ValueType>,
    result: ValueType,
    eval: TotalFn,
    simplify: Option<SimplifyFn>,
}

impl FunctionSymbol {
    pub fn new<F>(
        name: impl Into<String>,
        params: Vec<ValueType>,
        result: ValueType,
        eval: F,
    ) -> Self
    where
        F: Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync + 'static,
    {
        FunctionSymbol {
            name: name.into(),
            params,
            result,
            eval: Arc::new(eval),
            simplify: None,
        }
    }

    pub fn with_simplifier<F>(mut self, simplify: F) -> Self
    where
        F: Fn(&[Option<Value>]) -> Option<Value> + Send + Sync + 'static,
    {
        self.simplify = Some(Arc::new(simplify));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[ValueType] {
        &self.params
    }

    pub fn result_type(&self) -> &ValueType {
        &self.result
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn has_simplifier(&self) -> bool {
        self.simplify.is_some()
    }

    fn check_args<'a>(
        &self,
        args: impl ExactSizeIterator<Item = Option<&'a Value>>,
    ) -> Result<(), EvalError> {
        if args.len() != self.params.len() {
            return Err(EvalError::Contract {
                function: self.name.clone(),
                detail: format!(
                    "expected {} arguments, got {}",
                    self.params.len(),
                    args.len()
                ),
            });
        }
        for (i, (arg, ty)) in args.zip(&self.params).enumerate() {
            if let Some(v) = arg {
                if !v.has_type(ty) {
                    return Err(EvalError::Contract {
                        function: self.name.clone(),
                        detail: format!("argument {i} should be {ty}, found {}", v.type_of()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Applies the total interpretation to a full argument list.
    pub fn apply_total(&self, args: &[Value]) -> Result<Value, EvalError> {
        self.check_args(args.iter().map(Some))?;
        (self.eval)(args)
    }

    /// Applies the function to a partially known argument list.
    ///
    /// With every argument present this is `apply_total`. Otherwise the
    /// simplifier (if any) decides; `Ok(None)` means the result is not yet
    /// determined.
    pub fn apply_partial(&self, args: &[Option<Value>]) -> Result<Option<Value>, EvalError> {
        self.check_args(args.iter().map(Option::as_ref))?;
        if args.iter().all(Option::is_some) {
            let full: Vec<Value> = args.iter().flatten().cloned().collect();
            return (self.eval)(&full).map(Some);
        }
        Ok(self.simplify.as_ref().and_then(|s| s(args)))
    }
}

impl fmt::Debug for FunctionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSymbol")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("result", &self.result)
            .field("simplify", &self.simplify.is_some())
            .finish()
    }
}

/// Symbols are identified by name and parameter types.
impl PartialEq for FunctionSymbol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.result == other.result
    }
}

impl Eq for FunctionSymbol {}

#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    symbols: HashMap<(String, Vec<ValueType>), Arc<FunctionSymbol>>,
}

impl FunctionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, f: FunctionSymbol) -> Result<(), ValueError> {
        let key = (f.name.clone(), f.params.clone());
        if self.symbols.contains_key(&key) {
            return Err(ValueError::DuplicateFunction {
                name: f.name,
                params: join_types(&f.params),
            });
        }
        self.symbols.insert(key, Arc::new(f));
        Ok(())
    }

    pub fn lookup(&self, name: &str, params: &[ValueType]) -> Option<&Arc<FunctionSymbol>> {
        self.symbols.get(&(name.to_owned(), params.to_vec()))
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.symbols.keys().any(|(n, _)| n == name)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<FunctionSymbol>> {
        self.symbols.values()
    }

    /// Adds `eq`, `neq` and `ite` for a newly declared enumeration.
    pub fn register_enum(&mut self, ty: &Arc<EnumType>) -> Result<(), ValueError> {
        let t = ValueType::Enum(ty.clone());
        self.register(eq_symbol("eq", t.clone(), false))?;
        self.register(eq_symbol("neq", t.clone(), true))?;
        self.register(ite_symbol(t))
    }
}

/// Extends a registry. Existing entries are untouched; a clash is an error.
pub fn register_function(
    mut r: FunctionRegistry,
    f: FunctionSymbol,
) -> Result<FunctionRegistry, ValueError> {
    r.register(f)?;
    Ok(r)
}

pub(crate) fn join_types(types: &[ValueType]) -> String {
    types
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn bool_arg(v: &Value) -> bool {
    v.as_bool().expect("type-checked bool argument")
}

fn eq_symbol(name: &str, t: ValueType, negate: bool) -> FunctionSymbol {
    FunctionSymbol::new(name, vec![t.clone(), t], ValueType::Bool, move |a| {
        Ok(Value::Bool((a[0] == a[1]) != negate))
    })
}

fn ite_symbol(t: ValueType) -> FunctionSymbol {
    FunctionSymbol::new("ite", vec![ValueType::Bool, t.clone(), t.clone()], t, |a| {
        Ok(if bool_arg(&a[0]) {
            a[1].clone()
        } else {
            a[2].clone()
        })
    })
    .with_simplifier(|a| match &a[0] {
        Some(Value::Bool(true)) => a[1].clone(),
        Some(Value::Bool(false)) => a[2].clone(),
        _ => None,
    })
}

fn bool_binary(name: &str, op: fn(bool, bool) -> bool) -> FunctionSymbol {
    FunctionSymbol::new(
        name,
        vec![ValueType::Bool, ValueType::Bool],
        ValueType::Bool,
        move |a| Ok(Value::Bool(op(bool_arg(&a[0]), bool_arg(&a[1])))),
    )
}

fn absorbing(name: &str, op: fn(bool, bool) -> bool, absorbing: bool) -> FunctionSymbol {
    bool_binary(name, op).with_simplifier(move |a| {
        a.iter()
            .any(|v| matches!(v, Some(Value::Bool(b)) if *b == absorbing))
            .then_some(Value::Bool(absorbing))
    })
}

fn int_binary(name: &str, op: fn(i64, i64) -> Result<i64, EvalError>) -> FunctionSymbol {
    FunctionSymbol::new(
        name,
        vec![ValueType::Int, ValueType::Int],
        ValueType::Int,
        move |a| match (&a[0], &a[1]) {
            (Value::Int(x), Value::Int(y)) => op(*x, *y).map(Value::Int),
            _ => unreachable!("type-checked int arguments"),
        },
    )
}

fn float_binary(name: &str, op: fn(f64, f64) -> f64) -> FunctionSymbol {
    FunctionSymbol::new(
        name,
        vec![ValueType::Float, ValueType::Float],
        ValueType::Float,
        move |a| match (&a[0], &a[1]) {
            (Value::Float(x), Value::Float(y)) => Ok(Value::Float(op(*x, *y))),
            _ => unreachable!("type-checked float arguments"),
        },
    )
}

fn compare(name: &str, t: ValueType, op: fn(std::cmp::Ordering) -> bool) -> FunctionSymbol {
    FunctionSymbol::new(name, vec![t.clone(), t], ValueType::Bool, move |a| {
        let ord = match (&a[0], &a[1]) {
            (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
            (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
            _ => unreachable!("type-checked numeric arguments"),
        };
        // NaN is unordered: every comparison is false.
        Ok(Value::Bool(ord.is_some_and(op)))
    })
}

/// The built-in data theory.
///
/// Integer arithmetic wraps on overflow; `div` and `mod` truncate toward zero
/// and fail on a zero divisor.
pub fn builtin_registry() -> FunctionRegistry {
    use std::cmp::Ordering;
    let mut r = FunctionRegistry::new();
    let mut add = |f: FunctionSymbol| r.register(f).expect("builtin symbols are unique");

    add(FunctionSymbol::new(
        "not",
        vec![ValueType::Bool],
        ValueType::Bool,
        |a| Ok(Value::Bool(!bool_arg(&a[0]))),
    ));
    add(absorbing("and", |x, y| x && y, false));
    add(absorbing("or", |x, y| x || y, true));
    add(bool_binary("implies", |x, y| !x || y));
    add(FunctionSymbol::new(
        "toint",
        vec![ValueType::Bool],
        ValueType::Int,
        |a| Ok(Value::Int(i64::from(bool_arg(&a[0])))),
    ));

    for t in ValueType::PRIMITIVES {
        add(eq_symbol("eq", t.clone(), false));
        add(eq_symbol("neq", t.clone(), true));
        add(ite_symbol(t));
    }

    for t in [ValueType::Int, ValueType::Float] {
        add(compare("lt", t.clone(), |o| o == Ordering::Less));
        add(compare("leq", t.clone(), |o| o != Ordering::Greater));
        add(compare("gt", t.clone(), |o| o == Ordering::Greater));
        add(compare("geq", t, |o| o != Ordering::Less));
    }

    add(int_binary("add", |x, y| Ok(x.wrapping_add(y))));
    add(int_binary("sub", |x, y| Ok(x.wrapping_sub(y))));
    add(int_binary("mul", |x, y| Ok(x.wrapping_mul(y))));
    add(int_binary("div", |x, y| {
        if y == 0 {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(x.wrapping_div(y))
        }
    }));
    add(int_binary("mod", |x, y| {
        if y == 0 {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(x.wrapping_rem(y))
        }
    }));
    add(FunctionSymbol::new(
        "neg",
        vec![ValueType::Int],
        ValueType::Int,
        |a| Ok(Value::Int(a[0].as_int().expect("int").wrapping_neg())),
    ));

    add(float_binary("add", |x, y| x + y));
    add(float_binary("sub", |x, y| x - y));
    add(float_binary("mul", |x, y| x * y));
    add(float_binary("div", |x, y| x / y));
    add(FunctionSymbol::new(
        "neg",
        vec![ValueType::Float],
        ValueType::Float,
        |a| match a[0] {
            Value::Float(x) => Ok(Value::Float(-x)),
            _ => unreachable!("type-checked float argument"),
        },
    ));
    r
}
