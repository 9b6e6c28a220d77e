//! Parsed, not yet expanded, specification text.

use super::lexer::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceType {
    Bool,
    Int,
    Float,
    Text,
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Implies,
    Or,
    And,
    Eq,
    Neq,
    Lt,
    Leq,
    Gt,
    Geq,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn function(self) -> &'static str {
        match self {
            BinOp::Implies => "implies",
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "eq",
            BinOp::Neq => "neq",
            BinOp::Lt => "lt",
            BinOp::Leq => "leq",
            BinOp::Gt => "gt",
            BinOp::Geq => "geq",
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "->",
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Neq => "/=",
            BinOp::Lt => "<",
            BinOp::Leq => "<=",
            BinOp::Gt => ">",
            BinOp::Geq => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    /// Binding strength, loosest first; `if` sits below all of these.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Leq | BinOp::Gt | BinOp::Geq => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn from_function(name: &str) -> Option<BinOp> {
        use BinOp::*;
        [
            Implies, Or, And, Eq, Neq, Lt, Leq, Gt, Geq, Add, Sub, Mul, Div,
        ]
        .into_iter()
        .find(|op| op.function() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExprKind {
    Int(u64),
    Float(f64),
    Bool(bool),
    Str(String),
    Name(String),
    Call {
        name: String,
        args: Vec<SExpr>,
    },
    /// `target[offset, default]`, where target is a `Name` or a `Call`.
    Offset {
        target: Box<SExpr>,
        offset: Box<SExpr>,
        default: Box<SExpr>,
    },
    Unary {
        op: UnOp,
        operand: Box<SExpr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<SExpr>,
        rhs: Box<SExpr>,
    },
    If {
        cond: Box<SExpr>,
        then: Box<SExpr>,
        otherwise: Box<SExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    /// Compile-time integer, usable in offsets and guards.
    Int,
    Stream(SurfaceType),
    Value(SurfaceType),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    /// `None` for `otherwise`.
    pub cond: Option<SExpr>,
    pub body: SExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateBody {
    Plain(SExpr),
    Guarded(Vec<Guard>),
}

/// A parameterized stream definition.
///
/// A plain template produces one named stream per distinct argument list; an
/// `inline` template is substituted into the expression that uses it.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub name: String,
    pub inline: bool,
    pub result: SurfaceType,
    pub params: Vec<Param>,
    pub body: TemplateBody,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDecl {
    pub name: String,
    pub variants: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: String,
    pub ty: SurfaceType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputDecl {
    pub name: String,
    pub ty: SurfaceType,
    pub body: SExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Enum(EnumDecl),
    Input(InputDecl),
    Output(OutputDecl),
    Template(Template),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceSpec {
    pub items: Vec<Item>,
}

impl SurfaceSpec {
    pub fn enums(&self) -> impl Iterator<Item = &EnumDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Enum(e) => Some(e),
            _ => None,
        })
    }

    pub fn inputs(&self) -> impl Iterator<Item = &InputDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Input(d) => Some(d),
            _ => None,
        })
    }

    pub fn outputs(&self) -> impl Iterator<Item = &OutputDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Output(d) => Some(d),
            _ => None,
        })
    }

    pub fn templates(&self) -> impl Iterator<Item = &Template> {
        self.items.iter().filter_map(|i| match i {
            Item::Template(t) => Some(t),
            _ => None,
        })
    }

    /// Appends the items of `other` (libraries are merged before the main file).
    pub fn extend(&mut self, other: SurfaceSpec) {
        self.items.extend(other.items);
    }
}
