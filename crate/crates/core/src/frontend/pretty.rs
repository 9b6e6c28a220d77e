//! Printing expanded specifications back to parseable source.

use std::fmt::{self, Write};

use super::lexer::is_plain_ident;
use super::surface::BinOp;
use crate::ast::{Expr, Specification, StreamDecl};
use crate::value::Value;

/// Backtick-quotes names that are not plain identifiers (mangled instances).
pub fn quote_name(name: &str) -> String {
    if is_plain_ident(name) {
        name.to_owned()
    } else {
        format!("`{name}`")
    }
}

const IF_PREC: u8 = 0;
const UNARY_PREC: u8 = 7;
const ATOM_PREC: u8 = 8;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Leaf(Value::Int(i)) if *i < 0 => UNARY_PREC,
        Expr::Leaf(Value::Float(x)) if x.is_sign_negative() => UNARY_PREC,
        Expr::App { callee, args } => match (callee.name(), args.len()) {
            ("ite", 3) => IF_PREC,
            ("not", 1) => UNARY_PREC,
            ("neg", 1) if !is_literal(&args[0]) => UNARY_PREC,
            (name, 2) => BinOp::from_function(name).map_or(ATOM_PREC, BinOp::precedence),
            _ => ATOM_PREC,
        },
        _ => ATOM_PREC,
    }
}

fn is_literal(e: &Expr) -> bool {
    matches!(e, Expr::Leaf(Value::Int(_) | Value::Float(_)))
}

fn write_at(f: &mut dyn Write, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut dyn Write, e: &Expr) -> fmt::Result {
    match e {
        Expr::Leaf(v) => write!(f, "{v}"),
        Expr::Now(s) => f.write_str(&quote_name(s)),
        Expr::At {
            stream,
            offset,
            default,
        } => {
            write!(f, "{}[{offset}, ", quote_name(stream))?;
            write_expr(f, default)?;
            f.write_char(']')
        }
        Expr::App { callee, args } => {
            let name = callee.name();
            match (name, args.len()) {
                ("ite", 3) => {
                    f.write_str("if ")?;
                    write_expr(f, &args[0])?;
                    f.write_str(" then ")?;
                    write_expr(f, &args[1])?;
                    f.write_str(" else ")?;
                    write_expr(f, &args[2])
                }
                ("not", 1) => {
                    f.write_char('!')?;
                    write_at(f, &args[0], UNARY_PREC)
                }
                ("neg", 1) if !is_literal(&args[0]) => {
                    f.write_char('-')?;
                    // `--` would start a comment.
                    let mut inner = String::new();
                    write_at(&mut inner, &args[0], UNARY_PREC)?;
                    if inner.starts_with('-') {
                        write!(f, "({inner})")
                    } else {
                        f.write_str(&inner)
                    }
                }
                (_, 2) if BinOp::from_function(name).is_some() => {
                    let op = BinOp::from_function(name).expect("checked");
                    let p = op.precedence();
                    // `->` groups to the right, everything else to the left.
                    let (lmin, rmin) = if op == BinOp::Implies {
                        (p + 1, p)
                    } else {
                        (p, p + 1)
                    };
                    write_at(f, &args[0], lmin)?;
                    write!(f, " {} ", op.symbol())?;
                    write_at(f, &args[1], rmin)
                }
                _ => {
                    write!(f, "{}(", quote_name(name))?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_expr(f, a)?;
                    }
                    f.write_char(')')
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

impl fmt::Display for StreamDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamDecl::Input { name, ty } => write!(f, "input {ty} {}", quote_name(name)),
            StreamDecl::Output { name, ty, body } => {
                write!(f, "output {ty} {} = {body}", quote_name(name))
            }
        }
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.enums() {
            writeln!(f, "data {} = {}", e.name(), e.variants().join(" | "))?;
        }
        for d in self.decls() {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
