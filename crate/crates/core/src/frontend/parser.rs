//! Recursive-descent parser for `.lola` source text.

use super::lexer::{tokenize, Span, Tok};
use super::surface::*;
use super::ParseError;

pub fn parse_spec(source: &str) -> Result<SurfaceSpec, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut spec = SurfaceSpec::default();
    while !p.at(&Tok::Eof) {
        spec.items.push(p.item()?);
    }
    Ok(spec)
}

struct Parser {
    tokens: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, what: &str) -> PResult<T> {
        Err(ParseError::new(
            self.span(),
            format!("expected {what}, found {}", self.peek()),
        ))
    }

    fn expect_sym(&mut self, s: &str) -> PResult<Span> {
        if self.at_sym(s) {
            Ok(self.advance().1)
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.at_kw(k) {
            self.advance();
            Ok(())
        } else {
            self.unexpected(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.advance().1;
                Ok((s, span))
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn item(&mut self) -> PResult<Item> {
        let span = self.span();
        match self.peek() {
            Tok::Kw("data") => {
                self.advance();
                let (name, _) = self.ident()?;
                self.expect_sym("=")?;
                let mut variants = vec![self.ident()?.0];
                while self.at_sym("|") {
                    self.advance();
                    variants.push(self.ident()?.0);
                }
                Ok(Item::Enum(EnumDecl {
                    name,
                    variants,
                    span,
                }))
            }
            Tok::Kw("input") => {
                self.advance();
                let ty = self.ty()?;
                let (name, _) = self.ident()?;
                Ok(Item::Input(InputDecl { name, ty, span }))
            }
            Tok::Kw("output") => {
                self.advance();
                let ty = self.ty()?;
                let (name, _) = self.ident()?;
                self.expect_sym("=")?;
                let body = self.expr()?;
                Ok(Item::Output(OutputDecl {
                    name,
                    ty,
                    body,
                    span,
                }))
            }
            Tok::Kw("define") => {
                self.advance();
                let inline = self.at_kw("inline");
                if inline {
                    self.advance();
                }
                let result = self.ty()?;
                let (name, _) = self.ident()?;
                self.expect_sym("(")?;
                let mut params = Vec::new();
                if !self.at_sym(")") {
                    params.push(self.param()?);
                    while self.at_sym(",") {
                        self.advance();
                        params.push(self.param()?);
                    }
                }
                self.expect_sym(")")?;
                let body = if self.at_sym("=") {
                    self.advance();
                    TemplateBody::Plain(self.expr()?)
                } else if self.at_sym("|") {
                    let mut guards = Vec::new();
                    while self.at_sym("|") {
                        self.advance();
                        let cond = if self.at_kw("otherwise") {
                            self.advance();
                            None
                        } else {
                            Some(self.expr()?)
                        };
                        self.expect_sym("=")?;
                        guards.push(Guard {
                            cond,
                            body: self.expr()?,
                        });
                    }
                    TemplateBody::Guarded(guards)
                } else {
                    return self.unexpected("`=` or a guard `|`");
                };
                Ok(Item::Template(Template {
                    name,
                    inline,
                    result,
                    params,
                    body,
                    span,
                }))
            }
            _ => self.unexpected("`data`, `input`, `output` or `define`"),
        }
    }

    fn ty(&mut self) -> PResult<SurfaceType> {
        let ty = match self.peek() {
            Tok::Kw("bool") => SurfaceType::Bool,
            Tok::Kw("int") => SurfaceType::Int,
            Tok::Kw("float") => SurfaceType::Float,
            Tok::Kw("text") => SurfaceType::Text,
            Tok::Ident(name) => SurfaceType::Named(name.clone()),
            _ => return self.unexpected("a type"),
        };
        self.advance();
        Ok(ty)
    }

    fn param(&mut self) -> PResult<Param> {
        let span = self.span();
        let kind = match self.peek() {
            Tok::Kw("int") => {
                self.advance();
                ParamKind::Int
            }
            Tok::Kw("stream") => {
                self.advance();
                ParamKind::Stream(self.ty()?)
            }
            Tok::Kw("value") => {
                self.advance();
                ParamKind::Value(self.ty()?)
            }
            _ => return self.unexpected("a parameter (`int n`, `stream T p` or `value T x`)"),
        };
        let (name, _) = self.ident()?;
        Ok(Param { name, kind, span })
    }

    pub(crate) fn expr(&mut self) -> PResult<SExpr> {
        if self.at_kw("if") {
            return self.if_expr();
        }
        self.implies()
    }

    fn if_expr(&mut self) -> PResult<SExpr> {
        let span = self.span();
        self.expect_kw("if")?;
        let cond = self.expr()?;
        self.expect_kw("then")?;
        let then = self.expr()?;
        self.expect_kw("else")?;
        let otherwise = self.expr()?;
        Ok(SExpr {
            kind: SExprKind::If {
                cond: Box::new(cond),
                then: Box::new(then),
                otherwise: Box::new(otherwise),
            },
            span,
        })
    }

    fn binary(op: BinOp, lhs: SExpr, rhs: SExpr) -> SExpr {
        let span = lhs.span;
        SExpr {
            kind: SExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        }
    }

    fn implies(&mut self) -> PResult<SExpr> {
        let lhs = self.level(2)?;
        if self.at_sym("->") {
            self.advance();
            let rhs = if self.at_kw("if") {
                self.if_expr()?
            } else {
                self.implies()?
            };
            return Ok(Self::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn op_at(&self, prec: u8) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else {
            return None;
        };
        let op = match *s {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "/=" => BinOp::Neq,
            "<" => BinOp::Lt,
            "<=" => BinOp::Leq,
            ">" => BinOp::Gt,
            ">=" => BinOp::Geq,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            _ => return None,
        };
        (op.precedence() == prec).then_some(op)
    }

    /// Left-associative binary levels 2 (`||`) through 6 (`*`, `/`).
    fn level(&mut self, prec: u8) -> PResult<SExpr> {
        if prec > 6 {
            return self.unary();
        }
        let mut lhs = self.level(prec + 1)?;
        while let Some(op) = self.op_at(prec) {
            self.advance();
            // `a || if c then x else y` is accepted; the `if` extends rightwards.
            let rhs = if self.at_kw("if") {
                self.if_expr()?
            } else {
                self.level(prec + 1)?
            };
            lhs = Self::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<SExpr> {
        let span = self.span();
        let op = if self.at_sym("-") {
            UnOp::Neg
        } else if self.at_sym("!") {
            UnOp::Not
        } else {
            return self.primary();
        };
        self.advance();
        let operand = if self.at_kw("if") {
            self.if_expr()?
        } else {
            self.unary()?
        };
        Ok(SExpr {
            kind: SExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        })
    }

    fn primary(&mut self) -> PResult<SExpr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                SExprKind::Int(i)
            }
            Tok::Float(x) => {
                self.advance();
                SExprKind::Float(x)
            }
            Tok::Str(s) => {
                self.advance();
                SExprKind::Str(s)
            }
            Tok::Kw("true") => {
                self.advance();
                SExprKind::Bool(true)
            }
            Tok::Kw("false") => {
                self.advance();
                SExprKind::Bool(false)
            }
            Tok::Kw("if") => return self.if_expr(),
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            Tok::Ident(name) => {
                self.advance();
                let target = if self.at_sym("(") {
                    self.advance();
                    let mut args = Vec::new();
                    if !self.at_sym(")") {
                        args.push(self.expr()?);
                        while self.at_sym(",") {
                            self.advance();
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_sym(")")?;
                    SExpr {
                        kind: SExprKind::Call { name, args },
                        span,
                    }
                } else {
                    SExpr {
                        kind: SExprKind::Name(name),
                        span,
                    }
                };
                if !self.at_sym("[") {
                    return Ok(target);
                }
                self.advance();
                let offset = self.expr()?;
                self.expect_sym(",")?;
                let default = self.expr()?;
                self.expect_sym("]")?;
                SExprKind::Offset {
                    target: Box::new(target),
                    offset: Box::new(offset),
                    default: Box::new(default),
                }
            }
            _ => return self.unexpected("an expression"),
        };
        Ok(SExpr { kind, span })
    }
}
