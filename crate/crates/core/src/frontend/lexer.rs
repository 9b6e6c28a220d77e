use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Float(f64),
    Str(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::Float(x) => write!(f, "float `{x}`"),
            Tok::Str(_) => f.write_str("string literal"),
            Tok::Kw(k) => write!(f, "`{k}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "data",
    "input",
    "output",
    "define",
    "inline",
    "if",
    "then",
    "else",
    "true",
    "false",
    "stream",
    "value",
    "int",
    "bool",
    "float",
    "text",
    "otherwise",
];

// Longest first so that `||` wins over `|`.
const SYMBOLS: &[&str] = &[
    "||", "&&", "==", "/=", "<=", ">=", "->", "<", ">", "+", "-", "*", "/", "!", "(", ")", "[",
    "]", ",", "=", "|",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_keyword(s)
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn run(mut self) -> Result<Vec<(Tok, Span)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(0), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            if self.starts_with("--") {
                while !matches!(self.peek(0), None | Some('\n')) {
                    self.bump();
                }
                continue;
            }
            let span = self.span();
            let Some(c) = self.peek(0) else {
                out.push((Tok::Eof, span));
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                self.word()
            } else if c.is_ascii_digit() {
                self.number(span)?
            } else if c == '"' {
                self.string(span)?
            } else if c == '`' {
                self.quoted_ident(span)?
            } else if let Some(sym) = SYMBOLS.iter().find(|s| self.starts_with(s)) {
                for _ in 0..sym.len() {
                    self.bump();
                }
                Tok::Sym(sym)
            } else {
                return Err(ParseError::new(span, format!("unexpected character `{c}`")));
            };
            out.push((tok, span));
        }
    }

    fn word(&mut self) -> Tok {
        let mut s = String::new();
        while let Some(c) = self
            .peek(0)
            .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        {
            s.push(c);
            self.bump();
        }
        match KEYWORDS.iter().find(|k| **k == s) {
            Some(k) => Tok::Kw(k),
            None => Tok::Ident(s),
        }
    }

    fn digits(&mut self, s: &mut String) {
        while let Some(c) = self.peek(0).filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok, ParseError> {
        let mut s = String::new();
        self.digits(&mut s);
        let mut float = false;
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            float = true;
            s.push('.');
            self.bump();
            self.digits(&mut s);
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                float = true;
                s.push('e');
                self.bump();
                if sign {
                    s.push(self.bump().expect("sign"));
                }
                self.digits(&mut s);
            }
        }
        if float {
            s.parse()
                .map(Tok::Float)
                .map_err(|_| ParseError::new(span, format!("bad float literal `{s}`")))
        } else {
            s.parse()
                .map(Tok::Int)
                .map_err(|_| ParseError::new(span, format!("integer literal `{s}` is too large")))
        }
    }

    fn string(&mut self, span: Span) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError::new(span, "unterminated string literal"))
                }
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    _ => return Err(ParseError::new(self.span(), "unknown escape sequence")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    /// `` `once<s>` ``: names produced by template instantiation.
    fn quoted_ident(&mut self, span: Span) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError::new(span, "unterminated quoted identifier"))
                }
                Some('`') if s.is_empty() => {
                    return Err(ParseError::new(span, "empty quoted identifier"))
                }
                Some('`') => return Ok(Tok::Ident(s)),
                Some(c) => s.push(c),
            }
        }
    }
}
