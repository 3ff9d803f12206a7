//! Expression grammar for plaque families.
//!
//! ```text
//! family := expr (';' expr)*
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' uint)?
//! atom   := literal | 'z'k | 'a'k | 'abs(' expr ')' | '(' expr ')'
//! ```
//!
//! Literals are unsigned decimals with an optional `i` suffix (`0.3`,
//! `2.5i`). Variables `z1..zq` are leaf coordinates and may only appear
//! under holomorphic operations; `a1..ad` are transversal parameters.

use std::fmt;

use thiserror::Error;

use crate::numerics::C64;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(C64),
    /// Leaf coordinate, 1-based.
    Z(usize),
    /// Transversal parameter, 1-based.
    A(usize),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: leaf variable {var} under abs() breaks holomorphy")]
    HolomorphyGuard {
        var: String,
        line: usize,
        col: usize,
    },
}

/// A parsed family: one expression per normal coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyExpression {
    pub components: Vec<Expr>,
}

impl FamilyExpression {
    /// Largest leaf-variable index used (0 if none).
    pub fn max_z(&self) -> usize {
        self.components.iter().map(Expr::max_z).max().unwrap_or(0)
    }

    /// Largest parameter index used (0 if none).
    pub fn max_a(&self) -> usize {
        self.components.iter().map(Expr::max_a).max().unwrap_or(0)
    }
}

impl fmt::Display for FamilyExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

pub fn parse_family(text: &str) -> Result<FamilyExpression, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut components = vec![p.expr()?];
    while p.eat(&Tok::Semi) {
        components.push(p.expr()?);
    }
    if let Some(t) = p.peek() {
        return Err(p.error_at(t, format!("unexpected {}", t.tok.describe())));
    }
    Ok(FamilyExpression { components })
}

/// Parses a single expression (no `;`).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let fam = parse_family(text)?;
    if fam.components.len() != 1 {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: format!("expected one expression, found {}", fam.components.len()),
        });
    }
    Ok(fam.components.into_iter().next().unwrap())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Z(usize),
    A(usize),
    Abs,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Caret,
    Semi,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(..) => "number".into(),
            Tok::Z(k) => format!("z{k}"),
            Tok::A(k) => format!("a{k}"),
            Tok::Abs => "abs".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Semi => "';'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
    /// Raw text for integer exponents.
    text: String,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| ParseError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = (line, col);
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                line,
                col,
                text: c.to_string(),
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| err(start.0, start.1, format!("malformed number '{text}'")))?;
            let imag = i < chars.len() && chars[i] == 'i';
            let mut consumed = i - s;
            if imag {
                i += 1;
                consumed += 1;
            }
            if i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                return Err(err(
                    line,
                    col + consumed,
                    format!("unexpected character '{}' after number", chars[i]),
                ));
            }
            out.push(Spanned {
                tok: Tok::Num(v, imag),
                line: start.0,
                col: start.1,
                text,
            });
            col += consumed;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            let tok = if word == "abs" {
                Tok::Abs
            } else {
                let (head, digits) = word.split_at(1);
                let index = digits.parse::<usize>().ok().filter(|k| *k >= 1);
                match (head, index) {
                    ("z", Some(k)) => Tok::Z(k),
                    ("a", Some(k)) => Tok::A(k),
                    _ => {
                        return Err(err(
                            start.0,
                            start.1,
                            format!("unknown identifier '{word}'"),
                        ))
                    }
                }
            };
            out.push(Spanned {
                tok,
                line: start.0,
                col: start.1,
                text: word.clone(),
            });
            col += i - s;
            continue;
        }
        return Err(err(line, col, format!("unexpected character '{c}'")));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek().map(|s| &s.tok) == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error_at(&self, at: &Spanned, message: String) -> ParseError {
        ParseError::Syntax {
            line: at.line,
            col: at.col,
            message,
        }
    }

    fn error_here(&self, message: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error_at(t, format!("{message}, found {}", t.tok.describe())),
            None => {
                let (line, col) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.col + t.text.chars().count()))
                    .unwrap_or((1, 1));
                ParseError::Syntax {
                    line,
                    col,
                    message: format!("{message}, found end of input"),
                }
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.eat(&Tok::Star) {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            match self.peek().cloned() {
                Some(Spanned {
                    tok: Tok::Num(_, false),
                    text,
                    ..
                }) if text.chars().all(|c| c.is_ascii_digit()) => {
                    let at = self.peek().cloned().unwrap();
                    let n = text
                        .parse::<u32>()
                        .map_err(|_| self.error_at(&at, "exponent too large".into()))?;
                    self.pos += 1;
                    return Ok(Expr::Pow(Box::new(base), n));
                }
                _ => return Err(self.error_here("expected an unsigned integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.error_here("expected a literal, variable, abs( or '('"));
        };
        match t.tok {
            Tok::Num(v, imag) => {
                self.pos += 1;
                Ok(Expr::Lit(if imag { C64::new(0.0, v) } else { C64::new(v, 0.0) }))
            }
            Tok::Z(k) => {
                self.pos += 1;
                Ok(Expr::Z(k))
            }
            Tok::A(k) => {
                self.pos += 1;
                Ok(Expr::A(k))
            }
            Tok::Abs => {
                self.pos += 1;
                if !self.eat(&Tok::LParen) {
                    return Err(self.error_here("expected '(' after abs"));
                }
                let inner_start = self.pos;
                let inner = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.error_here("expected ')' closing abs("));
                }
                if let Some(z) = self.tokens[inner_start..self.pos]
                    .iter()
                    .find(|s| matches!(s.tok, Tok::Z(_)))
                {
                    return Err(ParseError::HolomorphyGuard {
                        var: z.text.clone(),
                        line: z.line,
                        col: z.col,
                    });
                }
                Ok(Expr::Abs(Box::new(inner)))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.error_here("expected ')'"));
                }
                Ok(e)
            }
            _ => Err(self.error_here("expected a literal, variable, abs( or '('")),
        }
    }
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Pow(..) => 3,
            Expr::Lit(c) if c.re != 0.0 && c.im != 0.0 => 1,
            _ => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Lit(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", c.re)
                } else if c.re == 0.0 {
                    write!(f, "{}i", c.im)
                } else {
                    write!(f, "{} + {}i", c.re, c.im)
                }
            }
            Expr::Z(k) => write!(f, "z{k}"),
            Expr::A(k) => write!(f, "a{k}"),
            Expr::Abs(e) => {
                f.write_str("abs(")?;
                e.write_at(f, 0)?;
                f.write_str(")")
            }
            Expr::Add(l, r) | Expr::Sub(l, r) => {
                l.write_at(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                r.write_at(f, 2)
            }
            Expr::Mul(l, r) => {
                l.write_at(f, 2)?;
                f.write_str("*")?;
                r.write_at(f, 3)
            }
            Expr::Pow(b, n) => {
                b.write_at(f, 4)?;
                write!(f, "^{n}")
            }
        }
    }

    pub fn max_z(&self) -> usize {
        self.fold_vars(&|e| if let Expr::Z(k) = e { *k } else { 0 })
    }

    pub fn max_a(&self) -> usize {
        self.fold_vars(&|e| if let Expr::A(k) = e { *k } else { 0 })
    }

    fn fold_vars(&self, leaf: &dyn Fn(&Expr) -> usize) -> usize {
        match self {
            Expr::Abs(e) | Expr::Pow(e, _) => e.fold_vars(leaf),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                l.fold_vars(leaf).max(r.fold_vars(leaf))
            }
            _ => leaf(self),
        }
    }

    /// Value at leaf point `z` and parameter `a`.
    pub fn eval(&self, z: &[C64], a: &[C64]) -> C64 {
        match self {
            Expr::Lit(c) => *c,
            Expr::Z(k) => z[k - 1],
            Expr::A(k) => a[k - 1],
            Expr::Abs(e) => C64::new(e.eval(z, a).norm(), 0.0),
            Expr::Add(l, r) => l.eval(z, a) + r.eval(z, a),
            Expr::Sub(l, r) => l.eval(z, a) - r.eval(z, a),
            Expr::Mul(l, r) => l.eval(z, a) * r.eval(z, a),
            Expr::Pow(b, n) => b.eval(z, a).powu(*n),
        }
    }

    /// Value and complex gradient in `z` (forward mode), for up to
    /// [`MAX_DUAL`] leaf coordinates.
    pub fn eval_dual(&self, z: &[C64], a: &[C64]) -> Dual {
        match self {
            Expr::Lit(c) => Dual::constant(*c),
            Expr::Z(k) => {
                let mut d = Dual::constant(z[k - 1]);
                d.d[k - 1] = C64::new(1.0, 0.0);
                d
            }
            Expr::A(k) => Dual::constant(a[k - 1]),
            // abs() never encloses a leaf variable, so its gradient is zero.
            Expr::Abs(e) => Dual::constant(C64::new(e.eval(z, a).norm(), 0.0)),
            Expr::Add(l, r) => l.eval_dual(z, a).add(&r.eval_dual(z, a)),
            Expr::Sub(l, r) => l.eval_dual(z, a).sub(&r.eval_dual(z, a)),
            Expr::Mul(l, r) => l.eval_dual(z, a).mul(&r.eval_dual(z, a)),
            Expr::Pow(b, n) => b.eval_dual(z, a).powu(*n),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

pub const MAX_DUAL: usize = 4;

/// Complex value with its gradient in up to four holomorphic variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: C64,
    pub d: [C64; MAX_DUAL],
}

impl Dual {
    pub fn constant(v: C64) -> Self {
        Dual {
            v,
            d: [C64::new(0.0, 0.0); MAX_DUAL],
        }
    }

    fn add(&self, o: &Dual) -> Dual {
        let mut d = self.d;
        d.iter_mut().zip(&o.d).for_each(|(x, y)| *x += y);
        Dual { v: self.v + o.v, d }
    }

    fn sub(&self, o: &Dual) -> Dual {
        let mut d = self.d;
        d.iter_mut().zip(&o.d).for_each(|(x, y)| *x -= y);
        Dual { v: self.v - o.v, d }
    }

    fn mul(&self, o: &Dual) -> Dual {
        let mut d = [C64::new(0.0, 0.0); MAX_DUAL];
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = self.d[k] * o.v + self.v * o.d[k];
        }
        Dual { v: self.v * o.v, d }
    }

    fn powu(&self, n: u32) -> Dual {
        if n == 0 {
            return Dual::constant(C64::new(1.0, 0.0));
        }
        let scale = self.v.powu(n - 1) * n as f64;
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= scale);
        Dual {
            v: self.v.powu(n),
            d,
        }
    }
}
