//! Closed-form expressions over the variables `x`, `y` and `u`.
//!
//! The grammar is deliberately small: numeric literals, the three variables,
//! `+ - * / ^`, unary minus and the functions `sin cos exp log sqrt cosh sinh
//! tanh atan`. Precedence from tightest to loosest is `^`, unary `-`, `* /`,
//! `+ -`; `^` associates to the right. There is no implicit multiplication.
//!
//! Differentiation is exact and symbolic. The only rewriting performed on the
//! result is constant folding, so derivative trees stay predictable.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::U => "u",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "u" => Some(Var::U),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Cosh,
    Sinh,
    Tanh,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            _ => return None,
        })
    }
}

/// Abstract syntax tree. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

/// Values bound to the variables during evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Bindings {
    pub x: f64,
    pub y: f64,
    pub u: f64,
}

impl Bindings {
    pub fn xy(x: f64, y: f64) -> Self {
        Bindings { x, y, u: 0.0 }
    }

    pub fn u(u: f64) -> Self {
        Bindings { x: 0.0, y: 0.0, u }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::U => self.u,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum EvalError {
    #[error("domain error in `{subexpr}` at (x={}, y={}, u={}): {reason}", point.x, point.y, point.u)]
    Domain {
        subexpr: String,
        reason: String,
        point: Bindings,
    },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                // exponent only when followed by digits, so `2exp(x)` stays a syntax error
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: "number".into(),
                    found: format!("`{text}`"),
                })?;
                i = j;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let name: String = chars[i..j].iter().collect();
                i = j;
                out.push((Tok::Ident(name), start));
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: "expression".into(),
                    found: format!("character `{other}`"),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.product()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.product()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Expr::Var(v));
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { offset, name });
                };
                if *self.peek() != Tok::LParen {
                    return Err(self.error("`(` after function name"));
                }
                self.bump();
                let arg = self.sum()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error("expression")),
        }
    }
}

/// Parses `source` into an [`Expr`].
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Constant-folding constructors
// ---------------------------------------------------------------------------

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn is_num(&self, v: f64) -> bool {
        self.as_num() == Some(v)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
            (Some(x), _) if x == 0.0 => Expr::Num(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if x > 0.0 || y.fract() == 0.0 => {
                let v = x.powf(y);
                if v.is_finite() {
                    Expr::Num(v)
                } else {
                    Expr::Pow(Box::new(a), Box::new(b))
                }
            }
            (_, Some(y)) if y == 0.0 => Expr::Num(1.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_num() {
            if let Ok(v) = apply_func(f, x) {
                return Expr::Num(v);
            }
        }
        Expr::Call(f, Box::new(a))
    }

    /// True when the tree mentions `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => 1 + a.size() + b.size(),
        }
    }
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

/// Exact symbolic derivative of `e` with respect to `var`.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    use Expr as E;
    match e {
        E::Num(_) => E::num(0.0),
        E::Var(v) => E::num(if *v == var { 1.0 } else { 0.0 }),
        E::Neg(a) => E::neg(differentiate(a, var)),
        E::Add(a, b) => E::add(differentiate(a, var), differentiate(b, var)),
        E::Sub(a, b) => E::sub(differentiate(a, var), differentiate(b, var)),
        E::Mul(a, b) => E::add(
            E::mul(differentiate(a, var), (**b).clone()),
            E::mul((**a).clone(), differentiate(b, var)),
        ),
        E::Div(a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            if db.is_num(0.0) {
                return E::div(da, (**b).clone());
            }
            E::div(
                E::sub(E::mul(da, (**b).clone()), E::mul((**a).clone(), db)),
                E::pow((**b).clone(), E::num(2.0)),
            )
        }
        E::Pow(a, b) => {
            let a_dep = a.depends_on(var);
            let b_dep = b.depends_on(var);
            match (a_dep, b_dep) {
                (false, false) => E::num(0.0),
                (true, false) => {
                    // b * a^(b-1) * a'
                    let lowered = E::pow((**a).clone(), E::sub((**b).clone(), E::num(1.0)));
                    E::mul(E::mul((**b).clone(), lowered), differentiate(a, var))
                }
                (false, true) => E::mul(
                    E::mul(e.clone(), E::call(Func::Log, (**a).clone())),
                    differentiate(b, var),
                ),
                (true, true) => {
                    // a^b * (b' ln a + b a' / a)
                    let t1 = E::mul(differentiate(b, var), E::call(Func::Log, (**a).clone()));
                    let t2 = E::div(
                        E::mul((**b).clone(), differentiate(a, var)),
                        (**a).clone(),
                    );
                    E::mul(e.clone(), E::add(t1, t2))
                }
            }
        }
        E::Call(f, a) => {
            let da = differentiate(a, var);
            if da.is_num(0.0) {
                return E::num(0.0);
            }
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => E::call(Func::Cos, inner),
                Func::Cos => E::neg(E::call(Func::Sin, inner)),
                Func::Exp => E::call(Func::Exp, inner),
                Func::Log => return E::div(da, inner),
                Func::Sqrt => {
                    return E::div(da, E::mul(E::num(2.0), E::call(Func::Sqrt, inner)))
                }
                Func::Cosh => E::call(Func::Sinh, inner),
                Func::Sinh => E::call(Func::Cosh, inner),
                Func::Tanh => E::sub(
                    E::num(1.0),
                    E::pow(E::call(Func::Tanh, inner), E::num(2.0)),
                ),
                Func::Atan => {
                    return E::div(da, E::add(E::num(1.0), E::pow(inner, E::num(2.0))))
                }
            };
            E::mul(outer, da)
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

fn apply_func(f: Func, x: f64) -> Result<f64, &'static str> {
    let v = match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err("log of non-positive argument");
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err("sqrt of negative argument");
            }
            x.sqrt()
        }
        Func::Cosh => x.cosh(),
        Func::Sinh => x.sinh(),
        Func::Tanh => x.tanh(),
        Func::Atan => x.atan(),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err("non-finite result")
    }
}

fn integer_exponent(b: f64) -> Option<i32> {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        Some(b as i32)
    } else {
        None
    }
}

impl Expr {
    /// Evaluates the tree. Pure and deterministic.
    pub fn eval(&self, at: &Bindings) -> Result<f64, EvalError> {
        let fail = |e: &Expr, reason: &str| EvalError::Domain {
            subexpr: e.to_string(),
            reason: reason.to_string(),
            point: *at,
        };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => at.get(*v),
            Expr::Neg(a) => -a.eval(at)?,
            Expr::Add(a, b) => a.eval(at)? + b.eval(at)?,
            Expr::Sub(a, b) => a.eval(at)? - b.eval(at)?,
            Expr::Mul(a, b) => a.eval(at)? * b.eval(at)?,
            Expr::Div(a, b) => {
                let num = a.eval(at)?;
                let den = b.eval(at)?;
                if den == 0.0 {
                    return Err(fail(self, "division by zero"));
                }
                num / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval(at)?;
                let exp = b.eval(at)?;
                match integer_exponent(exp) {
                    Some(n) => {
                        if base == 0.0 && n < 0 {
                            return Err(fail(self, "division by zero"));
                        }
                        base.powi(n)
                    }
                    None => {
                        if base <= 0.0 {
                            return Err(fail(self, "non-integer power of non-positive base"));
                        }
                        base.powf(exp)
                    }
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(at)?;
                apply_func(*f, x).map_err(|r| fail(self, r))?
            }
        };
        if !v.is_finite() {
            return Err(fail(self, "non-finite result"));
        }
        Ok(v)
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.eval(&Bindings::xy(x, y))
    }

    pub fn eval_u(&self, u: f64) -> Result<f64, EvalError> {
        self.eval(&Bindings::u(u))
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_bare(f)?;
            write!(f, ")")
        } else {
            self.fmt_bare(f)
        }
    }

    fn fmt_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 3)
            }
            Expr::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")?;
                b.fmt_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "/")?;
                b.fmt_at(f, 3)
            }
            Expr::Pow(a, b) => {
                a.fmt_at(f, 5)?;
                write!(f, "^")?;
                b.fmt_at(f, 3)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_bare(f)
    }
}

// ---------------------------------------------------------------------------
// Derivative bundles
// ---------------------------------------------------------------------------

/// Value and all partial derivatives through third order at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DiffBundle {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
    pub fxxx: f64,
    pub fxxy: f64,
    pub fxyy: f64,
    pub fyyy: f64,
}

/// Symbolic derivative trees of a potential `f(x, y)` through third order,
/// built once and evaluated many times.
#[derive(Clone, Debug)]
pub struct DerivativeTrees {
    source: Expr,
    fx: Expr,
    fy: Expr,
    fxx: Expr,
    fxy: Expr,
    fyy: Expr,
    fxxx: Expr,
    fxxy: Expr,
    fxyy: Expr,
    fyyy: Expr,
}

impl DerivativeTrees {
    pub fn new(e: &Expr) -> Self {
        let fx = differentiate(e, Var::X);
        let fy = differentiate(e, Var::Y);
        let fxx = differentiate(&fx, Var::X);
        let fxy = differentiate(&fx, Var::Y);
        let fyy = differentiate(&fy, Var::Y);
        let fxxx = differentiate(&fxx, Var::X);
        let fxxy = differentiate(&fxx, Var::Y);
        let fxyy = differentiate(&fxy, Var::Y);
        let fyyy = differentiate(&fyy, Var::Y);
        DerivativeTrees {
            source: e.clone(),
            fx,
            fy,
            fxx,
            fxy,
            fyy,
            fxxx,
            fxxy,
            fxyy,
            fyyy,
        }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<DiffBundle, EvalError> {
        let at = Bindings::xy(x, y);
        Ok(DiffBundle {
            f: self.source.eval(&at)?,
            fx: self.fx.eval(&at)?,
            fy: self.fy.eval(&at)?,
            fxx: self.fxx.eval(&at)?,
            fxy: self.fxy.eval(&at)?,
            fyy: self.fyy.eval(&at)?,
            fxxx: self.fxxx.eval(&at)?,
            fxxy: self.fxxy.eval(&at)?,
            fxyy: self.fxyy.eval(&at)?,
            fyyy: self.fyyy.eval(&at)?,
        })
    }
}

/// All derivatives of `e` through order three at `point`.
pub fn eval_bundle(e: &Expr, point: (f64, f64)) -> Result<DiffBundle, EvalError> {
    DerivativeTrees::new(e).eval(point.0, point.1)
}
