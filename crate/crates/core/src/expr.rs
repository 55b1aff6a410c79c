//! Symbolic expressions over input columns.
//!
//! An [`Expression`] is a tree of registered unary and binary operators over
//! input variables. Variables print 1-based (`x1` is column 0). The printed
//! form is also the canonical key used for deduplication and parses back to
//! the same tree:
//!
//! ```
//! use symrank::expr::Expression;
//!
//! let e: Expression = "(x3 + x1)^3".parse().unwrap();
//! assert_eq!(e.canonical().to_string(), "(x1 + x3)^3");
//! let s: Expression = "sin(4*x + 0.2)".parse().unwrap();
//! assert_eq!(s.to_string(), "sin[4,0.2](x1)");
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Unary operators. `Sin`, `Cos` and `Affine` carry parameters and compute
/// `sin(a*x + b)`, `cos(a*x + b)` and `a*x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryOp {
    Id,
    Square,
    Cube,
    Exp,
    Sin { a: f64, b: f64 },
    Cos { a: f64, b: f64 },
    Affine { a: f64, b: f64 },
}

impl UnaryOp {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            UnaryOp::Id => v,
            UnaryOp::Square => v * v,
            UnaryOp::Cube => v * v * v,
            UnaryOp::Exp => v.exp(),
            UnaryOp::Sin { a, b } => (a * v + b).sin(),
            UnaryOp::Cos { a, b } => (a * v + b).cos(),
            UnaryOp::Affine { a, b } => a * v + b,
        }
    }

    /// Looks up a built-in by name. `a`/`b` default to 1 and 0.
    pub fn from_name(name: &str, a: Option<f64>, b: Option<f64>) -> Result<Self> {
        let (a, b) = (a.unwrap_or(1.0), b.unwrap_or(0.0));
        let plain = |op: UnaryOp| {
            if a == 1.0 && b == 0.0 {
                Ok(op)
            } else {
                Err(Error::UnknownOperator(format!("{name}[{a},{b}] (operator takes no parameters)")))
            }
        };
        match name {
            "id" | "identity" => plain(UnaryOp::Id),
            "square" | "x^2" => plain(UnaryOp::Square),
            "cube" | "x^3" => plain(UnaryOp::Cube),
            "exp" => plain(UnaryOp::Exp),
            "sin" => Ok(UnaryOp::Sin { a, b }),
            "cos" => Ok(UnaryOp::Cos { a, b }),
            "affine" => Ok(UnaryOp::Affine { a, b }),
            _ => Err(Error::UnknownOperator(name.to_owned())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Id => "id",
            UnaryOp::Square => "square",
            UnaryOp::Cube => "cube",
            UnaryOp::Exp => "exp",
            UnaryOp::Sin { .. } => "sin",
            UnaryOp::Cos { .. } => "cos",
            UnaryOp::Affine { .. } => "affine",
        }
    }

    fn normalized(self) -> Self {
        // -0.0 and 0.0 must print identically
        let z = |v: f64| v + 0.0;
        match self {
            UnaryOp::Sin { a, b } => UnaryOp::Sin { a: z(a), b: z(b) },
            UnaryOp::Cos { a, b } => UnaryOp::Cos { a: z(a), b: z(b) },
            UnaryOp::Affine { a, b } => UnaryOp::Affine { a: z(a), b: z(b) },
            op => op,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn apply(self, l: f64, r: f64) -> f64 {
        match self {
            BinaryOp::Add => l + r,
            BinaryOp::Sub => l - r,
            BinaryOp::Mul => l * r,
            BinaryOp::Div => l / r,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Mul)
    }

    /// Division is only defined off zero denominators.
    pub fn is_partial(self) -> bool {
        matches!(self, BinaryOp::Div)
    }

    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "+" | "add" | "plus" => Ok(BinaryOp::Add),
            "-" | "sub" | "minus" => Ok(BinaryOp::Sub),
            "*" | "x" | "×" | "mul" | "times" => Ok(BinaryOp::Mul),
            "/" | "div" => Ok(BinaryOp::Div),
            _ => Err(Error::UnknownOperator(name.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Var(usize),
    Unary(UnaryOp, Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn var(k: usize) -> Self {
        Expression::Var(k)
    }

    pub fn unary(op: UnaryOp, e: Expression) -> Self {
        Expression::Unary(op.normalized(), Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expression, r: Expression) -> Self {
        Expression::Binary(op, Box::new(l), Box::new(r))
    }

    /// Drops identity nodes and orders operands of commutative operators by
    /// their printed form. Idempotent.
    pub fn canonical(&self) -> Expression {
        match self {
            Expression::Var(k) => Expression::Var(*k),
            Expression::Unary(UnaryOp::Id, c) => c.canonical(),
            Expression::Unary(op, c) => Expression::unary(*op, c.canonical()),
            Expression::Binary(op, l, r) => {
                let (l, r) = (l.canonical(), r.canonical());
                if op.is_commutative() && r.to_string() < l.to_string() {
                    Expression::binary(*op, r, l)
                } else {
                    Expression::binary(*op, l, r)
                }
            }
        }
    }

    /// Canonical printed form, the deduplication key.
    pub fn key(&self) -> String {
        self.canonical().to_string()
    }

    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expression::Var(k) => {
                out.insert(*k);
            }
            Expression::Unary(_, c) => c.collect_vars(out),
            Expression::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn check_arity(&self, d: usize) -> Result<()> {
        match self.variables().last() {
            Some(&k) if k >= d => Err(Error::VariableOutOfRange { index: k, d }),
            _ => Ok(()),
        }
    }

    /// True if the tree contains a partial operator such as division.
    pub fn has_partial_op(&self) -> bool {
        match self {
            Expression::Var(_) => false,
            Expression::Unary(_, c) => c.has_partial_op(),
            Expression::Binary(op, l, r) => op.is_partial() || l.has_partial_op() || r.has_partial_op(),
        }
    }

    pub fn eval_row(&self, row: &[f64]) -> f64 {
        match self {
            Expression::Var(k) => row[*k],
            Expression::Unary(op, c) => op.apply(c.eval_row(row)),
            Expression::Binary(op, l, r) => op.apply(l.eval_row(row), r.eval_row(row)),
        }
    }

    /// Evaluates on every row of a column-major input.
    pub fn eval_columns(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Expression::Var(k) => columns[*k].clone(),
            Expression::Unary(op, c) => {
                let mut v = c.eval_columns(columns);
                v.iter_mut().for_each(|x| *x = op.apply(*x));
                v
            }
            Expression::Binary(op, l, r) => {
                let mut lv = l.eval_columns(columns);
                let rv = r.eval_columns(columns);
                lv.iter_mut().zip(rv).for_each(|(a, b)| *a = op.apply(*a, b));
                lv
            }
        }
    }

    /// Evaluates a single-variable expression at `x`.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        self.eval_row(std::slice::from_ref(&x))
    }
}

fn fmt_params(f: &mut fmt::Formatter<'_>, name: &str, a: f64, b: f64, c: &Expression) -> fmt::Result {
    write!(f, "{name}[{a},{b}]({c})")
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Var(k) => write!(f, "x{}", k + 1),
            Expression::Unary(op, c) => match *op {
                UnaryOp::Id => write!(f, "id({c})"),
                UnaryOp::Square => write!(f, "{c}^2"),
                UnaryOp::Cube => write!(f, "{c}^3"),
                UnaryOp::Exp => write!(f, "exp({c})"),
                UnaryOp::Sin { a, b } if a == 1.0 && b == 0.0 => write!(f, "sin({c})"),
                UnaryOp::Cos { a, b } if a == 1.0 && b == 0.0 => write!(f, "cos({c})"),
                UnaryOp::Sin { a, b } => fmt_params(f, "sin", a, b, c),
                UnaryOp::Cos { a, b } => fmt_params(f, "cos", a, b, c),
                UnaryOp::Affine { a, b } => fmt_params(f, "affine", a, b, c),
            },
            Expression::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parser::new(s)?.parse()
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

/// Partially parsed value. Numeric literals have no leaf node of their own;
/// they accumulate into a pending `a*e + b` that is either absorbed by
/// `sin`/`cos` or materialized as an `affine` node.
enum Value {
    Const(f64),
    Lin(Expression, f64, f64),
}

impl Value {
    fn expr(e: Expression) -> Self {
        Value::Lin(e, 1.0, 0.0)
    }
}

fn materialize(e: Expression, a: f64, b: f64) -> Expression {
    if a == 1.0 && b == 0.0 {
        e
    } else {
        Expression::unary(UnaryOp::Affine { a, b }, e)
    }
}

struct Parser<'a> {
    input: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Result<Self> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = input.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
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
                let text: String = chars[start..i].iter().collect();
                let v = text.parse().map_err(|_| Self::error_in(input, format!("bad number {text:?}")))?;
                tokens.push(Token::Num(v));
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            } else if "+-*/^()[],×".contains(c) {
                tokens.push(Token::Sym(if c == '×' { '*' } else { c }));
                i += 1;
            } else {
                return Err(Self::error_in(input, format!("unexpected character {c:?}")));
            }
        }
        Ok(Self { input, tokens, pos: 0 })
    }

    fn error_in(input: &str, message: String) -> Error {
        Error::ExprParse { input: input.to_owned(), message }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Self::error_in(self.input, message.into())
    }

    fn eat(&mut self, sym: char) -> bool {
        if self.tokens.get(self.pos) == Some(&Token::Sym(sym)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: char) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected {sym:?}")))
        }
    }

    fn parse(mut self) -> Result<Expression> {
        if self.tokens.is_empty() {
            return Err(self.error("empty expression"));
        }
        let v = self.expr()?;
        if self.pos != self.tokens.len() {
            return Err(self.error("trailing input"));
        }
        match v {
            Value::Lin(e, a, b) => Ok(materialize(e, a, b)),
            Value::Const(_) => Err(self.error("constant expressions are not supported")),
        }
    }

    fn expr(&mut self) -> Result<Value> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                acc = self.combine(BinaryOp::Add, acc, rhs)?;
            } else if self.eat('-') {
                let rhs = self.term()?;
                acc = self.combine(BinaryOp::Sub, acc, rhs)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Value> {
        let mut acc = self.signed()?;
        loop {
            if self.eat('*') {
                let rhs = self.signed()?;
                acc = self.combine(BinaryOp::Mul, acc, rhs)?;
            } else if self.eat('/') {
                let rhs = self.signed()?;
                acc = self.combine(BinaryOp::Div, acc, rhs)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn signed(&mut self) -> Result<Value> {
        if self.eat('-') {
            Ok(match self.signed()? {
                Value::Const(c) => Value::Const(-c),
                Value::Lin(e, a, b) => Value::Lin(e, -a, -b),
            })
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Value> {
        let mut base = self.atom()?;
        while self.eat('^') {
            let p = match self.tokens.get(self.pos) {
                Some(Token::Num(p)) => *p,
                _ => return Err(self.error("expected exponent")),
            };
            self.pos += 1;
            base = match base {
                Value::Const(c) => Value::Const(c.powf(p)),
                Value::Lin(e, a, b) => {
                    let e = materialize(e, a, b);
                    match p {
                        1.0 => Value::expr(e),
                        2.0 => Value::expr(Expression::unary(UnaryOp::Square, e)),
                        3.0 => Value::expr(Expression::unary(UnaryOp::Cube, e)),
                        _ => return Err(self.error(format!("only exponents 1, 2 and 3 are supported, got {p}"))),
                    }
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Value> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Value::Const(v))
            }
            Some(Token::Sym('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if let Some(k) = variable_index(&name) {
                    return Ok(Value::expr(Expression::Var(k)));
                }
                let params = if self.eat('[') { Some(self.params()?) } else { None };
                self.expect('(')?;
                let (inner, a, b) = match self.expr()? {
                    Value::Lin(e, a, b) => (e, a, b),
                    Value::Const(_) => return Err(self.error(format!("{name} of a constant"))),
                };
                self.expect(')')?;
                let op = match params.as_deref() {
                    None => UnaryOp::from_name(&name, None, None)?,
                    Some([a]) => UnaryOp::from_name(&name, Some(*a), None)?,
                    Some([a, b]) => UnaryOp::from_name(&name, Some(*a), Some(*b))?,
                    Some(_) => return Err(self.error("expected one or two parameters")),
                };
                let e = match op {
                    // sin(a*e + b) written with literals becomes sin[a,b](e)
                    UnaryOp::Sin { .. } if params.is_none() => Expression::unary(UnaryOp::Sin { a, b }, inner),
                    UnaryOp::Cos { .. } if params.is_none() => Expression::unary(UnaryOp::Cos { a, b }, inner),
                    op => Expression::unary(op, materialize(inner, a, b)),
                };
                Ok(Value::expr(e))
            }
            _ => Err(self.error("unexpected end of input or symbol")),
        }
    }

    fn params(&mut self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        loop {
            let neg = self.eat('-');
            match self.tokens.get(self.pos) {
                Some(Token::Num(v)) => out.push(if neg { -v } else { *v }),
                _ => return Err(self.error("expected numeric parameter")),
            }
            self.pos += 1;
            if self.eat(']') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn combine(&self, op: BinaryOp, l: Value, r: Value) -> Result<Value> {
        use Value::{Const, Lin};
        Ok(match (op, l, r) {
            (op, Const(x), Const(y)) => Const(op.apply(x, y)),
            (BinaryOp::Add, Lin(e, a, b), Const(c)) | (BinaryOp::Add, Const(c), Lin(e, a, b)) => Lin(e, a, b + c),
            (BinaryOp::Sub, Lin(e, a, b), Const(c)) => Lin(e, a, b - c),
            (BinaryOp::Sub, Const(c), Lin(e, a, b)) => Lin(e, -a, c - b),
            (BinaryOp::Mul, Lin(e, a, b), Const(c)) | (BinaryOp::Mul, Const(c), Lin(e, a, b)) => Lin(e, a * c, b * c),
            (BinaryOp::Div, Lin(e, a, b), Const(c)) => Lin(e, a / c, b / c),
            (BinaryOp::Div, Const(_), Lin(..)) => {
                return Err(self.error("a constant divided by an expression is not supported"))
            }
            (op, Lin(l, la, lb), Lin(r, ra, rb)) => {
                Value::expr(Expression::binary(op, materialize(l, la, lb), materialize(r, ra, rb)))
            }
        })
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('x')?;
    if rest.is_empty() {
        return Some(0);
    }
    match rest.parse::<usize>() {
        Ok(k) if k >= 1 && !rest.starts_with('0') => Some(k - 1),
        _ => None,
    }
}
