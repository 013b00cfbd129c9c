//! Term language for partial numerators, partial denominators and closed-form
//! hypotheses.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := postfix ('^' unary)?          right-associative
//! postfix := atom '!'*
//! atom    := INTEGER | IDENT | IDENT '(' args ')' | '(' expr ')'
//! calls   := fact(e) | binom(e1, e2) | sum(var, lo, hi, body)
//! ```
//!
//! Precedence from low to high: additive (`+`, `-`), multiplicative (`*`,
//! `/`), unary minus, power (`^`, right-associative), postfix and calls.
//! Implicit multiplication is not supported, and there are no decimal
//! literals. `n!` is accepted as shorthand for `fact(n)`.
//!
//! Evaluation is exact over [`BigRational`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest factorial / binomial argument, exponent magnitude and sum length
/// the evaluator accepts.
const EVAL_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(BigInt),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Factorial(Box<Expr>),
    Binomial(Box<Expr>, Box<Expr>),
    Sum {
        var: String,
        lo: Box<Expr>,
        hi: Box<Expr>,
        body: Box<Expr>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("`{name}` at offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    /// 0-based character offset of the error.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("{function} requires a nonnegative integer argument, got {value}")]
    InvalidArgument {
        function: &'static str,
        value: BigRational,
    },
    #[error("exponent must be an integer, got {0}")]
    NonIntegerExponent(BigRational),
    #[error("sum bound must be an integer, got {0}")]
    NonIntegerBound(BigRational),
    #[error("{what} {value} exceeds the evaluation limit")]
    TooLarge { what: &'static str, value: BigInt },
}

impl Expr {
    pub fn int(value: impl Into<BigInt>) -> Expr {
        Expr::Int(value.into())
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Pow(Box::new(self), Box::new(exponent))
    }

    pub fn factorial(self) -> Expr {
        Expr::Factorial(Box::new(self))
    }

    pub fn binomial(top: Expr, bottom: Expr) -> Expr {
        Expr::Binomial(Box::new(top), Box::new(bottom))
    }

    pub fn sum(var: &str, lo: Expr, hi: Expr, body: Expr) -> Expr {
        Expr::Sum {
            var: var.to_string(),
            lo: Box::new(lo),
            hi: Box::new(hi),
            body: Box::new(body),
        }
    }

    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse(text)
    }

    pub fn render(&self) -> String {
        render(self)
    }

    /// Variables not bound by an enclosing `sum`.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(name) => {
                if !bound.contains(&name.as_str()) {
                    out.insert(name.clone());
                }
            }
            Expr::Neg(e) | Expr::Factorial(e) => e.collect_free(bound, out),
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r)
            | Expr::Binomial(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Expr::Sum { var, lo, hi, body } => {
                lo.collect_free(bound, out);
                hi.collect_free(bound, out);
                bound.push(var);
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Capture-avoiding substitution of `replacement` for free occurrences of
    /// `name`.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        let map = |e: &Expr| Box::new(e.substitute(name, replacement));
        match self {
            Expr::Int(_) => self.clone(),
            Expr::Var(v) if v == name => replacement.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(map(e)),
            Expr::Factorial(e) => Expr::Factorial(map(e)),
            Expr::Add(l, r) => Expr::Add(map(l), map(r)),
            Expr::Sub(l, r) => Expr::Sub(map(l), map(r)),
            Expr::Mul(l, r) => Expr::Mul(map(l), map(r)),
            Expr::Div(l, r) => Expr::Div(map(l), map(r)),
            Expr::Pow(l, r) => Expr::Pow(map(l), map(r)),
            Expr::Binomial(l, r) => Expr::Binomial(map(l), map(r)),
            Expr::Sum { var, lo, hi, body } => {
                if var == name {
                    return Expr::Sum {
                        var: var.clone(),
                        lo: map(lo),
                        hi: map(hi),
                        body: body.clone(),
                    };
                }
                let repl_free = replacement.free_vars();
                let (var, body) = if repl_free.contains(var) {
                    let mut taken = body.free_vars();
                    taken.extend(repl_free);
                    taken.insert(name.to_string());
                    let fresh = (1..)
                        .map(|i| format!("{var}{i}"))
                        .find(|cand| !taken.contains(cand))
                        .expect("unbounded supply of names");
                    let renamed = body.substitute(var, &Expr::Var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (var.clone(), (**body).clone())
                };
                Expr::Sum {
                    var,
                    lo: map(lo),
                    hi: map(hi),
                    body: Box::new(body.substitute(name, replacement)),
                }
            }
        }
    }

    pub fn evaluate(&self, bindings: &HashMap<String, BigRational>) -> Result<BigRational, EvalError> {
        Evaluator::new().evaluate(self, bindings)
    }

    /// Evaluates with a single binding, typically `n`.
    pub fn eval_at(&self, var: &str, value: &BigRational) -> Result<BigRational, EvalError> {
        Evaluator::new().eval_at(self, var, value)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Bang,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Bang => "`!`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
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
            '!' => Tok::Bang,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '0'..='9' => {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                toks.push((start, Tok::Int(digits.parse().expect("ascii digits"))));
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((start, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: "an expression token".into(),
                    found: format!("character `{other}`"),
                })
            }
        };
        toks.push((start, tok));
        i += 1;
    }
    toks.push((chars.len(), Tok::Eof));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof, "an operator or end of input")?;
    Ok(e)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(expected)
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.postfix()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            return Ok(base.pow(self.unary()?));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Bang {
            self.bump();
            e = e.factorial();
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    self.call(name, offset)
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => self.error("an expression"),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        let arity = match name.as_str() {
            "fact" => 1,
            "binom" => 2,
            "sum" => 4,
            _ => return Err(ParseError::UnknownFunction { name, offset }),
        };
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let arg_offset = self.offset();
                args.push((arg_offset, self.expr()?));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        if args.len() != arity {
            return Err(ParseError::Arity {
                name,
                offset,
                expected: arity,
                found: args.len(),
            });
        }
        let mut args = args.into_iter();
        let mut next = || args.next().expect("arity checked");
        Ok(match name.as_str() {
            "fact" => next().1.factorial(),
            "binom" => {
                let top = next().1;
                Expr::binomial(top, next().1)
            }
            _ => {
                let (var_offset, var) = next();
                let Expr::Var(var) = var else {
                    return Err(ParseError::Syntax {
                        offset: var_offset,
                        expected: "a bound variable name".into(),
                        found: format!("expression `{var}`"),
                    });
                };
                let lo = next().1;
                let hi = next().1;
                Expr::Sum {
                    var,
                    lo: Box::new(lo),
                    hi: Box::new(hi),
                    body: Box::new(next().1),
                }
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Printer

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
        Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
        Expr::Neg(_) => PREC_NEG,
        Expr::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

/// Canonical text with the minimum parentheses needed for `parse` to rebuild
/// the same tree. A negative `Int` (never produced by the parser) prints as
/// `(-k)` and reparses as a negation.
pub fn render(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_wrapped(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    let binary = |l: &Expr, r: &Expr, op: &str, prec: u8, out: &mut String| {
        write_wrapped(l, precedence(l) < prec, out);
        out.push_str(op);
        write_wrapped(r, precedence(r) <= prec, out);
    };
    match e {
        Expr::Int(v) if v.is_negative() => {
            out.push_str(&format!("({v})"));
        }
        Expr::Int(v) => out.push_str(&v.to_string()),
        Expr::Var(name) => out.push_str(name),
        Expr::Neg(c) => {
            out.push('-');
            write_wrapped(c, precedence(c) < PREC_NEG, out);
        }
        Expr::Add(l, r) => binary(l, r, " + ", PREC_ADD, out),
        Expr::Sub(l, r) => binary(l, r, " - ", PREC_ADD, out),
        Expr::Mul(l, r) => binary(l, r, " * ", PREC_MUL, out),
        Expr::Div(l, r) => binary(l, r, " / ", PREC_MUL, out),
        Expr::Pow(base, exp) => {
            write_wrapped(base, precedence(base) <= PREC_POW, out);
            out.push('^');
            write_wrapped(exp, precedence(exp) < PREC_NEG, out);
        }
        Expr::Factorial(c) => {
            out.push_str("fact(");
            write_expr(c, out);
            out.push(')');
        }
        Expr::Binomial(top, bottom) => {
            out.push_str("binom(");
            write_expr(top, out);
            out.push_str(", ");
            write_expr(bottom, out);
            out.push(')');
        }
        Expr::Sum { var, lo, hi, body } => {
            out.push_str("sum(");
            out.push_str(var);
            out.push_str(", ");
            write_expr(lo, out);
            out.push_str(", ");
            write_expr(hi, out);
            out.push_str(", ");
            write_expr(body, out);
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Exact evaluator with a factorial cache that persists across calls.
#[derive(Debug, Default)]
pub struct Evaluator {
    factorials: Vec<BigInt>,
}

impl Evaluator {
    pub fn new() -> Self {
        Evaluator {
            factorials: vec![BigInt::one()],
        }
    }

    pub fn evaluate(
        &mut self,
        expr: &Expr,
        bindings: &HashMap<String, BigRational>,
    ) -> Result<BigRational, EvalError> {
        let mut scope: Vec<(&str, BigRational)> =
            bindings.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        self.eval_scoped(expr, &mut scope)
    }

    pub fn eval_at(&mut self, expr: &Expr, var: &str, value: &BigRational) -> Result<BigRational, EvalError> {
        let mut scope = vec![(var, value.clone())];
        self.eval_scoped(expr, &mut scope)
    }

    fn factorial(&mut self, n: usize) -> BigInt {
        if self.factorials.is_empty() {
            self.factorials.push(BigInt::one());
        }
        while self.factorials.len() <= n {
            let k = self.factorials.len();
            let next = &self.factorials[k - 1] * BigInt::from(k);
            self.factorials.push(next);
        }
        self.factorials[n].clone()
    }

    fn binomial(&mut self, n: usize, k: usize) -> BigInt {
        let k = k.min(n - k);
        if n <= 4096 {
            return self.factorial(n) / (self.factorial(k) * self.factorial(n - k));
        }
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    fn eval_scoped<'a>(
        &mut self,
        expr: &'a Expr,
        scope: &mut Vec<(&'a str, BigRational)>,
    ) -> Result<BigRational, EvalError> {
        Ok(match expr {
            Expr::Int(v) => BigRational::from_integer(v.clone()),
            Expr::Var(name) => scope
                .iter()
                .rev()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?,
            Expr::Neg(e) => -self.eval_scoped(e, scope)?,
            Expr::Add(l, r) => self.eval_scoped(l, scope)? + self.eval_scoped(r, scope)?,
            Expr::Sub(l, r) => self.eval_scoped(l, scope)? - self.eval_scoped(r, scope)?,
            Expr::Mul(l, r) => self.eval_scoped(l, scope)? * self.eval_scoped(r, scope)?,
            Expr::Div(l, r) => {
                let num = self.eval_scoped(l, scope)?;
                let den = self.eval_scoped(r, scope)?;
                if den.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(base, exp) => {
                let base = self.eval_scoped(base, scope)?;
                let exp = self.eval_scoped(exp, scope)?;
                if !exp.is_integer() {
                    return Err(EvalError::NonIntegerExponent(exp));
                }
                let e = exp.to_integer();
                let magnitude = bounded(&e.abs(), "exponent")?;
                let raised = num::pow(base, magnitude);
                if e.is_negative() {
                    if raised.is_zero() {
                        return Err(EvalError::DivisionByZero);
                    }
                    raised.recip()
                } else {
                    raised
                }
            }
            Expr::Factorial(arg) => {
                let v = self.eval_scoped(arg, scope)?;
                let n = nonnegative_integer(&v, "fact")?;
                BigRational::from_integer(self.factorial(n))
            }
            Expr::Binomial(top, bottom) => {
                let top = self.eval_scoped(top, scope)?;
                let bottom = self.eval_scoped(bottom, scope)?;
                let n = nonnegative_integer(&top, "binom")?;
                if !bottom.is_integer() {
                    return Err(EvalError::InvalidArgument {
                        function: "binom",
                        value: bottom,
                    });
                }
                let k = bottom.to_integer();
                if k.is_negative() || k > BigInt::from(n) {
                    return Ok(BigRational::zero());
                }
                let k = k.to_usize().expect("k <= n");
                BigRational::from_integer(self.binomial(n, k))
            }
            Expr::Sum { var, lo, hi, body } => {
                let lo = sum_bound(self.eval_scoped(lo, scope)?)?;
                let hi = sum_bound(self.eval_scoped(hi, scope)?)?;
                if lo > hi {
                    return Ok(BigRational::zero());
                }
                bounded(&(&hi - &lo), "sum length")?;
                // unreduced running fraction; one gcd at the end
                let mut num = BigInt::zero();
                let mut den = BigInt::one();
                let mut i = lo;
                while i <= hi {
                    scope.push((var.as_str(), BigRational::from_integer(i.clone())));
                    let term = self.eval_scoped(body, scope);
                    scope.pop();
                    let (a, b) = term?.into_raw();
                    if b == den {
                        num += a;
                    } else if (&den % &b).is_zero() {
                        num += a * (&den / &b);
                    } else {
                        num = num * &b + a * &den;
                        den *= b;
                    }
                    i += 1;
                }
                BigRational::new(num, den)
            }
        })
    }
}

fn bounded(v: &BigInt, what: &'static str) -> Result<usize, EvalError> {
    match v.to_u64() {
        Some(x) if x <= EVAL_LIMIT => Ok(x as usize),
        _ => Err(EvalError::TooLarge { what, value: v.clone() }),
    }
}

fn nonnegative_integer(v: &BigRational, function: &'static str) -> Result<usize, EvalError> {
    if !v.is_integer() || v.is_negative() {
        return Err(EvalError::InvalidArgument {
            function,
            value: v.clone(),
        });
    }
    bounded(&v.to_integer(), function)
}

fn sum_bound(v: BigRational) -> Result<BigInt, EvalError> {
    if v.is_integer() {
        Ok(v.to_integer())
    } else {
        Err(EvalError::NonIntegerBound(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn at(text: &str, n: i64) -> Result<BigRational, EvalError> {
        parse(text).unwrap().eval_at("n", &r(n, 1))
    }

    #[test]
    fn parses_basic_terms() {
        assert_eq!(parse("n + 3").unwrap(), Expr::var("n") + Expr::int(3));
        assert_eq!(parse("-n").unwrap(), -Expr::var("n"));
        assert_eq!(parse("1/n").unwrap(), Expr::int(1) / Expr::var("n"));
        let sum = parse("sum(k, 0, n+1, fact(k+1)*binom(n+1, k))").unwrap();
        let expected = Expr::sum(
            "k",
            Expr::int(0),
            Expr::var("n") + Expr::int(1),
            (Expr::var("k") + Expr::int(1)).factorial()
                * Expr::binomial(Expr::var("n") + Expr::int(1), Expr::var("k")),
        );
        assert_eq!(sum, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        let n = || Expr::var("n");
        assert_eq!(parse("-n^2").unwrap(), -(n().pow(Expr::int(2))));
        assert_eq!(parse("(-1)^n").unwrap(), (-Expr::int(1)).pow(n()));
        assert_eq!(parse("2^3^n").unwrap(), Expr::int(2).pow(Expr::int(3).pow(n())));
        assert_eq!(parse("2^-n").unwrap(), Expr::int(2).pow(-n()));
        assert_eq!(parse("1 - 2 - n").unwrap(), (Expr::int(1) - Expr::int(2)) - n());
        assert_eq!(parse("1 + 2 * n").unwrap(), Expr::int(1) + Expr::int(2) * n());
        assert_eq!(parse("n!").unwrap(), n().factorial());
        assert_eq!(parse("n * -2").unwrap(), n() * -Expr::int(2));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse("n +").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 3, .. }), "{err}");
        assert_eq!(parse("(n + 1").unwrap_err().offset(), 6);
        assert_eq!(parse("n $ 1").unwrap_err().offset(), 2);
        // implicit multiplication
        assert_eq!(parse("2 n").unwrap_err().offset(), 2);
        assert_eq!(parse("2.5").unwrap_err().offset(), 1);
    }

    #[test]
    fn call_errors() {
        assert_eq!(
            parse("gamma(n)").unwrap_err(),
            ParseError::UnknownFunction { name: "gamma".into(), offset: 0 }
        );
        assert!(matches!(
            parse("1 + binom(n)").unwrap_err(),
            ParseError::Arity { offset: 4, expected: 2, found: 1, .. }
        ));
        assert!(matches!(parse("fact()").unwrap_err(), ParseError::Arity { found: 0, .. }));
        assert!(matches!(
            parse("sum(1, 0, 2, 3)").unwrap_err(),
            ParseError::Syntax { offset: 4, .. }
        ));
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(at("n+3", 1).unwrap(), r(4, 1));
        assert_eq!(at("1/n", 4).unwrap(), r(1, 4));
        let s = parse("sum(i, 2, 4, (-1)^i / fact(i))").unwrap();
        assert_eq!(s.evaluate(&HashMap::new()).unwrap(), r(3, 8));
        let empty = parse("sum(i, 5, 4, i)").unwrap();
        assert_eq!(empty.evaluate(&HashMap::new()).unwrap(), r(0, 1));
    }

    #[test]
    fn binomial_conventions() {
        assert_eq!(at("binom(n, n+1)", 3).unwrap(), r(0, 1));
        assert_eq!(at("binom(n, -1)", 3).unwrap(), r(0, 1));
        assert_eq!(at("binom(n, 2)", 5).unwrap(), r(10, 1));
        assert_eq!(at("binom(0, 0)", 0).unwrap(), r(1, 1));
        assert!(matches!(at("binom(-n, 1)", 2), Err(EvalError::InvalidArgument { .. })));
        assert!(matches!(at("binom(n, 1/2)", 2), Err(EvalError::InvalidArgument { .. })));
    }

    #[test]
    fn evaluation_errors() {
        assert_eq!(at("1/(n-2)", 2), Err(EvalError::DivisionByZero));
        assert!(matches!(at("fact(n-3)", 2), Err(EvalError::InvalidArgument { function: "fact", .. })));
        assert!(matches!(at("fact(n/4)", 2), Err(EvalError::InvalidArgument { .. })));
        assert!(matches!(at("2^(1/n)", 2), Err(EvalError::NonIntegerExponent(_))));
        assert!(matches!(at("sum(k, 0, 1/n, k)", 2), Err(EvalError::NonIntegerBound(_))));
        assert_eq!(at("m + 1", 2), Err(EvalError::UnboundVariable("m".into())));
        assert_eq!(at("(n-2)^(-1)", 2), Err(EvalError::DivisionByZero));
        assert!(matches!(at("fact(10^7)", 0), Err(EvalError::TooLarge { .. })));
    }

    #[test]
    fn powers() {
        assert_eq!(at("(-1)^n", 3).unwrap(), r(-1, 1));
        assert_eq!(at("2^(-n)", 3).unwrap(), r(1, 8));
        assert_eq!(at("0^0", 0).unwrap(), r(1, 1));
        assert_eq!(at("(2/3)^n", 2).unwrap(), r(4, 9));
    }

    #[test]
    fn bound_variables_shadow() {
        let e = parse("sum(n, 1, n, n)").unwrap();
        assert_eq!(e.free_vars(), BTreeSet::from(["n".to_string()]));
        assert_eq!(e.eval_at("n", &r(4, 1)).unwrap(), r(10, 1));
        let inner = parse("sum(k, 0, 2, k * sum(k, 1, 2, k))").unwrap();
        assert!(inner.is_constant());
        assert_eq!(inner.evaluate(&HashMap::new()).unwrap(), r(9, 1));
    }

    #[test]
    fn substitution_avoids_capture() {
        let e = parse("sum(k, 0, n, k * n)").unwrap();
        let shifted = e.substitute("n", &parse("n - 1").unwrap());
        assert_eq!(shifted.render(), "sum(k, 0, n - 1, k * (n - 1))");
        let captured = e.substitute("n", &Expr::var("k"));
        assert_eq!(captured.free_vars(), BTreeSet::from(["k".to_string()]));
        // sum_{j=0..3} j*3 = 18
        assert_eq!(captured.eval_at("k", &r(3, 1)).unwrap(), r(18, 1));
        let shadowed = parse("sum(n, 0, n, n)").unwrap().substitute("n", &Expr::int(2));
        assert_eq!(shadowed.render(), "sum(n, 0, 2, n)");
    }

    #[test]
    fn renders_canonically() {
        assert_eq!((Expr::var("n") + Expr::int(3)).render(), "n + 3");
        assert_eq!((-Expr::var("n")).render(), "-n");
        let (a, b, c) = (Expr::var("a"), Expr::var("b"), Expr::var("c"));
        assert_eq!((a.clone() - b.clone() - c.clone()).render(), "a - b - c");
        assert_eq!((a.clone() - (b.clone() - c.clone())).render(), "a - (b - c)");
        assert_eq!((a.clone() / (b.clone() * c.clone())).render(), "a / (b * c)");
        assert_eq!(a.clone().pow(b.clone()).pow(c.clone()).render(), "(a^b)^c");
        assert_eq!(a.clone().pow(b.clone().pow(c)).render(), "a^b^c");
        assert_eq!((-Expr::int(1)).pow(b).render(), "(-1)^b");
        assert_eq!(Expr::int(-3).render(), "(-3)");
        assert_eq!(parse("sum(k,0,n+1,fact(k+1)*binom(n+1,k))").unwrap().render(),
            "sum(k, 0, n + 1, fact(k + 1) * binom(n + 1, k))");
    }
}
