//! Convergents of generalized continued fractions
//!
//! ```text
//! z = b0 + a1/(b1 + a2/(b2 + a3/(b3 + ...)))
//! ```
//!
//! computed with the fundamental recurrence
//!
//! ```text
//! A_n = b_n A_{n-1} + a_n A_{n-2},   A_{-1} = 1, A_0 = b0
//! B_n = b_n B_{n-1} + a_n B_{n-2},   B_{-1} = 0, B_0 = 1
//! ```
//!
//! `A_n` and `B_n` are the raw recurrence values and are never divided by a
//! common factor; only `z_n = A_n / B_n` is reduced.

use std::fmt;

use num::{BigRational, Signed, Zero};
use thiserror::Error;

use crate::decimal;
use crate::expr::{EvalError, Evaluator, Expr};

/// Exact (a_n, b_n) pair.
pub type TermPair = (BigRational, BigRational);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid formula `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("evaluating {what} at n = {n}: {source}")]
    Eval {
        what: &'static str,
        n: usize,
        #[source]
        source: EvalError,
    },
    #[error("partial numerator a_{n} is zero, which truncates the fraction")]
    ZeroNumerator { n: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// A named continued fraction: constant `b0`, optional explicit leading terms
/// `(a_i, b_i)` for `i = 1..=P`, and tail expressions in `n` used for every
/// `n > P`. Tails are evaluated at the literal index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaSpec {
    pub name: String,
    pub b0: Expr,
    pub prefix: Vec<TermPair>,
    pub a_tail: Expr,
    pub b_tail: Expr,
}

impl FormulaSpec {
    pub fn new(
        name: impl Into<String>,
        b0: Expr,
        prefix: Vec<TermPair>,
        a_tail: Expr,
        b_tail: Expr,
    ) -> Result<Self, EngineError> {
        let spec = FormulaSpec {
            name: name.into(),
            b0,
            prefix,
            a_tail,
            b_tail,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the structural invariants: `b0` is constant, the tails mention
    /// no variable other than `n`, and no prefix numerator is zero.
    pub fn validate(&self) -> Result<(), EngineError> {
        let invalid = |reason: String| EngineError::InvalidSpec {
            name: self.name.clone(),
            reason,
        };
        if !self.b0.is_constant() {
            return Err(invalid(format!("b0 `{}` must not contain variables", self.b0)));
        }
        for (label, tail) in [("a", &self.a_tail), ("b", &self.b_tail)] {
            let stray: Vec<String> = tail.free_vars().into_iter().filter(|v| v != "n").collect();
            if !stray.is_empty() {
                return Err(invalid(format!(
                    "{label}(n) `{tail}` has free variables other than n: {}",
                    stray.join(", ")
                )));
            }
        }
        if let Some(i) = self.prefix.iter().position(|(a, _)| a.is_zero()) {
            return Err(invalid(format!("prefix numerator a_{} is zero", i + 1)));
        }
        Ok(())
    }

    pub fn b0_value(&self) -> Result<BigRational, EngineError> {
        self.b0
            .eval_at("n", &BigRational::zero())
            .map_err(|source| EngineError::Eval { what: "b0", n: 0, source })
    }

    pub fn term(&self, n: usize) -> Result<TermPair, EngineError> {
        TermSource::new(self).term(n)
    }

    /// Terms `(a_n, b_n)` for `n = 1..=upto`.
    pub fn terms(&self, upto: usize) -> Result<Vec<TermPair>, EngineError> {
        let mut source = TermSource::new(self);
        (1..=upto).map(|n| source.term(n)).collect()
    }
}

impl fmt::Display for FormulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: b0 = {}", self.name, self.b0)?;
        for (i, (a, b)) in self.prefix.iter().enumerate() {
            write!(f, ", (a_{0}, b_{0}) = ({a}, {b})", i + 1)?;
        }
        write!(f, ", a(n) = {}, b(n) = {}", self.a_tail, self.b_tail)
    }
}

/// Evaluates the terms of a spec, sharing one factorial cache.
struct TermSource<'a> {
    spec: &'a FormulaSpec,
    evaluator: Evaluator,
}

impl<'a> TermSource<'a> {
    fn new(spec: &'a FormulaSpec) -> Self {
        TermSource {
            spec,
            evaluator: Evaluator::new(),
        }
    }

    fn term(&mut self, n: usize) -> Result<TermPair, EngineError> {
        assert!(n >= 1, "partial terms start at n = 1");
        if let Some(pair) = self.spec.prefix.get(n - 1) {
            return Ok(pair.clone());
        }
        let at = BigRational::from_integer(n.into());
        let a = self
            .evaluator
            .eval_at(&self.spec.a_tail, "n", &at)
            .map_err(|source| EngineError::Eval { what: "a(n)", n, source })?;
        let b = self
            .evaluator
            .eval_at(&self.spec.b_tail, "n", &at)
            .map_err(|source| EngineError::Eval { what: "b(n)", n, source })?;
        if a.is_zero() {
            return Err(EngineError::ZeroNumerator { n });
        }
        Ok((a, b))
    }
}

/// Which of the two recurrence sequences: numerators A_n or denominators B_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub index: usize,
    /// Raw A_n.
    pub numerator: BigRational,
    /// Raw B_n.
    pub denominator: BigRational,
    /// A_n / B_n, absent when B_n = 0.
    pub value: Option<BigRational>,
}

impl Convergent {
    pub fn raw(&self, side: Side) -> &BigRational {
        match side {
            Side::A => &self.numerator,
            Side::B => &self.denominator,
        }
    }

    fn new(index: usize, numerator: BigRational, denominator: BigRational) -> Self {
        let value = (!denominator.is_zero()).then(|| &numerator / &denominator);
        Convergent {
            index,
            numerator,
            denominator,
            value,
        }
    }
}

type TermFn<'a> = Box<dyn FnMut(usize) -> Result<TermPair, EngineError> + 'a>;

/// Streams convergents 0, 1, 2, ... Each call to `next` after the first
/// performs exactly one recurrence step.
pub struct Convergents<'a> {
    terms: TermFn<'a>,
    b0: BigRational,
    next_index: usize,
    // (A_{n-1}, B_{n-1}) and (A_{n-2}, B_{n-2}) relative to the next index
    prev: (BigRational, BigRational),
    prev2: (BigRational, BigRational),
    steps: usize,
    failed: bool,
    last_index: Option<usize>,
}

impl<'a> Convergents<'a> {
    pub fn of_spec(spec: &'a FormulaSpec) -> Result<Self, EngineError> {
        spec.validate()?;
        let b0 = spec.b0_value()?;
        let mut source = TermSource::new(spec);
        Ok(Self::with_terms(b0, Box::new(move |n| source.term(n))))
    }

    /// Convergents of `b0 + a_1/(b_1 + ...)` for an explicit table of terms
    /// `(a_n, b_n)`, `n = 1..=len`. The stream ends after index `len`.
    pub fn of_terms(b0: BigRational, terms: &'a [TermPair]) -> Self {
        let mut it = Self::with_terms(
            b0,
            Box::new(move |n| {
                let (a, b) = terms[n - 1].clone();
                if a.is_zero() {
                    return Err(EngineError::ZeroNumerator { n });
                }
                Ok((a, b))
            }),
        );
        it.last_index = Some(terms.len());
        it
    }

    fn with_terms(b0: BigRational, terms: TermFn<'a>) -> Self {
        Convergents {
            terms,
            b0,
            next_index: 0,
            prev: (BigRational::from_integer(1.into()), BigRational::zero()),
            prev2: (BigRational::zero(), BigRational::zero()),
            steps: 0,
            failed: false,
            last_index: None,
        }
    }

    /// Number of recurrence steps performed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Iterator for Convergents<'_> {
    type Item = Result<Convergent, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.next_index;
        if self.failed || self.last_index.is_some_and(|last| n > last) {
            return None;
        }
        if n == 0 {
            self.next_index = 1;
            self.prev2 = std::mem::replace(
                &mut self.prev,
                (self.b0.clone(), BigRational::from_integer(1.into())),
            );
            return Some(Ok(Convergent::new(0, self.b0.clone(), BigRational::from_integer(1.into()))));
        }
        let (a, b) = match (self.terms)(n) {
            Ok(t) => t,
            Err(e) => {
                self.failed = true;
                return Some(Err(e));
            }
        };
        self.steps += 1;
        let numerator = &b * &self.prev.0 + &a * &self.prev2.0;
        let denominator = &b * &self.prev.1 + &a * &self.prev2.1;
        self.prev2 = std::mem::replace(&mut self.prev, (numerator.clone(), denominator.clone()));
        self.next_index += 1;
        Some(Ok(Convergent::new(n, numerator, denominator)))
    }
}

/// Convergents with indices `0..=upto`.
pub fn convergents(spec: &FormulaSpec, upto: usize) -> Result<Vec<Convergent>, EngineError> {
    Convergents::of_spec(spec)?.take(upto + 1).collect()
}

/// Evaluates the fraction truncated at `depth` directly, innermost level
/// first. `None` when some nested denominator is zero.
///
/// Shares nothing with [`Convergents`] beyond term evaluation; it exists to
/// cross-check the recurrence.
pub fn nested_eval_oracle(spec: &FormulaSpec, depth: usize) -> Result<Option<BigRational>, EngineError> {
    spec.validate()?;
    let b0 = spec.b0_value()?;
    let terms = spec.terms(depth)?;
    Ok(nested_eval_terms(&b0, &terms))
}

/// Bottom-up evaluation of `b0 + a_1/(b_1 + ... + a_d/b_d)` over a term
/// table of length `d`.
pub fn nested_eval_terms(b0: &BigRational, terms: &[TermPair]) -> Option<BigRational> {
    let Some((_, innermost)) = terms.last() else {
        return Some(b0.clone());
    };
    let mut level = innermost.clone();
    for k in (0..terms.len()).rev() {
        if level.is_zero() {
            return None;
        }
        let outer = if k == 0 { b0 } else { &terms[k - 1].1 };
        level = outer + &terms[k].0 / level;
    }
    Some(level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    MaxTermsReached,
    DivergenceSuspected,
    UndefinedDenominators,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::MaxTermsReached => "maxTermsReached",
            Verdict::DivergenceSuspected => "divergenceSuspected",
            Verdict::UndefinedDenominators => "undefinedDenominators",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    /// z_{n_used}, or the last defined convergent value before it.
    pub value: Option<BigRational>,
    /// |z_{n_used} - z_{n_used - 1}|, when both are defined.
    pub error_bound: Option<BigRational>,
    pub n_used: usize,
    pub digits: u32,
    pub verdict: Verdict,
}

impl LimitEstimate {
    /// Value truncated to `digits` fractional digits.
    pub fn decimal(&self) -> Option<String> {
        self.value.as_ref().map(|v| decimal::truncate(v, self.digits as usize))
    }
}

const CONVERGENCE_STREAK: usize = 3;
const DIVERGENCE_WINDOW: usize = 10;
const UNDEFINED_WINDOW: usize = 5;

/// Runs the recurrence until three consecutive gaps |z_n - z_{n-1}| fall
/// below `10^-(target_digits + 2)` or `max_n` is reached.
///
/// Without convergence the verdict is `UndefinedDenominators` if some B_n
/// vanished among the last five indices, `DivergenceSuspected` if the
/// smallest of the last ten gaps exceeds the smallest of the first ten, and
/// `MaxTermsReached` otherwise.
pub fn estimate_limit(spec: &FormulaSpec, max_n: usize, target_digits: u32) -> Result<LimitEstimate, EngineError> {
    if max_n < 3 {
        return Err(EngineError::InvalidArgument(format!("max_n must be at least 3, got {max_n}")));
    }
    if target_digits < 1 {
        return Err(EngineError::InvalidArgument("target digits must be at least 1".into()));
    }
    let threshold = decimal::ten_pow_neg(target_digits + 2);
    let mut gaps: Vec<Option<BigRational>> = Vec::with_capacity(max_n);
    let mut zero_denominators: Vec<usize> = Vec::new();
    let mut last_value: Option<BigRational> = None;
    let mut prev_value: Option<BigRational> = None;
    let mut streak = 0;
    for conv in Convergents::of_spec(spec)?.take(max_n + 1) {
        let conv = conv?;
        if conv.value.is_none() {
            zero_denominators.push(conv.index);
        }
        if conv.index > 0 {
            let gap = match (&prev_value, &conv.value) {
                (Some(p), Some(c)) => Some((c - p).abs()),
                _ => None,
            };
            match &gap {
                Some(g) if *g < threshold => streak += 1,
                _ => streak = 0,
            }
            gaps.push(gap.clone());
            if streak == CONVERGENCE_STREAK {
                return Ok(LimitEstimate {
                    value: conv.value,
                    error_bound: gap,
                    n_used: conv.index,
                    digits: target_digits,
                    verdict: Verdict::Converged,
                });
            }
        }
        if conv.value.is_some() {
            last_value = conv.value.clone();
        }
        prev_value = conv.value;
    }

    let verdict = if zero_denominators.iter().any(|&n| n + UNDEFINED_WINDOW > max_n) {
        Verdict::UndefinedDenominators
    } else {
        let window_min = |window: &[Option<BigRational>]| window.iter().flatten().min().cloned();
        let head = window_min(&gaps[..gaps.len().min(DIVERGENCE_WINDOW)]);
        let tail = window_min(&gaps[gaps.len().saturating_sub(DIVERGENCE_WINDOW)..]);
        match (head, tail) {
            (Some(h), Some(t)) if t > h => Verdict::DivergenceSuspected,
            _ => Verdict::MaxTermsReached,
        }
    };
    Ok(LimitEstimate {
        value: last_value,
        error_bound: gaps.last().cloned().flatten(),
        n_used: max_n,
        digits: target_digits,
        verdict,
    })
}
