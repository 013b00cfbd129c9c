//! Closed-form checking for A_n / B_n and limit checking against a target
//! constant.
//!
//! A hypothesis `f(n)` for A_n (or B_n) is checked by comparing two base
//! cases with the recurrence values and then requiring the exact residual
//!
//! ```text
//! f(n) - b_n f(n-1) - a_n f(n-2) = 0
//! ```
//!
//! for every `n` up to a bound. This is exhaustive checking over a finite
//! range, not an induction proof, and the reports say so.

use std::fmt;
use std::ops::RangeInclusive;

use num::{BigRational, Zero};
use thiserror::Error;

use crate::decimal;
use crate::engine::{self, EngineError, FormulaSpec, LimitEstimate, Side, Verdict};
use crate::expr::{EvalError, Evaluator, Expr};
use crate::fixtures;
use crate::recognize::{self, CertifiedInterval, ConstantExpr, RecognizeError};

/// Default upper end of the residual range.
pub const DEFAULT_N_MAX: usize = 200;

/// `sum_{k=0..n+1} (k+1)! C(n+1, k)`
pub const A_SUM_FORM: &str = "sum(k, 0, n + 1, fact(k + 1) * binom(n + 1, k))";
/// The same sum reindexed by `k -> n + 1 - k`.
pub const A_SUM_REINDEXED: &str = "sum(k, 0, n + 1, fact(n + 2 - k) * binom(n + 1, n + 1 - k))";
/// First summation form of A_n / B_n for the second formula.
pub const VN_FORM_FIRST: &str = "sum(k, 0, n + 1, (k + 1) / ((n + 1) * fact(n + 1 - k)))";
/// Second summation form of A_n / B_n for the second formula.
pub const VN_FORM_SECOND: &str = "sum(k, 0, n + 1, (n + 2 - k) / ((n + 1) * fact(k)))";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Recognize(#[from] RecognizeError),
    #[error("evaluating hypothesis at n = {n}: {source}")]
    Eval {
        n: usize,
        #[source]
        source: EvalError,
    },
    #[error("hypothesis may only mention n, found `{0}`")]
    InvalidHypothesis(String),
    #[error("n_max = {n_max} must be at least valid_from + 2 = {}", valid_from + 2)]
    NMaxTooSmall { n_max: usize, valid_from: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormHypothesis {
    pub side: Side,
    pub formula: Expr,
    pub valid_from: usize,
}

impl ClosedFormHypothesis {
    pub fn new(side: Side, formula: Expr, valid_from: usize) -> Result<Self, VerifyError> {
        if let Some(v) = formula.free_vars().into_iter().find(|v| v != "n") {
            return Err(VerifyError::InvalidHypothesis(v));
        }
        Ok(ClosedFormHypothesis {
            side,
            formula,
            valid_from,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseCase {
    pub n: usize,
    /// Raw recurrence value.
    pub expected: BigRational,
    /// Hypothesis value.
    pub got: BigRational,
    pub ok: bool,
}

/// Where a check failed, with both sides of the failed equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailurePoint {
    pub n: usize,
    /// `f(n)`.
    pub lhs: BigRational,
    /// Recurrence value at a base case, `b_n f(n-1) + a_n f(n-2)` otherwise.
    pub rhs: BigRational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationVerdict {
    VerifiedUpTo(usize),
    FailedAtBase(usize),
    FailedAtResidual(usize),
}

impl VerificationVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, VerificationVerdict::VerifiedUpTo(_))
    }
}

impl fmt::Display for VerificationVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerificationVerdict::VerifiedUpTo(n) => write!(f, "verifiedUpTo({n})"),
            VerificationVerdict::FailedAtBase(n) => write!(f, "failedAtBase({n})"),
            VerificationVerdict::FailedAtResidual(n) => write!(f, "failedAtResidual({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub hypothesis: ClosedFormHypothesis,
    pub base_cases: Vec<BaseCase>,
    /// Inclusive range of residual checks, absent when a base case failed.
    pub residual_range: Option<(usize, usize)>,
    pub first_failure: Option<FailurePoint>,
    pub verdict: VerificationVerdict,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn human(&self) -> String {
        let h = &self.hypothesis;
        let mut out = format!("{}_n = {}  (n >= {})\n", h.side, h.formula, h.valid_from);
        for b in &self.base_cases {
            out.push_str(&format!(
                "  base n={}: recurrence {} hypothesis {} {}\n",
                b.n,
                b.expected,
                b.got,
                if b.ok { "ok" } else { "MISMATCH" }
            ));
        }
        if let Some((from, to)) = self.residual_range {
            out.push_str(&format!("  residual checked exactly for n = {from}..{to}\n"));
        }
        if let Some(f) = &self.first_failure {
            out.push_str(&format!("  first failure at n={}: lhs {} rhs {}\n", f.n, f.lhs, f.rhs));
        }
        out.push_str(&format!("  verdict: {}", self.verdict));
        if self.passed() {
            out.push_str(" (exhaustive finite-range check, not a proof)");
        }
        out.push('\n');
        out
    }

    /// `key=value` pairs, keys prefixed with `prefix`.
    pub fn machine(&self, prefix: &str) -> Vec<(String, String)> {
        let mut kv = vec![
            (format!("{prefix}.side"), self.hypothesis.side.to_string()),
            (format!("{prefix}.formula"), self.hypothesis.formula.render()),
            (format!("{prefix}.valid_from"), self.hypothesis.valid_from.to_string()),
            (format!("{prefix}.verdict"), self.verdict.to_string()),
        ];
        for b in &self.base_cases {
            kv.push((format!("{prefix}.base.{}", b.n), if b.ok { "ok" } else { "mismatch" }.into()));
        }
        if let Some((from, to)) = self.residual_range {
            kv.push((format!("{prefix}.residual_range"), format!("{from}..{to}")));
        }
        if let Some(f) = &self.first_failure {
            kv.push((format!("{prefix}.first_failure.n"), f.n.to_string()));
            kv.push((format!("{prefix}.first_failure.lhs"), f.lhs.to_string()));
            kv.push((format!("{prefix}.first_failure.rhs"), f.rhs.to_string()));
        }
        kv
    }
}

/// Checks `hyp` against the recurrence of `spec`: base cases at
/// `valid_from` and `valid_from + 1`, residuals on `[valid_from + 2, n_max]`.
pub fn check_closed_form(
    spec: &FormulaSpec,
    hyp: &ClosedFormHypothesis,
    n_max: usize,
) -> Result<VerificationReport, VerifyError> {
    let n0 = hyp.valid_from;
    if n_max < n0 + 2 {
        return Err(VerifyError::NMaxTooSmall {
            n_max,
            valid_from: n0,
        });
    }
    let convs = engine::convergents(spec, n_max)?;
    let terms = spec.terms(n_max)?;

    let mut ev = Evaluator::new();
    let mut values = Vec::with_capacity(n_max - n0 + 1);
    for n in n0..=n_max {
        let v = ev
            .eval_at(&hyp.formula, "n", &BigRational::from_integer(n.into()))
            .map_err(|source| VerifyError::Eval { n, source })?;
        values.push(v);
    }
    let f = |n: usize| &values[n - n0];

    let base_cases: Vec<BaseCase> = [n0, n0 + 1]
        .into_iter()
        .map(|n| {
            let expected = convs[n].raw(hyp.side).clone();
            let got = f(n).clone();
            BaseCase {
                n,
                ok: expected == got,
                expected,
                got,
            }
        })
        .collect();
    if let Some(bad) = base_cases.iter().find(|b| !b.ok) {
        return Ok(VerificationReport {
            hypothesis: hyp.clone(),
            first_failure: Some(FailurePoint {
                n: bad.n,
                lhs: bad.got.clone(),
                rhs: bad.expected.clone(),
            }),
            verdict: VerificationVerdict::FailedAtBase(bad.n),
            base_cases,
            residual_range: None,
        });
    }

    let mut first_failure = None;
    for n in n0 + 2..=n_max {
        let (a, b) = &terms[n - 1];
        let rhs = b * f(n - 1) + a * f(n - 2);
        if *f(n) != rhs {
            first_failure = Some(FailurePoint {
                n,
                lhs: f(n).clone(),
                rhs,
            });
            break;
        }
    }
    let verdict = match &first_failure {
        Some(fp) => VerificationVerdict::FailedAtResidual(fp.n),
        None => VerificationVerdict::VerifiedUpTo(n_max),
    };
    Ok(VerificationReport {
        hypothesis: hyp.clone(),
        base_cases,
        residual_range: Some((n0 + 2, n_max)),
        first_failure,
        verdict,
    })
}

/// First `n` in `range` where `lhs(n) != rhs(n)`.
pub fn first_disagreement(
    lhs: &Expr,
    rhs: &Expr,
    range: RangeInclusive<usize>,
) -> Result<Option<usize>, VerifyError> {
    let mut ev = Evaluator::new();
    for n in range {
        let at = BigRational::from_integer(n.into());
        let l = ev.eval_at(lhs, "n", &at).map_err(|source| VerifyError::Eval { n, source })?;
        let r = ev.eval_at(rhs, "n", &at).map_err(|source| VerifyError::Eval { n, source })?;
        if l != r {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Checks that the two summation forms of A_n for the second formula agree
/// for `n = 1..=n_max`.
pub fn check_reindexed_sum_equivalence(n_max: usize) -> bool {
    let lhs = Expr::parse(A_SUM_FORM).expect("valid constant");
    let rhs = Expr::parse(A_SUM_REINDEXED).expect("valid constant");
    matches!(first_disagreement(&lhs, &rhs, 1..=n_max), Ok(None))
}

/// First `n` in `1..=n_max` where the convergent value of `spec` differs
/// from one of `forms`.
pub fn first_value_mismatch(
    spec: &FormulaSpec,
    forms: &[Expr],
    n_max: usize,
) -> Result<Option<usize>, VerifyError> {
    let convs = engine::convergents(spec, n_max)?;
    let mut ev = Evaluator::new();
    for conv in &convs[1..] {
        let n = conv.index;
        let at = BigRational::from_integer(n.into());
        for form in forms {
            let v = ev.eval_at(form, "n", &at).map_err(|source| VerifyError::Eval { n, source })?;
            if conv.value.as_ref() != Some(&v) {
                return Ok(Some(n));
            }
        }
    }
    Ok(None)
}

/// Checks that z_n of the second formula equals both summation forms of
/// A_n / B_n for `n = 1..=n_max`.
pub fn vn_simplification_check(n_max: usize) -> bool {
    let forms = [VN_FORM_FIRST, VN_FORM_SECOND].map(|f| Expr::parse(f).expect("valid constant"));
    matches!(first_value_mismatch(&fixtures::e_cf2(), &forms, n_max), Ok(None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitOutcome {
    Match,
    Mismatch,
    /// The estimate did not converge; carries its verdict.
    Indeterminate(Verdict),
}

impl fmt::Display for LimitOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitOutcome::Match => f.write_str("match"),
            LimitOutcome::Mismatch => f.write_str("mismatch"),
            LimitOutcome::Indeterminate(v) => write!(f, "indeterminate({v})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    pub outcome: LimitOutcome,
    pub target: ConstantExpr,
    pub target_interval: CertifiedInterval,
    pub estimate: LimitEstimate,
    /// Upper bound on |limit - target| from the estimate's error bound plus
    /// the farthest point of the target enclosure.
    pub distance: Option<BigRational>,
    pub digits: u32,
}

impl LimitCheck {
    pub fn passed(&self) -> bool {
        self.outcome == LimitOutcome::Match
    }

    pub fn human(&self) -> String {
        let mut out = format!("limit vs {}: {}\n", self.target, self.outcome);
        if let Some(v) = self.estimate.decimal() {
            out.push_str(&format!("  estimate  {v}  (n = {})\n", self.estimate.n_used));
        }
        out.push_str(&format!("  target    {}\n", decimal::truncate(self.target_interval.lower(), self.digits as usize)));
        if let Some(d) = &self.distance {
            out.push_str(&format!("  distance <= {}  (tolerance 1e-{})\n", decimal::sci_upper(d), self.digits));
        }
        out
    }

    pub fn machine(&self, prefix: &str) -> Vec<(String, String)> {
        let mut kv = vec![
            (format!("{prefix}.target"), self.target.to_string()),
            (format!("{prefix}.outcome"), self.outcome.to_string()),
            (format!("{prefix}.digits"), self.digits.to_string()),
            (format!("{prefix}.n_used"), self.estimate.n_used.to_string()),
        ];
        if let Some(v) = self.estimate.decimal() {
            kv.push((format!("{prefix}.estimate"), v));
        }
        if let Some(d) = &self.distance {
            kv.push((format!("{prefix}.distance_bound"), decimal::sci_upper(d)));
        }
        kv
    }
}

/// Estimates the limit to `digits` digits and compares it with `target`.
/// Matches when the estimate's error bound plus its distance to the target
/// enclosure stays below `10^-digits`.
pub fn check_limit_against_target(
    spec: &FormulaSpec,
    target: &ConstantExpr,
    digits: u32,
    max_n: usize,
) -> Result<LimitCheck, VerifyError> {
    if digits < 6 {
        return Err(VerifyError::InvalidArgument(format!("digits must be at least 6, got {digits}")));
    }
    let estimate = engine::estimate_limit(spec, max_n, digits)?;
    let e_interval = recognize::e_high_precision(digits + 4);
    let target_interval = recognize::mobius_value(target, &e_interval)?;
    let (outcome, distance) = match (&estimate.verdict, &estimate.value) {
        (Verdict::Converged, Some(value)) => {
            let bound = estimate.error_bound.clone().unwrap_or_else(BigRational::zero);
            let distance = target_interval.max_distance(&CertifiedInterval::point(value.clone())) + bound;
            let outcome = if distance < decimal::ten_pow_neg(digits) {
                LimitOutcome::Match
            } else {
                LimitOutcome::Mismatch
            };
            (outcome, Some(distance))
        }
        (verdict, _) => (LimitOutcome::Indeterminate(*verdict), None),
    };
    Ok(LimitCheck {
        outcome,
        target: *target,
        target_interval,
        estimate,
        distance,
        digits,
    })
}
