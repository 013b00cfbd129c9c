//! Equivalence transformations.
//!
//! Scaling by a nonzero sequence `c_n` (with `c_0 = 1`) maps
//!
//! ```text
//! a'_n = c_n c_{n-1} a_n,    b'_n = c_n b_n,    b'_0 = b_0
//! ```
//!
//! which multiplies both A_n and B_n by `c_1 c_2 ... c_n` and leaves every
//! convergent value unchanged.

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::engine::{EngineError, FormulaSpec, TermPair};
use crate::expr::{EvalError, Evaluator, Expr};

/// Indices at which an expression scaling is checked for zeros.
pub const SCALING_CHECK_RANGE: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("scaling c(n) must only mention n, found `{0}`")]
    InvalidScaling(String),
    #[error("evaluating c(n) at n = {n}: {source}")]
    Eval {
        n: usize,
        #[source]
        source: EvalError,
    },
    #[error("scaling factor c_{n} is zero")]
    ZeroScaling { n: usize },
    #[error("partial numerator a_{n} is zero")]
    ZeroNumerator { n: usize },
    #[error("{terms} terms but {scaling} scaling factors")]
    LengthMismatch { terms: usize, scaling: usize },
}

/// A scaling sequence `c_1, c_2, ...`; `c_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalingSequence {
    Expr(Expr),
    Table(Vec<BigRational>),
}

impl ScalingSequence {
    /// `c_1..=c_upto`, each checked nonzero.
    pub fn values(&self, upto: usize) -> Result<Vec<BigRational>, TransformError> {
        let values = match self {
            ScalingSequence::Table(table) => {
                if table.len() < upto {
                    return Err(TransformError::LengthMismatch {
                        terms: upto,
                        scaling: table.len(),
                    });
                }
                table[..upto].to_vec()
            }
            ScalingSequence::Expr(c) => {
                check_scaling_vars(c)?;
                let mut ev = Evaluator::new();
                (1..=upto)
                    .map(|n| {
                        ev.eval_at(c, "n", &BigRational::from_integer(n.into()))
                            .map_err(|source| TransformError::Eval { n, source })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        if let Some(i) = values.iter().position(Zero::is_zero) {
            return Err(TransformError::ZeroScaling { n: i + 1 });
        }
        Ok(values)
    }
}

fn check_scaling_vars(c: &Expr) -> Result<(), TransformError> {
    match c.free_vars().into_iter().find(|v| v != "n") {
        Some(v) => Err(TransformError::InvalidScaling(v)),
        None => Ok(()),
    }
}

/// Rescales a spec by `c(n)`.
///
/// Tails become the unsimplified products `c(n) * c(n - 1) * a(n)` and
/// `c(n) * b(n)`. Because `c_0 = 1` is not expressible through `c(0)`, the
/// first index is materialized as an explicit prefix term when the spec has
/// no prefix; existing prefix terms are scaled in place.
pub fn apply_scaling_expr(spec: &FormulaSpec, c: &Expr) -> Result<FormulaSpec, TransformError> {
    spec.validate()?;
    let checked = SCALING_CHECK_RANGE.max(spec.prefix.len() + 1);
    let factors = ScalingSequence::Expr(c.clone()).values(checked)?;

    let materialized = spec.prefix.len().max(1);
    let mut prefix = Vec::with_capacity(materialized);
    let mut previous = BigRational::one();
    for n in 1..=materialized {
        let (a, b) = spec.term(n)?;
        let cn = &factors[n - 1];
        prefix.push((cn * &previous * a, cn * b));
        previous = cn.clone();
    }

    let n = Expr::var("n");
    let shifted = c.substitute("n", &(n - Expr::int(1)));
    let a_tail = c.clone() * shifted * spec.a_tail.clone();
    let b_tail = c.clone() * spec.b_tail.clone();
    Ok(FormulaSpec::new(
        format!("{}_scaled", spec.name),
        spec.b0.clone(),
        prefix,
        a_tail,
        b_tail,
    )?)
}

/// Term-table scaling: `a'_n = c_n c_{n-1} a_n`, `b'_n = c_n b_n`.
pub fn apply_scaling_table(terms: &[TermPair], c: &[BigRational]) -> Result<Vec<TermPair>, TransformError> {
    if terms.len() != c.len() {
        return Err(TransformError::LengthMismatch {
            terms: terms.len(),
            scaling: c.len(),
        });
    }
    if let Some(i) = c.iter().position(Zero::is_zero) {
        return Err(TransformError::ZeroScaling { n: i + 1 });
    }
    let one = BigRational::one();
    Ok(terms
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let prev = if i == 0 { &one } else { &c[i - 1] };
            (&c[i] * prev * a, &c[i] * b)
        })
        .collect())
}

/// Chooses `c_n = 1 / (a_n c_{n-1})` so that every partial numerator becomes
/// 1. Returns the transformed table together with the factors used.
pub fn unitize_partial_numerators(
    terms: &[TermPair],
) -> Result<(Vec<TermPair>, Vec<BigRational>), TransformError> {
    let mut factors = Vec::with_capacity(terms.len());
    let mut previous = BigRational::one();
    for (i, (a, _)) in terms.iter().enumerate() {
        if a.is_zero() {
            return Err(TransformError::ZeroNumerator { n: i + 1 });
        }
        let cn = (a * &previous).recip();
        factors.push(cn.clone());
        previous = cn;
    }
    let scaled = apply_scaling_table(terms, &factors)?;
    Ok((scaled, factors))
}
