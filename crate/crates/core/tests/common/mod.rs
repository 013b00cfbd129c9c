#![allow(dead_code)]

use contfrac::engine::{self, FormulaSpec};
use contfrac::expr::{Evaluator, Expr};
use num::{BigInt, BigRational};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn int(n: usize) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Random spec with `a(n) = ±(αn + β)`, `α >= 1`, `β >= 0` (never zero for
/// `n >= 1`) and `b(n) = γn + δ`.
pub fn random_spec(rng: &mut ChaCha8Rng) -> FormulaSpec {
    let alpha: i64 = rng.gen_range(1..=3);
    let beta: i64 = rng.gen_range(0..=3);
    let sign = if rng.gen_bool(0.5) { "" } else { "-" };
    let gamma: i64 = rng.gen_range(-3..=3);
    let delta: i64 = rng.gen_range(-3..=3);
    let b0: i64 = rng.gen_range(-3..=3);
    let a = format!("{sign}({alpha}*n + {beta})");
    let b = format!("{gamma}*n + {delta}");
    FormulaSpec::new(
        "random",
        Expr::int(b0),
        vec![],
        Expr::parse(&a).unwrap(),
        Expr::parse(&b).unwrap(),
    )
    .unwrap()
}

/// Like [`random_spec`] but resampled until every B_n and every nested
/// evaluation up to `depth` is defined.
pub fn random_defined_spec(rng: &mut ChaCha8Rng, depth: usize) -> FormulaSpec {
    loop {
        let spec = random_spec(rng);
        let convs = engine::convergents(&spec, depth).unwrap();
        let defined = convs.iter().all(|c| c.value.is_some())
            && (0..=depth).all(|n| engine::nested_eval_oracle(&spec, n).unwrap().is_some());
        if defined {
            return spec;
        }
    }
}

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["n", "k", "i", "x", "m1"]).prop_map(str::to_string)
}

/// ASTs in the image of the parser: integer literals are non-negative (a
/// leading minus parses as negation).
pub fn arb_expr(depth: u32) -> impl Strategy<Value = Expr> {
    arb_expr_with(depth, 1000)
}

/// [`arb_expr`] with literals below `max_int`.
pub fn arb_expr_with(depth: u32, max_int: u64) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..max_int).prop_map(Expr::int),
        ident().prop_map(|v| Expr::var(&v)),
    ];
    leaf.prop_recursive(depth, 64, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| -e),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.pow(b)),
            inner.clone().prop_map(Expr::factorial),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binomial(a, b)),
            (ident(), inner.clone(), inner.clone(), inner).prop_map(|(v, lo, hi, body)| Expr::sum(&v, lo, hi, body)),
        ]
    })
}

/// Number of integer literals in `e`.
pub fn count_ints(e: &Expr) -> usize {
    let mut count = 0;
    visit_ints(e, &mut |_| count += 1);
    count
}

fn visit_ints(e: &Expr, f: &mut impl FnMut(&BigInt)) {
    match e {
        Expr::Int(v) => f(v),
        Expr::Var(_) => {}
        Expr::Neg(x) | Expr::Factorial(x) => visit_ints(x, f),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) | Expr::Binomial(a, b) => {
            visit_ints(a, f);
            visit_ints(b, f);
        }
        Expr::Sum { lo, hi, body, .. } => {
            visit_ints(lo, f);
            visit_ints(hi, f);
            visit_ints(body, f);
        }
    }
}

/// Adds `delta` to the `index`-th integer literal (in evaluation order).
pub fn perturb_int(e: &Expr, index: usize, delta: i64) -> Expr {
    fn go(e: &Expr, seen: &mut usize, index: usize, delta: i64) -> Expr {
        let mut rec = |x: &Expr| Box::new(go(x, seen, index, delta));
        match e {
            Expr::Int(v) => {
                let here = *seen;
                *seen += 1;
                if here == index {
                    Expr::Int(v + delta)
                } else {
                    e.clone()
                }
            }
            Expr::Var(_) => e.clone(),
            Expr::Neg(x) => Expr::Neg(rec(x)),
            Expr::Factorial(x) => Expr::Factorial(rec(x)),
            Expr::Add(a, b) => {
                let a = rec(a);
                Expr::Add(a, rec(b))
            }
            Expr::Sub(a, b) => {
                let a = rec(a);
                Expr::Sub(a, rec(b))
            }
            Expr::Mul(a, b) => {
                let a = rec(a);
                Expr::Mul(a, rec(b))
            }
            Expr::Div(a, b) => {
                let a = rec(a);
                Expr::Div(a, rec(b))
            }
            Expr::Pow(a, b) => {
                let a = rec(a);
                Expr::Pow(a, rec(b))
            }
            Expr::Binomial(a, b) => {
                let a = rec(a);
                Expr::Binomial(a, rec(b))
            }
            Expr::Sum { var, lo, hi, body } => {
                let lo = rec(lo);
                let hi = rec(hi);
                Expr::Sum {
                    var: var.clone(),
                    lo,
                    hi,
                    body: rec(body),
                }
            }
        }
    }
    go(e, &mut 0, index, delta)
}

/// Values of `f(n)` for `n` in `range`; `None` if any evaluation fails.
pub fn values(f: &Expr, range: std::ops::RangeInclusive<usize>) -> Option<Vec<BigRational>> {
    let mut ev = Evaluator::new();
    range.map(|n| ev.eval_at(f, "n", &int(n)).ok()).collect()
}

/// A perturbation of one literal of `f` (by +1..=3) together with the first
/// `n` in `range` where it differs from `reference` (the values of `f` on
/// `range`) or fails to evaluate. Perturbations that leave every value
/// unchanged are not sabotages and are redrawn.
pub fn sabotage(
    f: &Expr,
    reference: &[BigRational],
    range: std::ops::RangeInclusive<usize>,
    rng: &mut ChaCha8Rng,
) -> (Expr, usize) {
    let literals = count_ints(f);
    loop {
        let g = perturb_int(f, rng.gen_range(0..literals), rng.gen_range(1..=3));
        let mut ev = Evaluator::new();
        let first_diff = range
            .clone()
            .zip(reference)
            .find(|(n, expected)| ev.eval_at(&g, "n", &int(*n)).ok().as_ref() != Some(*expected));
        if let Some((n, _)) = first_diff {
            return (g, n);
        }
    }
}
