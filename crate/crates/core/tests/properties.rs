mod common;

use std::collections::HashMap;

use common::{arb_expr, arb_expr_with, int, r, random_defined_spec, random_spec, sabotage};
use contfrac::engine::{self, Convergents, Side};
use contfrac::expr::{Evaluator, Expr};
use contfrac::fixtures;
use contfrac::recognize::{self, CertifiedInterval, ConstantExpr};
use contfrac::seqid::{self, SequenceSnapshot};
use contfrac::transform::{self, ScalingSequence};
use contfrac::verify::{self, ClosedFormHypothesis, VerificationVerdict};
use num::{BigInt, BigRational, One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn render_then_parse_is_identity(e in arb_expr(6)) {
        let text = e.render();
        prop_assert_eq!(Expr::parse(&text), Ok(e), "{}", text);
    }

    // small literals and shallow trees keep factorials and powers tame
    #[test]
    fn evaluation_is_repeatable(e in arb_expr_with(3, 4), n in 0i64..6, k in 0i64..6) {
        let bindings: HashMap<String, BigRational> = ["n", "k", "i", "x", "m1"]
            .iter()
            .zip([n, k, 1, 2, 3])
            .map(|(v, x)| (v.to_string(), r(x, 1)))
            .collect();
        let first = e.evaluate(&bindings);
        let mut ev = Evaluator::new();
        prop_assert_eq!(&ev.evaluate(&e, &bindings), &first);
        prop_assert_eq!(&ev.evaluate(&e, &bindings), &first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bounded_sum_matches_explicit_loop(
        lo in -5i64..10,
        len in -2i64..15,
        c0 in -5i64..6,
        c1 in -5i64..6,
        d in 1i64..5,
        n in 0i64..8,
    ) {
        let hi = lo + len;
        let body = format!("({c0} + {c1}*k) / ({d} + k^2) + binom(n, k)");
        let sum = Expr::parse(&format!("sum(k, {lo}, {hi}, {body})")).unwrap();
        let body = Expr::parse(&body).unwrap();
        let mut expected = BigRational::zero();
        let mut k = lo;
        while k <= hi {
            let bindings = HashMap::from([("n".to_string(), r(n, 1)), ("k".to_string(), r(k, 1))]);
            expected += body.evaluate(&bindings).unwrap();
            k += 1;
        }
        prop_assert_eq!(sum.eval_at("n", &r(n, 1)).unwrap(), expected);
    }
}

#[test]
fn determinant_identity_on_random_specs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let spec = random_spec(&mut rng);
        let convs = engine::convergents(&spec, 50).unwrap();
        let terms = spec.terms(50).unwrap();
        let mut product = BigRational::one();
        for n in 1..=50 {
            product *= &terms[n - 1].0;
            let lhs = &convs[n].numerator * &convs[n - 1].denominator - &convs[n - 1].numerator * &convs[n].denominator;
            let sign = if n % 2 == 1 { BigRational::one() } else { -BigRational::one() };
            assert_eq!(lhs, sign * &product, "{spec} at n = {n}");
        }
    }
}

#[test]
fn recurrence_agrees_with_nested_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let spec = random_defined_spec(&mut rng, 25);
        let convs = engine::convergents(&spec, 25).unwrap();
        for (n, conv) in convs.iter().enumerate() {
            assert_eq!(conv.value, engine::nested_eval_oracle(&spec, n).unwrap(), "{spec} at n = {n}");
        }
    }
}

#[test]
fn convergent_count_is_linear() {
    let spec = fixtures::e_cf2();
    let mut it = Convergents::of_spec(&spec).unwrap();
    for _ in 0..=37 {
        it.next().unwrap().unwrap();
    }
    assert_eq!(it.steps(), 37);
}

fn arb_scaling() -> impl Strategy<Value = Expr> {
    // c(n) = (u n + v) / w, nonzero for n >= 1 since u, v >= 1
    (1i64..4, 1i64..4, 1i64..4, any::<bool>()).prop_map(|(u, v, w, neg)| {
        let sign = if neg { "-" } else { "" };
        Expr::parse(&format!("{sign}({u}*n + {v}) / {w}")).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_preserves_convergents(seed in any::<u64>(), c in arb_scaling()) {
        let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let scaled = transform::apply_scaling_expr(&spec, &c).unwrap();
        let before = engine::convergents(&spec, 100).unwrap();
        let after = engine::convergents(&scaled, 100).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert_eq!(&x.value, &y.value);
        }
    }

    #[test]
    fn scalings_compose_pointwise(seed in any::<u64>(), c in arb_scaling(), d in arb_scaling()) {
        let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let twice = transform::apply_scaling_expr(&transform::apply_scaling_expr(&spec, &c).unwrap(), &d).unwrap();
        let once = transform::apply_scaling_expr(&spec, &(c * d)).unwrap();
        prop_assert_eq!(twice.terms(50).unwrap(), once.terms(50).unwrap());
    }

    #[test]
    fn unitized_terms_keep_convergents(seed in any::<u64>()) {
        let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let terms = spec.terms(50).unwrap();
        let (unit, c) = transform::unitize_partial_numerators(&terms).unwrap();
        prop_assert!(unit.iter().all(|(a, _)| a.is_one()));
        prop_assert_eq!(&ScalingSequence::Table(c.clone()).values(50).unwrap(), &c);
        let b0 = spec.b0_value().unwrap();
        let before: Vec<_> = Convergents::of_terms(b0.clone(), &terms).map(|c| c.unwrap().value).collect();
        let after: Vec<_> = Convergents::of_terms(b0, &unit).map(|c| c.unwrap().value).collect();
        prop_assert_eq!(before, after);
    }
}

#[test]
fn sabotaged_hypotheses_fail_where_they_first_differ() {
    let hypotheses = [
        (fixtures::e_cf1t(), Side::A, "n + 2", 0),
        (fixtures::e_cf1t(), Side::B, "(n + 2) * sum(i, 2, n + 2, (-1)^i / fact(i))", 0),
        (fixtures::e_cf2(), Side::B, "(n + 1) * fact(n + 1)", 1),
        (fixtures::e_cf2(), Side::A, verify::A_SUM_FORM, 1),
    ];
    let n_max = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (spec, side, text, n0) in &hypotheses {
        let truth: Vec<_> = engine::convergents(spec, n_max).unwrap()[*n0..]
            .iter()
            .map(|c| c.raw(*side).clone())
            .collect();
        let f = Expr::parse(text).unwrap();
        let report = verify::check_closed_form(spec, &ClosedFormHypothesis::new(*side, f.clone(), *n0).unwrap(), n_max).unwrap();
        assert_eq!(report.verdict, VerificationVerdict::VerifiedUpTo(n_max));
        for _ in 0..5 {
            let (g, first_diff) = sabotage(&f, &truth, *n0..=n_max, &mut rng);
            let got = common::values(&g, *n0..=n_max).unwrap();
            let report = verify::check_closed_form(spec, &ClosedFormHypothesis::new(*side, g.clone(), *n0).unwrap(), n_max).unwrap();
            let failure = report.first_failure.expect("sabotage must fail");
            assert_eq!(failure.n, first_diff, "{g}");
            assert_eq!(failure.lhs, got[first_diff - n0]);
            if first_diff >= n0 + 2 {
                assert_eq!(report.verdict, VerificationVerdict::FailedAtResidual(first_diff));
                assert_eq!(failure.rhs, truth[first_diff - n0]);
            } else {
                assert_eq!(report.verdict, VerificationVerdict::FailedAtBase(first_diff));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recognized_forms_meet_the_input(num in -200i64..200, den in 1i64..60, width in 1u32..6) {
        let value = CertifiedInterval::around(&r(num, den), &BigRational::new(BigInt::one(), BigInt::from(10).pow(width)));
        let e = recognize::e_high_precision(40);
        for c in recognize::recognize(&value, 3) {
            prop_assert!(recognize::mobius_value(&c, &e).unwrap().intersects(&value), "{}", c);
        }
    }

    #[test]
    fn injected_forms_are_recovered(p in -4i64..=4, q in -4i64..=4, rr in -4i64..=4, s in -4i64..=4) {
        prop_assume!(rr != 0 || s != 0);
        let c = ConstantExpr::new(p, q, rr, s).unwrap();
        let iv = recognize::mobius_value(&c, &recognize::e_high_precision(30));
        prop_assume!(iv.is_ok());
        let found = recognize::recognize(&iv.unwrap(), 4);
        // a form that does not depend on e is reported as (0, q, 0, s)
        let target = if c.is_constant() {
            let [p, q, rr, s] = c.coefficients();
            if rr != 0 { ConstantExpr::new(0, p, 0, rr) } else { ConstantExpr::new(0, q, 0, s) }.unwrap()
        } else {
            c
        };
        prop_assert!(found.contains(&target), "{} not in {:?}", target, found);
    }

    #[test]
    fn reconstruction_is_minimal(num in -300i64..300, den in 1i64..40, w in 1i64..200) {
        let center = r(num, den);
        let iv = CertifiedInterval::around(&center, &r(1, w * 7));
        let q = recognize::rational_reconstruct(&iv, None).unwrap();
        prop_assert!(iv.contains(&q));
        let qd: i64 = q.denom().try_into().unwrap();
        for d in 1..qd {
            let d_big = BigInt::from(d);
            let lo = (iv.lower() * &d_big).ceil().to_integer();
            prop_assert!(BigRational::new(lo, d_big) > *iv.upper(), "denominator {} fits", d);
        }
    }
}

#[test]
fn e_enclosures_nest() {
    let mut previous = recognize::e_high_precision(1);
    for digits in 2..60 {
        let next = recognize::e_high_precision(digits);
        assert!(previous.contains_interval(&next), "{digits}");
        previous = next;
    }
}

proptest! {
    #[test]
    fn snapshot_slices_are_found(pick in any::<prop::sample::Index>(), start in 0usize..11, len in 4usize..10) {
        let snap = SequenceSnapshot::bundled();
        let entries: Vec<_> = snap.iter().collect();
        let (id, terms) = entries[pick.index(entries.len())];
        prop_assume!(start + len <= terms.len());
        let query = &terms[start..start + len];
        let found = seqid::lookup_local(query, &snap, 10).unwrap();
        prop_assert!(found.iter().any(|m| m.id == id && m.shift == start));
    }
}

#[test]
fn snapshot_round_trips() {
    let snap = SequenceSnapshot::bundled();
    let (again, malformed) = SequenceSnapshot::parse_stripped(&snap.to_stripped());
    assert!(malformed.is_empty());
    assert_eq!(again, snap);
}

#[test]
fn bundled_fixtures_have_integer_values_where_expected() {
    let convs = engine::convergents(&fixtures::e_cf2(), 20).unwrap();
    assert!(convs.iter().all(|c| c.numerator.is_integer() && c.denominator.is_integer()));
    assert_eq!(convs[20].denominator, int(21) * (1..=21u64).map(BigInt::from).product::<BigInt>());
}
