//! Recognition of limits as Möbius transforms of e, `(p*e + q) / (r*e + s)`.
//!
//! All comparisons go through [`CertifiedInterval`]s with exact rational
//! endpoints, so a reported match means the enclosures really intersect.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::decimal;
use crate::expr::{self, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizeError {
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("denominator r*e + s must not be identically zero")]
    ZeroDenominator,
    #[error("denominator interval of {0} contains zero")]
    DenominatorStraddlesZero(ConstantExpr),
    #[error("interval lower bound exceeds upper bound")]
    InvalidInterval,
}

/// Closed interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifiedInterval {
    lower: BigRational,
    upper: BigRational,
}

impl CertifiedInterval {
    pub fn new(lower: BigRational, upper: BigRational) -> Result<Self, RecognizeError> {
        if lower > upper {
            return Err(RecognizeError::InvalidInterval);
        }
        Ok(CertifiedInterval { lower, upper })
    }

    pub fn point(x: BigRational) -> Self {
        CertifiedInterval {
            lower: x.clone(),
            upper: x,
        }
    }

    /// `[center - radius, center + radius]`.
    pub fn around(center: &BigRational, radius: &BigRational) -> Self {
        let radius = radius.abs();
        CertifiedInterval {
            lower: center - &radius,
            upper: center + &radius,
        }
    }

    pub fn lower(&self) -> &BigRational {
        &self.lower
    }

    pub fn upper(&self) -> &BigRational {
        &self.upper
    }

    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lower + &self.upper) / BigRational::from_integer(2.into())
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.lower <= *x && *x <= self.upper
    }

    pub fn contains_interval(&self, other: &CertifiedInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    pub fn intersects(&self, other: &CertifiedInterval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    /// Largest distance between a point of `self` and a point of `other`.
    pub fn max_distance(&self, other: &CertifiedInterval) -> BigRational {
        let a = (&self.upper - &other.lower).abs();
        let b = (&other.upper - &self.lower).abs();
        a.max(b)
    }
}

impl fmt::Display for CertifiedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            decimal::truncate(&self.lower, 30),
            decimal::truncate(&self.upper, 30)
        )
    }
}

/// `(p*e + q) / (r*e + s)`, normalized so that `gcd(p, q, r, s) = 1` and the
/// first nonzero coefficient is positive. Rationals are `(0, q, 0, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstantExpr {
    pub p: i64,
    pub q: i64,
    pub r: i64,
    pub s: i64,
}

impl ConstantExpr {
    pub fn new(p: i64, q: i64, r: i64, s: i64) -> Result<Self, RecognizeError> {
        if r == 0 && s == 0 {
            return Err(RecognizeError::ZeroDenominator);
        }
        let g = [q, r, s].into_iter().fold(p.abs(), |g, x| g.gcd(&x));
        let first = [p, q, r, s].into_iter().find(|x| *x != 0).expect("r or s nonzero");
        let g = if first < 0 { -g } else { g };
        Ok(ConstantExpr {
            p: p / g,
            q: q / g,
            r: r / g,
            s: s / g,
        })
    }

    pub fn e() -> Self {
        ConstantExpr { p: 1, q: 0, r: 0, s: 1 }
    }

    pub fn coefficients(&self) -> [i64; 4] {
        [self.p, self.q, self.r, self.s]
    }

    pub fn l1_norm(&self) -> u64 {
        self.coefficients().iter().map(|c| c.unsigned_abs()).sum()
    }

    /// True when the form does not depend on e (`p*s = q*r`).
    pub fn is_constant(&self) -> bool {
        self.p as i128 * self.s as i128 == self.q as i128 * self.r as i128
    }

    /// Parses targets such as `e`, `e + 1`, `(2*e + 1)/(e + 3)` or `8/3`.
    /// Anything that does not reduce to a Möbius form in `e` is rejected.
    pub fn parse(text: &str) -> Result<Self, RecognizeError> {
        let ast = expr::parse(text).map_err(|err| RecognizeError::InvalidTarget(err.to_string()))?;
        let (num, den) = linear_fraction(&ast)?;
        if num.degree() > 1 || den.degree() > 1 {
            return Err(RecognizeError::InvalidTarget(format!("`{text}` is not of the form (p*e+q)/(r*e+s)")));
        }
        if den.is_zero() {
            return Err(RecognizeError::ZeroDenominator);
        }
        let coeffs = [num.coeff(1), num.coeff(0), den.coeff(1), den.coeff(0)];
        let lcm = coeffs.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let ints: Vec<i64> = coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer().to_i64())
            .collect::<Option<_>>()
            .ok_or_else(|| RecognizeError::InvalidTarget(format!("coefficients of `{text}` are too large")))?;
        ConstantExpr::new(ints[0], ints[1], ints[2], ints[3])
    }
}

impl fmt::Display for ConstantExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn linear(a: i64, b: i64) -> String {
            let e_part = match a {
                0 => String::new(),
                1 => "e".to_string(),
                -1 => "-e".to_string(),
                a => format!("{a}*e"),
            };
            match (e_part.is_empty(), b) {
                (true, b) => b.to_string(),
                (false, 0) => e_part,
                (false, b) if b < 0 => format!("{e_part} - {}", -b),
                (false, b) => format!("{e_part} + {b}"),
            }
        }
        let num = linear(self.p, self.q);
        if self.r == 0 && self.s == 1 {
            return f.write_str(&num);
        }
        let wrap = |s: String, simple: bool| if simple { s } else { format!("({s})") };
        let num = wrap(num, self.p == 0 || self.q == 0);
        let den = linear(self.r, self.s);
        let den_simple = !den.starts_with('-') && (self.r == 0 || (self.s == 0 && self.r == 1));
        let den = wrap(den, den_simple);
        write!(f, "{num}/{den}")
    }
}

// Polynomials in e with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<BigRational>);

impl Poly {
    fn constant(c: BigRational) -> Poly {
        Poly(vec![c]).trimmed()
    }

    fn trimmed(mut self) -> Poly {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn coeff(&self, i: usize) -> BigRational {
        self.0.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        Poly((0..len).map(|i| self.coeff(i) + other.coeff(i)).collect()).trimmed()
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly(vec![]);
        }
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trimmed()
    }
}

fn linear_fraction(e: &Expr) -> Result<(Poly, Poly), RecognizeError> {
    let one = || Poly::constant(BigRational::one());
    if e.is_constant() {
        let v = e
            .evaluate(&Default::default())
            .map_err(|err| RecognizeError::InvalidTarget(err.to_string()))?;
        return Ok((Poly::constant(v), one()));
    }
    Ok(match e {
        Expr::Var(name) if name == "e" => (Poly(vec![BigRational::zero(), BigRational::one()]), one()),
        Expr::Var(name) => {
            return Err(RecognizeError::InvalidTarget(format!("unknown constant `{name}`")));
        }
        Expr::Neg(x) => {
            let (n, d) = linear_fraction(x)?;
            (n.neg(), d)
        }
        Expr::Add(l, r) | Expr::Sub(l, r) => {
            let (ln, ld) = linear_fraction(l)?;
            let (rn, rd) = linear_fraction(r)?;
            let rn = if matches!(e, Expr::Sub(..)) { rn.neg() } else { rn };
            if ld == rd {
                (ln.add(&rn), ld)
            } else {
                (ln.mul(&rd).add(&rn.mul(&ld)), ld.mul(&rd))
            }
        }
        Expr::Mul(l, r) => {
            let (ln, ld) = linear_fraction(l)?;
            let (rn, rd) = linear_fraction(r)?;
            (ln.mul(&rn), ld.mul(&rd))
        }
        Expr::Div(l, r) => {
            let (ln, ld) = linear_fraction(l)?;
            let (rn, rd) = linear_fraction(r)?;
            if rn.is_zero() {
                return Err(RecognizeError::ZeroDenominator);
            }
            (ln.mul(&rd), ld.mul(&rn))
        }
        other => {
            return Err(RecognizeError::InvalidTarget(format!(
                "`{other}` is not allowed in a Möbius target"
            )))
        }
    })
}

/// Smallest `m` with `2/(m+1)! < 10^-(digits+2)`; returns the enclosure
/// `[S_m, S_m + 2/(m+1)!]` of e where `S_m = sum_{k=0..m} 1/k!`.
pub fn e_high_precision(digits: u32) -> CertifiedInterval {
    let threshold = decimal::ten_pow_neg(digits + 2);
    let mut partial = BigRational::one();
    let mut inv_fact = BigRational::one(); // 1/m!
    let mut m: u64 = 0;
    loop {
        let tail_bound = BigRational::from_integer(2.into()) * &inv_fact / BigRational::from_integer((m + 1).into());
        if tail_bound < threshold {
            return CertifiedInterval {
                upper: &partial + tail_bound,
                lower: partial,
            };
        }
        m += 1;
        inv_fact /= BigRational::from_integer(m.into());
        partial += &inv_fact;
    }
}

/// Enclosure of `(p*x + q)/(r*x + s)` for `x` in `e_interval`.
pub fn mobius_value(c: &ConstantExpr, e_interval: &CertifiedInterval) -> Result<CertifiedInterval, RecognizeError> {
    let int = |v: i64| BigRational::from_integer(v.into());
    let (p, q, r, s) = (int(c.p), int(c.q), int(c.r), int(c.s));
    let den_lo = &r * e_interval.lower() + &s;
    let den_hi = &r * e_interval.upper() + &s;
    if den_lo.is_zero() || den_hi.is_zero() || den_lo.is_positive() != den_hi.is_positive() {
        return Err(RecognizeError::DenominatorStraddlesZero(*c));
    }
    // monotone on any interval avoiding the pole
    let at_lo = (&p * e_interval.lower() + &q) / den_lo;
    let at_hi = (&p * e_interval.upper() + &q) / den_hi;
    Ok(if at_lo <= at_hi {
        CertifiedInterval { lower: at_lo, upper: at_hi }
    } else {
        CertifiedInterval { lower: at_hi, upper: at_lo }
    })
}

/// Precision of the e enclosure used when matching against `value`.
fn e_digits_for(value: &CertifiedInterval) -> u32 {
    let width = value.width();
    if width.is_zero() {
        return 40;
    }
    let bits = width.denom().bits() as i64 - width.numer().bits() as i64;
    let digits = (bits as f64 * std::f64::consts::LOG10_2).ceil() as i64 + 10;
    digits.clamp(30, 100_000) as u32
}

fn compare_rank(a: &ConstantExpr, b: &ConstantExpr) -> Ordering {
    a.l1_norm().cmp(&b.l1_norm()).then_with(|| a.coefficients().cmp(&b.coefficients()))
}

// Floating-point rejection ahead of the exact check. The margin dwarfs the
// rounding error of a small-coefficient form evaluated away from its pole.
fn clearly_outside(c: &ConstantExpr, lo: f64, hi: f64) -> bool {
    let e = std::f64::consts::E;
    let den = c.r as f64 * e + c.s as f64;
    if den.abs() < 1e-6 {
        return false;
    }
    let v = (c.p as f64 * e + c.q as f64) / den;
    let margin = 1e-9 * (1.0 + v.abs());
    v + margin < lo || v - margin > hi
}

/// Every normalized `(p, q, r, s)` with `|coefficient| <= max_coeff` whose
/// enclosure meets `value`, simplest (smallest L1 norm) first, ties broken
/// lexicographically. Forms that do not depend on e are kept only in their
/// `(0, q, 0, s)` representation.
pub fn recognize(value: &CertifiedInterval, max_coeff: i64) -> Vec<ConstantExpr> {
    let e_interval = e_high_precision(e_digits_for(value));
    let bounds = match (value.lower().to_f64(), value.upper().to_f64()) {
        (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() => Some((lo, hi)),
        _ => None,
    };
    let k = max_coeff.abs();
    let mut found = Vec::new();
    for p in -k..=k {
        for q in -k..=k {
            for r in -k..=k {
                for s in -k..=k {
                    let Ok(c) = ConstantExpr::new(p, q, r, s) else { continue };
                    if c.coefficients() != [p, q, r, s] {
                        continue;
                    }
                    if c.is_constant() && (p != 0 || r != 0) {
                        continue;
                    }
                    if bounds.is_some_and(|(lo, hi)| clearly_outside(&c, lo, hi)) {
                        continue;
                    }
                    match mobius_value(&c, &e_interval) {
                        Ok(iv) if iv.intersects(value) => found.push(c),
                        _ => {}
                    }
                }
            }
        }
    }
    found.sort_by(compare_rank);
    found
}

/// The rational with the smallest denominator in `value` (smallest magnitude
/// among ties), or `None` if its denominator exceeds `max_denominator`.
pub fn rational_reconstruct(value: &CertifiedInterval, max_denominator: Option<&BigInt>) -> Option<BigRational> {
    let found = simplest_in(value.lower(), value.upper());
    match max_denominator {
        Some(bound) if found.denom() > bound => None,
        _ => Some(found),
    }
}

fn simplest_in(lo: &BigRational, hi: &BigRational) -> BigRational {
    if !lo.is_positive() && !hi.is_negative() {
        return BigRational::zero();
    }
    if hi.is_negative() {
        return -simplest_in(&-hi, &-lo);
    }
    // 0 < lo <= hi: walk the continued fraction expansion of both ends
    let mut partial_quotients = Vec::new();
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let mut value = loop {
        let fl = lo.floor();
        if fl == lo {
            break lo;
        }
        let next = &fl + BigRational::one();
        if next <= hi {
            break next;
        }
        let new_lo = (&hi - &fl).recip();
        let new_hi = (&lo - &fl).recip();
        partial_quotients.push(fl);
        lo = new_lo;
        hi = new_hi;
    };
    for a in partial_quotients.into_iter().rev() {
        value = a + value.recip();
    }
    value
}
