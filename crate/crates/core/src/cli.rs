//! Command-line front end.
//!
//! Every command prints a human-readable block followed by a
//! `--- machine ---` line and `key=value` lines. Exit status is 0 on
//! success, 1 when a check fails or is indeterminate, 2 on bad input.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num::{BigInt, BigRational, Signed, Zero};

use crate::decimal;
use crate::engine::{self, Convergents, FormulaSpec, Side, Verdict};
use crate::expr::Expr;
use crate::fixtures;
use crate::formula_file::load_formula_file;
use crate::recognize::{self, CertifiedInterval, ConstantExpr};
use crate::seqid::{self, SequenceSnapshot};
use crate::transform;
use crate::verify::{self, ClosedFormHypothesis};

/// Largest shift tried by `identify`.
pub const IDENTIFY_MAX_SHIFT: usize = 10;

pub const MACHINE_SEPARATOR: &str = "--- machine ---";

#[derive(Debug, Parser)]
#[command(name = "contfrac", version, about = "Exact generalized continued fraction toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "verbatim")]
pub enum SideArg {
    #[value(alias = "a")]
    A,
    #[value(alias = "b")]
    B,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::A => Side::A,
            SideArg::B => Side::B,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of A_n, B_n and z_n = A_n / B_n
    Eval {
        /// Formula file, or the name of a bundled fixture
        formula: String,
        #[arg(long, default_value_t = 10)]
        terms: usize,
        #[arg(long, default_value_t = 20)]
        digits: u32,
    },
    /// Estimate the limit from successive convergents
    Limit {
        formula: String,
        #[arg(long, default_value_t = 200)]
        max_terms: usize,
        #[arg(long, default_value_t = 20)]
        digits: u32,
    },
    /// Check closed forms for A_n / B_n and the limit against a target
    Verify {
        formula: String,
        #[arg(long)]
        closed_a: Option<String>,
        #[arg(long)]
        closed_b: Option<String>,
        #[arg(long, default_value_t = 0)]
        valid_from: usize,
        #[arg(long, default_value_t = verify::DEFAULT_N_MAX)]
        n_max: usize,
        /// Target of the form (p*e+q)/(r*e+s)
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 20)]
        digits: u32,
    },
    /// Rescale the terms without changing the convergents
    Transform {
        formula: String,
        #[arg(long, conflicts_with = "unitize", required_unless_present = "unitize")]
        scale: Option<String>,
        /// Scale so that every partial numerator becomes 1
        #[arg(long)]
        unitize: bool,
        #[arg(long, default_value_t = 10)]
        terms: usize,
    },
    /// Match a value against (p*e+q)/(r*e+s) with small integer coefficients
    Recognize {
        #[arg(long, conflicts_with = "formula", required_unless_present = "formula")]
        value: Option<String>,
        formula: Option<String>,
        #[arg(long, default_value_t = 5)]
        max_coeff: i64,
        #[arg(long, default_value_t = 20)]
        digits: u32,
    },
    /// Look up A_n or B_n in the OEIS snapshot
    Identify {
        formula: String,
        #[arg(long, value_enum, default_value_t = SideArg::A)]
        side: SideArg,
        /// Number of sequence values, starting at n = 0
        #[arg(long, default_value_t = 8)]
        terms: usize,
        /// Stripped-format file to search instead of the bundled snapshot
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Also fetch the query URL and print the raw response
        #[arg(long)]
        fetch: bool,
    },
    /// Run the bundled e formulas end to end
    Selftest,
}

/// Bad input; maps to exit status 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub human: String,
    pub machine: Vec<(String, String)>,
    pub success: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.success {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.human.clone();
        if !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(MACHINE_SEPARATOR);
        out.push('\n');
        for (k, v) in &self.machine {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }
}

/// Runs the command, prints its report and returns the exit status.
pub fn execute(cli: Cli) -> i32 {
    match run(cli.command) {
        Ok(report) => {
            print!("{}", report.render());
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(command: Command) -> Result<RunReport, CliError> {
    match command {
        Command::Eval { formula, terms, digits } => cmd_eval(&load_spec(&formula)?, terms, digits),
        Command::Limit {
            formula,
            max_terms,
            digits,
        } => cmd_limit(&load_spec(&formula)?, max_terms, digits),
        Command::Verify {
            formula,
            closed_a,
            closed_b,
            valid_from,
            n_max,
            target,
            digits,
        } => cmd_verify(
            &load_spec(&formula)?,
            closed_a.as_deref(),
            closed_b.as_deref(),
            valid_from,
            n_max,
            target.as_deref(),
            digits,
        ),
        Command::Transform {
            formula,
            scale,
            unitize,
            terms,
        } => cmd_transform(&load_spec(&formula)?, scale.as_deref(), unitize, terms),
        Command::Recognize {
            value,
            formula,
            max_coeff,
            digits,
        } => cmd_recognize(value.as_deref(), formula.as_deref(), max_coeff, digits),
        Command::Identify {
            formula,
            side,
            terms,
            snapshot,
            fetch,
        } => cmd_identify(&load_spec(&formula)?, side.into(), terms, snapshot.as_deref(), fetch),
        Command::Selftest => Ok(cmd_selftest()),
    }
}

/// Loads a formula file; a path that does not exist but names a bundled
/// fixture (`e_cf2`, `fixtures/e_cf2`, ...) loads that fixture.
pub fn load_spec(path: &str) -> Result<FormulaSpec, CliError> {
    let p = Path::new(path);
    if !p.exists() {
        if let Some(spec) = fixtures::by_name(path) {
            return Ok(spec);
        }
    }
    Ok(load_formula_file(p)?)
}

fn kv(key: impl Into<String>, value: impl ToString) -> (String, String) {
    (key.into(), value.to_string())
}

fn value_text(v: &Option<BigRational>) -> String {
    v.as_ref().map_or_else(|| "undefined".to_string(), ToString::to_string)
}

pub fn cmd_eval(spec: &FormulaSpec, terms: usize, digits: u32) -> Result<RunReport, CliError> {
    let convs = engine::convergents(spec, terms)?;
    let mut human = format!("{spec}\n{:>4}  {:>20}  {:>20}  {:>20}  decimal\n", "n", "A_n", "B_n", "z_n");
    let mut machine = vec![kv("name", &spec.name), kv("terms", terms)];
    for c in &convs {
        let dec = c
            .value
            .as_ref()
            .map_or_else(|| "undefined".to_string(), |v| decimal::truncate(v, digits as usize));
        human.push_str(&format!(
            "{:>4}  {:>20}  {:>20}  {:>20}  {dec}\n",
            c.index,
            c.numerator,
            c.denominator,
            value_text(&c.value)
        ));
        machine.push(kv(format!("A.{}", c.index), &c.numerator));
        machine.push(kv(format!("B.{}", c.index), &c.denominator));
        machine.push(kv(format!("z.{}", c.index), value_text(&c.value)));
        machine.push(kv(format!("decimal.{}", c.index), dec));
    }
    Ok(RunReport {
        human,
        machine,
        success: true,
    })
}

pub fn cmd_limit(spec: &FormulaSpec, max_terms: usize, digits: u32) -> Result<RunReport, CliError> {
    let est = engine::estimate_limit(spec, max_terms, digits)?;
    let mut human = format!("{}\nverdict: {}\nn used:  {}\n", spec.name, est.verdict, est.n_used);
    let mut machine = vec![
        kv("name", &spec.name),
        kv("verdict", est.verdict),
        kv("n_used", est.n_used),
        kv("digits", est.digits),
    ];
    if let Some(d) = est.decimal() {
        human.push_str(&format!("value:   {d}\n"));
        machine.push(kv("value", d));
    }
    if let Some(b) = &est.error_bound {
        human.push_str(&format!("error <= {}\n", decimal::sci_upper(b)));
        machine.push(kv("error_bound", decimal::sci_upper(b)));
    }
    Ok(RunReport {
        human,
        machine,
        success: est.verdict == Verdict::Converged,
    })
}

pub fn cmd_verify(
    spec: &FormulaSpec,
    closed_a: Option<&str>,
    closed_b: Option<&str>,
    valid_from: usize,
    n_max: usize,
    target: Option<&str>,
    digits: u32,
) -> Result<RunReport, CliError> {
    if closed_a.is_none() && closed_b.is_none() && target.is_none() {
        return Err(CliError("nothing to verify: give --closed-a, --closed-b or --target".into()));
    }
    let target = target.map(ConstantExpr::parse).transpose()?;
    let mut human = format!("{spec}\n");
    let mut machine = vec![kv("name", &spec.name)];
    let mut success = true;

    for (side, text, prefix) in [(Side::A, closed_a, "closed_a"), (Side::B, closed_b, "closed_b")] {
        let Some(text) = text else { continue };
        let hyp = ClosedFormHypothesis::new(side, Expr::parse(text)?, valid_from)?;
        let report = verify::check_closed_form(spec, &hyp, n_max)?;
        success &= report.passed();
        human.push_str(&report.human());
        machine.extend(report.machine(prefix));
    }
    if let Some(target) = target {
        let check = verify::check_limit_against_target(spec, &target, digits, n_max)?;
        success &= check.passed();
        human.push_str(&check.human());
        machine.extend(check.machine("limit"));
    }
    machine.push(kv("result", if success { "pass" } else { "fail" }));
    Ok(RunReport {
        human,
        machine,
        success,
    })
}

pub fn cmd_transform(
    spec: &FormulaSpec,
    scale: Option<&str>,
    unitize: bool,
    terms: usize,
) -> Result<RunReport, CliError> {
    let original = spec.terms(terms)?;
    let b0 = spec.b0_value()?;
    let (scaled_terms, factors, header) = match (scale, unitize) {
        (Some(text), false) => {
            let c = Expr::parse(text)?;
            let scaled = transform::apply_scaling_expr(spec, &c)?;
            let factors = transform::ScalingSequence::Expr(c).values(terms)?;
            let header = format!("scaled: {scaled}\n");
            (scaled.terms(terms)?, factors, header)
        }
        (None, true) => {
            let (scaled, factors) = transform::unitize_partial_numerators(&original)?;
            (scaled, factors, "unitized partial numerators\n".to_string())
        }
        _ => return Err(CliError("give exactly one of --scale or --unitize".into())),
    };

    let before: Vec<_> = Convergents::of_terms(b0.clone(), &original).collect::<Result<_, _>>()?;
    let after: Vec<_> = Convergents::of_terms(b0, &scaled_terms).collect::<Result<_, _>>()?;
    let mut human = format!("{spec}\n{header}{:>4}  {:>12}  {:>12}  {:>12}  {:>20}  same z_n\n", "n", "c_n", "a'_n", "b'_n", "z_n");
    let mut machine = vec![kv("name", &spec.name), kv("terms", terms)];
    let mut success = true;
    for n in 0..=terms {
        let same = before[n].value == after[n].value;
        success &= same;
        let (c, a, b) = if n == 0 {
            ("1".to_string(), "-".to_string(), spec.b0.render())
        } else {
            let (a, b) = &scaled_terms[n - 1];
            (factors[n - 1].to_string(), a.to_string(), b.to_string())
        };
        human.push_str(&format!(
            "{n:>4}  {c:>12}  {a:>12}  {b:>12}  {:>20}  {}\n",
            value_text(&after[n].value),
            if same { "yes" } else { "NO" }
        ));
        if n > 0 {
            machine.push(kv(format!("c.{n}"), c));
            machine.push(kv(format!("a.{n}"), a));
            machine.push(kv(format!("b.{n}"), b));
        }
        machine.push(kv(format!("z.{n}"), value_text(&after[n].value)));
    }
    machine.push(kv("convergents_equal", success));
    Ok(RunReport {
        human,
        machine,
        success,
    })
}

pub fn cmd_recognize(
    value: Option<&str>,
    formula: Option<&str>,
    max_coeff: i64,
    digits: u32,
) -> Result<RunReport, CliError> {
    let interval = match (value, formula) {
        (Some(text), None) => {
            let (v, places) =
                decimal::parse_decimal(text).ok_or_else(|| CliError(format!("not a decimal number: `{text}`")))?;
            CertifiedInterval::around(&v, &decimal::ten_pow_neg(places))
        }
        (None, Some(path)) => {
            let spec = load_spec(path)?;
            let est = engine::estimate_limit(&spec, verify::DEFAULT_N_MAX, digits)?;
            match (&est.verdict, &est.value, &est.error_bound) {
                (Verdict::Converged, Some(v), Some(bound)) => CertifiedInterval::around(v, bound),
                _ => {
                    return Ok(RunReport {
                        human: format!("{}: limit not established ({})\n", spec.name, est.verdict),
                        machine: vec![kv("verdict", est.verdict), kv("matches", 0)],
                        success: false,
                    })
                }
            }
        }
        _ => return Err(CliError("give exactly one of --value or a formula file".into())),
    };
    if max_coeff < 1 {
        return Err(CliError(format!("--max-coeff must be positive, got {max_coeff}")));
    }

    let found = recognize::recognize(&interval, max_coeff);
    let mut human = format!(
        "interval [{}, {}]\n",
        decimal::truncate(interval.lower(), digits as usize),
        decimal::truncate(interval.upper(), digits as usize)
    );
    let mut machine = vec![kv("max_coeff", max_coeff), kv("matches", found.len())];
    for (i, c) in found.iter().enumerate() {
        let [p, q, r, s] = c.coefficients();
        human.push_str(&format!("{:>3}. {c}  ({p}, {q}, {r}, {s})\n", i + 1));
        machine.push(kv(format!("match.{}", i + 1), c));
        machine.push(kv(format!("match.{}.coefficients", i + 1), format!("{p},{q},{r},{s}")));
    }
    if found.is_empty() {
        human.push_str("no match\n");
    }
    if let Some(q) = recognize::rational_reconstruct(&interval, None) {
        human.push_str(&format!("simplest rational in interval: {q}\n"));
        machine.push(kv("simplest_rational", q));
    }
    Ok(RunReport {
        human,
        machine,
        success: !found.is_empty(),
    })
}

pub fn cmd_identify(
    spec: &FormulaSpec,
    side: Side,
    terms: usize,
    snapshot: Option<&Path>,
    fetch: bool,
) -> Result<RunReport, CliError> {
    if terms < seqid::MIN_QUERY_LEN {
        return Err(seqid::SeqError::QueryTooShort { len: terms }.into());
    }
    let convs = engine::convergents(spec, terms - 1)?;
    let query = seqid::extract_integer_sequence(&convs, side)?;
    let (snap, malformed) = match snapshot {
        Some(path) => SequenceSnapshot::ingest_stripped_file(path)?,
        None => (SequenceSnapshot::bundled(), Vec::new()),
    };
    let matches = seqid::lookup_local(&query, &snap, IDENTIFY_MAX_SHIFT)?;
    let url = seqid::online_query_string(&query);

    let joined = query.iter().map(BigInt::to_string).collect::<Vec<_>>().join(", ");
    let mut human = format!("{} {side}_n, n = 0..{}: {joined}\n", spec.name, terms - 1);
    for m in &malformed {
        human.push_str(&format!("warning: snapshot line {}: {}\n", m.line, m.reason));
    }
    let mut machine = vec![
        kv("side", side),
        kv("sequence", query.iter().map(BigInt::to_string).collect::<Vec<_>>().join(",")),
        kv("matches", matches.len()),
    ];
    for (i, m) in matches.iter().enumerate() {
        human.push_str(&format!("{} shift {}\n", m.id, m.shift));
        machine.push(kv(format!("match.{}", i + 1), format!("{} shift {}", m.id, m.shift)));
    }
    if matches.is_empty() {
        human.push_str("no local match\n");
    }
    human.push_str(&format!("query: {url}\n"));
    machine.push(kv("url", &url));
    if fetch {
        let body = ureq::get(&url)
            .call()
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| CliError(format!("fetching {url}: {e}")))?;
        human.push_str(&body);
        if !body.ends_with('\n') {
            human.push('\n');
        }
    }
    Ok(RunReport {
        human,
        machine,
        success: !matches.is_empty(),
    })
}

/// Named pass/fail checks run by `selftest`.
pub fn selftest_checks() -> Vec<(&'static str, bool)> {
    let cf1 = fixtures::e_cf1();
    let cf1t = fixtures::e_cf1t();
    let cf2 = fixtures::e_cf2();
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let mut checks = Vec::new();

    let z = |spec: &FormulaSpec, n: usize| engine::convergents(spec, n).ok().and_then(|c| c[n].value.clone());
    checks.push(("z_0 of e_cf1t is 2", z(&cf1t, 0) == Some(r(2, 1))));
    checks.push(("z_2 of e_cf2 is 49/18", z(&cf2, 2) == Some(r(49, 18))));
    checks.push((
        "e_cf1 and e_cf1t share every z_n up to 100",
        match (engine::convergents(&cf1, 100), engine::convergents(&cf1t, 100)) {
            (Ok(x), Ok(y)) => x.iter().zip(&y).all(|(p, q)| p.value == q.value),
            _ => false,
        },
    ));

    let identified = |side: Side, id: &str| {
        engine::convergents(&cf2, 7)
            .ok()
            .and_then(|c| seqid::extract_integer_sequence(&c, side).ok())
            .and_then(|q| seqid::lookup_local(&q, &SequenceSnapshot::bundled(), IDENTIFY_MAX_SHIFT).ok())
            .is_some_and(|m| m.iter().any(|m| m.id == id && m.shift == 1))
    };
    checks.push(("e_cf2 A_n is A001339 shifted by 1", identified(Side::A, "A001339")));
    checks.push(("e_cf2 B_n is A001563 shifted by 1", identified(Side::B, "A001563")));

    let closed = |spec: &FormulaSpec, side: Side, text: &str, n0: usize| {
        Expr::parse(text)
            .ok()
            .and_then(|f| ClosedFormHypothesis::new(side, f, n0).ok())
            .and_then(|h| verify::check_closed_form(spec, &h, verify::DEFAULT_N_MAX).ok())
            .is_some_and(|report| report.passed())
    };
    checks.push(("e_cf1t A_n = n + 2", closed(&cf1t, Side::A, "n + 2", 0)));
    checks.push((
        "e_cf1t B_n = (n + 2) sum (-1)^i / i!",
        closed(&cf1t, Side::B, "(n + 2) * sum(i, 2, n + 2, (-1)^i / fact(i))", 0),
    ));
    checks.push(("e_cf2 B_n = (n + 1) (n + 1)!", closed(&cf2, Side::B, "(n + 1) * fact(n + 1)", 1)));
    checks.push(("e_cf2 A_n = sum (k + 1)! C(n + 1, k)", closed(&cf2, Side::A, verify::A_SUM_FORM, 1)));
    checks.push(("two summation forms of e_cf2 A_n agree", verify::check_reindexed_sum_equivalence(100)));
    checks.push(("e_cf2 z_n matches both summation forms", verify::vn_simplification_check(100)));

    for (name, spec) in [("e_cf1t converges to e", &cf1t), ("e_cf2 converges to e", &cf2)] {
        let ok = verify::check_limit_against_target(spec, &ConstantExpr::e(), 25, 40).is_ok_and(|c| c.passed());
        checks.push((name, ok));
    }

    for (name, spec) in [("z_25 of e_cf1t is recognized as e", &cf1t), ("z_25 of e_cf2 is recognized as e", &cf2)] {
        let ok = engine::convergents(spec, 25).ok().is_some_and(|c| match (&c[24].value, &c[25].value) {
            (Some(prev), Some(last)) => {
                let width = (last - prev).abs();
                let found = recognize::recognize(&CertifiedInterval::around(last, &width), 5);
                found.first() == Some(&ConstantExpr::e()) && !width.is_zero()
            }
            _ => false,
        });
        checks.push((name, ok));
    }
    checks
}

pub fn cmd_selftest() -> RunReport {
    let start = Instant::now();
    let checks = selftest_checks();
    let mut human = String::new();
    let mut machine = Vec::new();
    for (i, (name, ok)) in checks.iter().enumerate() {
        human.push_str(&format!("{} {name}\n", if *ok { "PASS" } else { "FAIL" }));
        machine.push(kv(format!("check.{}", i + 1), if *ok { "pass" } else { "fail" }));
    }
    let passed = checks.iter().filter(|(_, ok)| *ok).count();
    human.push_str(&format!(
        "{passed}/{} checks passed in {:.2} s\n",
        checks.len(),
        start.elapsed().as_secs_f64()
    ));
    machine.push(kv("passed", passed));
    machine.push(kv("total", checks.len()));
    RunReport {
        human,
        machine,
        success: passed == checks.len(),
    }
}
