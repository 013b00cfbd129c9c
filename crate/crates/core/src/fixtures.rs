//! Bundled formula files for the two continued fractions of e and the
//! rescaled form of the first.

use crate::engine::FormulaSpec;
use crate::formula_file::parse_formula_file;

/// `(name, file contents)` for every bundled fixture.
pub const FIXTURES: [(&str, &str); 3] = [
    ("e_cf1", include_str!("../fixtures/e_cf1.cf")),
    ("e_cf1t", include_str!("../fixtures/e_cf1t.cf")),
    ("e_cf2", include_str!("../fixtures/e_cf2.cf")),
];

/// Looks up a fixture by name, accepting `e_cf2`, `e_cf2.cf` and
/// `fixtures/e_cf2.cf`.
pub fn by_name(name: &str) -> Option<FormulaSpec> {
    let name = name.strip_prefix("fixtures/").unwrap_or(name);
    let name = name.strip_suffix(".cf").unwrap_or(name);
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_formula_file(text).expect("bundled fixture parses"))
}

/// `2; (1, 1), then a_n = n - 1, b_n = n`.
pub fn e_cf1() -> FormulaSpec {
    by_name("e_cf1").unwrap()
}

/// `2; a_n = 1/n, b_n = 1`.
pub fn e_cf1t() -> FormulaSpec {
    by_name("e_cf1t").unwrap()
}

/// `3; a_n = -n, b_n = n + 3`.
pub fn e_cf2() -> FormulaSpec {
    by_name("e_cf2").unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_load() {
        for (name, _) in FIXTURES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
        assert_eq!(by_name("fixtures/e_cf2.cf").unwrap().name, "e_cf2");
        assert!(by_name("e_cf3").is_none());
        assert_eq!(e_cf1().prefix.len(), 1);
    }
}
