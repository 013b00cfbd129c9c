//! Integer sequence fingerprinting against OEIS data.
//!
//! Snapshots use the OEIS "stripped" distribution format:
//!
//! ```text
//! # comment
//! A001339 ,1,3,11,49,261,1631,
//! ```

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num::BigInt;
use thiserror::Error;

pub use crate::engine::Side;
use crate::engine::Convergent;

/// Curated excerpt shipped with the crate.
pub const BUNDLED_SNAPSHOT: &str = include_str!("../data/oeis_snapshot.txt");

/// Queries shorter than this are rejected as too noisy.
pub const MIN_QUERY_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("{which}_{index} = {value} is not an integer")]
    NonInteger { which: char, index: usize, value: String },
    #[error("empty convergent list")]
    Empty,
    #[error("query has {len} terms, at least {MIN_QUERY_LEN} are required")]
    QueryTooShort { len: usize },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no parseable sequence lines in {0}")]
    NoSequences(String),
}

/// A line that could not be parsed; it is skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceSnapshot {
    sequences: BTreeMap<String, Vec<BigInt>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceMatch {
    pub id: String,
    /// `query[i] == sequence[i + shift]`
    pub shift: usize,
    pub matched_len: usize,
}

impl SequenceSnapshot {
    pub fn bundled() -> Self {
        let (snapshot, malformed) = Self::parse_stripped(BUNDLED_SNAPSHOT);
        debug_assert!(malformed.is_empty());
        snapshot
    }

    /// Parses stripped-format text. Comment and blank lines are ignored;
    /// malformed lines are returned with their 1-based line numbers.
    pub fn parse_stripped(text: &str) -> (Self, Vec<MalformedLine>) {
        let mut snapshot = SequenceSnapshot::default();
        let mut malformed = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_line(line) {
                Ok((id, terms)) => match snapshot.sequences.entry(id) {
                    Entry::Occupied(e) => malformed.push(MalformedLine {
                        line: i + 1,
                        reason: format!("duplicate identifier {}", e.key()),
                    }),
                    Entry::Vacant(e) => {
                        e.insert(terms);
                    }
                },
                Err(reason) => malformed.push(MalformedLine { line: i + 1, reason }),
            }
        }
        (snapshot, malformed)
    }

    pub fn ingest_stripped_file(path: impl AsRef<Path>) -> Result<(Self, Vec<MalformedLine>), SeqError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SeqError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let (snapshot, malformed) = Self::parse_stripped(&text);
        if snapshot.is_empty() {
            return Err(SeqError::NoSequences(path.display().to_string()));
        }
        Ok((snapshot, malformed))
    }

    pub fn to_stripped(&self) -> String {
        let mut out = String::new();
        for (id, terms) in &self.sequences {
            out.push_str(id);
            out.push_str(" ,");
            for t in terms {
                let _ = write!(out, "{t},");
            }
            out.push('\n');
        }
        out
    }

    pub fn insert(&mut self, id: impl Into<String>, terms: Vec<BigInt>) {
        self.sequences.insert(id.into(), terms);
    }

    pub fn get(&self, id: &str) -> Option<&[BigInt]> {
        self.sequences.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[BigInt])> {
        self.sequences.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

fn parse_line(line: &str) -> Result<(String, Vec<BigInt>), String> {
    let (id, rest) = line
        .split_once(' ')
        .ok_or_else(|| "expected `Annnnnn ,t1,t2,...,`".to_string())?;
    let valid_id = id.len() == 7 && id.starts_with('A') && id[1..].chars().all(|c| c.is_ascii_digit());
    if !valid_id {
        return Err(format!("bad identifier `{id}`"));
    }
    let body = rest.trim();
    let body = body
        .strip_prefix(',')
        .ok_or_else(|| format!("terms of {id} must start with `,`"))?;
    let body = body.strip_suffix(',').unwrap_or(body);
    let terms = body
        .split(',')
        .map(|t| t.trim().parse::<BigInt>().map_err(|_| format!("bad term `{t}` in {id}")))
        .collect::<Result<Vec<_>, _>>()?;
    if terms.is_empty() {
        return Err(format!("{id} has no terms"));
    }
    Ok((id.to_string(), terms))
}

/// The raw A_n (or B_n) values, provided every one is an integer.
pub fn extract_integer_sequence(convergents: &[Convergent], side: Side) -> Result<Vec<BigInt>, SeqError> {
    if convergents.is_empty() {
        return Err(SeqError::Empty);
    }
    convergents
        .iter()
        .map(|c| {
            let (which, v) = match side {
                Side::A => ('A', &c.numerator),
                Side::B => ('B', &c.denominator),
            };
            if v.is_integer() {
                Ok(v.to_integer())
            } else {
                Err(SeqError::NonInteger {
                    which,
                    index: c.index,
                    value: v.to_string(),
                })
            }
        })
        .collect()
}

/// Every `(id, shift)` with `shift <= max_shift` at which the whole query
/// occurs in a snapshot sequence, ordered by identifier then shift.
pub fn lookup_local(
    query: &[BigInt],
    snapshot: &SequenceSnapshot,
    max_shift: usize,
) -> Result<Vec<SequenceMatch>, SeqError> {
    if query.len() < MIN_QUERY_LEN {
        return Err(SeqError::QueryTooShort { len: query.len() });
    }
    let mut found = Vec::new();
    for (id, terms) in snapshot.iter() {
        for shift in 0..=max_shift {
            if shift + query.len() > terms.len() {
                break;
            }
            if terms[shift..shift + query.len()] == *query {
                found.push(SequenceMatch {
                    id: id.to_string(),
                    shift,
                    matched_len: query.len(),
                });
            }
        }
    }
    Ok(found)
}

/// `https://oeis.org/search?q=<terms>&fmt=json`
pub fn online_query_string(query: &[BigInt]) -> String {
    let terms: Vec<String> = query.iter().map(ToString::to_string).collect();
    format!("https://oeis.org/search?q={}&fmt=json", terms.join(","))
}
