//! Sources of curves: torus-knot projections, exhaustive enumeration and
//! Gauss-code tables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{realize, CanonicalCode, PlaneCurve};
use crate::moves::{apply_imove, enumerate_imoves};
use crate::word::{parse_gauss, GaussWord, ParseError, Sign};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("torus({p},{q}) needs p, q >= 2 and gcd(p, q) = 1")]
    BadTorus { p: usize, q: usize },
}

/// Standard projection of the (p, q) torus knot: the closure of the braid
/// `(σ1 σ2 ⋯ σ(p−1))^q`, with `q·(p−1)` crossings.
pub fn torus_projection(p: usize, q: usize) -> Result<PlaneCurve, GeneratorError> {
    if p < 2 || q < 2 || gcd(p, q) != 1 {
        return Err(GeneratorError::BadTorus { p, q });
    }
    let gens: Vec<usize> = (0..q).flat_map(|_| 0..p - 1).collect();
    let mut raw = Vec::with_capacity(2 * gens.len());
    let mut first_moved_right: BTreeMap<usize, bool> = BTreeMap::new();
    let mut pos = 0;
    for _ in 0..p {
        for (k, &g) in gens.iter().enumerate() {
            if pos == g || pos == g + 1 {
                let right = pos == g;
                first_moved_right.entry(k).or_insert(right);
                raw.push(k as u64);
                pos = if right { g + 1 } else { g };
            }
        }
    }
    debug_assert_eq!(pos, 0);
    // A crossing first met by the strand moving right has order
    // in(first), out(second), out(first), in(second) counter-clockwise.
    let tokens: Vec<(u64, Sign)> = raw
        .iter()
        .map(|&k| (k, if first_moved_right[&(k as usize)] { Sign::Minus } else { Sign::Plus }))
        .collect();
    let word = GaussWord::signed(&tokens).expect("braid closure is a double-occurrence word");
    Ok(PlaneCurve::from_word(&word).expect("braid closures are planar"))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest crossing number enumerated without `extended`.
pub const DESK_LIMIT: usize = 8;
/// Largest crossing number enumerated at all.
pub const EXTENDED_LIMIT: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationFilter {
    pub max_crossings: usize,
    pub reduced_only: bool,
    pub prime_only: bool,
    /// Allows crossing numbers above `DESK_LIMIT`.
    pub extended: bool,
    /// Stop once a level would hold more curves than this.
    pub max_classes: Option<usize>,
}

impl EnumerationFilter {
    pub fn all(max_crossings: usize) -> Self {
        EnumerationFilter {
            max_crossings,
            reduced_only: false,
            prime_only: false,
            extended: max_crossings > DESK_LIMIT,
            max_classes: None,
        }
    }

    pub fn reduced_prime(max_crossings: usize) -> Self {
        EnumerationFilter { reduced_only: true, prime_only: true, ..Self::all(max_crossings) }
    }

    pub fn accepts(&self, curve: &PlaneCurve) -> bool {
        (!self.reduced_only || curve.is_reduced()) && (!self.prime_only || curve.is_prime())
    }
}

/// Where an interrupted enumeration can pick up again: every curve with
/// `completed_crossings` crossings is known.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResumeToken {
    pub completed_crossings: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("{requested} crossings exceeds the limit of {limit}")]
    TooManyCrossings { requested: usize, limit: usize },
    #[error("class budget exhausted after {} crossings", resume.completed_crossings)]
    Budget {
        /// Filtered curves up to the last complete level.
        partial: Vec<CanonicalCode>,
        /// Every curve (unfiltered) of the last complete level.
        frontier: Vec<CanonicalCode>,
        resume: ResumeToken,
    },
}

/// Every curve with exactly one more crossing than some curve in `level`.
///
/// Each curve with `n + 1` crossings splices to some curve with `n`, and the
/// splice is undone by an insertion, so starting from the single one-crossing
/// curve this reaches everything.
pub fn grow_level(level: &[CanonicalCode]) -> Vec<CanonicalCode> {
    let found: Vec<Vec<CanonicalCode>> = level
        .par_iter()
        .map(|code| {
            let curve = code.to_curve();
            let mut out: Vec<CanonicalCode> = enumerate_imoves(&curve)
                .into_iter()
                .map(|mv| apply_imove(&curve, mv).expect("enumerated moves apply").0.canonical())
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    let set: BTreeSet<CanonicalCode> = found.into_iter().flatten().collect();
    set.into_iter().collect()
}

/// The one-crossing curve.
pub fn curl() -> CanonicalCode {
    PlaneCurve::parse("1+ 1+").expect("curl is planar").canonical()
}

/// All curves up to `filter.max_crossings`, each once, ordered by crossing
/// number and then by code.
pub fn enumerate_curves(filter: &EnumerationFilter) -> Result<Vec<CanonicalCode>, EnumerationError> {
    resume_enumeration(filter, &ResumeToken { completed_crossings: 0 }, &[])
}

/// Continues an enumeration given the full (unfiltered) level named by the
/// token. Only curves above that level are returned.
pub fn resume_enumeration(
    filter: &EnumerationFilter,
    token: &ResumeToken,
    frontier: &[CanonicalCode],
) -> Result<Vec<CanonicalCode>, EnumerationError> {
    let limit = if filter.extended { EXTENDED_LIMIT } else { DESK_LIMIT };
    if filter.max_crossings > limit {
        return Err(EnumerationError::TooManyCrossings { requested: filter.max_crossings, limit });
    }
    let mut out = Vec::new();
    let mut level: Vec<CanonicalCode> = frontier.to_vec();
    for n in token.completed_crossings + 1..=filter.max_crossings {
        let next = if n == 1 { vec![curl()] } else { grow_level(&level) };
        if filter.max_classes.is_some_and(|cap| next.len() > cap) {
            return Err(EnumerationError::Budget {
                partial: out,
                frontier: level,
                resume: ResumeToken { completed_crossings: n - 1 },
            });
        }
        level = next;
        out.extend(level.iter().filter(|c| filter.accepts(&c.to_curve())).cloned());
    }
    Ok(out)
}

/// All curves with exactly `n` crossings, found by listing every
/// double-occurrence word and realizing it. Slow; used as a cross-check.
pub fn enumerate_by_words(n: usize) -> Vec<CanonicalCode> {
    fn rec(word: &mut Vec<usize>, open: &mut Vec<usize>, next: usize, n: usize, out: &mut BTreeSet<CanonicalCode>) {
        if word.len() == 2 * n {
            let w = GaussWord::from_parts(word.clone(), None);
            for c in realize(&w) {
                out.insert(c.canonical());
            }
            return;
        }
        if next < n {
            word.push(next);
            open.push(next);
            rec(word, open, next + 1, n, out);
            open.pop();
            word.pop();
        }
        for i in 0..open.len() {
            let l = open.remove(i);
            word.push(l);
            rec(word, open, next, n, out);
            word.pop();
            open.insert(i, l);
        }
    }
    let mut out = BTreeSet::new();
    if n > 0 {
        rec(&mut Vec::new(), &mut Vec::new(), 0, n, &mut out);
    }
    out.into_iter().collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: word is not realizable on the sphere")]
    Unrealizable { line: usize },
    #[error("cannot read table: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Duplicate {
    pub line: usize,
    pub first_line: usize,
    pub code: CanonicalCode,
}

#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    /// Distinct curves with the line they first appeared on.
    pub curves: Vec<(usize, PlaneCurve)>,
    pub duplicates: Vec<Duplicate>,
}

/// Reads a table of Gauss codes from a file.
pub fn ingest_table(path: &Path) -> Result<IngestReport, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io(e.to_string()))?;
    ingest_str(&text)
}

/// Reads a table of Gauss codes, one per line. An unsigned line contributes
/// every embedding of its word.
pub fn ingest_str(text: &str) -> Result<IngestReport, IngestError> {
    let mut report = IngestReport::default();
    let mut first_seen: BTreeMap<CanonicalCode, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let word = parse_gauss(trimmed).map_err(|source| IngestError::Parse { line, source })?;
        let curves = realize(&word);
        if curves.is_empty() {
            return Err(IngestError::Unrealizable { line });
        }
        for curve in curves {
            let code = curve.canonical();
            match first_seen.get(&code) {
                Some(&first_line) => report.duplicates.push(Duplicate { line, first_line, code }),
                None => {
                    first_seen.insert(code, line);
                    report.curves.push((line, curve));
                }
            }
        }
    }
    Ok(report)
}
