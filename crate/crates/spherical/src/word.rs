//! Double-occurrence words and the textual Gauss-code format.
//!
//! A line holds whitespace-separated tokens `<int>[+|-]`. Every integer must
//! occur exactly twice; if any token carries a sign, all of them must, and the
//! two occurrences of a label must agree.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Local handedness of a crossing.
///
/// With passes `p` (first visit) and `q` (second visit), `Plus` means the
/// counter-clockwise order of darts is `in(p), in(q), out(p), out(q)` and
/// `Minus` means `in(p), out(q), out(p), in(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("bad token `{token}` at position {position}")]
    BadToken { position: usize, token: String },
    #[error("label {label} occurs {count} times, expected 2")]
    Multiplicity { label: u64, count: usize },
    #[error("occurrences of label {label} carry different signs")]
    SignMismatch { label: u64 },
    #[error("signed and unsigned tokens mixed on one line")]
    MixedSigns,
    #[error("too many crossings ({0}); at most 120 are supported")]
    TooLarge(usize),
}

/// A validated double-occurrence word with crossings labelled `0..n` in order
/// of first appearance, optionally carrying one sign per crossing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussWord {
    labels: Vec<usize>,
    signs: Option<Vec<Sign>>,
}

impl GaussWord {
    /// Builds a word from raw labels (any integers), normalising them.
    pub fn unsigned(raw: &[u64]) -> Result<Self, ParseError> {
        let labels = normalise(raw)?;
        Ok(GaussWord { labels, signs: None })
    }

    /// Builds a signed word from `(label, sign)` tokens.
    pub fn signed(raw: &[(u64, Sign)]) -> Result<Self, ParseError> {
        let plain: Vec<u64> = raw.iter().map(|t| t.0).collect();
        let labels = normalise(&plain)?;
        let n = labels.len() / 2;
        let mut signs: Vec<Option<Sign>> = vec![None; n];
        for (&label, &(raw_label, sign)) in labels.iter().zip(raw) {
            match signs[label] {
                None => signs[label] = Some(sign),
                Some(s) if s != sign => return Err(ParseError::SignMismatch { label: raw_label }),
                Some(_) => {}
            }
        }
        Ok(GaussWord {
            labels,
            signs: Some(signs.into_iter().map(|s| s.expect("every label seen")).collect()),
        })
    }

    /// Internal constructor for already-normalised data.
    pub(crate) fn from_parts(labels: Vec<usize>, signs: Option<Vec<Sign>>) -> Self {
        GaussWord { labels, signs }
    }

    /// The empty word (simple closed curve).
    pub fn empty() -> Self {
        GaussWord { labels: Vec::new(), signs: Some(Vec::new()) }
    }

    pub fn crossings(&self) -> usize {
        self.labels.len() / 2
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn signs(&self) -> Option<&[Sign]> {
        self.signs.as_deref()
    }

    pub fn is_signed(&self) -> bool {
        self.signs.is_some()
    }

    /// Copy of this word with the given signs attached.
    pub fn with_signs(&self, signs: Vec<Sign>) -> Self {
        assert_eq!(signs.len(), self.crossings());
        GaussWord { labels: self.labels.clone(), signs: Some(signs) }
    }

    /// The underlying unsigned word.
    pub fn unsigned_word(&self) -> Self {
        GaussWord { labels: self.labels.clone(), signs: None }
    }

    /// Positions of the two occurrences of each crossing.
    pub fn occurrences(&self) -> Vec<(usize, usize)> {
        let mut occ = vec![(usize::MAX, usize::MAX); self.crossings()];
        for (pos, &l) in self.labels.iter().enumerate() {
            if occ[l].0 == usize::MAX {
                occ[l].0 = pos;
            } else {
                occ[l].1 = pos;
            }
        }
        occ
    }

    /// Crossings whose chord crosses `label`'s chord.
    pub fn interleaved_with(&self, label: usize) -> Vec<usize> {
        let (p, q) = self.occurrences()[label];
        let mut count = vec![0u8; self.crossings()];
        for &l in &self.labels[p + 1..q] {
            count[l] += 1;
        }
        (0..self.crossings()).filter(|&l| count[l] == 1).collect()
    }

    /// Necessary condition for planarity: every chord crosses an even number
    /// of chords.
    pub fn has_even_interlacement(&self) -> bool {
        (0..self.crossings()).all(|l| self.interleaved_with(l).len().is_multiple_of(2))
    }
}

fn normalise(raw: &[u64]) -> Result<Vec<usize>, ParseError> {
    if raw.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &l in raw {
        *counts.entry(l).or_default() += 1;
    }
    let mut bad: Vec<(u64, usize)> = counts.iter().filter(|(_, &c)| c != 2).map(|(&l, &c)| (l, c)).collect();
    bad.sort_unstable();
    if let Some(&(label, count)) = bad.first() {
        return Err(ParseError::Multiplicity { label, count });
    }
    if counts.len() > 120 {
        return Err(ParseError::TooLarge(counts.len()));
    }
    let mut rename: HashMap<u64, usize> = HashMap::new();
    Ok(raw
        .iter()
        .map(|l| {
            let next = rename.len();
            *rename.entry(*l).or_insert(next)
        })
        .collect())
}

/// Parses one line of the Gauss-code text format.
pub fn parse_gauss(text: &str) -> Result<GaussWord, ParseError> {
    let mut tokens = Vec::new();
    for (position, tok) in text.split_whitespace().enumerate() {
        let (digits, sign) = match tok.as_bytes().last() {
            Some(b'+') => (&tok[..tok.len() - 1], Some(Sign::Plus)),
            Some(b'-') => (&tok[..tok.len() - 1], Some(Sign::Minus)),
            _ => (tok, None),
        };
        let label: u64 = digits
            .parse()
            .map_err(|_| ParseError::BadToken { position, token: tok.to_string() })?;
        tokens.push((label, sign));
    }
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let signed = tokens.iter().filter(|t| t.1.is_some()).count();
    if signed == 0 {
        let raw: Vec<u64> = tokens.iter().map(|t| t.0).collect();
        GaussWord::unsigned(&raw)
    } else if signed == tokens.len() {
        let raw: Vec<(u64, Sign)> = tokens.iter().map(|t| (t.0, t.1.unwrap())).collect();
        GaussWord::signed(&raw)
    } else {
        Err(ParseError::MixedSigns)
    }
}

impl fmt::Display for GaussWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &l) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", l + 1)?;
            if let Some(signs) = &self.signs {
                write!(f, "{}", signs[l].symbol())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_word_parses() {
        let w = parse_gauss("1+ 2+ 1+ 2+").unwrap();
        assert_eq!(w.labels(), &[0, 1, 0, 1]);
        assert_eq!(w.signs().unwrap(), &[Sign::Plus, Sign::Plus]);
    }

    #[test]
    fn unsigned_word_parses_and_normalises() {
        let w = parse_gauss("7 3 3 7").unwrap();
        assert_eq!(w.labels(), &[0, 1, 1, 0]);
        assert!(!w.is_signed());
        assert_eq!(w.to_string(), "1 2 2 1");
    }

    #[test]
    fn rejects_odd_multiplicity() {
        assert_eq!(parse_gauss("1 2 1"), Err(ParseError::Multiplicity { label: 2, count: 1 }));
    }

    #[test]
    fn rejects_sign_mismatch_and_mixing() {
        assert_eq!(parse_gauss("1+ 1-"), Err(ParseError::SignMismatch { label: 1 }));
        assert_eq!(parse_gauss("1+ 1"), Err(ParseError::MixedSigns));
        assert_eq!(parse_gauss("   "), Err(ParseError::Empty));
        assert!(matches!(parse_gauss("1 x 1 x"), Err(ParseError::BadToken { position: 1, .. })));
    }

    #[test]
    fn interlacement_parity() {
        assert!(!parse_gauss("1 2 1 3 2 3").unwrap().has_even_interlacement());
        assert!(parse_gauss("1 2 3 1 2 3").unwrap().has_even_interlacement());
        assert_eq!(parse_gauss("1 2 1 2").unwrap().interleaved_with(0), vec![1]);
    }
}
