//! Spherical curves as combinatorial maps.
//!
//! Pass `p` is position `p` of the Gauss word. It owns two darts: `in(p) = 2p`
//! (the half-edge arriving at the crossing) and `out(p) = 2p + 1`. The edge
//! involution joins `out(p)` with `in(p + 1)`, and `rot` is the
//! counter-clockwise successor of a dart around its crossing. Faces are the
//! orbits of `d -> rot⁻¹(edge(d))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::{parse_gauss, GaussWord, ParseError, Sign};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CurveError {
    #[error("word is unsigned; use `realize` to find embeddings")]
    Unsigned,
    #[error("signed word does not embed in the sphere")]
    NotPlanar,
    #[error("the curve has no crossings")]
    NoCrossings,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A closed curve on the sphere with transverse double points.
#[derive(Clone, Debug)]
pub struct PlaneCurve {
    word: GaussWord,
    partner: Vec<usize>,
    rot: Vec<usize>,
    rot_inv: Vec<usize>,
}

/// Lexicographically least signed word over start, direction, relabelling
/// and reflection. Each byte is `label << 1 | minus`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn crossings(&self) -> usize {
        self.0.len() / 2
    }

    pub fn to_word(&self) -> GaussWord {
        let labels: Vec<usize> = self.0.iter().map(|b| (b >> 1) as usize).collect();
        let mut signs = vec![Sign::Plus; labels.len() / 2];
        for b in &self.0 {
            if b & 1 == 1 {
                signs[(b >> 1) as usize] = Sign::Minus;
            }
        }
        GaussWord::from_parts(labels, Some(signs))
    }

    /// Rebuilds the curve this code describes.
    pub fn to_curve(&self) -> PlaneCurve {
        if self.0.is_empty() {
            return PlaneCurve::circle();
        }
        PlaneCurve::from_word(&self.to_word()).expect("canonical codes come from planar curves")
    }

    pub fn parse(text: &str) -> Result<CanonicalCode, CurveError> {
        let curve = PlaneCurve::from_word(&parse_gauss(text)?)?;
        Ok(curve.canonical())
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("O");
        }
        write!(f, "{}", self.to_word())
    }
}

/// Number of faces of each size.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceCensus {
    pub counts: BTreeMap<usize, usize>,
}

impl FaceCensus {
    pub fn from_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = BTreeMap::new();
        for s in sizes {
            *counts.entry(s).or_insert(0) += 1;
        }
        FaceCensus { counts }
    }

    pub fn get(&self, size: usize) -> usize {
        self.counts.get(&size).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// `Σ (4 − n)·C_n`, which equals 8 for every spherical curve.
    pub fn curvature(&self) -> i64 {
        self.counts.iter().map(|(&n, &c)| (4 - n as i64) * c as i64).sum()
    }
}

impl fmt::Display for FaceCensus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|(n, c)| format!("{n}:{c}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// One face as the cyclic sequence of darts that trace it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub darts: Vec<usize>,
}

impl Face {
    pub fn size(&self) -> usize {
        self.darts.len()
    }
}

#[inline]
pub(crate) fn dart_in(p: usize) -> usize {
    2 * p
}

#[inline]
pub(crate) fn dart_out(p: usize) -> usize {
    2 * p + 1
}

#[inline]
pub(crate) fn is_out(d: usize) -> bool {
    d & 1 == 1
}

#[inline]
pub(crate) fn pass_of(d: usize) -> usize {
    d >> 1
}

impl PlaneCurve {
    /// Compiles a signed word, checking that it embeds in the sphere.
    pub fn from_word(word: &GaussWord) -> Result<Self, CurveError> {
        let curve = Self::build_unchecked(word)?;
        if curve.face_count() != curve.crossings() + 2 {
            return Err(CurveError::NotPlanar);
        }
        Ok(curve)
    }

    pub(crate) fn build_unchecked(word: &GaussWord) -> Result<Self, CurveError> {
        let signs = word.signs().ok_or(CurveError::Unsigned)?;
        let m = word.labels().len();
        let mut partner = vec![0; m];
        let mut rot = vec![0; 2 * m];
        for (label, &(p, q)) in word.occurrences().iter().enumerate() {
            partner[p] = q;
            partner[q] = p;
            let cycle = match signs[label] {
                Sign::Plus => [dart_in(p), dart_in(q), dart_out(p), dart_out(q)],
                Sign::Minus => [dart_in(p), dart_out(q), dart_out(p), dart_in(q)],
            };
            for i in 0..4 {
                rot[cycle[i]] = cycle[(i + 1) % 4];
            }
        }
        let mut rot_inv = vec![0; 2 * m];
        for (d, &r) in rot.iter().enumerate() {
            rot_inv[r] = d;
        }
        Ok(PlaneCurve { word: word.clone(), partner, rot, rot_inv })
    }

    /// Parses and compiles a signed Gauss code.
    pub fn parse(text: &str) -> Result<Self, CurveError> {
        Self::from_word(&parse_gauss(text)?)
    }

    /// The simple closed curve with no crossings.
    pub fn circle() -> Self {
        PlaneCurve { word: GaussWord::empty(), partner: vec![], rot: vec![], rot_inv: vec![] }
    }

    pub fn word(&self) -> &GaussWord {
        &self.word
    }

    pub fn crossings(&self) -> usize {
        self.word.crossings()
    }

    pub fn passes(&self) -> usize {
        self.partner.len()
    }

    pub fn label_at(&self, pass: usize) -> usize {
        self.word.labels()[pass]
    }

    pub fn partner_pass(&self, pass: usize) -> usize {
        self.partner[pass]
    }

    pub fn sign(&self, label: usize) -> Sign {
        self.word.signs().expect("curves are signed")[label]
    }

    /// Curve edge a dart lies on; edge `p` runs from pass `p` to pass `p + 1`.
    pub fn edge_of_dart(&self, d: usize) -> usize {
        let p = pass_of(d);
        if is_out(d) {
            p
        } else {
            (p + self.passes() - 1) % self.passes()
        }
    }

    /// Crossing label a dart sits at.
    pub fn crossing_of_dart(&self, d: usize) -> usize {
        self.label_at(pass_of(d))
    }

    pub(crate) fn rot(&self, d: usize) -> usize {
        self.rot[d]
    }

    pub(crate) fn rot_inv(&self, d: usize) -> usize {
        self.rot_inv[d]
    }

    /// The other half of the edge containing dart `d`.
    pub(crate) fn edge_mate(&self, d: usize) -> usize {
        let m = self.passes();
        let p = pass_of(d);
        if is_out(d) {
            dart_in((p + 1) % m)
        } else {
            dart_out((p + m - 1) % m)
        }
    }

    pub(crate) fn face_step(&self, d: usize) -> usize {
        self.rot_inv[self.edge_mate(d)]
    }

    fn face_count(&self) -> usize {
        let mut seen = vec![false; self.rot.len()];
        let mut count = 0;
        for d in 0..self.rot.len() {
            if seen[d] {
                continue;
            }
            count += 1;
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                x = self.face_step(x);
            }
        }
        count
    }

    /// All faces, each starting from its smallest dart, ordered by that dart.
    pub fn faces(&self) -> Vec<Face> {
        if self.crossings() == 0 {
            return vec![Face { darts: vec![] }, Face { darts: vec![] }];
        }
        let mut seen = vec![false; self.rot.len()];
        let mut faces = Vec::new();
        for d in 0..self.rot.len() {
            if seen[d] {
                continue;
            }
            let mut darts = Vec::new();
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                darts.push(x);
                x = self.face_step(x);
            }
            faces.push(Face { darts });
        }
        faces
    }

    pub fn census(&self) -> FaceCensus {
        if self.crossings() == 0 {
            return FaceCensus::from_sizes([0, 0]);
        }
        FaceCensus::from_sizes(self.faces().iter().map(Face::size))
    }

    /// Canonical code over start pass, direction and reflection.
    pub fn canonical(&self) -> CanonicalCode {
        let m = self.passes();
        if m == 0 {
            return CanonicalCode(vec![]);
        }
        let n = self.crossings();
        let mut best: Vec<u8> = Vec::new();
        let mut cur: Vec<u8> = Vec::with_capacity(m);
        let mut relabel = vec![u8::MAX; n];
        let mut label_sign = vec![0u8; n];
        for mirror in [false, true] {
            for forward in [true, false] {
                for start in 0..m {
                    cur.clear();
                    relabel.iter_mut().for_each(|x| *x = u8::MAX);
                    let mut next_label = 0u8;
                    // 0 = undecided, 1 = worse, 2 = better
                    let mut state = if best.is_empty() { 2 } else { 0 };
                    for i in 0..m {
                        let pass = if forward { (start + i) % m } else { (start + m - i) % m };
                        let label = self.word.labels()[pass];
                        let byte = if relabel[label] == u8::MAX {
                            relabel[label] = next_label;
                            next_label += 1;
                            let other = self.partner[pass];
                            let (e1, e2) = if forward {
                                (dart_in(pass), dart_in(other))
                            } else {
                                (dart_out(pass), dart_out(other))
                            };
                            let turn = if mirror { self.rot_inv[e1] } else { self.rot[e1] };
                            label_sign[label] = u8::from(turn != e2);
                            (relabel[label] << 1) | label_sign[label]
                        } else {
                            (relabel[label] << 1) | label_sign[label]
                        };
                        if state == 0 {
                            match byte.cmp(&best[i]) {
                                std::cmp::Ordering::Greater => {
                                    state = 1;
                                    break;
                                }
                                std::cmp::Ordering::Less => state = 2,
                                std::cmp::Ordering::Equal => {}
                            }
                        }
                        cur.push(byte);
                    }
                    if state == 2 {
                        std::mem::swap(&mut best, &mut cur);
                    }
                }
            }
        }
        CanonicalCode(best)
    }

    /// The same curve seen in a mirror.
    pub fn mirror(&self) -> PlaneCurve {
        let signs = self.word.signs().unwrap().iter().map(|s| s.flip()).collect();
        PlaneCurve::build_unchecked(&self.word.with_signs(signs)).unwrap()
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> PlaneCurve {
        let m = self.passes();
        let steps: Vec<(usize, bool)> = (0..m).rev().map(|p| (p, true)).collect();
        self.rebuild_from_steps(&steps)
    }

    /// Builds a curve from a walk over existing passes. `steps` lists the
    /// passes to visit together with whether each is walked backwards; the
    /// rotation at each crossing is taken from `self`.
    pub(crate) fn rebuild_from_steps(&self, steps: &[(usize, bool)]) -> PlaneCurve {
        self.rebuild_with_labels(steps).0
    }

    /// Like `rebuild_from_steps`, also giving each old crossing's new label
    /// (`usize::MAX` when it is no longer visited).
    pub(crate) fn rebuild_with_labels(&self, steps: &[(usize, bool)]) -> (PlaneCurve, Vec<usize>) {
        let n_old = self.crossings();
        let mut relabel = vec![usize::MAX; n_old];
        let mut first_enter = vec![0usize; n_old];
        let mut labels = Vec::with_capacity(steps.len());
        let mut signs = Vec::with_capacity(steps.len() / 2);
        for &(pass, backwards) in steps {
            let old = self.word.labels()[pass];
            let enter = if backwards { dart_out(pass) } else { dart_in(pass) };
            if relabel[old] == usize::MAX {
                relabel[old] = signs.len();
                first_enter[old] = enter;
                signs.push(Sign::Plus);
            } else {
                let s = if self.rot[first_enter[old]] == enter { Sign::Plus } else { Sign::Minus };
                signs[relabel[old]] = s;
            }
            labels.push(relabel[old]);
        }
        (PlaneCurve::build_unchecked(&GaussWord::from_parts(labels, Some(signs))).unwrap(), relabel)
    }

    /// Crossings whose chord crosses no other chord.
    pub fn reducible_crossings(&self) -> BTreeSet<usize> {
        (0..self.crossings()).filter(|&l| self.word.interleaved_with(l).is_empty()).collect()
    }

    pub fn is_reduced(&self) -> bool {
        let mut parity = vec![false; self.crossings()];
        self.word.occurrences().iter().all(|&(p, q)| {
            parity.iter_mut().for_each(|x| *x = false);
            for &l in &self.word.labels()[p + 1..q] {
                parity[l] = !parity[l];
            }
            parity.iter().any(|&x| x)
        })
    }

    /// True unless the word splits into two label-disjoint cyclic factors.
    pub fn is_prime(&self) -> bool {
        let m = self.passes();
        if m <= 2 {
            return true;
        }
        let labels = self.word.labels();
        let mut open = vec![false; self.crossings()];
        for start in 0..m {
            open.iter_mut().for_each(|x| *x = false);
            let mut unmatched = 0usize;
            for len in 1..=m - 2 {
                let l = labels[(start + len - 1) % m];
                if open[l] {
                    open[l] = false;
                    unmatched -= 1;
                } else {
                    open[l] = true;
                    unmatched += 1;
                }
                if unmatched == 0 && len >= 2 {
                    return false;
                }
            }
        }
        true
    }

    /// Connected sum joining the edge leaving pass `site_p` of `p` with the
    /// edge leaving pass `site_q` of `q`.
    pub fn connected_sum(p: &PlaneCurve, q: &PlaneCurve, site_p: usize, site_q: usize) -> PlaneCurve {
        assert!(p.crossings() > 0 && q.crossings() > 0, "connected sum needs two nontrivial curves");
        let mut sys = RotationSystem::from_curve(p);
        let other = RotationSystem::from_curve(q);
        let a = sys.slot_of_dart[dart_out(site_p)];
        let b = other.slot_of_dart[dart_out(site_q)] + sys.alpha.len();
        sys.append(&other);
        let a_next = sys.alpha[a];
        let b_next = sys.alpha[b];
        sys.join(a, b_next);
        sys.join(b, a_next);
        sys.trace().expect("connected sum is a single curve").curve
    }
}

/// Every sphere embedding of `word`, deduplicated by canonical code.
///
/// A signed word yields at most one curve. For an unsigned word all sign
/// assignments are tried (the first crossing fixed to `+`, which only removes
/// mirror images).
pub fn realize(word: &GaussWord) -> Vec<PlaneCurve> {
    if word.is_signed() {
        return PlaneCurve::from_word(word).into_iter().collect();
    }
    if !word.has_even_interlacement() {
        return vec![];
    }
    let n = word.crossings();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n.saturating_sub(1)) {
        let signs: Vec<Sign> = (0..n)
            .map(|i| if i > 0 && (mask >> (i - 1)) & 1 == 1 { Sign::Minus } else { Sign::Plus })
            .collect();
        if let Ok(curve) = PlaneCurve::from_word(&word.with_signs(signs)) {
            if seen.insert(curve.canonical()) {
                out.push(curve);
            }
        }
    }
    out
}

/// A curve as crossings with four slots each in counter-clockwise order and an
/// edge involution on slots. Straight-through is `slot + 2 (mod 4)`. Used for
/// local surgery; `trace` turns it back into a `PlaneCurve`.
#[derive(Clone, Debug)]
pub(crate) struct RotationSystem {
    pub alpha: Vec<usize>,
    /// Slot index (0..4) of each `PlaneCurve` dart of the source curve.
    pub slot_of_dart: Vec<usize>,
}

impl RotationSystem {
    pub fn from_curve(curve: &PlaneCurve) -> Self {
        let occ = curve.word.occurrences();
        let mut slot_of_dart = vec![0; 2 * curve.passes()];
        for (label, &(p, q)) in occ.iter().enumerate() {
            let cycle = match curve.sign(label) {
                Sign::Plus => [dart_in(p), dart_in(q), dart_out(p), dart_out(q)],
                Sign::Minus => [dart_in(p), dart_out(q), dart_out(p), dart_in(q)],
            };
            for (i, d) in cycle.into_iter().enumerate() {
                slot_of_dart[d] = 4 * label + i;
            }
        }
        let mut alpha = vec![0; 4 * curve.crossings()];
        for d in 0..2 * curve.passes() {
            alpha[slot_of_dart[d]] = slot_of_dart[curve.edge_mate(d)];
        }
        RotationSystem { alpha, slot_of_dart }
    }

    pub fn crossing_count(&self) -> usize {
        self.alpha.len() / 4
    }

    pub fn append(&mut self, other: &RotationSystem) {
        let offset = self.alpha.len();
        self.alpha.extend(other.alpha.iter().map(|a| a + offset));
    }

    /// Adds a crossing with four unattached slots, returning its first slot.
    pub fn add_crossing(&mut self) -> usize {
        let base = self.alpha.len();
        self.alpha.extend(base..base + 4);
        base
    }

    pub fn join(&mut self, a: usize, b: usize) {
        self.alpha[a] = b;
        self.alpha[b] = a;
    }

    pub fn rot(slot: usize) -> usize {
        (slot & !3) | ((slot + 1) & 3)
    }

    pub fn straight(slot: usize) -> usize {
        (slot & !3) | ((slot + 2) & 3)
    }

    /// Walks the curve from slot 0. Returns `None` if the walk does not visit
    /// every crossing twice (several components).
    pub fn trace(&self) -> Option<Traced> {
        let n = self.crossing_count();
        if n == 0 {
            return Some(Traced { curve: PlaneCurve::circle(), label_of_crossing: vec![], dart_of_slot: vec![] });
        }
        let mut relabel = vec![usize::MAX; n];
        let mut first_enter = vec![0usize; n];
        let mut labels = Vec::with_capacity(2 * n);
        let mut signs = Vec::with_capacity(n);
        let mut visits = vec![0u8; n];
        let mut dart_of_slot = vec![usize::MAX; 4 * n];
        let mut enter = 0usize;
        loop {
            let c = enter / 4;
            visits[c] += 1;
            if visits[c] > 2 {
                return None;
            }
            let pass = labels.len();
            dart_of_slot[enter] = dart_in(pass);
            dart_of_slot[Self::straight(enter)] = dart_out(pass);
            if relabel[c] == usize::MAX {
                relabel[c] = signs.len();
                first_enter[c] = enter;
                signs.push(Sign::Plus);
            } else {
                signs[relabel[c]] =
                    if Self::rot(first_enter[c]) == enter { Sign::Plus } else { Sign::Minus };
            }
            labels.push(relabel[c]);
            enter = self.alpha[Self::straight(enter)];
            if enter == 0 || labels.len() > 2 * n {
                break;
            }
        }
        if labels.len() != 2 * n || relabel.contains(&usize::MAX) {
            return None;
        }
        let curve = PlaneCurve::build_unchecked(&GaussWord::from_parts(labels, Some(signs))).ok()?;
        Some(Traced { curve, label_of_crossing: relabel, dart_of_slot })
    }
}

/// Result of walking a rotation system.
#[derive(Clone, Debug)]
pub(crate) struct Traced {
    /// The walked curve; not checked for planarity.
    pub curve: PlaneCurve,
    pub label_of_crossing: Vec<usize>,
    pub dart_of_slot: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(s: &str) -> PlaneCurve {
        PlaneCurve::parse(s).unwrap()
    }

    fn single(s: &str) -> PlaneCurve {
        let mut r = realize(&parse_gauss(s).unwrap());
        assert_eq!(r.len(), 1, "{s}");
        r.pop().unwrap()
    }

    fn first(s: &str) -> PlaneCurve {
        realize(&parse_gauss(s).unwrap()).swap_remove(0)
    }

    fn codes(s: &str) -> BTreeSet<CanonicalCode> {
        realize(&parse_gauss(s).unwrap()).iter().map(|c| c.canonical()).collect()
    }

    #[test]
    fn curl_census() {
        let c = single("1 1");
        assert_eq!(c.census(), FaceCensus::from_sizes([1, 1, 2]));
        assert_eq!(c.census().curvature(), 8);
    }

    #[test]
    fn trefoil_census() {
        let c = single("1 2 3 1 2 3");
        assert_eq!(c.census(), FaceCensus::from_sizes([2, 2, 2, 3, 3]));
    }

    #[test]
    fn unrealizable_words() {
        assert!(realize(&parse_gauss("1 2 1 3 2 3").unwrap()).is_empty());
        assert!(realize(&parse_gauss("1 2 1 2").unwrap()).is_empty());
    }

    #[test]
    fn signed_word_with_wrong_signs_is_not_planar() {
        let ok = single("1 2 3 1 2 3");
        let mut signs = ok.word().signs().unwrap().to_vec();
        signs[0] = signs[0].flip();
        let bad = ok.word().with_signs(signs);
        assert_eq!(PlaneCurve::from_word(&bad).unwrap_err(), CurveError::NotPlanar);
    }

    #[test]
    fn canonical_is_invariant() {
        let words = ["1 2 3 1 2 3 4 4", "1 2 3 4 5 1 2 3 4 5", "1 2 3 4 1 5 6 3 4 2 6 5", "1 1 2 3 2 3"];
        let mut seen = 0;
        for w in words {
            for c in realize(&parse_gauss(w).unwrap()) {
                seen += 1;
                let code = c.canonical();
                assert_eq!(c.mirror().canonical(), code);
                assert_eq!(c.reversed().canonical(), code);
                assert_eq!(code.to_curve().canonical(), code);
                let m = c.passes();
                let rotated: Vec<(usize, bool)> = (0..m).map(|i| ((i + 3) % m, false)).collect();
                assert_eq!(c.rebuild_from_steps(&rotated).canonical(), code);
            }
        }
        assert!(seen >= 3, "{seen}");
    }

    #[test]
    fn relabelling_gives_same_code() {
        assert_eq!(codes("1 1 2 2").len(), 2);
        assert_eq!(codes("1 1 2 2"), codes("2 2 1 1"));
        assert_eq!(codes("1 1 2 2"), codes("1 2 2 1"));
    }

    #[test]
    fn reducible_crossing_sets() {
        assert_eq!(single("1 1").reducible_crossings(), BTreeSet::from([0]));
        assert_eq!(first("1 2 2 1").reducible_crossings(), BTreeSet::from([0, 1]));
        assert!(single("1 2 3 1 2 3").reducible_crossings().is_empty());
        assert!(single("1 2 3 1 2 3").is_reduced());
        assert!(!first("1 2 2 1").is_reduced());
    }

    #[test]
    fn primality() {
        assert!(single("1 2 3 1 2 3").is_prime());
        assert!(realize(&parse_gauss("1 1 2 2").unwrap()).iter().all(|c| !c.is_prime()));
        assert!(single("1 1").is_prime());
    }

    #[test]
    fn connected_sum_of_curls() {
        let c = single("1 1");
        let s = PlaneCurve::connected_sum(&c, &c, 0, 0);
        assert_eq!(s.crossings(), 2);
        assert!(codes("1 1 2 2").contains(&s.canonical()));
    }

    #[test]
    fn code_round_trips_through_text() {
        let c = single("1 2 3 1 2 3");
        let code = c.canonical();
        assert_eq!(CanonicalCode::parse(&code.to_string()).unwrap(), code);
        assert_eq!(curve(&code.to_string()).canonical(), code);
    }

    #[test]
    fn circle_code_is_empty() {
        assert_eq!(PlaneCurve::circle().canonical().crossings(), 0);
        assert_eq!(PlaneCurve::circle().canonical().to_string(), "O");
    }
}
