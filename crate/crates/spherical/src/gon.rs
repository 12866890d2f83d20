//! Local chord-diagram pattern of a single face.
//!
//! A `k`-gon touches `k` corner crossings. Restricting the chord diagram to
//! those crossings leaves `2k` endpoints on the circle; the `k` face edges are
//! arcs between consecutive endpoints ("thick" arcs, free of other
//! endpoints). Points are numbered so that the thick arcs are `(0,1), (2,3),
//! …`, and a configuration is stored as the least sorted chord list over the
//! rotations and reflections of the circle that keep that numbering.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{is_out, pass_of, PlaneCurve};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GonError {
    #[error("faces of size {0} are not classified (only 2, 3 and 4)")]
    UnsupportedSize(usize),
    #[error("face visits a crossing more than once")]
    Degenerate,
    #[error("bad configuration string `{text}`: {reason}")]
    Syntax { text: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GonConfiguration {
    chords: Vec<(u8, u8)>,
}

/// Edge-direction pattern of a face boundary, as `+`/`-` per edge, reduced
/// over rotation, reversal and global flip (e.g. `++-` for a trigon).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrientationClass(pub String);

impl OrientationClass {
    fn signs(&self) -> Vec<bool> {
        self.0.chars().map(|c| c == '+').collect()
    }

    /// All corners join edges of equal direction.
    pub fn is_coherent(&self) -> bool {
        let s = self.signs();
        s.iter().all(|&x| x == s[0])
    }

    pub fn has_coherent_corner(&self) -> bool {
        let s = self.signs();
        (0..s.len()).any(|i| s[i] == s[(i + 1) % s.len()])
    }

    /// Some edge has incoherent corners at both ends, which is what a face
    /// needs to share that edge with a coherent neighbour.
    pub fn has_edge_between_incoherent_corners(&self) -> bool {
        let s = self.signs();
        let k = s.len();
        (0..k).any(|i| s[(i + k - 1) % k] != s[i] && s[i] != s[(i + 1) % k])
    }
}

impl fmt::Display for OrientationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn symmetries(k: usize) -> impl Iterator<Item = Box<dyn Fn(usize) -> usize>> {
    let n = 2 * k;
    (0..n).step_by(2).flat_map(move |r| {
        let rotate: Box<dyn Fn(usize) -> usize> = Box::new(move |i| (i + r) % n);
        let reflect: Box<dyn Fn(usize) -> usize> = Box::new(move |i| (n + 1 + r - i) % n);
        [rotate, reflect]
    })
}

fn chord_list(partner: &[usize], map: &dyn Fn(usize) -> usize) -> Vec<(u8, u8)> {
    let mut chords: Vec<(u8, u8)> = (0..partner.len())
        .filter(|&i| i < partner[i])
        .map(|i| {
            let (a, b) = (map(i), map(partner[i]));
            (a.min(b) as u8, a.max(b) as u8)
        })
        .collect();
    chords.sort_unstable();
    chords
}

impl GonConfiguration {
    /// Canonical form of a perfect matching on `2k` points whose thick arcs
    /// are `(2i, 2i+1)`.
    pub fn from_partner(partner: &[usize]) -> Self {
        Self::canonical_with_mark(partner, 0).0
    }

    /// Canonical form together with the least image of thick arc `mark`,
    /// which identifies the arc up to the configuration's symmetry.
    pub fn canonical_with_mark(partner: &[usize], mark: usize) -> (Self, usize) {
        let k = partner.len() / 2;
        let mut best: Option<(Vec<(u8, u8)>, usize)> = None;
        for s in symmetries(k) {
            let cand = (chord_list(partner, &s), s(2 * mark).min(s(2 * mark + 1)) / 2);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        let (chords, mark) = best.expect("at least one symmetry");
        (GonConfiguration { chords }, mark)
    }

    pub fn k(&self) -> usize {
        self.chords.len()
    }

    pub fn chords(&self) -> &[(u8, u8)] {
        &self.chords
    }

    pub fn partner(&self) -> Vec<usize> {
        let mut p = vec![0; 2 * self.k()];
        for &(a, b) in &self.chords {
            p[a as usize] = b as usize;
            p[b as usize] = a as usize;
        }
        p
    }

    /// Direction of each edge met while walking once around the face.
    pub fn edge_signs(&self) -> Vec<bool> {
        let partner = self.partner();
        let mut cur = 0;
        let mut signs = Vec::with_capacity(self.k());
        for _ in 0..self.k() {
            let forward = cur % 2 == 0;
            signs.push(forward);
            let end = if forward { cur + 1 } else { cur - 1 };
            cur = partner[end];
        }
        signs
    }

    pub fn orientation_class(&self) -> OrientationClass {
        let s = self.edge_signs();
        let k = s.len();
        let mut best: Option<String> = None;
        for rev in [false, true] {
            for flip in [false, true] {
                for r in 0..k {
                    let text: String = (0..k)
                        .map(|i| {
                            let j = if rev { (k + r - i) % k } else { (r + i) % k };
                            if s[j] != flip {
                                '+'
                            } else {
                                '-'
                            }
                        })
                        .collect();
                    if best.as_ref().is_none_or(|b| text < *b) {
                        best = Some(text);
                    }
                }
            }
        }
        OrientationClass(best.unwrap_or_default())
    }

    /// Whether the corner of chord `i` joins two edges of equal direction.
    pub fn corner_is_coherent(&self, i: usize) -> bool {
        let (a, b) = self.chords[i];
        a % 2 != b % 2
    }

    /// Configuration of the `(k−1)`-gon left after splicing the crossing of
    /// chord `i`, if that corner is incoherent (otherwise the face merges with
    /// its opposite neighbour and no smaller face remains).
    pub fn splice_corner(&self, i: usize) -> Option<GonConfiguration> {
        if self.k() < 3 || self.corner_is_coherent(i) {
            return None;
        }
        let n = 2 * self.k();
        let partner = self.partner();
        let (p, q) = (self.chords[i].0 as usize, self.chords[i].1 as usize);
        let thick = |x: usize| x ^ 1;
        let seq: Vec<usize> = (p + 1..q).rev().chain(q + 1..n).chain(0..p).collect();
        let m = seq.len();
        let mut starts = Vec::new();
        for j in 0..m {
            let (a, b) = (seq[j], seq[(j + 1) % m]);
            let merged = (a == thick(p) && b == thick(q)) || (a == thick(q) && b == thick(p));
            if thick(a) == b || merged {
                starts.push(j);
            }
        }
        debug_assert_eq!(starts.len(), self.k() - 1);
        let shift = if starts.contains(&0) { 0 } else { 1 };
        let mut pos = vec![usize::MAX; n];
        for (j, &x) in seq.iter().enumerate() {
            pos[x] = (j + m - shift) % m;
        }
        let mut new_partner = vec![0; m];
        for x in 0..n {
            if x != p && x != q {
                new_partner[pos[x]] = pos[partner[x]];
            }
        }
        Some(GonConfiguration::from_partner(&new_partner))
    }

    /// Every canonical configuration of a `k`-gon: chords avoid the thick
    /// pairs, and thick arcs plus chords close up into one loop.
    pub fn candidates(k: usize) -> Vec<GonConfiguration> {
        let n = 2 * k;
        let mut out = BTreeSet::new();
        let mut partner = vec![usize::MAX; n];
        fn rec(partner: &mut Vec<usize>, out: &mut BTreeSet<GonConfiguration>) {
            let Some(a) = partner.iter().position(|&x| x == usize::MAX) else {
                let n = partner.len();
                let (mut cur, mut steps) = (0usize, 0usize);
                loop {
                    cur = partner[cur ^ 1];
                    steps += 1;
                    if cur == 0 {
                        break;
                    }
                }
                if 2 * steps == n {
                    out.insert(GonConfiguration::from_partner(partner));
                }
                return;
            };
            for b in a + 1..partner.len() {
                if partner[b] != usize::MAX || b == (a ^ 1) {
                    continue;
                }
                partner[a] = b;
                partner[b] = a;
                rec(partner, out);
                partner[a] = usize::MAX;
                partner[b] = usize::MAX;
            }
        }
        rec(&mut partner, &mut out);
        out.into_iter().collect()
    }
}

impl fmt::Display for GonConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let partner = self.partner();
        let mut letter = vec![None; partner.len()];
        let mut next = b'a';
        for i in 0..partner.len() {
            if letter[i].is_none() {
                letter[i] = Some(next as char);
                letter[partner[i]] = Some(next as char);
                next += 1;
            }
        }
        for j in 0..self.k() {
            if j > 0 {
                f.write_str(" ")?;
            }
            write!(f, "[{} {}]", letter[2 * j].unwrap(), letter[2 * j + 1].unwrap())?;
        }
        Ok(())
    }
}

impl FromStr for GonConfiguration {
    type Err = GonError;

    /// Reads `[a b] [c a] [b c]`: one bracket per edge, in circle order,
    /// each letter naming a crossing (it must occur exactly twice).
    fn from_str(text: &str) -> Result<Self, GonError> {
        let err = |reason: &str| GonError::Syntax { text: text.to_string(), reason: reason.to_string() };
        let spaced = text.replace('[', " [ ").replace(']', " ] ");
        let mut points: Vec<String> = Vec::new();
        let mut open = false;
        let mut in_bracket = 0;
        for tok in spaced.split_whitespace() {
            match tok {
                "[" if !open => {
                    open = true;
                    in_bracket = 0;
                }
                "]" if open => {
                    if in_bracket != 2 {
                        return Err(err("each edge bracket holds two endpoints"));
                    }
                    open = false;
                }
                "[" | "]" => return Err(err("unbalanced brackets")),
                t if open => {
                    in_bracket += 1;
                    points.push(t.to_string());
                }
                _ => return Err(err("endpoints must sit inside edge brackets")),
            }
        }
        if open || points.is_empty() {
            return Err(err("unbalanced brackets"));
        }
        let n = points.len();
        let mut partner = vec![usize::MAX; n];
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i && points[j] == points[i]).collect();
            if others.len() != 1 {
                return Err(err("every crossing name must occur exactly twice"));
            }
            partner[i] = others[0];
        }
        if (0..n).step_by(2).any(|i| partner[i] == i + 1) {
            return Err(err("an edge cannot start and end at the same crossing"));
        }
        Ok(GonConfiguration::from_partner(&partner))
    }
}

/// Configuration of the face traced by `darts` in `curve`, plus the index of
/// the thick arc for each dart, up to the configuration's symmetry.
pub fn configuration_of_darts(curve: &PlaneCurve, darts: &[usize]) -> Result<(GonConfiguration, Vec<usize>), GonError> {
    let k = darts.len();
    let m = curve.passes();
    let arcs: Vec<(usize, usize)> = darts
        .iter()
        .map(|&d| {
            let p = pass_of(d);
            if is_out(d) {
                (p, (p + 1) % m)
            } else {
                ((p + m - 1) % m, p)
            }
        })
        .collect();
    let mut ends: Vec<usize> = arcs.iter().flat_map(|&(a, b)| [a, b]).collect();
    ends.sort_unstable();
    ends.dedup();
    if ends.len() != 2 * k {
        return Err(GonError::Degenerate);
    }
    let index = |x: usize| ends.binary_search(&x).unwrap();
    let starts_at_zero = arcs.iter().any(|&(a, b)| {
        let (i, j) = (index(a), index(b));
        i.min(j) == 0 && i.max(j) == 1
    });
    let shift = if starts_at_zero { 0 } else { 1 };
    let rel = |i: usize| (i + 2 * k - shift) % (2 * k);
    let mut partner = vec![usize::MAX; 2 * k];
    for (i, &x) in ends.iter().enumerate() {
        let y = curve.partner_pass(x);
        let j = ends.binary_search(&y).map_err(|_| GonError::Degenerate)?;
        partner[rel(i)] = rel(j);
    }
    let arc_index: Vec<usize> = arcs.iter().map(|&(a, b)| rel(index(a)).min(rel(index(b))) / 2).collect();
    let config = GonConfiguration::from_partner(&partner);
    let marks = arc_index.iter().map(|&a| GonConfiguration::canonical_with_mark(&partner, a).1).collect();
    Ok((config, marks))
}

/// Configuration of a face of a curve (sizes 2 to 4).
pub fn extract_configuration(curve: &PlaneCurve, darts: &[usize]) -> Result<GonConfiguration, GonError> {
    if !(2..=4).contains(&darts.len()) {
        return Err(GonError::UnsupportedSize(darts.len()));
    }
    configuration_of_darts(curve, darts).map(|c| c.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::realize;
    use crate::word::parse_gauss;

    fn cfg(s: &str) -> GonConfiguration {
        s.parse().unwrap()
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(GonConfiguration::candidates(2).len(), 2);
        assert_eq!(GonConfiguration::candidates(3).len(), 4);
        assert_eq!(GonConfiguration::candidates(4).len(), 13);
    }

    #[test]
    fn four_gon_classes() {
        let mut counts = std::collections::BTreeMap::new();
        for c in GonConfiguration::candidates(4) {
            *counts.entry(c.orientation_class().0).or_insert(0) += 1;
        }
        let expected: Vec<(String, usize)> =
            [("++++", 3), ("+++-", 4), ("++--", 4), ("+-+-", 2)].iter().map(|(s, c)| (s.to_string(), *c)).collect();
        assert_eq!(counts.into_iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn string_round_trip() {
        for k in 2..=4 {
            for c in GonConfiguration::candidates(k) {
                assert_eq!(cfg(&c.to_string()), c);
            }
        }
        assert_eq!(cfg("[b c] [a b] [c a]").to_string(), "[a b] [c a] [b c]");
    }

    #[test]
    fn bad_strings() {
        assert!("[a b] [a".parse::<GonConfiguration>().is_err());
        assert!("[a a] [b b]".parse::<GonConfiguration>().is_err());
        assert!("[a b c]".parse::<GonConfiguration>().is_err());
        assert!("a [b a] b".parse::<GonConfiguration>().is_err());
    }

    #[test]
    fn bigon_coherence() {
        assert!(cfg("[a b] [b a]").orientation_class().is_coherent());
        assert!(!cfg("[a b] [a b]").orientation_class().is_coherent());
    }

    #[test]
    fn trefoil_faces() {
        let c = &realize(&parse_gauss("1 2 3 1 2 3").unwrap())[0];
        let mut seen = BTreeSet::new();
        for f in c.faces() {
            seen.insert(extract_configuration(c, &f.darts).unwrap().to_string());
        }
        let expected: BTreeSet<String> = ["[a b] [a b]", "[a b] [c a] [b c]"].iter().map(|s| s.to_string()).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn degenerate_and_unsupported_faces() {
        let c = &realize(&parse_gauss("1 1").unwrap())[0];
        for f in c.faces() {
            let r = extract_configuration(c, &f.darts);
            match f.size() {
                1 => assert_eq!(r, Err(GonError::UnsupportedSize(1))),
                _ => assert_eq!(r, Err(GonError::Degenerate)),
            }
        }
    }

    #[test]
    fn splicing_incoherent_trigon_corners() {
        let incoherent_bigon = cfg("[a b] [a b]");
        let coherent_bigon = cfg("[a b] [b a]");
        let x = cfg("[a b] [a c] [b c]");
        let y = cfg("[a b] [a c] [c b]");
        let xs: Vec<_> = (0..3).filter_map(|i| x.splice_corner(i)).collect();
        let ys: Vec<_> = (0..3).filter_map(|i| y.splice_corner(i)).collect();
        assert_eq!(xs, vec![incoherent_bigon.clone(), incoherent_bigon]);
        assert_eq!(ys, vec![coherent_bigon.clone(), coherent_bigon]);
        let coherent = cfg("[a b] [c a] [b c]");
        assert!((0..3).all(|i| coherent.splice_corner(i).is_none()));
    }
}
