//! Half-twisted splices, their inverse (crossing insertion inside a face), and
//! reductivity search.
//!
//! Splicing crossing `c` in `c A c B` gives `A⁻¹ B`: the crossing disappears
//! and one of the two loops through it is walked the other way. Around `c`,
//! the faces at its two incoherent corners lose a corner and the faces at its
//! two coherent corners merge.
//!
//! Reductivity counts splices: `r(P)` is the least number of splices that
//! turns `P` into a curve with a reducible crossing.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{FaceReport, SPLIT_TO_A};
use crate::curve::{is_out, CanonicalCode, PlaneCurve, RotationSystem};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoveError {
    #[error("crossing {0} does not exist")]
    NoSuchCrossing(usize),
    #[error("face {0} does not exist")]
    NoSuchFace(usize),
    #[error("position {position} is outside face {face} of size {size}")]
    NoSuchPosition { face: usize, position: usize, size: usize },
    #[error("inserting a crossing between these edges would split the curve")]
    Disconnected,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductivityError {
    #[error("the curve has no crossings")]
    NoCrossings,
    #[error("no reducible curve within {max_depth} splices ({explored} classes explored)")]
    DepthExceeded { max_depth: usize, explored: usize },
}

/// A crossing of a curve, by its 0-based label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpliceSite(pub usize);

/// Insertion of one crossing inside a face.
///
/// `face` indexes `PlaneCurve::faces()`; `first` and `second` index that
/// face's dart cycle, each naming one boundary edge. Equal positions insert a
/// small kink on that edge, lying inside the face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IMove {
    pub face: usize,
    pub first: usize,
    pub second: usize,
}

impl fmt::Display for IMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "face {} edges {},{}", self.face, self.first, self.second)
    }
}

/// Removes crossing `site`, reversing the loop between its two visits.
pub fn half_twisted_splice(curve: &PlaneCurve, site: SpliceSite) -> Result<PlaneCurve, MoveError> {
    splice_tracking_labels(curve, site).map(|r| r.curve)
}

/// A splice together with where the old crossings and passes went.
#[derive(Clone, Debug)]
pub struct TrackedSplice {
    pub curve: PlaneCurve,
    /// New label of each old crossing; `None` for the spliced one.
    pub crossing: Vec<Option<usize>>,
    /// New position of each old pass; `None` for the two removed passes.
    pub pass: Vec<Option<usize>>,
}

impl TrackedSplice {
    /// New index of an old edge (edge `e` runs from pass `e` to `e + 1`), if
    /// both its ends survive.
    pub fn edge(&self, old: usize) -> Option<usize> {
        let m_old = self.pass.len();
        let m = self.curve.passes();
        let a = self.pass[old]?;
        let b = self.pass[(old + 1) % m_old]?;
        if (a + 1) % m == b {
            Some(a)
        } else if (b + 1) % m == a {
            Some(b)
        } else {
            None
        }
    }
}

/// Splice that also reports where every surviving crossing and pass went.
pub fn splice_tracking_labels(curve: &PlaneCurve, site: SpliceSite) -> Result<TrackedSplice, MoveError> {
    if site.0 >= curve.crossings() {
        return Err(MoveError::NoSuchCrossing(site.0));
    }
    let (p, q) = curve.word().occurrences()[site.0];
    let m = curve.passes();
    let mut steps = Vec::with_capacity(m - 2);
    steps.extend((q + 1..m).chain(0..p).map(|x| (x, false)));
    steps.extend((p + 1..q).rev().map(|x| (x, true)));
    let mut pass = vec![None; m];
    for (i, &(old, _)) in steps.iter().enumerate() {
        pass[old] = Some(i);
    }
    if steps.is_empty() {
        return Ok(TrackedSplice { curve: PlaneCurve::circle(), crossing: vec![None], pass });
    }
    let (result, relabel) = curve.rebuild_with_labels(&steps);
    Ok(TrackedSplice {
        curve: result,
        crossing: relabel.into_iter().map(|l| (l != usize::MAX).then_some(l)).collect(),
        pass,
    })
}

/// All crossing insertions that keep a single curve, face by face.
///
/// Two distinct edges of a face can be joined exactly when the face traverses
/// both in the same direction relative to the curve. Every edge also admits a
/// kink into the face.
pub fn enumerate_imoves(curve: &PlaneCurve) -> Vec<IMove> {
    let mut moves = Vec::new();
    for (fi, face) in curve.faces().iter().enumerate() {
        let k = face.darts.len();
        for a in 0..k {
            moves.push(IMove { face: fi, first: a, second: a });
            for b in a + 1..k {
                if is_out(face.darts[a]) == is_out(face.darts[b]) {
                    moves.push(IMove { face: fi, first: a, second: b });
                }
            }
        }
    }
    moves
}

/// Applies an insertion, returning the new curve and the label of the new
/// crossing in it.
pub fn apply_imove(curve: &PlaneCurve, mv: IMove) -> Result<(PlaneCurve, usize), MoveError> {
    if curve.crossings() == 0 {
        return Err(MoveError::NoSuchFace(mv.face));
    }
    let faces = curve.faces();
    let face = faces.get(mv.face).ok_or(MoveError::NoSuchFace(mv.face))?;
    let size = face.darts.len();
    for position in [mv.first, mv.second] {
        if position >= size {
            return Err(MoveError::NoSuchPosition { face: mv.face, position, size });
        }
    }
    let mut sys = RotationSystem::from_curve(curve);
    let f0 = sys.slot_of_dart[face.darts[mv.first]];
    let g0 = sys.slot_of_dart[face.darts[mv.second]];
    let x = sys.add_crossing();
    let f1 = sys.alpha[f0];
    sys.join(f0, x);
    sys.join(x + 1, f1);
    if f0 == g0 {
        sys.join(x + 2, x + 3);
    } else {
        let g1 = sys.alpha[g0];
        sys.join(g0, x + 2);
        sys.join(x + 3, g1);
    }
    let traced = sys.trace().ok_or(MoveError::Disconnected)?;
    Ok((traced.curve, traced.label_of_crossing[x / 4]))
}

/// Outcome of a reductivity search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductivityCertificate {
    /// Canonical code of the input curve; the witness starts here.
    pub start: CanonicalCode,
    pub r: usize,
    /// Splice sites, each a label of the canonical form of the current
    /// curve. Least in lexicographic order among the shortest witnesses.
    pub witness: Vec<SpliceSite>,
    /// Canonical codes along the witness, ending at a reducible curve.
    pub path: Vec<CanonicalCode>,
    /// Number of distinct curves reached at each depth `0..=r`. All curves
    /// counted at depths below `r` are reduced.
    pub classes_per_depth: Vec<usize>,
}

impl ReductivityCertificate {
    /// Replays the witness and returns the final curve.
    pub fn replay(&self) -> Result<PlaneCurve, MoveError> {
        let mut curve = self.start.to_curve();
        for site in &self.witness {
            curve = half_twisted_splice(&curve.canonical().to_curve(), *site)?;
        }
        Ok(curve)
    }

    /// Stable one-line text form.
    pub fn to_line(&self) -> String {
        let witness: Vec<String> = self.witness.iter().map(|s| (s.0 + 1).to_string()).collect();
        let counts: Vec<String> = self.classes_per_depth.iter().map(|c| c.to_string()).collect();
        format!(
            "r={} witness=[{}] classes=[{}] start={}",
            self.r,
            witness.join(","),
            counts.join(","),
            self.start
        )
    }
}

/// Curves at one depth with the least witness reaching each and its parent.
type Layer = BTreeMap<CanonicalCode, (Vec<SpliceSite>, Option<CanonicalCode>)>;

/// Breadth-first search over canonical classes of spliced curves.
pub fn reductivity(curve: &PlaneCurve, max_depth: usize) -> Result<ReductivityCertificate, ReductivityError> {
    if curve.crossings() == 0 {
        return Err(ReductivityError::NoCrossings);
    }
    let start = curve.canonical();
    let start_curve = start.to_curve();
    if !start_curve.is_reduced() {
        return Ok(ReductivityCertificate {
            start: start.clone(),
            r: 0,
            witness: vec![],
            path: vec![start],
            classes_per_depth: vec![1],
        });
    }
    let mut layers: Vec<Layer> = Vec::new();
    layers.push(BTreeMap::from([(start.clone(), (vec![], None))]));
    let mut explored = 1;
    for depth in 1..=max_depth {
        let frontier = layers.last().unwrap();
        let expanded: Vec<Vec<(CanonicalCode, Vec<SpliceSite>, CanonicalCode)>> = frontier
            .par_iter()
            .map(|(code, (path, _))| {
                let c = code.to_curve();
                (0..c.crossings())
                    .map(|label| {
                        let next = half_twisted_splice(&c, SpliceSite(label)).expect("label in range");
                        let mut witness = path.clone();
                        witness.push(SpliceSite(label));
                        (next.canonical(), witness, code.clone())
                    })
                    .collect()
            })
            .collect();
        let mut next = Layer::new();
        for (code, witness, parent) in expanded.into_iter().flatten() {
            match next.get_mut(&code) {
                Some(entry) if entry.0 <= witness => {}
                Some(entry) => *entry = (witness, Some(parent)),
                None => {
                    next.insert(code, (witness, Some(parent)));
                }
            }
        }
        explored += next.len();
        let best = next
            .iter()
            .filter(|(code, _)| code.crossings() == 0 || !code.to_curve().is_reduced())
            .min_by(|a, b| a.1 .0.cmp(&b.1 .0))
            .map(|(code, (w, _))| (code.clone(), w.clone()));
        layers.push(next);
        if let Some((end, witness)) = best {
            let mut path = vec![end];
            for layer in layers.iter().rev().take(depth) {
                let parent = layer[path.last().unwrap()].1.clone().unwrap();
                path.push(parent);
            }
            path.reverse();
            return Ok(ReductivityCertificate {
                start,
                r: depth,
                witness,
                path,
                classes_per_depth: layers.iter().map(|l| l.len()).collect(),
            });
        }
    }
    Err(ReductivityError::DepthExceeded { max_depth, explored })
}

/// Best bound on reductivity implied by the local faces alone.
pub fn reductivity_upper_bound(reports: &[FaceReport]) -> Option<usize> {
    reports
        .iter()
        .filter_map(|r| {
            let label = r.label.as_ref()?;
            match (label.k, label.name.as_str()) {
                (2, "incoherent") => Some(1),
                (2, _) => Some(2),
                (3, "A") => Some(2),
                (3, "B" | "C") => Some(3),
                (4, name) if SPLIT_TO_A.contains(&name) => Some(3),
                _ => None,
            }
        })
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::realize;
    use crate::word::parse_gauss;

    fn all(s: &str) -> Vec<PlaneCurve> {
        realize(&parse_gauss(s).unwrap())
    }

    #[test]
    fn splice_curl_gives_circle() {
        let c = &all("1 1")[0];
        assert_eq!(half_twisted_splice(c, SpliceSite(0)).unwrap().crossings(), 0);
    }

    #[test]
    fn splice_trefoil_gives_two_crossings() {
        let c = &all("1 2 3 1 2 3")[0];
        let s = half_twisted_splice(c, SpliceSite(0)).unwrap();
        assert_eq!(s.crossings(), 2);
        assert!(!s.is_reduced());
    }

    #[test]
    fn splice_rejects_missing_crossing() {
        let c = &all("1 1")[0];
        assert_eq!(half_twisted_splice(c, SpliceSite(3)).unwrap_err(), MoveError::NoSuchCrossing(3));
    }

    #[test]
    fn curl_has_only_kink_insertions() {
        let c = &all("1 1")[0];
        let moves = enumerate_imoves(c);
        assert!(moves.iter().all(|m| m.first == m.second));
        assert_eq!(moves.len(), 4);
    }

    #[test]
    fn insertions_round_trip_on_trefoil() {
        let c = &all("1 2 3 1 2 3")[0];
        let code = c.canonical();
        for mv in enumerate_imoves(c) {
            let (bigger, label) = apply_imove(c, mv).unwrap();
            assert_eq!(bigger.crossings(), 4);
            assert_eq!(half_twisted_splice(&bigger, SpliceSite(label)).unwrap().canonical(), code);
        }
    }

    #[test]
    fn incoherent_pairs_disconnect() {
        let c = &all("1 2 3 1 2 3")[0];
        for (fi, face) in c.faces().iter().enumerate() {
            for a in 0..face.darts.len() {
                for b in a + 1..face.darts.len() {
                    let mv = IMove { face: fi, first: a, second: b };
                    let same = is_out(face.darts[a]) == is_out(face.darts[b]);
                    assert_eq!(apply_imove(c, mv).is_ok(), same);
                }
            }
        }
    }

    #[test]
    fn reductivity_of_small_curves() {
        let curl = &all("1 1")[0];
        assert_eq!(reductivity(curl, 4).unwrap().r, 0);
        let trefoil = &all("1 2 3 1 2 3")[0];
        let cert = reductivity(trefoil, 4).unwrap();
        assert_eq!(cert.r, 1);
        assert!(!cert.replay().unwrap().is_reduced());
        assert_eq!(cert.path.len(), 2);
    }

    #[test]
    fn depth_cap_is_reported() {
        let trefoil = &all("1 2 3 1 2 3")[0];
        assert!(matches!(reductivity(trefoil, 0), Err(ReductivityError::DepthExceeded { max_depth: 0, .. })));
        assert_eq!(reductivity(&PlaneCurve::circle(), 4), Err(ReductivityError::NoCrossings));
    }
}
