//! Independent reference computations used to check the library.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use spherical::generators::{enumerate_curves, EnumerationFilter};
use spherical::moves::{half_twisted_splice, SpliceSite};
use spherical::unavoidable::{local_map_code, CompletedPart, SeedConfiguration, Sharing};
use spherical::{GaussWord, PlaneCurve, Sign};

pub fn curves_up_to(n: usize) -> Vec<PlaneCurve> {
    enumerate_curves(&EnumerationFilter::all(n)).expect("enumeration").into_iter().map(|c| c.to_curve()).collect()
}

/// Face sizes traced straight from the signed word.
///
/// A half-edge is `(position, leaving)`. Around a crossing visited at
/// positions `p < q` the counter-clockwise order is `p in, q in, p out, q out`
/// for `+` and `p in, q out, p out, q in` for `-`. A face is followed by
/// crossing to the far end of the current edge and turning clockwise.
pub fn oracle_face_sizes(word: &GaussWord) -> Vec<usize> {
    let labels = word.labels();
    let signs = word.signs().expect("signed word");
    let m = labels.len();
    if m == 0 {
        return vec![0, 0];
    }
    let mut visits: HashMap<usize, Vec<usize>> = HashMap::new();
    for (pos, &l) in labels.iter().enumerate() {
        visits.entry(l).or_default().push(pos);
    }
    let mut ccw: HashMap<(usize, bool), (usize, bool)> = HashMap::new();
    for (&l, pos) in &visits {
        let (p, q) = (pos[0], pos[1]);
        let cycle = match signs[l] {
            Sign::Plus => [(p, false), (q, false), (p, true), (q, true)],
            Sign::Minus => [(p, false), (q, true), (p, true), (q, false)],
        };
        for i in 0..4 {
            ccw.insert(cycle[(i + 1) % 4], cycle[i]);
        }
    }
    let clockwise_of = |h: (usize, bool)| ccw[&h];
    let far_end = |(pos, leaving): (usize, bool)| if leaving { ((pos + 1) % m, false) } else { ((pos + m - 1) % m, true) };
    let mut seen = BTreeSet::new();
    let mut sizes = Vec::new();
    for pos in 0..m {
        for leaving in [false, true] {
            let start = (pos, leaving);
            if seen.contains(&start) {
                continue;
            }
            let mut h = start;
            let mut size = 0;
            loop {
                seen.insert(h);
                size += 1;
                h = clockwise_of(far_end(h));
                if h == start {
                    break;
                }
            }
            sizes.push(size);
        }
    }
    sizes.sort_unstable();
    sizes
}

/// Reductivity by plain iterative deepening over splice sequences, without
/// any identification of equivalent curves.
pub fn oracle_reductivity(curve: &PlaneCurve, max_depth: usize) -> Option<usize> {
    fn reachable(curve: &PlaneCurve, depth: usize) -> bool {
        if curve.crossings() == 0 || !curve.is_reduced() {
            return true;
        }
        depth > 0
            && (0..curve.crossings()).any(|c| reachable(&half_twisted_splice(curve, SpliceSite(c)).unwrap(), depth - 1))
    }
    (0..=max_depth).find(|&d| reachable(curve, d))
}

fn corner_crossings(curve: &PlaneCurve, darts: &[usize]) -> Option<BTreeSet<usize>> {
    let set: BTreeSet<usize> = darts.iter().map(|&d| curve.crossing_of_dart(d)).collect();
    (set.len() == darts.len()).then_some(set)
}

/// Crossing sets at which `part` sits in `curve`, found by trying every pair
/// of faces with the seed's sizes and sharing, cutting the curve down to
/// their corners and comparing the resulting marked map with the part.
pub fn oracle_part_sites(curve: &PlaneCurve, seed: &SeedConfiguration, part: &CompletedPart) -> BTreeSet<Vec<usize>> {
    let faces = curve.faces();
    let mut found = BTreeSet::new();
    let (first, second) = (seed.faces[0].size, seed.faces[1].size);
    for (i, f1) in faces.iter().enumerate() {
        for (j, f2) in faces.iter().enumerate() {
            if i == j || f1.darts.len() != first || f2.darts.len() != second {
                continue;
            }
            let (Some(c1), Some(c2)) = (corner_crossings(curve, &f1.darts), corner_crossings(curve, &f2.darts)) else {
                continue;
            };
            let e1: BTreeSet<usize> = f1.darts.iter().map(|&d| curve.edge_of_dart(d)).collect();
            let e2: BTreeSet<usize> = f2.darts.iter().map(|&d| curve.edge_of_dart(d)).collect();
            let shared_crossings = c1.intersection(&c2).count();
            let shared_edges = e1.intersection(&e2).count();
            let fits = match seed.sharing {
                Sharing::Edge => shared_edges == 1 && shared_crossings == 2,
                Sharing::Crossing => shared_edges == 0 && shared_crossings == 1,
                Sharing::None => false,
            };
            if !fits {
                continue;
            }
            let keep: BTreeSet<usize> = c1.union(&c2).copied().collect();
            let positions: Vec<usize> =
                (0..curve.passes()).filter(|&p| keep.contains(&curve.word().labels()[p])).collect();
            let tokens: Vec<(u64, Sign)> = positions
                .iter()
                .map(|&p| {
                    let l = curve.word().labels()[p];
                    (l as u64 + 1, curve.sign(l))
                })
                .collect();
            let word = GaussWord::signed(&tokens).expect("restricted word");
            let face_edges: BTreeSet<usize> = e1.union(&e2).copied().collect();
            let m = curve.passes();
            let marked: BTreeSet<usize> = (0..positions.len())
                .filter(|&k| {
                    let (a, b) = (positions[k], positions[(k + 1) % positions.len()]);
                    (a + 1) % m == b && face_edges.contains(&a)
                })
                .collect();
            if &local_map_code(&word, &marked).expect("restricted map") == part.code() {
                found.insert(keep.into_iter().collect());
            }
        }
    }
    found
}
