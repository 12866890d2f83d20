//! Seed pictures, their outer completions, the derived part list, and
//! matching of local patterns inside whole curves.
//!
//! A local picture is a set of crossings with four slots each (counter-clockwise)
//! and a partial involution joining slots along curve edges. Slots left unjoined
//! are loose arc-ends. A completion joins the loose ends in pairs; a joined pair
//! stands for an arc running outside the picture with no crossings on it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{classify_faces, FaceLabel, TypeAtlas, BIGON_LABELS, QUAD_LABELS, TRIGON_LABELS};
use crate::curve::{CanonicalCode, CurveError, PlaneCurve, RotationSystem, Traced};
use crate::gon::{configuration_of_darts, GonConfiguration};
use crate::word::GaussWord;

const LOOSE: usize = usize::MAX;

/// Bundled seed file.
pub const DEFAULT_SEEDS: &str = include_str!("../data/seeds.txt");

/// Version tag written at the top of a part list.
pub const PART_LIST_VERSION: &str = "r4-parts v1";

/// Number of parts the case analysis must produce, per derived seed.
pub const EXPECTED_PARTS_PER_SEED: [usize; 3] = [1, 2, 18];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeedError {
    #[error("seed file line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("seed {name} is inconsistent: {reason}")]
    Inconsistent { name: String, reason: String },
}

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error("case analysis produced {total} parts (per seed {per_seed:?}), expected 21 split {EXPECTED_PARTS_PER_SEED:?}")]
    Mismatch { total: usize, per_seed: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sharing {
    None,
    Edge,
    Crossing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeedRole {
    Derive,
    Excluded,
}

/// Which atlas labels a seed face may carry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelConstraint {
    Any,
    Only(BTreeSet<String>),
    Except(BTreeSet<String>),
}

impl LabelConstraint {
    pub fn allows(&self, name: &str) -> bool {
        match self {
            LabelConstraint::Any => true,
            LabelConstraint::Only(set) => set.contains(name),
            LabelConstraint::Except(set) => !set.contains(name),
        }
    }

    pub fn only(name: &str) -> Self {
        LabelConstraint::Only(BTreeSet::from([name.to_string()]))
    }

    fn names(&self) -> Option<&BTreeSet<String>> {
        match self {
            LabelConstraint::Any => None,
            LabelConstraint::Only(s) | LabelConstraint::Except(s) => Some(s),
        }
    }
}

impl fmt::Display for LabelConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        match self {
            LabelConstraint::Any => Ok(()),
            LabelConstraint::Only(s) => write!(f, ":{}", join(s)),
            LabelConstraint::Except(s) => write!(f, ":!{}", join(s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedFace {
    pub size: usize,
    pub constraint: LabelConstraint,
}

/// One or two faces with a sharing relation, plus loose arc-ends.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedConfiguration {
    pub name: String,
    pub role: SeedRole,
    pub sharing: Sharing,
    pub faces: Vec<SeedFace>,
}

fn labels_of_size(k: usize) -> &'static [&'static str] {
    match k {
        2 => &BIGON_LABELS,
        3 => &TRIGON_LABELS,
        _ => &QUAD_LABELS,
    }
}

/// Partial rotation system drawn by a seed. `faces` lists each seed face as
/// an orbit of `s -> rot⁻¹(alpha(s))`.
#[derive(Clone, Debug)]
struct Picture {
    alpha: Vec<usize>,
    faces: Vec<Vec<usize>>,
}

impl Picture {
    fn internal(&self) -> Vec<bool> {
        self.alpha.iter().map(|&a| a != LOOSE).collect()
    }
}

fn slot(crossing: usize, i: usize) -> usize {
    4 * crossing + i
}

fn rot_slot(s: usize) -> usize {
    RotationSystem::rot(s)
}

fn rot_inv_slot(s: usize) -> usize {
    (s & !3) | ((s + 3) & 3)
}

impl SeedConfiguration {
    pub fn validate(&self) -> Result<(), SeedError> {
        let bad = |reason: &str| SeedError::Inconsistent { name: self.name.clone(), reason: reason.to_string() };
        let wanted = if self.sharing == Sharing::None { 1 } else { 2 };
        if self.faces.len() != wanted {
            return Err(bad("face count does not fit the sharing relation"));
        }
        for face in &self.faces {
            if !(2..=4).contains(&face.size) {
                return Err(bad("face sizes must be 2, 3 or 4"));
            }
            if let Some(names) = face.constraint.names() {
                if let Some(n) = names.iter().find(|n| !labels_of_size(face.size).contains(&n.as_str())) {
                    return Err(bad(&format!("unknown label {n} for a {}-gon", face.size)));
                }
            }
        }
        if !self.loose_end_count().is_multiple_of(2) {
            return Err(bad("odd number of loose ends"));
        }
        Ok(())
    }

    /// Same picture with one face's constraint replaced.
    pub fn with_constraint(&self, face: usize, constraint: LabelConstraint) -> Self {
        let mut out = self.clone();
        out.faces[face].constraint = constraint;
        out
    }

    /// Same picture with every constraint dropped.
    pub fn shape_only(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.faces {
            f.constraint = LabelConstraint::Any;
        }
        out
    }

    fn picture(&self) -> Picture {
        let first = self.faces[0].size;
        let extra = match self.sharing {
            Sharing::None => 0,
            Sharing::Edge => self.faces[1].size - 2,
            Sharing::Crossing => self.faces[1].size - 1,
        };
        let crossings = first + extra;
        let mut alpha = vec![LOOSE; 4 * crossings];
        let mut join = |a: usize, b: usize| {
            alpha[a] = b;
            alpha[b] = a;
        };
        for i in 0..first {
            join(slot(i, 0), slot((i + 1) % first, 1));
        }
        let mut faces = vec![(0..first).map(|i| slot(i, 0)).collect::<Vec<_>>()];
        let extra_crossings: Vec<usize> = (first..crossings).collect();
        let (from, to, mut orbit) = match self.sharing {
            Sharing::None => return Picture { alpha, faces },
            Sharing::Crossing => (slot(0, 2), slot(0, 3), vec![slot(0, 2)]),
            Sharing::Edge => (slot(0, 3), slot(1, 2), vec![slot(1, 1), slot(0, 3)]),
        };
        let mut prev = from;
        for &c in &extra_crossings {
            join(prev, slot(c, 1));
            prev = slot(c, 0);
            orbit.push(prev);
        }
        join(prev, to);
        faces.push(orbit);
        Picture { alpha, faces }
    }

    pub fn crossing_count(&self) -> usize {
        self.picture().alpha.len() / 4
    }

    pub fn loose_end_count(&self) -> usize {
        self.picture().alpha.iter().filter(|&&a| a == LOOSE).count()
    }

    /// Loose slots in the order met walking once around the outside of the
    /// picture.
    pub fn loose_ends(&self) -> Vec<usize> {
        let pic = self.picture();
        outer_order(&pic.alpha, &pic.internal())
    }
}

/// Unmarked slots in the order met walking around the outside of the marked
/// part of a map.
fn outer_order(alpha: &[usize], marked: &[bool]) -> Vec<usize> {
    let Some(start) = marked.iter().position(|&m| !m) else { return vec![] };
    let mut order = vec![start];
    let mut s = start;
    loop {
        let mut t = rot_slot(s);
        while marked[t] {
            t = rot_slot(alpha[t]);
        }
        if t == start || order.len() > alpha.len() {
            break;
        }
        order.push(t);
        s = t;
    }
    order
}

impl fmt::Display for SeedConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = match self.role {
            SeedRole::Derive => "derive",
            SeedRole::Excluded => "excluded",
        };
        let sharing = match self.sharing {
            Sharing::None => "none",
            Sharing::Edge => "edge",
            Sharing::Crossing => "crossing",
        };
        write!(f, "{} {role} {sharing}", self.name)?;
        for face in &self.faces {
            write!(f, " {}{}", face.size, face.constraint)?;
        }
        Ok(())
    }
}

fn parse_face(token: &str) -> Result<SeedFace, String> {
    let (size, rest) = match token.split_once(':') {
        Some((s, r)) => (s, Some(r)),
        None => (token, None),
    };
    let size: usize = size.parse().map_err(|_| format!("bad face size {size:?}"))?;
    let constraint = match rest {
        None => LabelConstraint::Any,
        Some(r) => {
            let (negated, list) = match r.strip_prefix('!') {
                Some(l) => (true, l),
                None => (false, r),
            };
            let names: BTreeSet<String> = list.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect();
            if names.is_empty() {
                return Err("empty label list".into());
            }
            if negated {
                LabelConstraint::Except(names)
            } else {
                LabelConstraint::Only(names)
            }
        }
    };
    Ok(SeedFace { size, constraint })
}

/// Reads a seed file; see `data/seeds.txt` for the format.
pub fn parse_seeds(text: &str) -> Result<Vec<SeedConfiguration>, SeedError> {
    let mut seeds: Vec<SeedConfiguration> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |reason: String| SeedError::Syntax { line: i + 1, reason };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 4 {
            return Err(syntax("expected <name> <role> <sharing> <face>...".into()));
        }
        let role = match tokens[1] {
            "derive" => SeedRole::Derive,
            "excluded" => SeedRole::Excluded,
            other => return Err(syntax(format!("unknown role {other:?}"))),
        };
        let sharing = match tokens[2] {
            "none" => Sharing::None,
            "edge" => Sharing::Edge,
            "crossing" => Sharing::Crossing,
            other => return Err(syntax(format!("unknown sharing {other:?}"))),
        };
        let faces = tokens[3..].iter().map(|t| parse_face(t)).collect::<Result<Vec<_>, _>>().map_err(syntax)?;
        if seeds.iter().any(|s| s.name == tokens[0]) {
            return Err(syntax(format!("duplicate seed name {}", tokens[0])));
        }
        let seed = SeedConfiguration { name: tokens[0].to_string(), role, sharing, faces };
        if seed.faces.iter().any(|f| !(2..=4).contains(&f.size)) {
            return Err(syntax("face sizes must be 2, 3 or 4".into()));
        }
        seed.validate()?;
        seeds.push(seed);
    }
    Ok(seeds)
}

pub fn default_seeds() -> Vec<SeedConfiguration> {
    parse_seeds(DEFAULT_SEEDS).expect("bundled seed file parses")
}

/// Canonical form of a connected map with marked edges, up to rotation of
/// the sphere, reflection and relabelling. Each entry packs the labels of the
/// rotation successor and the edge partner of one slot plus its mark.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MapCode(Vec<u32>);

impl MapCode {
    pub fn of(alpha: &[usize], marked: &[bool]) -> MapCode {
        let n = alpha.len();
        let mut best: Option<Vec<u32>> = None;
        let mut lab = vec![u32::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut code = Vec::with_capacity(n);
        for start in 0..n {
            for turn in [rot_slot as fn(usize) -> usize, rot_inv_slot] {
                lab.fill(u32::MAX);
                order.clear();
                code.clear();
                lab[start] = 0;
                order.push(start);
                let mut i = 0;
                let mut ordering = std::cmp::Ordering::Equal;
                while i < order.len() {
                    let x = order[i];
                    i += 1;
                    for y in [turn(x), alpha[x]] {
                        if lab[y] == u32::MAX {
                            lab[y] = order.len() as u32;
                            order.push(y);
                        }
                    }
                    let entry = (lab[turn(x)] << 17) | (lab[alpha[x]] << 1) | marked[x] as u32;
                    if ordering == std::cmp::Ordering::Equal {
                        if let Some(b) = &best {
                            ordering = entry.cmp(&b[code.len()]);
                            if ordering == std::cmp::Ordering::Greater {
                                break;
                            }
                        }
                    }
                    code.push(entry);
                }
                if code.len() == n && (best.is_none() || ordering == std::cmp::Ordering::Less) {
                    best = Some(code.clone());
                }
            }
        }
        MapCode(best.unwrap_or_default())
    }

    /// A slot system realising this code: crossings in order of their least
    /// label, slots in rotation order from that label.
    fn decode(&self) -> (Vec<usize>, Vec<bool>) {
        let n = self.0.len();
        let turn = |i: usize| (self.0[i] >> 17) as usize;
        let partner = |i: usize| ((self.0[i] >> 1) & 0xffff) as usize;
        let mut slot_of = vec![LOOSE; n];
        let mut next = 0;
        for i in 0..n {
            if slot_of[i] != LOOSE {
                continue;
            }
            let mut x = i;
            for j in 0..4 {
                slot_of[x] = next + j;
                x = turn(x);
            }
            next += 4;
        }
        let mut alpha = vec![0; n];
        let mut marked = vec![false; n];
        for i in 0..n {
            alpha[slot_of[i]] = slot_of[partner(i)];
            marked[slot_of[i]] = self.0[i] & 1 == 1;
        }
        (alpha, marked)
    }
}

impl fmt::Display for MapCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| format!("{e:x}")).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for MapCode {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split('.').map(|t| u32::from_str_radix(t, 16)).collect::<Result<Vec<_>, _>>().map(MapCode)
    }
}

/// Map code of a signed word with some of its edges marked; edge `i` runs
/// from position `i` to position `i + 1`. The word need not be planar.
pub fn local_map_code(word: &GaussWord, marked_edges: &BTreeSet<usize>) -> Result<MapCode, CurveError> {
    let curve = PlaneCurve::build_unchecked(word)?;
    let sys = RotationSystem::from_curve(&curve);
    let mut marked = vec![false; sys.alpha.len()];
    for d in 0..2 * curve.passes() {
        marked[sys.slot_of_dart[d]] = marked_edges.contains(&curve.edge_of_dart(d));
    }
    Ok(MapCode::of(&sys.alpha, &marked))
}

/// A seed together with one admissible outer connection of its loose ends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletedPart {
    pub seed: String,
    pub labels: Vec<FaceLabel>,
    /// For edge-sharing seeds, the shared edge's orbit under the symmetry of
    /// the second face's configuration.
    pub shared_edge: Option<usize>,
    code: MapCode,
}

impl CompletedPart {
    pub fn code(&self) -> &MapCode {
        &self.code
    }

    fn slots(&self) -> (Vec<usize>, Vec<bool>) {
        self.code.decode()
    }

    pub fn crossing_count(&self) -> usize {
        self.code.0.len() / 4
    }

    fn traced(&self) -> Traced {
        let (alpha, _) = self.slots();
        RotationSystem { alpha, slot_of_dart: vec![] }.trace().expect("a part is one closed curve")
    }

    /// The curve obtained by drawing every outer connection with no further
    /// crossings, as a signed word. It need not be planar.
    pub fn closed_word(&self) -> GaussWord {
        self.traced().curve.word().clone()
    }

    /// Curve edges of `closed_word` that belong to the seed picture.
    pub fn seed_edges(&self) -> BTreeSet<usize> {
        let (_, marked) = self.slots();
        let traced = self.traced();
        (0..marked.len()).filter(|&s| marked[s]).map(|s| traced.curve.edge_of_dart(traced.dart_of_slot[s])).collect()
    }

    /// The closed curve if it embeds in the sphere.
    pub fn closed_curve(&self) -> Result<PlaneCurve, CurveError> {
        PlaneCurve::from_word(&self.closed_word())
    }

    /// A spherical curve containing this part: outer connections are drawn
    /// as straight chords in the disk outside the seed, so two of them cross
    /// once exactly when their ends interleave.
    pub fn realization(&self) -> Option<PlaneCurve> {
        let (alpha, marked) = self.slots();
        let order = outer_order(&alpha, &marked);
        let ends = order.len();
        let mut pos = vec![LOOSE; alpha.len()];
        for (i, &s) in order.iter().enumerate() {
            pos[s] = i;
        }
        let chords: Vec<(usize, usize)> =
            order.iter().filter(|&&s| pos[s] < pos[alpha[s]]).map(|&s| (s, alpha[s])).collect();
        for orientation in [1.0, -1.0] {
            // A little jitter keeps three chords from meeting in one point.
            let point = |s: usize| {
                let i = pos[s] as f64;
                let jitter = ((pos[s] * 7919) % 97) as f64 / 97.0 * 0.05;
                let theta = orientation * std::f64::consts::TAU * (i + jitter) / ends as f64;
                (theta.cos(), theta.sin())
            };
            let mut sys = RotationSystem { alpha: alpha.clone(), slot_of_dart: vec![] };
            let mut along: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); chords.len()];
            for i in 0..chords.len() {
                for j in i + 1..chords.len() {
                    let (p, q) = (point(chords[i].0), point(chords[i].1));
                    let (r, t) = (point(chords[j].0), point(chords[j].1));
                    let u = (q.0 - p.0, q.1 - p.1);
                    let v = (t.0 - r.0, t.1 - r.1);
                    let denom = u.0 * v.1 - u.1 * v.0;
                    if denom.abs() < 1e-12 {
                        continue;
                    }
                    let w = (r.0 - p.0, r.1 - p.1);
                    let a = (w.0 * v.1 - w.1 * v.0) / denom;
                    let b = (w.0 * u.1 - w.1 * u.0) / denom;
                    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                        continue;
                    }
                    let base = sys.add_crossing();
                    let dirs = [(-u.0, -u.1), u, (-v.0, -v.1), v];
                    let mut by_angle: Vec<usize> = (0..4).collect();
                    by_angle.sort_by(|&x, &y| dirs[x].1.atan2(dirs[x].0).total_cmp(&dirs[y].1.atan2(dirs[y].0)));
                    let mut slot_of = [0; 4];
                    for (rank, &d) in by_angle.iter().enumerate() {
                        slot_of[d] = base + rank;
                    }
                    along[i].push((a, slot_of[0], slot_of[1]));
                    along[j].push((b, slot_of[2], slot_of[3]));
                }
            }
            for (chord, mut meets) in chords.iter().zip(along) {
                meets.sort_by(|x, y| x.0.total_cmp(&y.0));
                let mut prev = chord.0;
                for (_, from_start, to_end) in meets {
                    sys.join(prev, from_start);
                    prev = to_end;
                }
                sys.join(prev, chord.1);
            }
            let Some(traced) = sys.trace() else { continue };
            if let Ok(curve) = PlaneCurve::from_word(traced.curve.word()) {
                return Some(curve);
            }
        }
        None
    }

    pub fn label_text(&self) -> String {
        self.labels.iter().map(|l| l.name.clone()).collect::<Vec<_>>().join("+")
    }
}

fn for_each_matching(loose: &[usize], alpha: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
    let Some(pos) = loose.iter().position(|&s| alpha[s] == LOOSE) else {
        visit(alpha);
        return;
    };
    let a = loose[pos];
    for &b in &loose[pos + 1..] {
        if alpha[b] != LOOSE {
            continue;
        }
        alpha[a] = b;
        alpha[b] = a;
        for_each_matching(loose, alpha, visit);
        alpha[a] = LOOSE;
        alpha[b] = LOOSE;
    }
}

/// All outer connections of a seed that close into one curve and give every
/// seed face an allowed label, up to isomorphism of the resulting picture.
pub fn enumerate_completions(seed: &SeedConfiguration, atlas: &TypeAtlas) -> Result<Vec<CompletedPart>, SeedError> {
    seed.validate()?;
    let pic = seed.picture();
    let internal = pic.internal();
    let loose: Vec<usize> = (0..pic.alpha.len()).filter(|&s| !internal[s]).collect();
    let mut found: BTreeMap<MapCode, CompletedPart> = BTreeMap::new();
    let mut alpha = pic.alpha.clone();
    for_each_matching(&loose, &mut alpha, &mut |alpha| {
        let sys = RotationSystem { alpha: alpha.to_vec(), slot_of_dart: vec![] };
        let Some(traced) = sys.trace() else { return };
        let mut labels = Vec::with_capacity(pic.faces.len());
        let mut shared_edge = None;
        for (i, orbit) in pic.faces.iter().enumerate() {
            let darts: Vec<usize> = orbit.iter().map(|&s| traced.dart_of_slot[s]).collect();
            let Ok((config, marks)) = configuration_of_darts(&traced.curve, &darts) else { return };
            let Some(label) = atlas.label(&config) else { return };
            if !seed.faces[i].constraint.allows(&label.name) {
                return;
            }
            labels.push(label.clone());
            if i == 1 && seed.sharing == Sharing::Edge {
                shared_edge = Some(marks[0]);
            }
        }
        let code = MapCode::of(alpha, &internal);
        found.entry(code.clone()).or_insert_with(|| CompletedPart { seed: seed.name.clone(), labels, shared_edge, code });
    });
    let mut parts: Vec<CompletedPart> = found.into_values().collect();
    parts.sort_by(|a, b| (&a.labels, &a.code).cmp(&(&b.labels, &b.code)));
    Ok(parts)
}

/// Completions of an edge-sharing seed whose second face is a fixed 4-gon
/// label, counted per orbit of the shared edge (every orbit is listed).
pub fn shared_edge_breakdown(
    seed: &SeedConfiguration,
    atlas: &TypeAtlas,
    quad: &str,
) -> Result<BTreeMap<usize, usize>, SeedError> {
    let config: &GonConfiguration = atlas.config(4, quad).ok_or_else(|| SeedError::Inconsistent {
        name: seed.name.clone(),
        reason: format!("atlas has no 4-gon {quad}"),
    })?;
    let partner = config.partner();
    let mut counts: BTreeMap<usize, usize> =
        (0..4).map(|a| (GonConfiguration::canonical_with_mark(&partner, a).1, 0)).collect();
    for part in enumerate_completions(&seed.with_constraint(1, LabelConstraint::only(quad)), atlas)? {
        if let Some(mark) = part.shared_edge {
            *counts.entry(mark).or_default() += 1;
        }
    }
    Ok(counts)
}

/// Parts produced by the case analysis, grouped by seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub seeds: Vec<String>,
    pub parts: Vec<CompletedPart>,
}

impl Derivation {
    pub fn counts_per_seed(&self) -> Vec<usize> {
        self.seeds.iter().map(|s| self.parts.iter().filter(|p| &p.seed == s).count()).collect()
    }

    /// Part counts per seed and face-label combination.
    pub fn breakdown(&self) -> BTreeMap<(String, String), usize> {
        let mut out = BTreeMap::new();
        for p in &self.parts {
            *out.entry((p.seed.clone(), p.label_text())).or_default() += 1;
        }
        out
    }

    /// Stable text form: a version header, the quotient used, then one line
    /// per part with its closed signed word and the seed's edges in it.
    pub fn to_golden(&self) -> String {
        let mut out = format!("# {PART_LIST_VERSION}\n");
        out.push_str("# parts are identified up to sphere rotation, reflection and curve direction\n");
        out.push_str("# columns: index, seed, face labels, closed signed word, seed edges (0-based)\n");
        for (i, p) in self.parts.iter().enumerate() {
            let edges: Vec<String> = p.seed_edges().iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                i + 1,
                p.seed,
                p.label_text(),
                p.closed_word(),
                edges.join(",")
            ));
        }
        out
    }
}

/// Runs the case analysis without checking the outcome.
pub fn run_case_analysis(atlas: &TypeAtlas, seeds: &[SeedConfiguration]) -> Result<Derivation, SeedError> {
    let active: Vec<&SeedConfiguration> = seeds.iter().filter(|s| s.role == SeedRole::Derive).collect();
    let per_seed: Vec<Vec<CompletedPart>> =
        active.par_iter().map(|s| enumerate_completions(s, atlas)).collect::<Result<_, _>>()?;
    Ok(Derivation {
        seeds: active.iter().map(|s| s.name.clone()).collect(),
        parts: per_seed.into_iter().flatten().collect(),
    })
}

/// The case analysis, which must give 21 parts split 1, 2, 18 over the
/// derived seeds.
pub fn derive_r4_parts(atlas: &TypeAtlas, seeds: &[SeedConfiguration]) -> Result<Derivation, DeriveError> {
    let derivation = run_case_analysis(atlas, seeds)?;
    let per_seed = derivation.counts_per_seed();
    if per_seed != EXPECTED_PARTS_PER_SEED {
        return Err(DeriveError::Mismatch { total: derivation.parts.len(), per_seed });
    }
    Ok(derivation)
}

/// Something to look for inside a curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    /// A face of this size, optionally restricted to some labels.
    Face { size: usize, labels: Option<BTreeSet<String>> },
    /// A seed picture; loose ends may connect in any way.
    Shape(SeedConfiguration),
    /// A seed picture whose loose ends connect exactly as in the part.
    Part(CompletedPart),
}

impl Pattern {
    pub fn name(&self) -> String {
        match self {
            Pattern::Face { size, labels: None } => format!("{size}-gon"),
            Pattern::Face { size, labels: Some(l) } => {
                format!("{size}-gon:{}", l.iter().cloned().collect::<Vec<_>>().join(","))
            }
            Pattern::Shape(seed) => seed.name.clone(),
            Pattern::Part(p) => format!("{}:{}", p.seed, p.label_text()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    pub name: String,
    pub patterns: Vec<Pattern>,
}

impl PatternSet {
    /// Bigons and trigons.
    pub fn small_faces() -> Self {
        PatternSet {
            name: "S".into(),
            patterns: vec![Pattern::Face { size: 2, labels: None }, Pattern::Face { size: 3, labels: None }],
        }
    }

    pub fn trigons() -> Self {
        PatternSet { name: "T".into(), patterns: vec![Pattern::Face { size: 3, labels: None }] }
    }

    /// The seed pictures themselves with constraints dropped.
    pub fn seed_shapes(seeds: &[SeedConfiguration]) -> Self {
        PatternSet { name: "U".into(), patterns: seeds.iter().map(|s| Pattern::Shape(s.shape_only())).collect() }
    }

    pub fn r4(derivation: &Derivation) -> Self {
        PatternSet { name: "R4".into(), patterns: derivation.parts.iter().cloned().map(Pattern::Part).collect() }
    }
}

/// Where a pattern sits: the curve crossing (0-based label) for each pattern
/// crossing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub crossings: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    pub occurrences: Vec<Occurrence>,
}

/// Every way to place a slot picture on the curve so that joined slots land
/// on curve edges and crossings stay distinct. `visit` receives the dart for
/// each slot.
fn embeddings(curve: &PlaneCurve, alpha: &[usize], internal: &[bool], visit: &mut dyn FnMut(&[usize], &[bool])) {
    let Some(anchor) = internal.iter().position(|&b| b) else { return };
    let mut map = vec![LOOSE; alpha.len()];
    let mut used = vec![false; curve.crossings()];
    let mut stack = Vec::new();
    for d0 in 0..2 * curve.passes() {
        for mirrored in [false, true] {
            map.fill(LOOSE);
            used.fill(false);
            stack.clear();
            stack.push((anchor, d0));
            let mut ok = true;
            while let Some((s, d)) = stack.pop() {
                if map[s] != LOOSE {
                    if map[s] != d {
                        ok = false;
                        break;
                    }
                    continue;
                }
                let x = curve.crossing_of_dart(d);
                if used[x] {
                    ok = false;
                    break;
                }
                used[x] = true;
                let (c, i) = (s / 4, s % 4);
                let mut e = d;
                for j in 0..4 {
                    map[4 * c + (i + j) % 4] = e;
                    e = if mirrored { curve.rot_inv(e) } else { curve.rot(e) };
                }
                for t in 4 * c..4 * c + 4 {
                    if internal[t] {
                        stack.push((alpha[t], curve.edge_mate(map[t])));
                    }
                }
            }
            if ok && !map.contains(&LOOSE) {
                visit(&map, &used);
            }
        }
    }
}

/// Follows the curve from `d` through crossings outside the placed picture.
fn next_placed(curve: &PlaneCurve, d: usize, used: &[bool]) -> usize {
    let mut e = curve.edge_mate(d);
    while !used[curve.crossing_of_dart(e)] {
        e = curve.edge_mate(curve.rot(curve.rot(e)));
    }
    e
}

fn occurrence_of(curve: &PlaneCurve, map: &[usize]) -> Occurrence {
    Occurrence { crossings: map.iter().step_by(4).map(|&d| curve.crossing_of_dart(d)).collect() }
}

fn collect(found: &mut BTreeMap<Vec<usize>, Occurrence>, curve: &PlaneCurve, map: &[usize]) {
    let mut key = map.to_vec();
    key.sort_unstable();
    found.entry(key).or_insert_with(|| occurrence_of(curve, map));
}

pub fn match_pattern(curve: &PlaneCurve, pattern: &Pattern, atlas: &TypeAtlas) -> MatchResult {
    let occurrences: Vec<Occurrence> = match pattern {
        Pattern::Face { size, labels } => {
            let reports = classify_faces(curve, atlas);
            let faces = curve.faces();
            reports
                .iter()
                .filter(|r| r.size == *size)
                .filter(|r| match labels {
                    None => true,
                    Some(allowed) => r.label.as_ref().is_some_and(|l| allowed.contains(&l.name)),
                })
                .filter_map(|r| {
                    let crossings: Vec<usize> =
                        faces[r.face].darts.iter().map(|&d| curve.crossing_of_dart(d)).collect();
                    let distinct: HashSet<usize> = crossings.iter().copied().collect();
                    (distinct.len() == crossings.len()).then_some(Occurrence { crossings })
                })
                .collect()
        }
        Pattern::Shape(seed) => {
            let pic = seed.picture();
            let internal = pic.internal();
            let mut found = BTreeMap::new();
            embeddings(curve, &pic.alpha, &internal, &mut |map, _| {
                let fits = pic.faces.iter().zip(&seed.faces).all(|(orbit, face)| {
                    if face.constraint == LabelConstraint::Any {
                        return true;
                    }
                    let darts: Vec<usize> = orbit.iter().map(|&s| map[s]).collect();
                    configuration_of_darts(curve, &darts)
                        .ok()
                        .and_then(|(config, _)| atlas.label(&config).cloned())
                        .is_some_and(|l| face.constraint.allows(&l.name))
                });
                if fits {
                    collect(&mut found, curve, map);
                }
            });
            found.into_values().collect()
        }
        Pattern::Part(part) => {
            let (alpha, internal) = part.slots();
            let mut found = BTreeMap::new();
            embeddings(curve, &alpha, &internal, &mut |map, used| {
                let closes = (0..alpha.len()).all(|s| internal[s] || next_placed(curve, map[s], used) == map[alpha[s]]);
                if closes {
                    collect(&mut found, curve, map);
                }
            });
            found.into_values().collect()
        }
    };
    MatchResult { matched: !occurrences.is_empty(), occurrences }
}

/// Names of the patterns of `set` found in `curve`.
pub fn matching_patterns(curve: &PlaneCurve, set: &PatternSet, atlas: &TypeAtlas) -> Vec<String> {
    set.patterns.iter().filter(|p| match_pattern(curve, p, atlas).matched).map(Pattern::name).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub set: String,
    pub checked: usize,
    pub skipped: usize,
    pub counterexamples: Vec<CanonicalCode>,
}

impl VerifyReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks that every curve accepted by `predicate` contains some pattern of
/// `set`.
pub fn verify_unavoidable(
    set: &PatternSet,
    curves: impl IntoIterator<Item = PlaneCurve>,
    predicate: impl Fn(&PlaneCurve) -> bool + Sync,
    atlas: &TypeAtlas,
) -> VerifyReport {
    let curves: Vec<PlaneCurve> = curves.into_iter().collect();
    let outcomes: Vec<Option<Option<CanonicalCode>>> = curves
        .par_iter()
        .map(|c| {
            if !predicate(c) {
                return None;
            }
            let hit = set.patterns.iter().any(|p| match_pattern(c, p, atlas).matched);
            Some((!hit).then(|| c.canonical()))
        })
        .collect();
    let mut report = VerifyReport { set: set.name.clone(), ..Default::default() };
    for o in outcomes {
        match o {
            None => report.skipped += 1,
            Some(None) => report.checked += 1,
            Some(Some(code)) => {
                report.checked += 1;
                report.counterexamples.push(code);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::default_atlas;
    use crate::generators::torus_projection;

    fn seed(name: &str) -> SeedConfiguration {
        default_seeds().into_iter().find(|s| s.name == name).unwrap()
    }

    #[test]
    fn seed_faces_are_orbits() {
        for s in default_seeds() {
            let pic = s.picture();
            for (orbit, face) in pic.faces.iter().zip(&s.faces) {
                assert_eq!(orbit.len(), face.size);
                for (i, &x) in orbit.iter().enumerate() {
                    let next = rot_inv_slot(pic.alpha[x]);
                    assert_eq!(next, orbit[(i + 1) % orbit.len()], "seed {}", s.name);
                }
            }
        }
    }

    #[test]
    fn loose_ends_walk_covers_all() {
        for s in default_seeds() {
            let mut walk = s.loose_ends();
            assert_eq!(walk.len(), s.loose_end_count(), "seed {}", s.name);
            walk.sort_unstable();
            walk.dedup();
            assert_eq!(walk.len(), s.loose_end_count());
        }
    }

    #[test]
    fn seed_file_round_trips() {
        let seeds = default_seeds();
        let text: String = seeds.iter().map(|s| format!("{s}\n")).collect();
        assert_eq!(parse_seeds(&text).unwrap(), seeds);
    }

    #[test]
    fn seed_file_errors() {
        assert!(matches!(parse_seeds("x derive edge 3"), Err(SeedError::Inconsistent { .. })));
        assert!(matches!(parse_seeds("x derive sideways 3 3"), Err(SeedError::Syntax { line: 1, .. })));
        assert!(matches!(parse_seeds("x derive none 5"), Err(SeedError::Syntax { .. })));
        assert!(matches!(parse_seeds("x derive none 3:Q"), Err(SeedError::Inconsistent { .. })));
        assert!(matches!(parse_seeds("x derive none 3\nx derive none 3"), Err(SeedError::Syntax { line: 2, .. })));
    }

    #[test]
    fn map_code_ignores_relabelling() {
        let curve = torus_projection(3, 4).unwrap();
        let word = curve.word().clone();
        let edges = BTreeSet::from([0, 3]);
        let a = local_map_code(&word, &edges).unwrap();
        let mirrored = curve.mirror();
        let b = local_map_code(mirrored.word(), &edges).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, local_map_code(&word, &BTreeSet::new()).unwrap());
    }

    #[test]
    fn map_code_decodes_to_same_code() {
        let curve = torus_projection(3, 4).unwrap();
        let code = local_map_code(curve.word(), &BTreeSet::from([1, 2])).unwrap();
        let (alpha, marked) = code.decode();
        assert_eq!(MapCode::of(&alpha, &marked), code);
        assert_eq!(code.to_string().parse::<MapCode>().unwrap(), code);
    }

    #[test]
    fn third_part_is_unique() {
        let parts = enumerate_completions(&seed("u3"), default_atlas()).unwrap();
        assert_eq!(parts.len(), 1);
    }

    #[test]
    fn fourth_part_sub_cases() {
        let atlas = default_atlas();
        let s = seed("u4");
        assert_eq!(enumerate_completions(&s, atlas).unwrap().len(), 2);
        let only_2d = s.with_constraint(1, LabelConstraint::only("2d"));
        assert!(enumerate_completions(&only_2d, atlas).unwrap().is_empty());
        let allowed = LabelConstraint::Only(["2c", "2d", "4b"].iter().map(|s| s.to_string()).collect());
        assert_eq!(enumerate_completions(&s.with_constraint(1, allowed), atlas).unwrap().len(), 2);
        let orbits = shared_edge_breakdown(&s, atlas, "4b").unwrap();
        assert!(orbits.len() >= 2);
        assert_eq!(orbits.values().sum::<usize>(), 1);
        assert!(orbits.values().any(|&c| c == 0));
        assert!(shared_edge_breakdown(&s, atlas, "2d").unwrap().values().all(|&c| c == 0));
    }

    #[test]
    fn fifth_part_sub_cases() {
        let atlas = default_atlas();
        let s = seed("u5");
        assert_eq!(enumerate_completions(&s.with_constraint(1, LabelConstraint::only("1c")), atlas).unwrap().len(), 1);
        assert_eq!(enumerate_completions(&s.with_constraint(1, LabelConstraint::only("3b")), atlas).unwrap().len(), 2);
    }

    #[test]
    fn derivation_counts() {
        let d = derive_r4_parts(default_atlas(), &default_seeds()).unwrap();
        assert_eq!(d.parts.len(), 21);
        assert_eq!(d.counts_per_seed(), vec![1, 2, 18]);
        assert_eq!(d.to_golden(), derive_r4_parts(default_atlas(), &default_seeds()).unwrap().to_golden());
    }

    #[test]
    fn parts_are_realized_by_spherical_curves() {
        let atlas = default_atlas();
        let seeds = default_seeds();
        let d = derive_r4_parts(atlas, &seeds).unwrap();
        for p in &d.parts {
            let curve = p.realization().unwrap_or_else(|| panic!("no realization for {}", p.label_text()));
            assert!(match_pattern(&curve, &Pattern::Part(p.clone()), atlas).matched, "{}", p.label_text());
            let seed = seeds.iter().find(|s| s.name == p.seed).unwrap();
            assert!(match_pattern(&curve, &Pattern::Shape(seed.clone()), atlas).matched, "{}", p.label_text());
            if let Ok(closed) = p.closed_curve() {
                assert_eq!(closed.canonical(), curve.canonical());
            }
        }
    }

    #[test]
    fn simple_patterns() {
        let atlas = default_atlas();
        let torus = torus_projection(3, 4).unwrap();
        let b = Pattern::Face { size: 3, labels: Some(BTreeSet::from(["B".to_string()])) };
        assert!(match_pattern(&torus, &b, atlas).matched);
        let curl = PlaneCurve::parse("1+ 1+").unwrap();
        let d = derive_r4_parts(atlas, &default_seeds()).unwrap();
        for p in PatternSet::r4(&d).patterns {
            assert!(!match_pattern(&curl, &p, atlas).matched);
        }
    }
}
