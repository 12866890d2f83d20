//! Named face types and their validation.
//!
//! The label assignment lives in a transcription file (`data/atlas.txt`),
//! one record per label: `<k> <label> <configuration>`. Code never hard-codes
//! which configuration carries which name; `bind_labels` only checks a
//! transcription against the catalog and the known anchors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{FaceCensus, PlaneCurve};
use crate::generators::{enumerate_curves, torus_projection, EnumerationFilter};
use crate::gon::{extract_configuration, GonConfiguration, OrientationClass};
use crate::unavoidable::{derive_r4_parts, SeedConfiguration};

pub const BIGON_LABELS: [&str; 2] = ["coherent", "incoherent"];
pub const TRIGON_LABELS: [&str; 4] = ["A", "B", "C", "D"];
pub const QUAD_LABELS: [&str; 13] = ["1a", "1b", "1c", "2a", "2b", "2c", "2d", "3a", "3b", "3c", "3d", "4a", "4b"];
/// 4-gon types from which one splice yields a type-A trigon.
pub const SPLIT_TO_A: [&str; 4] = ["2a", "2b", "3a", "4a"];

/// Which check a transcription failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// Every catalog configuration gets exactly one label and vice versa.
    Coverage,
    /// The digit of a 4-gon label names its orientation class.
    OrientationClasses,
    /// Trigons of torus(3, 3n+1) are B, those of torus(3, 3n−1) are A.
    TorusTrigons,
    /// Exactly 2a, 2b, 3a, 4a reach a type-A trigon after one splice.
    SplitToTypeA,
    /// Trigons with incoherent boundary are exactly A and B.
    IncoherentTrigons,
    /// The case analysis produces 21 parts split 1 + 2 + 18.
    PartCount,
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Anchor::Coverage => "coverage",
            Anchor::OrientationClasses => "orientation-classes",
            Anchor::TorusTrigons => "torus-trigons",
            Anchor::SplitToTypeA => "split-to-type-A",
            Anchor::IncoherentTrigons => "incoherent-trigons",
            Anchor::PartCount => "part-count",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AtlasError {
    #[error("atlas line {line}: {reason}")]
    Transcription { line: usize, reason: String },
    #[error("binding conflict ({anchor}): {detail}")]
    BindingConflict { anchor: Anchor, detail: String },
}

fn conflict(anchor: Anchor, detail: impl Into<String>) -> AtlasError {
    AtlasError::BindingConflict { anchor, detail: detail.into() }
}

/// A face type name such as trigon `B` or 4-gon `3c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceLabel {
    pub k: usize,
    pub name: String,
}

impl FaceLabel {
    pub fn new(k: usize, name: &str) -> Self {
        FaceLabel { k, name: name.to_string() }
    }

    pub fn is(&self, k: usize, name: &str) -> bool {
        self.k == k && self.name == name
    }
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            2 => write!(f, "{} bigon", self.name),
            3 => write!(f, "trigon {}", self.name),
            _ => write!(f, "4-gon {}", self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasEntry {
    pub label: FaceLabel,
    pub config: GonConfiguration,
}

/// Parses a transcription: `<k> <label> <configuration>` per line, `#`
/// starts a comment line.
pub fn parse_transcription(text: &str) -> Result<Vec<AtlasEntry>, AtlasError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| AtlasError::Transcription { line: i + 1, reason };
        let mut parts = line.splitn(3, char::is_whitespace);
        let k: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("expected face size".into()))?;
        let name = parts.next().ok_or_else(|| bad("expected label".into()))?;
        let config: GonConfiguration = parts
            .next()
            .ok_or_else(|| bad("expected configuration".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        if config.k() != k {
            return Err(bad(format!("configuration has {} edges, not {k}", config.k())));
        }
        entries.push(AtlasEntry { label: FaceLabel::new(k, name), config });
    }
    Ok(entries)
}

/// Realizable configurations of one face size, each with a witness curve.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub k: usize,
    pub configs: Vec<GonConfiguration>,
    pub witnesses: Vec<PlaneCurve>,
}

/// All configurations of a `k`-gon that occur in some curve with at most
/// `max_crossings` crossings.
pub fn derive_catalog(k: usize, max_crossings: usize) -> Catalog {
    let curves: Vec<PlaneCurve> = enumerate_curves(&EnumerationFilter::all(max_crossings))
        .expect("catalog bound within limits")
        .into_iter()
        .map(|c| c.to_curve())
        .collect();
    derive_catalog_from(k, &curves)
}

/// Like `derive_catalog`, searching the given curves for witnesses.
pub fn derive_catalog_from(k: usize, curves: &[PlaneCurve]) -> Catalog {
    let wanted: BTreeSet<GonConfiguration> = GonConfiguration::candidates(k).into_iter().collect();
    let mut found: BTreeMap<GonConfiguration, PlaneCurve> = BTreeMap::new();
    for curve in curves {
        for face in curve.faces() {
            if face.size() != k {
                continue;
            }
            if let Ok(cfg) = extract_configuration(curve, &face.darts) {
                if wanted.contains(&cfg) && !found.contains_key(&cfg) {
                    found.insert(cfg, curve.clone());
                }
            }
        }
        if found.len() == wanted.len() {
            break;
        }
    }
    let (configs, witnesses) = found.into_iter().unzip();
    Catalog { k, configs, witnesses }
}

/// Validated mapping from configurations to labels.
#[derive(Clone, Debug)]
pub struct TypeAtlas {
    entries: Vec<AtlasEntry>,
    by_config: HashMap<GonConfiguration, usize>,
}

impl TypeAtlas {
    fn new(entries: Vec<AtlasEntry>) -> Self {
        let by_config = entries.iter().enumerate().map(|(i, e)| (e.config.clone(), i)).collect();
        TypeAtlas { entries, by_config }
    }

    pub fn entries(&self) -> &[AtlasEntry] {
        &self.entries
    }

    pub fn label(&self, config: &GonConfiguration) -> Option<&FaceLabel> {
        self.by_config.get(config).map(|&i| &self.entries[i].label)
    }

    pub fn config(&self, k: usize, name: &str) -> Option<&GonConfiguration> {
        self.entries.iter().find(|e| e.label.is(k, name)).map(|e| &e.config)
    }

    /// 4-gon labels from which splicing one incoherent corner gives a trigon
    /// labelled A.
    pub fn quads_splitting_to_a(&self) -> BTreeSet<String> {
        let Some(a) = self.config(3, "A") else { return BTreeSet::new() };
        self.entries
            .iter()
            .filter(|e| e.label.k == 4)
            .filter(|e| (0..4).any(|i| e.config.splice_corner(i).as_ref() == Some(a)))
            .map(|e| e.label.name.clone())
            .collect()
    }

    /// Serialises back to the transcription format.
    pub fn to_transcription(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{} {} {}\n", e.label.k, e.label.name, e.config));
        }
        out
    }
}

/// Checks a transcription and builds the atlas.
pub fn bind_labels(
    catalogs: &[Catalog],
    transcription: &[AtlasEntry],
    seeds: &[SeedConfiguration],
) -> Result<TypeAtlas, AtlasError> {
    check_coverage(catalogs, transcription)?;
    let atlas = TypeAtlas::new(transcription.to_vec());
    check_classes(&atlas)?;
    check_incoherent_trigons(&atlas)?;
    check_torus_trigons(&atlas)?;
    let split: BTreeSet<String> = atlas.quads_splitting_to_a();
    let expected: BTreeSet<String> = SPLIT_TO_A.iter().map(|s| s.to_string()).collect();
    if split != expected {
        return Err(conflict(Anchor::SplitToTypeA, format!("got {split:?}")));
    }
    let derivation = derive_r4_parts(&atlas, seeds).map_err(|e| conflict(Anchor::PartCount, e.to_string()))?;
    let counts = derivation.counts_per_seed();
    if derivation.parts.len() != 21 || counts != [1, 2, 18] {
        return Err(conflict(
            Anchor::PartCount,
            format!("{} parts, per seed {:?}", derivation.parts.len(), counts),
        ));
    }
    Ok(atlas)
}

fn check_coverage(catalogs: &[Catalog], transcription: &[AtlasEntry]) -> Result<(), AtlasError> {
    let mut labels = BTreeSet::new();
    let mut configs = BTreeSet::new();
    for e in transcription {
        let allowed: &[&str] = match e.label.k {
            2 => &BIGON_LABELS,
            3 => &TRIGON_LABELS,
            4 => &QUAD_LABELS,
            _ => &[],
        };
        if !allowed.contains(&e.label.name.as_str()) {
            return Err(conflict(Anchor::Coverage, format!("unknown label {}", e.label)));
        }
        if !labels.insert(e.label.clone()) {
            return Err(conflict(Anchor::Coverage, format!("label {} given twice", e.label)));
        }
        if !configs.insert(e.config.clone()) {
            return Err(conflict(Anchor::Coverage, format!("configuration {} labelled twice", e.config)));
        }
    }
    let catalog: BTreeSet<GonConfiguration> = catalogs.iter().flat_map(|c| c.configs.iter().cloned()).collect();
    if let Some(missing) = catalog.difference(&configs).next() {
        return Err(conflict(Anchor::Coverage, format!("configuration {missing} has no label")));
    }
    if let Some(extra) = configs.difference(&catalog).next() {
        return Err(conflict(Anchor::Coverage, format!("configuration {extra} is not realizable")));
    }
    Ok(())
}

fn check_classes(atlas: &TypeAtlas) -> Result<(), AtlasError> {
    for e in atlas.entries() {
        let class = e.config.orientation_class();
        match (e.label.k, e.label.name.as_str()) {
            (2, name) => {
                if class.is_coherent() != (name == "coherent") {
                    return Err(conflict(Anchor::OrientationClasses, format!("{} has boundary {class}", e.label)));
                }
            }
            (4, name) => {
                let digit = name.as_bytes()[0];
                let ok = match digit {
                    b'1' => class.is_coherent(),
                    b'2' => class.has_coherent_corner() && class.has_edge_between_incoherent_corners(),
                    b'3' => class.has_coherent_corner() && !class.has_edge_between_incoherent_corners(),
                    b'4' => !class.has_coherent_corner(),
                    _ => false,
                };
                if !ok || (digit == b'1') != class.is_coherent() {
                    return Err(conflict(Anchor::OrientationClasses, format!("{} has boundary {class}", e.label)));
                }
            }
            _ => {}
        }
    }
    let mut class_of_digit: BTreeMap<u8, BTreeSet<OrientationClass>> = BTreeMap::new();
    for e in atlas.entries().iter().filter(|e| e.label.k == 4) {
        class_of_digit.entry(e.label.name.as_bytes()[0]).or_default().insert(e.config.orientation_class());
    }
    if class_of_digit.values().any(|s| s.len() != 1) {
        return Err(conflict(Anchor::OrientationClasses, "one digit spans several classes"));
    }
    Ok(())
}

fn check_incoherent_trigons(atlas: &TypeAtlas) -> Result<(), AtlasError> {
    let incoherent: BTreeSet<&str> = atlas
        .entries()
        .iter()
        .filter(|e| e.label.k == 3 && !e.config.orientation_class().is_coherent())
        .map(|e| e.label.name.as_str())
        .collect();
    if incoherent != BTreeSet::from(["A", "B"]) {
        return Err(conflict(Anchor::IncoherentTrigons, format!("incoherent trigons are {incoherent:?}")));
    }
    Ok(())
}

fn check_torus_trigons(atlas: &TypeAtlas) -> Result<(), AtlasError> {
    for (q, want) in [(4, "B"), (7, "B"), (2, "A"), (5, "A")] {
        let curve = torus_projection(3, q).expect("coprime");
        for report in classify_faces(&curve, atlas).iter().filter(|r| r.size == 3) {
            let got = report.label.as_ref().map(|l| l.name.as_str());
            if got != Some(want) {
                return Err(conflict(
                    Anchor::TorusTrigons,
                    format!("torus(3,{q}) has a trigon labelled {got:?}, expected {want}"),
                ));
            }
        }
    }
    Ok(())
}

/// One face of a curve with its type, when it has one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceReport {
    pub face: usize,
    pub size: usize,
    pub class: Option<OrientationClass>,
    pub config: Option<GonConfiguration>,
    pub label: Option<FaceLabel>,
}

/// Labels every non-degenerate face of size 2 to 4.
pub fn classify_faces(curve: &PlaneCurve, atlas: &TypeAtlas) -> Vec<FaceReport> {
    curve
        .faces()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let config = extract_configuration(curve, &f.darts).ok();
            FaceReport {
                face: i,
                size: f.size(),
                class: config.as_ref().map(|c| c.orientation_class()),
                label: config.as_ref().and_then(|c| atlas.label(c).cloned()),
                config,
            }
        })
        .collect()
}

/// `Σ (4 − n)·C_n = 8`; for reduced curves this reads
/// `2·C2 + C3 = 8 + C5 + 2·C6 + 3·C7 + …`.
pub fn check_gon_formula(census: &FaceCensus) -> bool {
    census.curvature() == 8
}

/// Bound used to search for catalog witnesses.
/// Every realizable configuration of size 2 to 4 occurs in a curve with at
/// most this many crossings.
pub const CATALOG_BOUND: usize = 9;

/// Frozen witness curves, one per configuration.
pub const DEFAULT_WITNESSES: &str = include_str!("../data/witnesses.txt");

/// Reads a witness file (`<k> <configuration> | <signed word>`) and rebuilds
/// the catalogs from those curves alone, so each stored configuration is
/// re-checked against an actual face.
pub fn witness_catalogs(text: &str) -> Result<Vec<Catalog>, AtlasError> {
    let mut curves: BTreeMap<usize, Vec<PlaneCurve>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| AtlasError::Transcription { line: i + 1, reason };
        let (head, word) = line.split_once('|').ok_or_else(|| bad("missing '|'".into()))?;
        let k: usize = head
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("missing face size".into()))?;
        let curve = PlaneCurve::parse(word.trim()).map_err(|e| bad(e.to_string()))?;
        curves.entry(k).or_default().push(curve);
    }
    Ok((2..=4).map(|k| derive_catalog_from(k, curves.get(&k).map_or(&[][..], |v| v))).collect())
}

/// The bundled transcription, validated once.
pub fn default_atlas() -> &'static TypeAtlas {
    static ATLAS: OnceLock<TypeAtlas> = OnceLock::new();
    ATLAS.get_or_init(|| {
        let entries = parse_transcription(DEFAULT_TRANSCRIPTION).expect("bundled atlas parses");
        let catalogs = witness_catalogs(DEFAULT_WITNESSES).expect("bundled witnesses parse");
        let seeds = crate::unavoidable::default_seeds();
        bind_labels(&catalogs, &entries, &seeds).expect("bundled atlas passes every anchor")
    })
}

pub const DEFAULT_TRANSCRIPTION: &str = include_str!("../data/atlas.txt");
