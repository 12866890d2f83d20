//! Spherical curves, their faces, half-twisted splices, reductivity and the
//! unavoidable-set machinery built on top of them.

pub mod atlas;
pub mod curve;
pub mod generators;
pub mod gon;
pub mod moves;
pub mod unavoidable;
pub mod word;

pub use atlas::{classify_faces, default_atlas, FaceLabel, FaceReport, TypeAtlas};
pub use curve::{realize, CanonicalCode, CurveError, Face, FaceCensus, PlaneCurve};
pub use gon::{GonConfiguration, OrientationClass};
pub use moves::{half_twisted_splice, reductivity, IMove, ReductivityCertificate, SpliceSite};
pub use unavoidable::{derive_r4_parts, match_pattern, CompletedPart, Pattern, PatternSet, SeedConfiguration};
pub use word::{parse_gauss, GaussWord, ParseError, Sign};
