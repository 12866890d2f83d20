mod support;

use std::collections::BTreeSet;

use spherical::atlas::{
    bind_labels, classify_faces, default_atlas, parse_transcription, witness_catalogs, Anchor, AtlasError,
    DEFAULT_TRANSCRIPTION, DEFAULT_WITNESSES,
};
use spherical::generators::torus_projection;
use spherical::moves::reductivity;
use spherical::unavoidable::{
    default_seeds, derive_r4_parts, match_pattern, verify_unavoidable, Pattern, PatternSet,
};
use spherical::PlaneCurve;

const GOLDEN: &str = include_str!("../data/r4_parts.golden");

fn reduced_up_to(n: usize) -> Vec<PlaneCurve> {
    support::curves_up_to(n).into_iter().filter(|c| c.is_reduced()).collect()
}

#[test]
fn derivation_is_deterministic_and_matches_golden() {
    let seeds = default_seeds();
    let first = derive_r4_parts(default_atlas(), &seeds).unwrap().to_golden();
    let second = derive_r4_parts(default_atlas(), &seeds).unwrap().to_golden();
    assert_eq!(first, second);
    assert_eq!(first, GOLDEN);
}

#[test]
fn swapping_c_and_d_is_caught_by_part_count() {
    let mut entries = parse_transcription(DEFAULT_TRANSCRIPTION).unwrap();
    for e in entries.iter_mut().filter(|e| e.label.k == 3) {
        match e.label.name.as_str() {
            "C" => e.label.name = "D".into(),
            "D" => e.label.name = "C".into(),
            _ => {}
        }
    }
    let catalogs = witness_catalogs(DEFAULT_WITNESSES).unwrap();
    match bind_labels(&catalogs, &entries, &default_seeds()) {
        Err(AtlasError::BindingConflict { anchor: Anchor::PartCount, detail }) => {
            assert!(detail.contains("25 parts"), "{detail}")
        }
        other => panic!("expected a part-count conflict, got {other:?}"),
    }
}

#[test]
fn part_quads_have_the_expected_orientation_classes() {
    let d = derive_r4_parts(default_atlas(), &default_seeds()).unwrap();
    let digits = |seed: &str| -> BTreeSet<char> {
        d.parts
            .iter()
            .filter(|p| p.seed == seed)
            .flat_map(|p| p.labels.iter().filter(|l| l.k == 4).map(|l| l.name.chars().next().unwrap()))
            .collect()
    };
    assert!(digits("u4").is_subset(&BTreeSet::from(['2', '4'])));
    assert!(digits("u5").is_subset(&BTreeSet::from(['1', '2', '3'])));
    assert!(digits("u3").is_empty());
}

#[test]
fn small_faces_are_unavoidable_for_reduced_curves() {
    let report = verify_unavoidable(&PatternSet::small_faces(), reduced_up_to(7), |_| true, default_atlas());
    assert!(report.holds(), "{:?}", report.counterexamples);
    assert!(report.checked > 0);
}

#[test]
fn seed_shapes_are_unavoidable_for_reduced_curves() {
    let set = PatternSet::seed_shapes(&default_seeds());
    let report = verify_unavoidable(&set, reduced_up_to(7), |_| true, default_atlas());
    assert!(report.holds(), "{:?}", report.counterexamples);
}

#[test]
fn high_reductivity_curves_have_many_trigons() {
    let atlas = default_atlas();
    let high: Vec<PlaneCurve> =
        reduced_up_to(8).into_iter().filter(|c| reductivity(c, 4).unwrap().r >= 3).collect();
    assert!(!high.is_empty());
    let report = verify_unavoidable(&PatternSet::trigons(), high.clone(), |_| true, atlas);
    assert!(report.holds());
    assert_eq!(report.checked, high.len());
    for c in &high {
        assert!(c.census().get(3) >= 8, "{} has {} trigons", c.canonical(), c.census().get(3));
    }
}

#[test]
fn curves_without_any_part_have_reductivity_at_most_three() {
    let atlas = default_atlas();
    let set = PatternSet::r4(&derive_r4_parts(atlas, &default_seeds()).unwrap());
    let mut without = 0;
    for c in reduced_up_to(7) {
        if !set.patterns.iter().any(|p| match_pattern(&c, p, atlas).matched) {
            without += 1;
            assert!(reductivity(&c, 4).unwrap().r <= 3, "{}", c.canonical());
        }
    }
    assert!(without > 0);
}

#[test]
fn simple_matches() {
    let atlas = default_atlas();
    let t34 = torus_projection(3, 4).unwrap();
    let b = Pattern::Face { size: 3, labels: Some(BTreeSet::from(["B".to_string()])) };
    assert!(match_pattern(&t34, &b, atlas).matched);
    let a = Pattern::Face { size: 3, labels: Some(BTreeSet::from(["A".to_string()])) };
    assert!(!match_pattern(&t34, &a, atlas).matched);
    let kink = PlaneCurve::parse("1+ 1+").unwrap();
    let parts = derive_r4_parts(atlas, &default_seeds()).unwrap();
    assert!(parts.parts.iter().all(|p| !match_pattern(&kink, &Pattern::Part(p.clone()), atlas).matched));
    assert!(classify_faces(&kink, atlas).iter().all(|r| r.label.is_none()));
}
