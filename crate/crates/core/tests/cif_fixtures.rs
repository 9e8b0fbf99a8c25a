use std::path::PathBuf;

use clamp_core::cifparse::{parse, parse_structure, to_structure, CifError, DEFAULT_DEDUP_TOL};
use clamp_core::crystal::{CrystalStructure, Lattice, Site};
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cif").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn count(s: &CrystalStructure, z: u8) -> usize {
    s.sites.iter().filter(|x| x.z == z).count()
}

#[test]
fn fixture_site_counts() {
    let cases = [
        ("minimal_p1.cif", 1),
        ("rocksalt.cif", 8),
        ("quoted.cif", 4),
        ("semicolon.cif", 2),
        ("uncertainty.cif", 4),
        ("partial_occupancy.cif", 2),
    ];
    for (name, n) in cases {
        let s = parse_structure(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.sites.len(), n, "{name}");
        assert!(s.sites.iter().all(|x| x.frac.iter().all(|f| (0.0..1.0).contains(f))));
    }
}

#[test]
fn rock_salt_expands_to_four_plus_four() {
    let doc = parse(&fixture("rocksalt.cif")).unwrap();
    assert_eq!(doc.values("_symmetry_equiv_pos_as_xyz").len(), 192);
    let s = to_structure(&doc, DEFAULT_DEDUP_TOL).unwrap();
    assert_eq!(count(&s, 11), 4);
    assert_eq!(count(&s, 17), 4);
    assert!((s.lattice.a - 5.6402).abs() < 1e-12);
}

#[test]
fn wurtzite_hexagonal_ops() {
    let s = parse_structure(&fixture("quoted.cif")).unwrap();
    assert_eq!(count(&s, 30), 2);
    assert_eq!(count(&s, 8), 2);
    let doc = parse(&fixture("quoted.cif")).unwrap();
    assert_eq!(doc.item("_journal_name_full").unwrap().as_str(), Some("Journal of \"Odd\" Crystals"));
    assert!(doc.item("_publ_section_title").unwrap().is_null());
}

#[test]
fn semicolon_text_kept_verbatim() {
    let doc = parse(&fixture("semicolon.cif")).unwrap();
    let text = doc.item("_publ_section_abstract").unwrap().as_str().unwrap();
    assert!(text.contains("_not_a_tag 'nor a quote"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn uncertainty_values() {
    let s = parse_structure(&fixture("uncertainty.cif")).unwrap();
    assert!((s.lattice.a - 4.056).abs() < 1e-12);
    assert!(s.sites.iter().all(|x| x.z == 13));
}

#[test]
fn partial_occupancy_is_kept_and_flagged() {
    let s = parse_structure(&fixture("partial_occupancy.cif")).unwrap();
    assert!(s.has_partial_occupancy());
    let ni = s.sites.iter().find(|x| x.z == 28).unwrap();
    assert_eq!(ni.occupancy, 0.5);
}

#[test]
fn broken_fixtures_fail_with_the_right_error() {
    assert!(parse_structure(&fixture("degenerate_cell.cif")).unwrap_err().is_degenerate_cell());
    assert!(matches!(parse_structure(&fixture("unknown_element.cif")), Err(CifError::UnknownElement(_))));
    assert!(matches!(parse_structure(&fixture("unterminated.cif")), Err(CifError::Unterminated { .. })));
}

fn p1_doc_text(lat: &Lattice, sites: &[(u8, [f64; 3])], symops: &[&str]) -> String {
    let mut t = format!(
        "data_t\n_cell_length_a {}\n_cell_length_b {}\n_cell_length_c {}\n_cell_angle_alpha {}\n_cell_angle_beta {}\n_cell_angle_gamma {}\n",
        lat.a, lat.b, lat.c, lat.alpha, lat.beta, lat.gamma
    );
    t.push_str("loop_\n_symmetry_equiv_pos_as_xyz\n");
    for op in symops {
        t.push_str(&format!("'{op}'\n"));
    }
    t.push_str("loop_\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n");
    for (z, f) in sites {
        let sym = clamp_core::elements::symbol(*z).unwrap();
        t.push_str(&format!("{sym} {:.17} {:.17} {:.17}\n", f[0], f[1], f[2]));
    }
    t
}

fn sites_strategy() -> impl Strategy<Value = Vec<(u8, [f64; 3])>> {
    prop::collection::vec((1u8..=20, prop::array::uniform3(0.0f64..1.0)), 1..6)
}

fn same_multiset(a: &CrystalStructure, b: &CrystalStructure) -> bool {
    a.sites.len() == b.sites.len()
        && a.sites.iter().all(|s| {
            b.sites.iter().any(|t| t.z == s.z && a.lattice.periodic_distance(s.frac, t.frac) < DEFAULT_DEDUP_TOL)
        })
}

const P2_OPS: [&str; 2] = ["x,y,z", "-x,-y,z+1/2"];

proptest! {
    #[test]
    fn expansion_idempotent_and_wrapped(sites in sites_strategy()) {
        let lat = Lattice::new(5.0, 6.0, 7.0, 90.0, 90.0, 90.0).unwrap();
        let s1 = parse_structure(&p1_doc_text(&lat, &sites, &P2_OPS)).unwrap();
        prop_assert!(s1.sites.iter().all(|x| x.frac.iter().all(|f| (0.0..1.0).contains(f))));
        let again: Vec<_> = s1.sites.iter().map(|x| (x.z, x.frac)).collect();
        let s2 = parse_structure(&p1_doc_text(&lat, &again, &["x,y,z"])).unwrap();
        prop_assert!(same_multiset(&s1, &s2));
    }

    #[test]
    fn dedup_is_order_independent(sites in sites_strategy(), seed in any::<u64>()) {
        let lat = Lattice::new(5.0, 6.0, 7.0, 90.0, 90.0, 90.0).unwrap();
        let mut shuffled = sites.clone();
        clamp_core::numcore::rng::SplitMix64::new(seed).shuffle(&mut shuffled);
        let a = parse_structure(&p1_doc_text(&lat, &sites, &P2_OPS)).unwrap();
        let b = parse_structure(&p1_doc_text(&lat, &shuffled, &P2_OPS)).unwrap();
        prop_assert!(same_multiset(&a, &b) && same_multiset(&b, &a));
    }

    #[test]
    fn document_round_trip(sites in sites_strategy()) {
        let lat = Lattice::new(4.5, 4.5, 9.0, 90.0, 90.0, 120.0).unwrap();
        let doc = parse(&p1_doc_text(&lat, &sites, &P2_OPS)).unwrap();
        prop_assert_eq!(parse(&doc.to_text()).unwrap(), doc);
    }
}

#[test]
fn structure_new_rejects_bad_sites() {
    let lat = Lattice::cubic(3.0).unwrap();
    assert!(CrystalStructure::new(lat.clone(), vec![]).is_err());
    assert!(CrystalStructure::new(lat.clone(), vec![Site { z: 6, frac: [1.0, 0.0, 0.0], occupancy: 1.0 }]).is_err());
    assert!(CrystalStructure::new(lat, vec![Site { z: 104, frac: [0.0; 3], occupancy: 1.0 }]).is_err());
}
