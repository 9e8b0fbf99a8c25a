use clamp_core::cifparse::parse_structure;
use clamp_core::crystal::{build_graph, neighbor_list, CrystalStructure, GraphConfig, Lattice, NeighborEdge};
use clamp_core::numcore::rng::SplitMix64;

/// Independent brute force: every image in a 7×7×7 block, plain Cartesian sums.
fn brute_force(s: &CrystalStructure, cutoff: f64) -> Vec<NeighborEdge> {
    let m = s.lattice.matrix;
    let cart = |f: [f64; 3]| -> [f64; 3] {
        std::array::from_fn(|k| f[0] * m[0][k] + f[1] * m[1][k] + f[2] * m[2][k])
    };
    let mut out = Vec::new();
    for (i, si) in s.sites.iter().enumerate() {
        let ci = cart(si.frac);
        for (j, sj) in s.sites.iter().enumerate() {
            for a in -3..=3 {
                for b in -3..=3 {
                    for c in -3..=3 {
                        let f = [sj.frac[0] + a as f64, sj.frac[1] + b as f64, sj.frac[2] + c as f64];
                        let cj = cart(f);
                        let d = ((cj[0] - ci[0]).powi(2) + (cj[1] - ci[1]).powi(2) + (cj[2] - ci[2]).powi(2)).sqrt();
                        if d > 1e-8 && d <= cutoff {
                            out.push(NeighborEdge { i, j, image: [a, b, c], distance: d });
                        }
                    }
                }
            }
        }
    }
    out
}

fn key(e: &NeighborEdge) -> (usize, usize, [i32; 3]) {
    (e.i, e.j, e.image)
}

fn random_case(rng: &mut SplitMix64) -> (CrystalStructure, f64) {
    loop {
        let cutoff = rng.uniform(2.0, 8.0);
        let lens = [rng.uniform(4.0, 9.0), rng.uniform(4.0, 9.0), rng.uniform(4.0, 9.0)];
        let ang = [rng.uniform(70.0, 110.0), rng.uniform(70.0, 110.0), rng.uniform(70.0, 110.0)];
        let Ok(lat) = Lattice::new(lens[0], lens[1], lens[2], ang[0], ang[1], ang[2]) else { continue };
        // the ±3 block covers the cutoff only if every width is at least cutoff / 2
        if lat.perpendicular_widths().iter().any(|&w| w < cutoff / 2.0) {
            continue;
        }
        let n = 1 + rng.below(6) as usize;
        let sites: Vec<(u8, [f64; 3])> =
            (0..n).map(|_| (1 + rng.below(30) as u8, [rng.next_f64(), rng.next_f64(), rng.next_f64()])).collect();
        return (CrystalStructure::from_wrapped(lat, sites).unwrap(), cutoff);
    }
}

#[test]
fn matches_brute_force_on_random_triclinic_cells() {
    let mut rng = SplitMix64::new(0xC0FFEE);
    for case in 0..100 {
        let (s, cutoff) = random_case(&mut rng);
        let mut fast: Vec<NeighborEdge> = neighbor_list(&s, cutoff, usize::MAX).unwrap().into_iter().flatten().collect();
        let mut slow = brute_force(&s, cutoff);
        fast.sort_by_key(key);
        slow.sort_by_key(key);
        assert_eq!(fast.len(), slow.len(), "case {case}");
        for (a, b) in fast.iter().zip(&slow) {
            assert_eq!(key(a), key(b), "case {case}");
            assert!((a.distance - b.distance).abs() <= 1e-9, "case {case}");
        }
    }
}

#[test]
fn symmetric_before_truncation() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..20 {
        let (s, cutoff) = random_case(&mut rng);
        let all: Vec<NeighborEdge> = neighbor_list(&s, cutoff, usize::MAX).unwrap().into_iter().flatten().collect();
        for e in &all {
            let back = [-e.image[0], -e.image[1], -e.image[2]];
            let m = all.iter().find(|r| r.i == e.j && r.j == e.i && r.image == back).expect("reverse edge");
            assert!((m.distance - e.distance).abs() < 1e-9);
        }
    }
}

#[test]
fn translation_invariant_distances() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..20 {
        let (s, cutoff) = random_case(&mut rng);
        let shift = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
        let moved = CrystalStructure::from_wrapped(
            s.lattice.clone(),
            s.sites.iter().map(|x| (x.z, std::array::from_fn(|k| x.frac[k] + shift[k]))),
        )
        .unwrap();
        let dists = |st: &CrystalStructure| {
            let mut d: Vec<f64> =
                neighbor_list(st, cutoff, usize::MAX).unwrap().into_iter().flatten().map(|e| e.distance).collect();
            d.sort_by(f64::total_cmp);
            d
        };
        let (a, b) = (dists(&s), dists(&moved));
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}

#[test]
fn sorted_capped_and_within_cutoff() {
    let mut rng = SplitMix64::new(99);
    for _ in 0..20 {
        let (s, cutoff) = random_case(&mut rng);
        for list in neighbor_list(&s, cutoff, 12).unwrap() {
            assert!(list.len() <= 12);
            assert!(list.iter().all(|e| e.distance <= cutoff));
            assert!(list.windows(2).all(|w| w[0].distance <= w[1].distance));
        }
    }
}

const ROCK_SALT: &str = "data_nacl
_cell_length_a 5.64
_cell_length_b 5.64
_cell_length_c 5.64
_cell_angle_alpha 90
_cell_angle_beta 90
_cell_angle_gamma 90
loop_
_atom_site_type_symbol
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
Na 0 0 0
Na 0 0.5 0.5
Na 0.5 0 0.5
Na 0.5 0.5 0
Cl 0.5 0 0
Cl 0 0.5 0
Cl 0 0 0.5
Cl 0.5 0.5 0.5
";

#[test]
fn rock_salt_first_shell_is_six_chlorines() {
    let s = parse_structure(ROCK_SALT).unwrap();
    let lists = neighbor_list(&s, 8.0, 12).unwrap();
    for (i, list) in lists.iter().enumerate() {
        if s.sites[i].z != 11 {
            continue;
        }
        for e in &list[..6] {
            assert_eq!(s.sites[e.j].z, 17);
            assert!((e.distance - 2.82).abs() < 1e-9);
        }
        assert!(list[6].distance > 2.82 + 1e-6);
    }
}

#[test]
fn rock_salt_graph_has_six_out_edges_per_node() {
    let s = parse_structure(ROCK_SALT).unwrap();
    let cfg = GraphConfig { cutoff: 3.0, max_neighbors: 12, ..GraphConfig::default() };
    let g = build_graph(&s, &cfg).unwrap();
    assert_eq!(g.num_nodes(), 8);
    for i in 0..8 {
        assert_eq!(g.edges.iter().filter(|e| e.0 == i).count(), 6);
    }
    assert!(g.edge_features.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn permuted_sites_give_isomorphic_graph() {
    let s = parse_structure(ROCK_SALT).unwrap();
    let cfg = GraphConfig { cutoff: 4.5, ..GraphConfig::default() };
    let mut rev = s.sites.clone();
    rev.reverse();
    let p = CrystalStructure::new(s.lattice.clone(), rev).unwrap();
    let sig = |st: &CrystalStructure| {
        let g = build_graph(st, &cfg).unwrap();
        let mut v: Vec<(u8, u8, i64)> = g
            .edges
            .iter()
            .zip(&g.distances)
            .map(|(&(a, b), &d)| (g.node_elements[a], g.node_elements[b], (d * 1e6).round() as i64))
            .collect();
        v.sort();
        v
    };
    assert_eq!(sig(&s), sig(&p));
}
