use serde::{Deserialize, Serialize};

use super::lattice::norm;
use super::{CrystalError, CrystalStructure};

/// Hard cap on image cells enumerated per pair.
pub const MAX_IMAGE_CELLS: u64 = 1_000_000;

/// A directed periodic neighbor: site `j` shifted by `image` cells, seen from site `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborEdge {
    pub i: usize,
    pub j: usize,
    pub image: [i32; 3],
    pub distance: f64,
}

/// Distances at or below this are treated as the same point, not a neighbor.
const COINCIDENT: f64 = 1e-8;

/// Every periodic neighbor within `cutoff` of each site, nearest first, at most
/// `max_neighbors` per site.
///
/// Per site pair, image ranges are exact: along axis k the displacement
/// `Δ_k + n_k` must satisfy `|Δ_k + n_k| · w_k ≤ cutoff` where `w_k` is the
/// perpendicular cell width, so no image outside that range can be in reach.
/// Ties are ordered by `(distance, j, image)`.
pub fn neighbor_list(
    structure: &CrystalStructure,
    cutoff: f64,
    max_neighbors: usize,
) -> Result<Vec<Vec<NeighborEdge>>, CrystalError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(CrystalError::Invalid(format!("cutoff must be > 0, got {cutoff}")));
    }
    if max_neighbors == 0 {
        return Err(CrystalError::Invalid("max_neighbors must be >= 1".into()));
    }
    let lat = &structure.lattice;
    let widths = lat.perpendicular_widths();
    let reach: [f64; 3] = widths.map(|w| cutoff / w);
    let cells: u64 = reach.iter().map(|r| 2 * (r.ceil() as u64 + 1) + 1).product();
    if cells > MAX_IMAGE_CELLS {
        return Err(CrystalError::TooManyImages { cells });
    }

    let n = structure.sites.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let fi = structure.sites[i].frac;
        let mut list = Vec::new();
        for j in 0..n {
            let fj = structure.sites[j].frac;
            let delta = [fj[0] - fi[0], fj[1] - fi[1], fj[2] - fi[2]];
            let lo: [i32; 3] = std::array::from_fn(|k| (-reach[k] - delta[k]).ceil() as i32);
            let hi: [i32; 3] = std::array::from_fn(|k| (reach[k] - delta[k]).floor() as i32);
            for a in lo[0]..=hi[0] {
                for b in lo[1]..=hi[1] {
                    for c in lo[2]..=hi[2] {
                        let f = [delta[0] + a as f64, delta[1] + b as f64, delta[2] + c as f64];
                        let d = norm(lat.frac_to_cart(f));
                        if d > COINCIDENT && d <= cutoff {
                            list.push(NeighborEdge { i, j, image: [a, b, c], distance: d });
                        }
                    }
                }
            }
        }
        sort_edges(&mut list);
        list.truncate(max_neighbors);
        out.push(list);
    }
    Ok(out)
}

pub(crate) fn sort_edges(list: &mut [NeighborEdge]) {
    list.sort_by(|x, y| {
        x.distance
            .total_cmp(&y.distance)
            .then(x.j.cmp(&y.j))
            .then(x.image.cmp(&y.image))
    });
}
