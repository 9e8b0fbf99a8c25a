use serde::{Deserialize, Serialize};

use super::CrystalError;

/// Unit cell: lengths in Å, angles in degrees, and the row-vector basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Row `i` is lattice vector `i` in Cartesian Å.
    pub matrix: [[f64; 3]; 3],
}

/// `1 − cos²α − cos²β − cos²γ + 2 cosα cosβ cosγ`; the squared volume of a unit-edge cell.
pub fn volume_factor(alpha: f64, beta: f64, gamma: f64) -> f64 {
    let (ca, cb, cg) = (alpha.to_radians().cos(), beta.to_radians().cos(), gamma.to_radians().cos());
    1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg
}

/// Standard crystallographic basis: a along x, b in the xy plane.
pub fn lattice_matrix(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<[[f64; 3]; 3], CrystalError> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CrystalError::Invalid(format!("cell length {name} = {v} must be positive")));
        }
    }
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(v > 0.0 && v < 180.0) {
            return Err(CrystalError::Invalid(format!("cell angle {name} = {v} outside (0, 180)")));
        }
    }
    let vf = volume_factor(alpha, beta, gamma);
    if !(vf > 1e-10) {
        return Err(CrystalError::DegenerateCell { volume_factor: vf });
    }
    let (ca, cb) = (alpha.to_radians().cos(), beta.to_radians().cos());
    let (sg, cg) = gamma.to_radians().sin_cos();
    Ok([
        [a, 0.0, 0.0],
        [b * cg, b * sg, 0.0],
        [c * cb, c * (ca - cb * cg) / sg, c * vf.sqrt() / sg],
    ])
}

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub(crate) fn norm(u: [f64; 3]) -> f64 {
    dot(u, u).sqrt()
}

impl Lattice {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self, CrystalError> {
        let matrix = lattice_matrix(a, b, c, alpha, beta, gamma)?;
        Ok(Lattice { a, b, c, alpha, beta, gamma, matrix })
    }

    pub fn cubic(a: f64) -> Result<Self, CrystalError> {
        Self::new(a, a, a, 90.0, 90.0, 90.0)
    }

    /// Signed determinant of the basis.
    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        dot(m[0], cross(m[1], m[2]))
    }

    pub fn volume(&self) -> f64 {
        self.determinant().abs()
    }

    /// `frac · matrix`.
    pub fn frac_to_cart(&self, f: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = f[0] * m[0][k] + f[1] * m[1][k] + f[2] * m[2][k];
        }
        out
    }

    /// Distance between lattice planes perpendicular to each axis (volume over opposite face area).
    pub fn perpendicular_widths(&self) -> [f64; 3] {
        let m = &self.matrix;
        let v = self.volume();
        [v / norm(cross(m[1], m[2])), v / norm(cross(m[2], m[0])), v / norm(cross(m[0], m[1]))]
    }

    /// Shortest Cartesian distance between two fractional points under periodicity.
    ///
    /// Searches the 3×3×3 block of images around the wrapped difference, which is
    /// exact for cells whose reduced basis is not strongly skewed; used for
    /// deduplicating sites at tolerances far below any cell width.
    pub fn periodic_distance(&self, f1: [f64; 3], f2: [f64; 3]) -> f64 {
        let mut d = [0.0; 3];
        for k in 0..3 {
            let x = f2[k] - f1[k];
            d[k] = x - x.round();
        }
        let mut best = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                for l in -1..=1 {
                    let c = self.frac_to_cart([d[0] + i as f64, d[1] + j as f64, d[2] + l as f64]);
                    best = best.min(norm(c));
                }
            }
        }
        best
    }
}
