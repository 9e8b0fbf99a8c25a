use serde::{Deserialize, Serialize};

use super::{CrystalError, Lattice};
use crate::elements::MAX_Z;

/// One atomic site in fractional coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Atomic number, 1–103.
    pub z: u8,
    pub frac: [f64; 3],
    pub occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalStructure {
    pub lattice: Lattice,
    pub sites: Vec<Site>,
}

/// Wrap a fractional coordinate into [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if w >= 1.0 { 0.0 } else { w }
}

impl CrystalStructure {
    pub fn new(lattice: Lattice, sites: Vec<Site>) -> Result<Self, CrystalError> {
        if sites.is_empty() {
            return Err(CrystalError::NoSites);
        }
        for (i, s) in sites.iter().enumerate() {
            if s.z == 0 || s.z > MAX_Z {
                return Err(CrystalError::Invalid(format!("site {i}: atomic number {} outside 1..=103", s.z)));
            }
            if !s.frac.iter().all(|f| (0.0..1.0).contains(f)) {
                return Err(CrystalError::Invalid(format!("site {i}: fractional coords {:?} not in [0,1)", s.frac)));
            }
            if !(s.occupancy > 0.0 && s.occupancy <= 1.0) {
                return Err(CrystalError::Invalid(format!("site {i}: occupancy {} not in (0,1]", s.occupancy)));
            }
        }
        Ok(CrystalStructure { lattice, sites })
    }

    /// Build from unwrapped coordinates, wrapping each into [0, 1).
    pub fn from_wrapped(lattice: Lattice, sites: impl IntoIterator<Item = (u8, [f64; 3])>) -> Result<Self, CrystalError> {
        let sites = sites
            .into_iter()
            .map(|(z, f)| Site { z, frac: f.map(wrap_unit), occupancy: 1.0 })
            .collect();
        Self::new(lattice, sites)
    }

    pub fn cart(&self, i: usize) -> [f64; 3] {
        self.lattice.frac_to_cart(self.sites[i].frac)
    }

    pub fn has_partial_occupancy(&self) -> bool {
        self.sites.iter().any(|s| s.occupancy < 1.0)
    }

    /// Sorted list of atomic numbers.
    pub fn composition(&self) -> Vec<u8> {
        let mut z: Vec<u8> = self.sites.iter().map(|s| s.z).collect();
        z.sort_unstable();
        z
    }
}
