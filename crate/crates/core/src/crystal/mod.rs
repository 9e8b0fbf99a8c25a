//! Lattice geometry, periodic neighbor search and crystal graph construction.

mod graph;
mod lattice;
mod neighbors;
mod structure;

pub use graph::{build_graph, gaussian_expand, CrystalGraph, GaussianConfig, GraphConfig};
pub use lattice::{lattice_matrix, volume_factor, Lattice};
pub use neighbors::{neighbor_list, NeighborEdge, MAX_IMAGE_CELLS};
pub use structure::{wrap_unit, CrystalStructure, Site};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CrystalError {
    #[error("degenerate cell (volume factor {volume_factor:.3e} <= 0)")]
    DegenerateCell { volume_factor: f64 },
    #[error("structure has no sites")]
    NoSites,
    #[error("neighbor search would enumerate {cells} image cells")]
    TooManyImages { cells: u64 },
    #[error("{0}")]
    Invalid(String),
}
