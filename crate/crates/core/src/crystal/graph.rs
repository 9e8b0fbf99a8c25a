use serde::{Deserialize, Serialize};

use super::{neighbor_list, CrystalError, CrystalStructure};

/// Gaussian basis over distances: centers `dmin + k·step` for `k = 0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianConfig {
    pub dmin: f64,
    pub dmax: f64,
    pub step: f64,
    pub var: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        GaussianConfig { dmin: 0.0, dmax: 8.0, step: 0.2, var: 0.04 }
    }
}

impl GaussianConfig {
    pub fn validate(&self) -> Result<(), CrystalError> {
        if !(self.dmin < self.dmax && self.step > 0.0 && self.var > 0.0) {
            return Err(CrystalError::Invalid(format!("bad gaussian config {self:?}")));
        }
        Ok(())
    }

    /// Number of centers, `⌊(dmax − dmin)/step⌋ + 1`.
    pub fn width(&self) -> usize {
        // tolerate ratios like 8/0.2 landing a hair under the integer
        ((self.dmax - self.dmin) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.width()).map(|k| self.dmin + k as f64 * self.step).collect()
    }
}

/// `exp(−(d − μ_k)² / var)` for every center.
pub fn gaussian_expand(d: f64, cfg: &GaussianConfig) -> Vec<f64> {
    cfg.centers().into_iter().map(|mu| (-(d - mu).powi(2) / cfg.var).exp()).collect()
}

/// Neighbor-search and featurization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub cutoff: f64,
    pub max_neighbors: usize,
    pub gaussian: GaussianConfig,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { cutoff: 8.0, max_neighbors: 12, gaussian: GaussianConfig::default() }
    }
}

/// Encoder input: one node per site, one directed edge per neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalGraph {
    pub node_elements: Vec<u8>,
    /// `(src, dst)` = (center, neighbor).
    pub edges: Vec<(usize, usize)>,
    pub distances: Vec<f64>,
    /// Row-major `edges.len() × feature_width`.
    pub edge_features: Vec<f64>,
    pub feature_width: usize,
}

impl CrystalGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_feature(&self, e: usize) -> &[f64] {
        &self.edge_features[e * self.feature_width..(e + 1) * self.feature_width]
    }

    /// Relabel nodes: node `i` moves to `perm[i]`. Edge order is preserved.
    pub fn permute_nodes(&self, perm: &[usize]) -> CrystalGraph {
        let mut node_elements = vec![0; self.num_nodes()];
        for (i, &p) in perm.iter().enumerate() {
            node_elements[p] = self.node_elements[i];
        }
        CrystalGraph {
            node_elements,
            edges: self.edges.iter().map(|&(s, d)| (perm[s], perm[d])).collect(),
            distances: self.distances.clone(),
            edge_features: self.edge_features.clone(),
            feature_width: self.feature_width,
        }
    }

    /// Debug dump: `{"nodes": [Z...], "edges": [[src, dst, distance]...]}`.
    pub fn to_debug_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.node_elements,
            "edges": self.edges.iter().zip(&self.distances)
                .map(|(&(s, d), &r)| serde_json::json!([s, d, r]))
                .collect::<Vec<_>>(),
        })
    }
}

pub fn build_graph(structure: &CrystalStructure, cfg: &GraphConfig) -> Result<CrystalGraph, CrystalError> {
    cfg.gaussian.validate()?;
    let lists = neighbor_list(structure, cfg.cutoff, cfg.max_neighbors)?;
    let width = cfg.gaussian.width();
    let mut g = CrystalGraph {
        node_elements: structure.sites.iter().map(|s| s.z).collect(),
        edges: Vec::new(),
        distances: Vec::new(),
        edge_features: Vec::new(),
        feature_width: width,
    };
    for e in lists.into_iter().flatten() {
        g.edges.push((e.i, e.j));
        g.distances.push(e.distance);
        g.edge_features.extend(gaussian_expand(e.distance, &cfg.gaussian));
    }
    Ok(g)
}
