//! Shared test helpers and straight-line f64 oracles for the two towers.
#![allow(dead_code)]

use clamp_core::crystal::{CrystalGraph, CrystalStructure, GaussianConfig, GraphConfig, Lattice, Site};
use clamp_core::encoders::{init_named, CgcnnParams, ConvNorm, TextEncoderParams};
use clamp_core::numcore::rng::SplitMix64;
use clamp_core::numcore::Tensor;

pub fn init_cgcnn(d_v: usize, t: usize, k: usize, seed: u64) -> CgcnnParams<Tensor<f64>> {
    CgcnnParams::shapes(d_v, t, k).map("cgcnn.", &mut |name, s| init_named(name, s, seed).unwrap())
}

pub fn init_text(vocab: usize, max_len: usize, d_m: usize, l: usize, h: usize, seed: u64) -> TextEncoderParams<Tensor<f64>> {
    TextEncoderParams::shapes(vocab, max_len, d_m, l, h).map("text.", &mut |name, s| init_named(name, s, seed).unwrap())
}

/// Perturb every tensor so zero biases and unit gains do not hide mistakes.
pub fn jitter(t: &Tensor<f64>, rng: &mut SplitMix64) -> Tensor<f64> {
    let data = t.data().iter().map(|v| v + rng.uniform(-0.3, 0.3)).collect();
    Tensor::new(t.shape().to_vec(), data).unwrap()
}


pub fn mat(t: &Tensor<f64>) -> Vec<Vec<f64>> {
    let (r, _) = t.dims2().unwrap();
    (0..r).map(|i| t.row(i).to_vec()).collect()
}

pub fn vecmat(x: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
    let cols = w[0].len();
    (0..cols).map(|c| x.iter().zip(w).map(|(a, row)| a * row[c]).sum()).collect()
}

pub fn layer_norm(x: &[f64], g: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    x.iter().enumerate().map(|(i, v)| (v - mu) / (var + 1e-5).sqrt() * g[i] + b[i]).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softplus(x: f64) -> f64 {
    (1.0 + x.exp()).ln()
}

pub fn cgcnn_oracle(g: &CrystalGraph, p: &CgcnnParams<Tensor<f64>>) -> Vec<f64> {
    let emb = mat(&p.element_embedding);
    let mut v: Vec<Vec<f64>> = g.node_elements.iter().map(|&z| emb[z as usize].clone()).collect();
    for l in &p.layers {
        let (wf, ws) = (mat(&l.w_f), mat(&l.w_s));
        let mut next = v.clone();
        for (e, &(i, j)) in g.edges.iter().enumerate() {
            let z: Vec<f64> = v[i].iter().chain(&v[j]).chain(g.edge_feature(e)).copied().collect();
            let gate = vecmat(&z, &wf);
            let core = vecmat(&z, &ws);
            for c in 0..next[i].len() {
                next[i][c] += sigmoid(gate[c] + l.b_f.data()[c]) * softplus(core[c] + l.b_s.data()[c]);
            }
        }
        v = match p.norm {
            ConvNorm::Layer => next.iter().map(|r| layer_norm(r, l.norm_gain.data(), l.norm_bias.data())).collect(),
            ConvNorm::Identity => next,
        };
    }
    let n = v.len() as f64;
    (0..v[0].len()).map(|c| v.iter().map(|r| r[c]).sum::<f64>() / n).collect()
}

pub fn text_oracle(ids: &[usize], eos: usize, p: &TextEncoderParams<Tensor<f64>>) -> Vec<f64> {
    let tok = mat(&p.token_embedding);
    let pos = mat(&p.positional_embedding);
    let d = tok[0].len();
    let dh = d / p.heads;
    let n = eos + 1;
    let mut x: Vec<Vec<f64>> = (0..n).map(|i| tok[ids[i]].iter().zip(&pos[i]).map(|(a, b)| a + b).collect()).collect();
    for b in &p.blocks {
        let a: Vec<Vec<f64>> = x.iter().map(|r| layer_norm(r, b.norm1_gain.data(), b.norm1_bias.data())).collect();
        let q: Vec<Vec<f64>> = a.iter().map(|r| vecmat(r, &mat(&b.w_q))).collect();
        let k: Vec<Vec<f64>> = a.iter().map(|r| vecmat(r, &mat(&b.w_k))).collect();
        let v: Vec<Vec<f64>> = a.iter().map(|r| vecmat(r, &mat(&b.w_v))).collect();
        let mut att = vec![vec![0.0; d]; n];
        for hd in 0..p.heads {
            let cols = hd * dh..(hd + 1) * dh;
            for i in 0..n {
                let s: Vec<f64> = (0..=i)
                    .map(|j| cols.clone().map(|c| q[i][c] * k[j][c]).sum::<f64>() / (dh as f64).sqrt())
                    .collect();
                let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = s.iter().map(|v| (v - m).exp()).sum();
                for (j, sj) in s.iter().enumerate() {
                    let w = (sj - m).exp() / z;
                    for c in cols.clone() {
                        att[i][c] += w * v[j][c];
                    }
                }
            }
        }
        let wo = mat(&b.w_o);
        for i in 0..n {
            let o = vecmat(&att[i], &wo);
            for c in 0..d {
                x[i][c] += o[c];
            }
            let m = layer_norm(&x[i], b.norm2_gain.data(), b.norm2_bias.data());
            let h: Vec<f64> = vecmat(&m, &mat(&b.w_1))
                .iter()
                .zip(b.b_1.data())
                .map(|(u, bb)| {
                    let u = u + bb;
                    u * sigmoid(1.702 * u)
                })
                .collect();
            let y = vecmat(&h, &mat(&b.w_2));
            for c in 0..d {
                x[i][c] += y[c] + b.b_2.data()[c];
            }
        }
    }
    layer_norm(&x[eos], p.final_gain.data(), p.final_bias.data())
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

pub fn two_node_graph() -> CrystalGraph {
    CrystalGraph {
        node_elements: vec![8, 30],
        edges: vec![(0, 1)],
        distances: vec![2.0],
        edge_features: vec![0.6],
        feature_width: 1,
    }
}

pub fn random_structure(rng: &mut SplitMix64, n: usize) -> CrystalStructure {
    let lat = Lattice::new(rng.uniform(3.5, 5.0), rng.uniform(3.5, 5.0), rng.uniform(3.5, 5.0), 90.0, 95.0, 90.0).unwrap();
    let sites = (0..n)
        .map(|_| Site {
            z: 1 + rng.below(40) as u8,
            frac: [rng.next_f64(), rng.next_f64(), rng.next_f64()],
            occupancy: 1.0,
        })
        .collect();
    CrystalStructure::new(lat, sites).unwrap()
}

pub fn small_graph_config() -> GraphConfig {
    GraphConfig { cutoff: 4.0, max_neighbors: 6, gaussian: GaussianConfig { dmin: 0.0, dmax: 4.0, step: 0.5, var: 0.25 } }
}


/// Gaussian basis whose features stay above ~0.02 inside the cutoff, so every
/// conv weight has a gradient well above finite-difference roundoff.
pub fn wide_graph_config() -> GraphConfig {
    GraphConfig { cutoff: 4.0, max_neighbors: 6, gaussian: GaussianConfig { dmin: 0.0, dmax: 4.0, step: 1.0, var: 4.0 } }
}
