use crate::crystal::CrystalGraph;
use crate::elements::MAX_Z;
use crate::numcore::{NumError, Scalar, Tape, Tensor, Var};

/// What follows the residual add in each conv layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvNorm {
    #[default]
    Layer,
    /// No normalization; the layer-norm tensors are kept but unused.
    Identity,
}

/// One gated graph convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<P> {
    /// Gate weights, `(2·d_v + K) × d_v`.
    pub w_f: P,
    /// Core weights, `(2·d_v + K) × d_v`.
    pub w_s: P,
    pub b_f: P,
    pub b_s: P,
    pub norm_gain: P,
    pub norm_bias: P,
}

/// Crystal tower parameters. `P` is a tensor, a tape variable, or a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CgcnnParams<P> {
    /// `(MAX_Z + 1) × d_v`, indexed by atomic number.
    pub element_embedding: P,
    pub layers: Vec<ConvLayer<P>>,
    pub norm: ConvNorm,
}

impl<P> CgcnnParams<P> {
    /// Apply `f` to every tensor slot with its stable name, in a fixed order.
    pub fn map<'a, Q>(&'a self, prefix: &str, f: &mut impl FnMut(&str, &'a P) -> Q) -> CgcnnParams<Q> {
        CgcnnParams {
            element_embedding: f(&format!("{prefix}element_embedding"), &self.element_embedding),
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(t, l)| {
                    let p = format!("{prefix}conv{t}.");
                    ConvLayer {
                        w_f: f(&format!("{p}w_f"), &l.w_f),
                        w_s: f(&format!("{p}w_s"), &l.w_s),
                        b_f: f(&format!("{p}b_f"), &l.b_f),
                        b_s: f(&format!("{p}b_s"), &l.b_s),
                        norm_gain: f(&format!("{p}norm_gain"), &l.norm_gain),
                        norm_bias: f(&format!("{p}norm_bias"), &l.norm_bias),
                    }
                })
                .collect(),
            norm: self.norm,
        }
    }

    /// Mutable visit in the same order as [`CgcnnParams::map`].
    pub fn for_each_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut P)) {
        f(&mut self.element_embedding);
        for l in &mut self.layers {
            for p in [&mut l.w_f, &mut l.w_s, &mut l.b_f, &mut l.b_s, &mut l.norm_gain, &mut l.norm_bias] {
                f(p);
            }
        }
    }
}

impl CgcnnParams<Vec<usize>> {
    /// Shape skeleton for `layers` conv layers of width `d_v` over `k`-wide edge features.
    pub fn shapes(d_v: usize, layers: usize, k: usize) -> Self {
        let fan = 2 * d_v + k;
        CgcnnParams {
            element_embedding: vec![MAX_Z as usize + 1, d_v],
            layers: (0..layers)
                .map(|_| ConvLayer {
                    w_f: vec![fan, d_v],
                    w_s: vec![fan, d_v],
                    b_f: vec![d_v],
                    b_s: vec![d_v],
                    norm_gain: vec![d_v],
                    norm_bias: vec![d_v],
                })
                .collect(),
            norm: ConvNorm::Layer,
        }
    }
}

impl<T: Scalar> CgcnnParams<Tensor<T>> {
    pub fn dim(&self) -> usize {
        self.element_embedding.shape()[1]
    }

    /// Edge feature width the conv weights expect.
    pub fn edge_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w_f.shape()[0] - 2 * self.dim())
    }
}

/// Stack graphs into one disjoint union and run the tower; returns `B × d_v`.
pub fn cgcnn_forward<T: Scalar>(
    tape: &mut Tape<T>,
    p: &CgcnnParams<Var>,
    graphs: &[&CrystalGraph],
) -> Result<Var, NumError> {
    if graphs.is_empty() {
        return Err(NumError::Invalid("cgcnn_forward: no graphs".into()));
    }
    let d_v = tape.shape(p.element_embedding)[1];
    let width = graphs[0].feature_width;
    let mut elements = Vec::new();
    let mut owner = Vec::new();
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    let mut feats = Vec::new();
    for (b, g) in graphs.iter().enumerate() {
        if g.feature_width != width {
            return Err(NumError::Shape {
                op: "cgcnn_forward",
                detail: format!("edge width {} vs {}", g.feature_width, width),
            });
        }
        if g.num_nodes() == 0 {
            return Err(NumError::Invalid(format!("cgcnn_forward: graph {b} has no nodes")));
        }
        let base = elements.len();
        elements.extend(g.node_elements.iter().map(|&z| z as usize));
        owner.extend(std::iter::repeat_n(b, g.num_nodes()));
        for &(s, d) in &g.edges {
            src.push(base + s);
            dst.push(base + d);
        }
        feats.extend_from_slice(&g.edge_features);
    }
    let n = elements.len();
    let mut v = tape.embedding_lookup(p.element_embedding, elements)?;
    let u = (!src.is_empty()).then(|| tape.constant(Tensor::from_f64(&[src.len(), width], &feats).unwrap()));
    for layer in &p.layers {
        let mut next = v;
        if let Some(u) = u {
            let vi = tape.gather_rows(v, src.clone())?;
            let vj = tape.gather_rows(v, dst.clone())?;
            let z = tape.concat(&[vi, vj, u], 1)?;
            let gate = tape.matmul(z, layer.w_f)?;
            let gate = tape.add(gate, layer.b_f)?;
            let gate = tape.sigmoid(gate)?;
            let core = tape.matmul(z, layer.w_s)?;
            let core = tape.add(core, layer.b_s)?;
            let core = tape.softplus(core)?;
            let msg = tape.mul(gate, core)?;
            let zeros = tape.constant(Tensor::zeros(&[n, d_v]));
            let agg = tape.scatter_add_rows(zeros, msg, src.clone())?;
            next = tape.add(v, agg)?;
        }
        v = match p.norm {
            ConvNorm::Layer => tape.layer_norm_rows(next, layer.norm_gain, layer.norm_bias)?,
            ConvNorm::Identity => next,
        };
    }
    mean_pool(tape, v, &owner, graphs.len())
}

/// Mean of node rows per owning graph.
fn mean_pool<T: Scalar>(tape: &mut Tape<T>, v: Var, owner: &[usize], groups: usize) -> Result<Var, NumError> {
    let d = tape.shape(v)[1];
    let mut counts = vec![0.0; groups];
    for &o in owner {
        counts[o] += 1.0;
    }
    let zeros = tape.constant(Tensor::zeros(&[groups, d]));
    let sums = tape.scatter_add_rows(zeros, v, owner.to_vec())?;
    let inv: Vec<f64> = counts.iter().map(|c| 1.0 / c).collect();
    let inv = tape.constant(Tensor::from_f64(&[groups, 1], &inv)?);
    tape.mul(sums, inv)
}

/// Crystal feature vector (`d_v`) for one graph.
pub fn cgcnn_encode<T: Scalar>(graph: &CrystalGraph, params: &CgcnnParams<Tensor<T>>) -> Result<Vec<T>, NumError> {
    let mut tape = Tape::new();
    let p = params.map("", &mut |_, t| tape.constant(t.clone()));
    let out = cgcnn_forward(&mut tape, &p, &[graph])?;
    Ok(tape.value(out).data().to_vec())
}
