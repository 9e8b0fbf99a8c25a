use clamp_core::numcore::rng::SplitMix64;
use clamp_core::numcore::{finite_diff_check, NumError, OpKind, Tape, Tensor, Var};
use proptest::prelude::*;

fn rand_tensor(rng: &mut SplitMix64, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_f64(shape, &(0..n).map(|_| rng.uniform(lo, hi)).collect::<Vec<_>>()).unwrap()
}

/// Reduce any node to a scalar through a fixed random weighting so every
/// output element contributes a distinct coefficient.
fn weighted_sum(tape: &mut Tape<f64>, y: Var, seed: u64) -> Result<Var, NumError> {
    let shape = tape.shape(y).to_vec();
    let mut rng = SplitMix64::new(seed);
    let w = tape.constant(rand_tensor(&mut rng, &shape, -1.0, 1.0));
    let p = tape.mul(y, w)?;
    tape.sum(p, None)
}

/// One randomized finite-difference check of `kind`; returns the max relative error.
fn check_op(kind: OpKind, seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let r = 1 + rng.below(8) as usize;
    let c = 1 + rng.below(8) as usize;
    let k = 1 + rng.below(8) as usize;
    let any = |rng: &mut SplitMix64, s: &[usize]| rand_tensor(rng, s, -2.0, 2.0);
    let idx = |rng: &mut SplitMix64, n: usize, bound: usize| -> Vec<usize> {
        (0..n).map(|_| rng.below(bound as u64) as usize).collect()
    };
    let ws = seed ^ 0xABCD;
    let (params, f): (Vec<Tensor<f64>>, Box<dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var, NumError>>) = match kind {
        OpKind::Add => (vec![any(&mut rng, &[r, c]), any(&mut rng, &[c])], Box::new(move |t, v| { let y = t.add(v[0], v[1])?; weighted_sum(t, y, ws) })),
        OpKind::Sub => (vec![any(&mut rng, &[r, c]), any(&mut rng, &[r, 1])], Box::new(move |t, v| { let y = t.sub(v[0], v[1])?; weighted_sum(t, y, ws) })),
        OpKind::Mul => (vec![any(&mut rng, &[r, c]), any(&mut rng, &[1, c])], Box::new(move |t, v| { let y = t.mul(v[0], v[1])?; weighted_sum(t, y, ws) })),
        OpKind::MatMul => (vec![any(&mut rng, &[r, k]), any(&mut rng, &[k, c])], Box::new(move |t, v| { let y = t.matmul(v[0], v[1])?; weighted_sum(t, y, ws) })),
        OpKind::RowSoftmax => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.row_softmax(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::RowLogSoftmax => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.row_log_softmax(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::Sigmoid => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.sigmoid(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::Softplus => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.softplus(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::Tanh => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.tanh(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::Relu => {
            // keep inputs away from the kink
            let x = rand_tensor(&mut rng, &[r, c], 0.1, 2.0);
            let sign = rand_tensor(&mut rng, &[r, c], -1.0, 1.0).map(|s| if s < 0.0 { -1.0 } else { 1.0 });
            let x = Tensor::new(x.shape().to_vec(), x.data().iter().zip(sign.data()).map(|(a, b)| a * b).collect()).unwrap();
            (vec![x], Box::new(move |t, v| { let y = t.relu(v[0])?; weighted_sum(t, y, ws) }))
        }
        OpKind::Exp => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.exp(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::Log => (vec![rand_tensor(&mut rng, &[r, c], 0.2, 3.0)], Box::new(move |t, v| { let y = t.log(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::Sum => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.sum(v[0], Some(0))?; weighted_sum(t, y, ws) })),
        OpKind::Mean => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.mean(v[0], Some(1))?; weighted_sum(t, y, ws) })),
        OpKind::Concat => (vec![any(&mut rng, &[r, c]), any(&mut rng, &[r, k])], Box::new(move |t, v| { let y = t.concat(&[v[0], v[1]], 1)?; weighted_sum(t, y, ws) })),
        OpKind::GatherRows => {
            let ix = idx(&mut rng, k, r);
            (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.gather_rows(v[0], ix.clone())?; weighted_sum(t, y, ws) }))
        }
        OpKind::ScatterAddRows => {
            let ix = idx(&mut rng, k, r);
            (vec![any(&mut rng, &[r, c]), any(&mut rng, &[k, c])], Box::new(move |t, v| { let y = t.scatter_add_rows(v[0], v[1], ix.clone())?; weighted_sum(t, y, ws) }))
        }
        OpKind::L2NormalizeRows => (vec![rand_tensor(&mut rng, &[r, c], 0.3, 2.0)], Box::new(move |t, v| { let y = t.l2_normalize_rows(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::LayerNormRows => {
            let c = c.max(2);
            (vec![any(&mut rng, &[r, c]), any(&mut rng, &[c]), any(&mut rng, &[c])], Box::new(move |t, v| { let y = t.layer_norm_rows(v[0], v[1], v[2])?; weighted_sum(t, y, ws) }))
        }
        OpKind::EmbeddingLookup => {
            let ix = idx(&mut rng, k, r);
            (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.embedding_lookup(v[0], ix.clone())?; weighted_sum(t, y, ws) }))
        }
        OpKind::MaskedFill => {
            let mask = rand_tensor(&mut rng, &[r, c], -1.0, 1.0).map(|m| if m < 0.0 { -8.0 } else { 0.0 });
            (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| {
                let m = t.constant(mask.clone());
                let y = t.masked_fill(v[0], m)?;
                let y = t.row_softmax(y)?;
                weighted_sum(t, y, ws)
            }))
        }
        OpKind::CrossEntropyRows => {
            let targets = idx(&mut rng, r, c);
            (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.cross_entropy_rows(v[0], targets.clone())?; weighted_sum(t, y, ws) }))
        }
        OpKind::Transpose => (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.transpose(v[0])?; weighted_sum(t, y, ws) })),
        OpKind::NarrowCols => {
            let start = rng.below(c as u64) as usize;
            let len = 1 + rng.below((c - start) as u64) as usize;
            (vec![any(&mut rng, &[r, c])], Box::new(move |t, v| { let y = t.narrow_cols(v[0], start, len)?; weighted_sum(t, y, ws) }))
        }
    };
    finite_diff_check(f, &params, 1e-5).unwrap_or_else(|e| panic!("{kind:?}: {e}"))
}

#[test]
fn every_op_matches_central_differences() {
    for kind in OpKind::ALL {
        for seed in 0..10u64 {
            let err = check_op(kind, seed * 7919 + 1);
            assert!(err < 1e-4, "{kind:?} seed {seed}: relative error {err:.3e}");
        }
    }
}

#[test]
fn reductions_to_scalar() {
    let mut rng = SplitMix64::new(1);
    let x = rand_tensor(&mut rng, &[3, 4], -1.0, 1.0);
    for mean in [false, true] {
        let err = finite_diff_check(
            |t, v| {
                let e = t.exp(v[0])?;
                if mean { t.mean(e, None) } else { t.sum(e, None) }
            },
            std::slice::from_ref(&x),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6);
    }
}

proptest! {
    #[test]
    fn normalized_rows_are_unit(rows in 1usize..6, cols in 1usize..8, seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let x = rand_tensor(&mut rng, &[rows, cols], -5.0, 5.0);
        prop_assume!((0..rows).all(|i| x.row(i).iter().any(|v| v.abs() > 1e-6)));
        let mut t = Tape::new();
        let v = t.constant(x);
        let y = t.l2_normalize_rows(v).unwrap();
        for i in 0..rows {
            let n: f64 = t.value(y).row(i).iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant(cols in 1usize..9, shift in -50.0f64..50.0, seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let x = rand_tensor(&mut rng, &[3, cols], -10.0, 10.0);
        let shifted = x.map(|v| v + shift);
        let mut t = Tape::new();
        let a = t.constant(x);
        let b = t.constant(shifted);
        let sa = t.row_softmax(a).unwrap();
        let sb = t.row_softmax(b).unwrap();
        for i in 0..3 {
            let s: f64 = t.value(sa).row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
        }
        prop_assert!(t.value(sa).max_abs_diff(t.value(sb)) < 1e-6);
    }

    #[test]
    fn backward_is_additive(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let x = rand_tensor(&mut rng, &[4, 3], -1.0, 1.0);
        let grad = |which: u8| {
            let mut t = Tape::new();
            let v = t.leaf(x.clone());
            let f = |t: &mut Tape<f64>| { let s = t.tanh(v).unwrap(); t.sum(s, None).unwrap() };
            let g = |t: &mut Tape<f64>| { let e = t.row_softmax(v).unwrap(); let p = t.mul(e, v).unwrap(); t.sum(p, None).unwrap() };
            let out = match which {
                0 => f(&mut t),
                1 => g(&mut t),
                _ => { let a = f(&mut t); let b = g(&mut t); t.add(a, b).unwrap() }
            };
            t.backward(out).unwrap().get(v).unwrap().clone()
        };
        let (gf, gg, gs) = (grad(0), grad(1), grad(2));
        for i in 0..gs.numel() {
            prop_assert!((gs.data()[i] - gf.data()[i] - gg.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_sequences_are_bit_identical(seed in any::<u64>()) {
        let run = || {
            let mut rng = SplitMix64::new(seed);
            let a = rand_tensor(&mut rng, &[5, 4], -1.0, 1.0).cast::<f32>();
            let b = rand_tensor(&mut rng, &[4, 3], -1.0, 1.0).cast::<f32>();
            let mut t = Tape::new();
            let (va, vb) = (t.leaf(a), t.leaf(b));
            let m = t.matmul(va, vb).unwrap();
            let s = t.row_log_softmax(m).unwrap();
            let l = t.sum(s, None).unwrap();
            let g = t.backward(l).unwrap();
            (g.get(va).unwrap().clone(), g.get(vb).unwrap().clone())
        };
        prop_assert_eq!(run(), run());
    }
}
