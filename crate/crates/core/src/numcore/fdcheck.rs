use super::{NumError, Tape, Tensor, Var};

/// Compare reverse-mode gradients of `f` against central differences.
///
/// `f` receives a fresh tape and one leaf per parameter tensor and must return
/// a scalar node. The result is the maximum over every parameter scalar of
/// `|analytic - central| / max(|analytic|, |central|, 1e-8)`.
pub fn finite_diff_check<F>(f: F, params: &[Tensor<f64>], eps: f64) -> Result<f64, NumError>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var, NumError>,
{
    if !(eps > 0.0) {
        return Err(NumError::Invalid(format!("finite-difference eps must be > 0, got {eps}")));
    }
    let eval = |ps: &[Tensor<f64>]| -> Result<f64, NumError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.leaf(p.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let v = tape.value(out).item();
        if !v.is_finite() {
            return Err(NumError::NonFinite { op: "finite_diff_check" });
        }
        Ok(v)
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor<f64>> =
        vars.iter().zip(params).map(|(&v, p)| grads.get_or_zeros(v, p.shape())).collect();

    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for (pi, p) in params.iter().enumerate() {
        for j in 0..p.numel() {
            let orig = p.data()[j];
            probe[pi].data_mut()[j] = orig + eps;
            let fp = eval(&probe)?;
            probe[pi].data_mut()[j] = orig - eps;
            let fm = eval(&probe)?;
            probe[pi].data_mut()[j] = orig;
            let central = (fp - fm) / (2.0 * eps);
            let a = analytic[pi].data()[j];
            let rel = (a - central).abs() / a.abs().max(central.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
