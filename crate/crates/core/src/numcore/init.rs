use super::rng::SplitMix64;
use super::{NumError, Scalar, Tensor};

/// Initialization scheme for [`seeded_init`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    Zeros,
    /// Uniform in `±1/√fan_in`, where `fan_in` is the leading extent.
    UniformFanIn,
    /// Normal with mean 0 and standard deviation 0.02.
    Normal002,
    Constant(f64),
}

/// Deterministic tensor initialization from a 64-bit seed.
///
/// Values are drawn in row-major order from [`SplitMix64`] seeded with `seed`;
/// `UniformFanIn` uses one word per element, `Normal002` uses two.
pub fn seeded_init<T: Scalar>(shape: &[usize], scheme: InitScheme, seed: u64) -> Result<Tensor<T>, NumError> {
    if shape.contains(&0) && !shape.is_empty() {
        return Err(NumError::Shape { op: "seeded_init", detail: format!("zero extent in {shape:?}") });
    }
    let n: usize = shape.iter().product();
    let mut rng = SplitMix64::new(seed);
    let data: Vec<f64> = match scheme {
        InitScheme::Zeros => vec![0.0; n],
        InitScheme::Constant(c) => vec![c; n],
        InitScheme::UniformFanIn => {
            let fan_in = shape.first().copied().unwrap_or(1) as f64;
            let bound = 1.0 / fan_in.sqrt();
            (0..n).map(|_| rng.uniform(-bound, bound)).collect()
        }
        InitScheme::Normal002 => (0..n).map(|_| 0.02 * rng.normal()).collect(),
    };
    Tensor::from_f64(shape, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros() {
        let t: Tensor<f64> = seeded_init(&[3, 3], InitScheme::Zeros, 1).unwrap();
        assert_eq!(t.data(), &[0.0; 9]);
    }

    #[test]
    fn deterministic() {
        for scheme in [InitScheme::UniformFanIn, InitScheme::Normal002, InitScheme::Constant(0.5)] {
            let a: Tensor<f32> = seeded_init(&[4, 5], scheme, 99).unwrap();
            let b: Tensor<f32> = seeded_init(&[4, 5], scheme, 99).unwrap();
            assert_eq!(a, b);
        }
        let a: Tensor<f64> = seeded_init(&[4, 5], InitScheme::Normal002, 1).unwrap();
        let b: Tensor<f64> = seeded_init(&[4, 5], InitScheme::Normal002, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn normal_mean_within_standard_error() {
        let n = 100_000;
        let t: Tensor<f64> = seeded_init(&[n], InitScheme::Normal002, 2024).unwrap();
        let mean = t.data().iter().sum::<f64>() / n as f64;
        let bound = 3.0 * 0.02 / (n as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} exceeds {bound}");
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var.sqrt() - 0.02).abs() < 0.001);
    }

    #[test]
    fn uniform_bound() {
        let t: Tensor<f64> = seeded_init(&[16, 8], InitScheme::UniformFanIn, 5).unwrap();
        assert!(t.data().iter().all(|v| v.abs() <= 0.25));
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(seeded_init::<f64>(&[0, 3], InitScheme::Zeros, 0).is_err());
    }
}
