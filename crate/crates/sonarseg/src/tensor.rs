//! Dense row-major tensors, trainable parameters and seeded initialization.
//!
//! Feature maps are shaped `(batch, channels, height, width)` and token
//! sequences `(batch, tokens, channels)`. All values are `f64`; every
//! computation in the crate is a pure function of tensor contents, so a
//! fixed seed reproduces training and inference bit for bit.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// A dense, contiguous, row-major `f64` array with a dynamic shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape/data length mismatch"
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets the buffer under a new shape of identical length.
    pub fn reshaped(mut self, shape: &[usize]) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.data.len(),
            "reshape length mismatch"
        );
        self.shape = shape.to_vec();
        self
    }

    pub fn dims3(&self) -> (usize, usize, usize) {
        assert_eq!(self.rank(), 3, "expected rank-3 tensor, got {:?}", self.shape);
        (self.shape[0], self.shape[1], self.shape[2])
    }

    pub fn dims4(&self) -> (usize, usize, usize, usize) {
        assert_eq!(self.rank(), 4, "expected rank-4 tensor, got {:?}", self.shape);
        (self.shape[0], self.shape[1], self.shape[2], self.shape[3])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise sum of two tensors of identical shape.
    pub fn add(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape, other.shape, "add shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Tensor {
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.shape, other.shape, "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }
}

/// A trainable tensor paired with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Visits every trainable parameter of a block in a fixed, code-defined
/// order. The order is part of the checkpoint and optimizer contract.
pub trait VisitParams {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param));
}

/// Draws one standard-normal sample via the Box-Muller transform.
pub fn normal_sample(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Truncated-normal init: N(0, std²) resampled until within ±2·std.
pub fn trunc_normal(rng: &mut ChaCha20Rng, shape: &[usize], std: f64) -> Tensor {
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    while data.len() < len {
        let z = normal_sample(rng);
        if z.abs() <= 2.0 {
            data.push(z * std);
        }
    }
    Tensor::from_vec(shape, data)
}

/// Fan-out-scaled normal init for convolution kernels: N(0, 2/fan_out).
pub fn fan_out_normal(rng: &mut ChaCha20Rng, shape: &[usize], fan_out: usize) -> Tensor {
    let std = (2.0 / fan_out as f64).sqrt();
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| normal_sample(rng) * std).collect();
    Tensor::from_vec(shape, data)
}

/// Uniform samples in [lo, hi), mostly used to build test inputs.
pub fn uniform(rng: &mut ChaCha20Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect();
    Tensor::from_vec(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = t.clone().reshaped(&[3, 2]);
        assert_eq!(r.data(), t.data());
        assert_eq!(r.shape(), &[3, 2]);
    }

    #[test]
    fn trunc_normal_respects_bounds() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let t = trunc_normal(&mut rng, &[1000], 0.02);
        assert!(t.data().iter().all(|v| v.abs() <= 0.04));
        // not degenerate
        assert!(t.data().iter().any(|v| v.abs() > 1e-4));
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let a = trunc_normal(&mut ChaCha20Rng::seed_from_u64(3), &[64], 0.02);
        let b = trunc_normal(&mut ChaCha20Rng::seed_from_u64(3), &[64], 0.02);
        assert_eq!(a, b);
    }
}
