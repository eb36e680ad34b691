//! Elementwise activations with analytic derivatives.

use crate::tensor::Tensor;

/// Hard Swish: x * clamp(x + 3, 0, 6) / 6.
pub fn hard_swish(x: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .map(|&v| v * (v + 3.0).clamp(0.0, 6.0) / 6.0)
        .collect();
    Tensor::from_vec(x.shape(), data)
}

pub fn hard_swish_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| {
            let d = if v <= -3.0 {
                0.0
            } else if v >= 3.0 {
                1.0
            } else {
                (2.0 * v + 3.0) / 6.0
            };
            g * d
        })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

/// Exact GELU: x * Phi(x) with the Gaussian CDF.
pub fn gelu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v * phi(v)).collect();
    Tensor::from_vec(x.shape(), data)
}

pub fn gelu_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    let inv_sqrt_tau = 1.0 / (std::f64::consts::TAU).sqrt();
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| {
            let pdf = inv_sqrt_tau * (-0.5 * v * v).exp();
            g * (phi(v) + v * pdf)
        })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

fn phi(v: f64) -> f64 {
    0.5 * (1.0 + libm::erf(v / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_swish_known_points() {
        let x = Tensor::from_vec(&[5], vec![-4.0, -3.0, 0.0, 3.0, 4.0]);
        let y = hard_swish(&x);
        assert_eq!(y.data(), &[0.0, 0.0, 0.0, 3.0, 4.0]);
        // at x = 1: 1 * 4/6
        let y1 = hard_swish(&Tensor::from_vec(&[1], vec![1.0]));
        assert!((y1.data()[0] - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn gelu_is_odd_symmetric_around_half_x() {
        // gelu(x) + gelu(-x) = x*Phi(x) + (-x)*Phi(-x) = x*(Phi(x) - 1 + Phi(x)) ... spot value
        let y = gelu(&Tensor::from_vec(&[1], vec![0.0]));
        assert_eq!(y.data()[0], 0.0);
        let y = gelu(&Tensor::from_vec(&[1], vec![10.0]));
        assert!((y.data()[0] - 10.0).abs() < 1e-9);
    }
}
