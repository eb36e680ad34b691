//! Group normalization (single group) and per-token layer normalization.

use crate::tensor::{Param, Tensor, VisitParams};

/// Group normalization with one group: statistics over (C, H, W) per
/// sample, per-channel affine. eps = 1e-5.
#[derive(Debug, Clone)]
pub struct GroupNorm {
    pub gamma: Param,
    pub beta: Param,
    pub channels: usize,
    pub eps: f64,
}

/// Normalized activations and inverse std-devs kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GnCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

impl GroupNorm {
    pub fn new(name: &str, channels: usize) -> Self {
        GroupNorm {
            gamma: Param::new(format!("{name}.gamma"), Tensor::full(&[channels], 1.0)),
            beta: Param::new(format!("{name}.beta"), Tensor::zeros(&[channels])),
            channels,
            eps: 1e-5,
        }
    }

    pub fn param_count(&self) -> usize {
        2 * self.channels
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, GnCache) {
        let (b, c, h, w) = x.dims4();
        assert_eq!(c, self.channels);
        let m = c * h * w;
        let xdat = x.data();
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut xhat = Tensor::zeros(x.shape());
        let mut out = Tensor::zeros(x.shape());
        let mut inv_std = vec![0.0; b];
        for bi in 0..b {
            let xs = &xdat[bi * m..][..m];
            let mean = xs.iter().sum::<f64>() / m as f64;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[bi] = inv;
            let xh = &mut xhat.data_mut()[bi * m..][..m];
            for (dst, &v) in xh.iter_mut().zip(xs) {
                *dst = (v - mean) * inv;
            }
            let os = &mut out.data_mut()[bi * m..][..m];
            for ci in 0..c {
                let (g, be) = (gamma[ci], beta[ci]);
                for (o, &v) in os[ci * h * w..][..h * w]
                    .iter_mut()
                    .zip(&xhat.data()[bi * m + ci * h * w..][..h * w])
                {
                    *o = g * v + be;
                }
            }
        }
        (out, GnCache { xhat, inv_std })
    }

    pub fn backward(&mut self, cache: &GnCache, dy: &Tensor) -> Tensor {
        let (b, c, h, w) = dy.dims4();
        let m = c * h * w;
        let hw = h * w;
        let dydat = dy.data();
        let xhat = cache.xhat.data();
        let gamma = self.gamma.value.data();
        let dgamma = self.gamma.grad.data_mut();
        let dbeta = self.beta.grad.data_mut();
        let mut dx = Tensor::zeros(dy.shape());
        let mut dxhat = vec![0.0; m];
        for bi in 0..b {
            let dys = &dydat[bi * m..][..m];
            let xhs = &xhat[bi * m..][..m];
            for ci in 0..c {
                let mut dg = 0.0;
                let mut db = 0.0;
                let g = gamma[ci];
                for i in ci * hw..(ci + 1) * hw {
                    dg += dys[i] * xhs[i];
                    db += dys[i];
                    dxhat[i] = dys[i] * g;
                }
                dgamma[ci] += dg;
                dbeta[ci] += db;
            }
            let mean_dxhat = dxhat.iter().sum::<f64>() / m as f64;
            let mean_dxhat_xhat = dxhat
                .iter()
                .zip(xhs)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / m as f64;
            let inv = cache.inv_std[bi];
            let dxs = &mut dx.data_mut()[bi * m..][..m];
            for i in 0..m {
                dxs[i] = inv * (dxhat[i] - mean_dxhat - xhs[i] * mean_dxhat_xhat);
            }
        }
        dx
    }
}

impl VisitParams for GroupNorm {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }
}

/// Layer normalization over the channel axis of a (B, N, C) token
/// sequence, per-channel affine. eps = 1e-6.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Param,
    pub beta: Param,
    pub channels: usize,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LnCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(name: &str, channels: usize) -> Self {
        LayerNorm {
            gamma: Param::new(format!("{name}.gamma"), Tensor::full(&[channels], 1.0)),
            beta: Param::new(format!("{name}.beta"), Tensor::zeros(&[channels])),
            channels,
            eps: 1e-6,
        }
    }

    pub fn param_count(&self) -> usize {
        2 * self.channels
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, LnCache) {
        let (b, n, c) = x.dims3();
        assert_eq!(c, self.channels);
        let rows = b * n;
        let xdat = x.data();
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut xhat = Tensor::zeros(x.shape());
        let mut out = Tensor::zeros(x.shape());
        let mut inv_std = vec![0.0; rows];
        for r in 0..rows {
            let xs = &xdat[r * c..][..c];
            let mean = xs.iter().sum::<f64>() / c as f64;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[r] = inv;
            let xh = &mut xhat.data_mut()[r * c..][..c];
            let os = &mut out.data_mut()[r * c..][..c];
            for i in 0..c {
                let v = (xs[i] - mean) * inv;
                xh[i] = v;
                os[i] = gamma[i] * v + beta[i];
            }
        }
        (out, LnCache { xhat, inv_std })
    }

    pub fn backward(&mut self, cache: &LnCache, dy: &Tensor) -> Tensor {
        let (b, n, c) = dy.dims3();
        let rows = b * n;
        let dydat = dy.data();
        let xhat = cache.xhat.data();
        let gamma = self.gamma.value.data();
        let dgamma = self.gamma.grad.data_mut();
        let dbeta = self.beta.grad.data_mut();
        let mut dx = Tensor::zeros(dy.shape());
        let mut dxhat = vec![0.0; c];
        for r in 0..rows {
            let dys = &dydat[r * c..][..c];
            let xhs = &xhat[r * c..][..c];
            let mut sum_dxhat = 0.0;
            let mut sum_dxhat_xhat = 0.0;
            for i in 0..c {
                dgamma[i] += dys[i] * xhs[i];
                dbeta[i] += dys[i];
                let v = dys[i] * gamma[i];
                dxhat[i] = v;
                sum_dxhat += v;
                sum_dxhat_xhat += v * xhs[i];
            }
            let inv = cache.inv_std[r];
            let m1 = sum_dxhat / c as f64;
            let m2 = sum_dxhat_xhat / c as f64;
            let dxs = &mut dx.data_mut()[r * c..][..c];
            for i in 0..c {
                dxs[i] = inv * (dxhat[i] - m1 - xhs[i] * m2);
            }
        }
        dx
    }
}

impl VisitParams for LayerNorm {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }
}
