//! Dense projection over the channel axis of token sequences.

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::tensor::{trunc_normal, Param, Tensor, VisitParams};

/// y = x W^T + b applied to every token of a (B, N, C_in) sequence.
/// Weights are (C_out, C_in), initialized from a truncated normal
/// (sigma = 0.02); biases start at zero.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
    pub in_features: usize,
    pub out_features: usize,
}

impl Linear {
    pub fn new(name: &str, in_features: usize, out_features: usize, rng: &mut ChaCha20Rng) -> Self {
        Linear {
            weight: Param::new(
                format!("{name}.weight"),
                trunc_normal(rng, &[out_features, in_features], 0.02),
            ),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out_features])),
            in_features,
            out_features,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (b, n, ci) = x.dims3();
        assert_eq!(ci, self.in_features);
        let co = self.out_features;
        let wdat = self.weight.value.data();
        let bdat = self.bias.value.data();
        let xdat = x.data();
        let mut out = Tensor::zeros(&[b, n, co]);
        out.data_mut()
            .par_chunks_mut(co)
            .enumerate()
            .for_each(|(row, orow)| {
                let xrow = &xdat[row * ci..][..ci];
                for (o, (wrow, &bv)) in orow
                    .iter_mut()
                    .zip(wdat.chunks_exact(ci).zip(bdat.iter()))
                {
                    let mut acc = bv;
                    for (wv, xv) in wrow.iter().zip(xrow) {
                        acc += wv * xv;
                    }
                    *o = acc;
                }
            });
        out
    }

    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        let (b, n, ci) = x.dims3();
        let co = self.out_features;
        let rows = b * n;
        let wdat = self.weight.value.data();
        let xdat = x.data();
        let dydat = dy.data();

        let mut dx = Tensor::zeros(x.shape());
        dx.data_mut()
            .par_chunks_mut(ci)
            .enumerate()
            .for_each(|(row, dxrow)| {
                let dyrow = &dydat[row * co..][..co];
                for (o, wrow) in dyrow.iter().zip(wdat.chunks_exact(ci)) {
                    for (dxv, wv) in dxrow.iter_mut().zip(wrow) {
                        *dxv += o * wv;
                    }
                }
            });

        self.weight
            .grad
            .data_mut()
            .par_chunks_mut(ci)
            .enumerate()
            .for_each(|(o, dwrow)| {
                for row in 0..rows {
                    let g = dydat[row * co + o];
                    if g != 0.0 {
                        let xrow = &xdat[row * ci..][..ci];
                        for (dwv, xv) in dwrow.iter_mut().zip(xrow) {
                            *dwv += g * xv;
                        }
                    }
                }
            });

        let dbias = self.bias.grad.data_mut();
        for row in 0..rows {
            for (dbv, dyv) in dbias.iter_mut().zip(&dydat[row * co..][..co]) {
                *dbv += dyv;
            }
        }
        dx
    }
}

impl VisitParams for Linear {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}
