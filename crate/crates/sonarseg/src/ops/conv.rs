//! 2-D convolution with stride, padding, dilation and channel groups.
//!
//! One implementation covers the full convolutions (stem, strided patch
//! merging), the depthwise 3x3 stacks and the pointwise projections used
//! everywhere else. Pointwise and stride-1 cases take slice-based fast
//! paths; the backward pass produces analytic input, weight and bias
//! gradients. All parallel loops write disjoint output regions, so results
//! are identical for any thread count.

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::tensor::{fan_out_normal, Param, Tensor, VisitParams};

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Param,
    pub bias: Option<Param>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
    pub groups: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        dilation: usize,
        groups: usize,
        bias: bool,
        rng: &mut ChaCha20Rng,
    ) -> Self {
        assert!(in_channels % groups == 0 && out_channels % groups == 0);
        let fan_out = kernel * kernel * out_channels / groups;
        let weight = Param::new(
            format!("{name}.weight"),
            fan_out_normal(
                rng,
                &[out_channels, in_channels / groups, kernel, kernel],
                fan_out,
            ),
        );
        let bias = bias.then(|| Param::new(format!("{name}.bias"), Tensor::zeros(&[out_channels])));
        Conv2d {
            weight,
            bias,
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            dilation,
            groups,
        }
    }

    /// 1x1 projection across channels.
    pub fn pointwise(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        bias: bool,
        rng: &mut ChaCha20Rng,
    ) -> Self {
        Conv2d::new(name, in_channels, out_channels, 1, 1, 0, 1, 1, bias, rng)
    }

    /// 3x3 depthwise convolution at the given dilation, padded to preserve
    /// spatial dims. No bias: group normalization always follows these.
    pub fn depthwise3(name: &str, channels: usize, dilation: usize, rng: &mut ChaCha20Rng) -> Self {
        Conv2d::new(
            name, channels, channels, 3, 1, dilation, dilation, channels, false, rng,
        )
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let span = self.dilation * (self.kernel - 1) + 1;
        let oh = (h + 2 * self.padding - span) / self.stride + 1;
        let ow = (w + 2 * self.padding - span) / self.stride + 1;
        (oh, ow)
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.as_ref().map_or(0, |b| b.len())
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (b, ci, h, w) = x.dims4();
        assert_eq!(ci, self.in_channels, "conv input channel mismatch");
        let (oh, ow) = self.out_hw(h, w);
        let co = self.out_channels;
        let cig = self.in_channels / self.groups;
        let cog = self.out_channels / self.groups;
        let (k, s, d) = (self.kernel, self.stride, self.dilation);
        let p = self.padding as isize;
        let wdat = self.weight.value.data();
        let xdat = x.data();

        let mut out = Tensor::zeros(&[b, co, oh, ow]);
        out.data_mut()
            .par_chunks_mut(oh * ow)
            .enumerate()
            .for_each(|(idx, oplane)| {
                let bi = idx / co;
                let coi = idx % co;
                if let Some(bias) = &self.bias {
                    oplane.fill(bias.value.data()[coi]);
                }
                let g = coi / cog;
                for cg in 0..cig {
                    let cii = g * cig + cg;
                    let xplane = &xdat[(bi * ci + cii) * h * w..][..h * w];
                    let wbase = (coi * cig + cg) * k * k;
                    if k == 1 && s == 1 && p == 0 {
                        let wv = wdat[wbase];
                        for (o, &xv) in oplane.iter_mut().zip(xplane) {
                            *o += wv * xv;
                        }
                    } else if s == 1 {
                        for ky in 0..k {
                            for kx in 0..k {
                                let wv = wdat[wbase + ky * k + kx];
                                let oy_off = (ky * d) as isize - p;
                                let ox_off = (kx * d) as isize - p;
                                shifted_axpy(oplane, xplane, oh, ow, h, w, oy_off, ox_off, wv);
                            }
                        }
                    } else {
                        for oy in 0..oh {
                            for ky in 0..k {
                                let iy = (oy * s + ky * d) as isize - p;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let xrow = &xplane[iy as usize * w..][..w];
                                let orow_base = oy * ow;
                                for kx in 0..k {
                                    let wv = wdat[wbase + ky * k + kx];
                                    for ox in 0..ow {
                                        let ix = (ox * s + kx * d) as isize - p;
                                        if ix >= 0 && ix < w as isize {
                                            oplane[orow_base + ox] += wv * xrow[ix as usize];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            });
        out
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        let (b, ci, h, w) = x.dims4();
        let (bd, co, oh, ow) = dy.dims4();
        assert_eq!(b, bd);
        assert_eq!(co, self.out_channels);
        let cig = self.in_channels / self.groups;
        let cog = self.out_channels / self.groups;
        let (k, s, d) = (self.kernel, self.stride, self.dilation);
        let p = self.padding as isize;
        let wdat = self.weight.value.data();
        let xdat = x.data();
        let dydat = dy.data();

        // input gradient, gathered per input plane
        let mut dx = Tensor::zeros(x.shape());
        dx.data_mut()
            .par_chunks_mut(h * w)
            .enumerate()
            .for_each(|(idx, dxplane)| {
                let bi = idx / ci;
                let cii = idx % ci;
                let g = cii / cig;
                let cg = cii % cig;
                for co_in_g in 0..cog {
                    let coi = g * cog + co_in_g;
                    let dyplane = &dydat[(bi * co + coi) * oh * ow..][..oh * ow];
                    let wbase = (coi * cig + cg) * k * k;
                    if k == 1 && s == 1 && p == 0 {
                        let wv = wdat[wbase];
                        for (dxv, &dyv) in dxplane.iter_mut().zip(dyplane) {
                            *dxv += wv * dyv;
                        }
                    } else if s == 1 {
                        for ky in 0..k {
                            for kx in 0..k {
                                let wv = wdat[wbase + ky * k + kx];
                                // iy = oy + ky*d - p  =>  dy index shifted the other way
                                let iy_off = p - (ky * d) as isize;
                                let ix_off = p - (kx * d) as isize;
                                shifted_axpy(dxplane, dyplane, h, w, oh, ow, iy_off, ix_off, wv);
                            }
                        }
                    } else {
                        for oy in 0..oh {
                            for ky in 0..k {
                                let iy = (oy * s + ky * d) as isize - p;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let dxrow_base = iy as usize * w;
                                for kx in 0..k {
                                    let wv = wdat[wbase + ky * k + kx];
                                    for ox in 0..ow {
                                        let ix = (ox * s + kx * d) as isize - p;
                                        if ix >= 0 && ix < w as isize {
                                            dxplane[dxrow_base + ix as usize] +=
                                                wv * dyplane[oy * ow + ox];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            });

        // weight gradient, one slice per output channel
        let kk = k * k;
        self.weight
            .grad
            .data_mut()
            .par_chunks_mut(cig * kk)
            .enumerate()
            .for_each(|(coi, dwslice)| {
                let g = coi / cog;
                for cg in 0..cig {
                    let cii = g * cig + cg;
                    for ky in 0..k {
                        for kx in 0..k {
                            let mut acc = 0.0;
                            for bi in 0..b {
                                let dyplane = &dydat[(bi * co + coi) * oh * ow..][..oh * ow];
                                let xplane = &xdat[(bi * ci + cii) * h * w..][..h * w];
                                for oy in 0..oh {
                                    let iy = (oy * s + ky * d) as isize - p;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let xrow = &xplane[iy as usize * w..][..w];
                                    let dyrow = &dyplane[oy * ow..][..ow];
                                    if s == 1 {
                                        let ix_off = (kx * d) as isize - p;
                                        let ox_start = (-ix_off).max(0) as usize;
                                        let ox_end =
                                            ((w as isize - ix_off).min(ow as isize)).max(0) as usize;
                                        if ox_start < ox_end {
                                            let xs = &xrow[(ox_start as isize + ix_off) as usize..]
                                                [..ox_end - ox_start];
                                            for (dyv, xv) in dyrow[ox_start..ox_end].iter().zip(xs)
                                            {
                                                acc += dyv * xv;
                                            }
                                        }
                                    } else {
                                        for ox in 0..ow {
                                            let ix = (ox * s + kx * d) as isize - p;
                                            if ix >= 0 && ix < w as isize {
                                                acc += dyrow[ox] * xrow[ix as usize];
                                            }
                                        }
                                    }
                                }
                            }
                            dwslice[cg * kk + ky * k + kx] += acc;
                        }
                    }
                }
            });

        if let Some(bias) = &mut self.bias {
            let dbias = bias.grad.data_mut();
            for bi in 0..b {
                for coi in 0..co {
                    let dyplane = &dydat[(bi * co + coi) * oh * ow..][..oh * ow];
                    dbias[coi] += dyplane.iter().sum::<f64>();
                }
            }
        }
        dx
    }
}

/// dst[(y+yo)*dw + x+xo] += scale * src[y*sw + x] over the valid overlap,
/// where dst is (dh, dw) and src is (sh, sw). Rows are contiguous, so the
/// inner loop vectorizes.
#[allow(clippy::too_many_arguments)]
fn shifted_axpy(
    dst: &mut [f64],
    src: &[f64],
    dh: usize,
    dw: usize,
    sh: usize,
    sw: usize,
    dy_off: isize,
    dx_off: isize,
    scale: f64,
) {
    // here (dy_off, dx_off) shift destination coords into source coords
    for y in 0..dh {
        let sy = y as isize + dy_off;
        if sy < 0 || sy >= sh as isize {
            continue;
        }
        let x_start = (-dx_off).max(0) as usize;
        let x_end = ((sw as isize - dx_off).min(dw as isize)).max(0) as usize;
        if x_start >= x_end {
            continue;
        }
        let drow = &mut dst[y * dw + x_start..y * dw + x_end];
        let srow = &src[sy as usize * sw + (x_start as isize + dx_off) as usize..][..x_end - x_start];
        for (dv, &sv) in drow.iter_mut().zip(srow) {
            *dv += scale * sv;
        }
    }
}

impl VisitParams for Conv2d {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.weight);
        if let Some(b) = &mut self.bias {
            f(b);
        }
    }
}
