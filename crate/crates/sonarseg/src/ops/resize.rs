//! Bilinear resampling without corner alignment: output pixel centers are
//! uniformly spaced, so a scale-1 resize is an exact copy.

use rayon::prelude::*;

use crate::tensor::Tensor;

/// Per-axis source taps: indices of the two contributing rows/columns and
/// the weight of the second one.
fn taps(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = (o as f64 + 0.5) * scale - 0.5;
            let clamped = src.max(0.0);
            let i0 = (clamped.floor() as usize).min(in_len - 1);
            let i1 = (i0 + 1).min(in_len - 1);
            let frac = if src <= 0.0 { 0.0 } else { src - i0 as f64 };
            (i0, i1, frac.clamp(0.0, 1.0))
        })
        .collect()
}

pub fn resize_bilinear(x: &Tensor, oh: usize, ow: usize) -> Tensor {
    let (b, c, h, w) = x.dims4();
    if oh == h && ow == w {
        return x.clone();
    }
    let ty = taps(oh, h);
    let tx = taps(ow, w);
    let xdat = x.data();
    let mut out = Tensor::zeros(&[b, c, oh, ow]);
    out.data_mut()
        .par_chunks_mut(oh * ow)
        .enumerate()
        .for_each(|(plane, op)| {
            let xp = &xdat[plane * h * w..][..h * w];
            for oy in 0..oh {
                let (y0, y1, fy) = ty[oy];
                let r0 = &xp[y0 * w..][..w];
                let r1 = &xp[y1 * w..][..w];
                let orow = &mut op[oy * ow..][..ow];
                for ox in 0..ow {
                    let (x0, x1, fx) = tx[ox];
                    let top = r0[x0] + fx * (r0[x1] - r0[x0]);
                    let bot = r1[x0] + fx * (r1[x1] - r1[x0]);
                    orow[ox] = top + fy * (bot - top);
                }
            }
        });
    out
}

pub fn resize_bilinear_backward(dy: &Tensor, ih: usize, iw: usize) -> Tensor {
    let (b, c, oh, ow) = dy.dims4();
    if oh == ih && ow == iw {
        return dy.clone();
    }
    let ty = taps(oh, ih);
    let tx = taps(ow, iw);
    let dydat = dy.data();
    let mut dx = Tensor::zeros(&[b, c, ih, iw]);
    dx.data_mut()
        .par_chunks_mut(ih * iw)
        .enumerate()
        .for_each(|(plane, dxp)| {
            let dyp = &dydat[plane * oh * ow..][..oh * ow];
            for oy in 0..oh {
                let (y0, y1, fy) = ty[oy];
                for ox in 0..ow {
                    let (x0, x1, fx) = tx[ox];
                    let g = dyp[oy * ow + ox];
                    dxp[y0 * iw + x0] += g * (1.0 - fy) * (1.0 - fx);
                    dxp[y0 * iw + x1] += g * (1.0 - fy) * fx;
                    dxp[y1 * iw + x0] += g * fy * (1.0 - fx);
                    dxp[y1 * iw + x1] += g * fy * fx;
                }
            }
        });
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_one_is_bit_exact_identity() {
        let x = Tensor::from_vec(&[1, 1, 2, 3], vec![1.0, 2.5, -3.0, 0.25, 7.0, -0.5]);
        let y = resize_bilinear(&x, 2, 3);
        assert_eq!(x, y);
    }

    #[test]
    fn upsample_preserves_constant_fields() {
        let x = Tensor::full(&[1, 2, 4, 4], 3.25);
        let y = resize_bilinear(&x, 16, 16);
        assert!(y.data().iter().all(|&v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn downsample_2x_averages_neighbors() {
        // 1D-like case: [0, 1, 2, 3] at half size -> centers at 0.5, 2.5
        let x = Tensor::from_vec(&[1, 1, 1, 4], vec![0.0, 1.0, 2.0, 3.0]);
        let y = resize_bilinear(&x, 1, 2);
        assert!((y.data()[0] - 0.5).abs() < 1e-12);
        assert!((y.data()[1] - 2.5).abs() < 1e-12);
    }
}
