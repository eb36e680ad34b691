//! 2x2 average pooling with stride 2.

use crate::tensor::Tensor;

pub fn avg_pool2(x: &Tensor) -> Tensor {
    let (b, c, h, w) = x.dims4();
    assert!(h % 2 == 0 && w % 2 == 0, "avg_pool2 requires even dims");
    let (oh, ow) = (h / 2, w / 2);
    let xdat = x.data();
    let mut out = Tensor::zeros(&[b, c, oh, ow]);
    let odat = out.data_mut();
    for plane in 0..b * c {
        let xp = &xdat[plane * h * w..][..h * w];
        let op = &mut odat[plane * oh * ow..][..oh * ow];
        for oy in 0..oh {
            let r0 = &xp[(2 * oy) * w..][..w];
            let r1 = &xp[(2 * oy + 1) * w..][..w];
            for ox in 0..ow {
                op[oy * ow + ox] =
                    0.25 * (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]);
            }
        }
    }
    out
}

pub fn avg_pool2_backward(dy: &Tensor) -> Tensor {
    let (b, c, oh, ow) = dy.dims4();
    let (h, w) = (oh * 2, ow * 2);
    let dydat = dy.data();
    let mut dx = Tensor::zeros(&[b, c, h, w]);
    let dxdat = dx.data_mut();
    for plane in 0..b * c {
        let dyp = &dydat[plane * oh * ow..][..oh * ow];
        let dxp = &mut dxdat[plane * h * w..][..h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let g = 0.25 * dyp[oy * ow + ox];
                dxp[(2 * oy) * w + 2 * ox] = g;
                dxp[(2 * oy) * w + 2 * ox + 1] = g;
                dxp[(2 * oy + 1) * w + 2 * ox] = g;
                dxp[(2 * oy + 1) * w + 2 * ox + 1] = g;
            }
        }
    }
    dx
}
