//! Forward/backward kernels: convolution, pooling, activations, fully
//! connected layers, batch normalization, and the sigmoid cross-entropy
//! head. All arithmetic runs in `f64`; parameters arrive as `f32` tensors
//! and are promoted on read.

use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{Tensor, TensorF64};
#[allow(unused_imports)]
use crate::math::FloatMath;

/// Probabilities are clamped to this range before the log in BCE.
pub const PROB_CLAMP: f64 = 1e-7;

fn dims4(t: &TensorF64) -> (usize, usize, usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 4, "expected 4-d tensor, got {:?}", s);
    (s[0], s[1], s[2], s[3])
}

fn dims2(t: &TensorF64) -> (usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 2, "expected 2-d tensor, got {:?}", s);
    (s[0], s[1])
}

/// Copies one image `[C,H,W]` into a zero-padded `[C,H+2p,W+2p]` buffer.
fn fill_padded(dst: &mut [f64], src: &[f64], c: usize, h: usize, w: usize, pad: usize) {
    let (hp, wp) = (h + 2 * pad, w + 2 * pad);
    dst.fill(0.0);
    for ci in 0..c {
        for y in 0..h {
            let s = ci * h * w + y * w;
            let d = ci * hp * wp + (y + pad) * wp + pad;
            dst[d..d + w].copy_from_slice(&src[s..s + w]);
        }
    }
}

/// Cross-correlation of a batch with a kernel bank.
///
/// `x`: `[B,Cin,H,W]`, `kernel`: `[Cout,Cin,kh,kw]`, `bias`: `[Cout]`.
/// Output `[B,Cout,Ho,Wo]` with `Ho = (H + 2*pad - kh)/stride + 1`.
pub fn conv2d_forward(
    x: &TensorF64,
    kernel: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: usize,
) -> TensorF64 {
    let (bsz, cin, h, w) = dims4(x);
    let ks = kernel.shape();
    assert_eq!(ks.len(), 4, "kernel must be 4-d");
    let (cout, kcin, kh, kw) = (ks[0], ks[1], ks[2], ks[3]);
    assert_eq!(cin, kcin, "input has {cin} channels, kernel expects {kcin}");
    assert_eq!(bias.shape(), &[cout], "bias shape mismatch");
    assert!(h + 2 * pad >= kh && w + 2 * pad >= kw, "kernel larger than padded input");

    let ho = (h + 2 * pad - kh) / stride + 1;
    let wo = (w + 2 * pad - kw) / stride + 1;
    let (hp, wp) = (h + 2 * pad, w + 2 * pad);

    let kd: Vec<f64> = kernel.data().iter().map(|&v| v as f64).collect();
    let bd: Vec<f64> = bias.data().iter().map(|&v| v as f64).collect();

    let mut y = TensorF64::zeros(&[bsz, cout, ho, wo]);
    let mut padded = vec![0.0f64; cin * hp * wp];

    for b in 0..bsz {
        fill_padded(
            &mut padded,
            &x.data()[b * cin * h * w..(b + 1) * cin * h * w],
            cin,
            h,
            w,
            pad,
        );
        let yb = &mut y.data_mut()[b * cout * ho * wo..(b + 1) * cout * ho * wo];
        for co in 0..cout {
            let kco = co * cin * kh * kw;
            for oy in 0..ho {
                let iy0 = oy * stride;
                for ox in 0..wo {
                    let ix0 = ox * stride;
                    let mut acc = bd[co];
                    for ci in 0..cin {
                        let pci = ci * hp * wp;
                        let kci = kco + ci * kh * kw;
                        for ky in 0..kh {
                            let prow = pci + (iy0 + ky) * wp + ix0;
                            let krow = kci + ky * kw;
                            acc += kd[krow..krow + kw]
                                .iter()
                                .zip(&padded[prow..prow + kw])
                                .map(|(a, b)| a * b)
                                .sum::<f64>();
                        }
                    }
                    yb[co * ho * wo + oy * wo + ox] = acc;
                }
            }
        }
    }
    y
}

/// Gradients of [`conv2d_forward`] with respect to input, kernel, and bias.
pub fn conv2d_backward(
    x: &TensorF64,
    kernel: &Tensor,
    dy: &TensorF64,
    stride: usize,
    pad: usize,
) -> (TensorF64, TensorF64, TensorF64) {
    let (bsz, cin, h, w) = dims4(x);
    let ks = kernel.shape();
    let (cout, _, kh, kw) = (ks[0], ks[1], ks[2], ks[3]);
    let (_, dyc, ho, wo) = dims4(dy);
    assert_eq!(dyc, cout, "upstream gradient channel mismatch");
    let (hp, wp) = (h + 2 * pad, w + 2 * pad);

    let kd: Vec<f64> = kernel.data().iter().map(|&v| v as f64).collect();

    let mut dx = TensorF64::zeros(&[bsz, cin, h, w]);
    let mut dk = TensorF64::zeros(&[cout, cin, kh, kw]);
    let mut db = TensorF64::zeros(&[cout]);
    let mut padded = vec![0.0f64; cin * hp * wp];
    let mut dpadded = vec![0.0f64; cin * hp * wp];

    for b in 0..bsz {
        fill_padded(
            &mut padded,
            &x.data()[b * cin * h * w..(b + 1) * cin * h * w],
            cin,
            h,
            w,
            pad,
        );
        dpadded.fill(0.0);
        let dyb = &dy.data()[b * cout * ho * wo..(b + 1) * cout * ho * wo];
        for co in 0..cout {
            let kco = co * cin * kh * kw;
            for oy in 0..ho {
                let iy0 = oy * stride;
                for ox in 0..wo {
                    let g = dyb[co * ho * wo + oy * wo + ox];
                    if g == 0.0 {
                        continue;
                    }
                    db.data_mut()[co] += g;
                    let ix0 = ox * stride;
                    for ci in 0..cin {
                        let pci = ci * hp * wp;
                        let kci = kco + ci * kh * kw;
                        for ky in 0..kh {
                            let prow = pci + (iy0 + ky) * wp + ix0;
                            let krow = kci + ky * kw;
                            let dkrow = &mut dk.data_mut()[krow..krow + kw];
                            for kx in 0..kw {
                                dkrow[kx] += g * padded[prow + kx];
                            }
                            let drow = &mut dpadded[prow..prow + kw];
                            for kx in 0..kw {
                                drow[kx] += g * kd[krow + kx];
                            }
                        }
                    }
                }
            }
        }
        // Crop the padded input gradient back to [Cin,H,W].
        let dxb = &mut dx.data_mut()[b * cin * h * w..(b + 1) * cin * h * w];
        for ci in 0..cin {
            for y in 0..h {
                let s = ci * hp * wp + (y + pad) * wp + pad;
                let d = ci * h * w + y * w;
                dxb[d..d + w].copy_from_slice(&dpadded[s..s + w]);
            }
        }
    }
    (dx, dk, db)
}

/// 2x2 max pooling with stride 2. Returns the pooled tensor and, per output
/// element, the linear index of its source in `x` (ties go to scan order).
pub fn maxpool2_forward(x: &TensorF64) -> (TensorF64, Vec<u32>) {
    let (bsz, c, h, w) = dims4(x);
    assert!(h % 2 == 0 && w % 2 == 0, "pooling needs even spatial dims, got {h}x{w}");
    let (ho, wo) = (h / 2, w / 2);
    let mut y = TensorF64::zeros(&[bsz, c, ho, wo]);
    let mut idx = vec![0u32; bsz * c * ho * wo];
    let xd = x.data();
    let yd = y.data_mut();
    for bc in 0..bsz * c {
        let base = bc * h * w;
        let obase = bc * ho * wo;
        for oy in 0..ho {
            for ox in 0..wo {
                let i00 = base + (2 * oy) * w + 2 * ox;
                let cand = [i00, i00 + 1, i00 + w, i00 + w + 1];
                let mut best = cand[0];
                for &c2 in &cand[1..] {
                    if xd[c2] > xd[best] {
                        best = c2;
                    }
                }
                yd[obase + oy * wo + ox] = xd[best];
                idx[obase + oy * wo + ox] = best as u32;
            }
        }
    }
    (y, idx)
}

/// Routes upstream gradients back to the argmax positions.
pub fn maxpool2_backward(dy: &TensorF64, idx: &[u32], input_shape: &[usize]) -> TensorF64 {
    assert_eq!(dy.len(), idx.len(), "argmax index count mismatch");
    let mut dx = TensorF64::zeros(input_shape);
    let dxd = dx.data_mut();
    for (g, &i) in dy.data().iter().zip(idx) {
        dxd[i as usize] += *g;
    }
    dx
}

/// ReLU, or leaky ReLU when `slope > 0`.
pub fn leaky_relu_forward(mut x: TensorF64, slope: f64) -> TensorF64 {
    for v in x.data_mut() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
    x
}

/// Backward pass derives the input sign from the output sign, which is
/// valid because the slope is non-negative.
pub fn leaky_relu_backward(dy: &TensorF64, y: &TensorF64, slope: f64) -> TensorF64 {
    assert_eq!(dy.shape(), y.shape(), "activation gradient shape mismatch");
    let mut dx = dy.clone();
    for (g, &out) in dx.data_mut().iter_mut().zip(y.data()) {
        if out <= 0.0 {
            *g *= slope;
        }
    }
    dx
}

/// `y = x W^T + b` with `x: [B,N]`, `weight: [M,N]`, `bias: [M]`.
pub fn fc_forward(x: &TensorF64, weight: &Tensor, bias: &Tensor) -> TensorF64 {
    let (bsz, n) = dims2(x);
    let ws = weight.shape();
    assert_eq!(ws.len(), 2, "weight must be 2-d");
    let (m, wn) = (ws[0], ws[1]);
    assert_eq!(n, wn, "input width {n} does not match weight width {wn}");
    assert_eq!(bias.shape(), &[m], "bias shape mismatch");

    let wd: Vec<f64> = weight.data().iter().map(|&v| v as f64).collect();
    let bd: Vec<f64> = bias.data().iter().map(|&v| v as f64).collect();
    let mut y = TensorF64::zeros(&[bsz, m]);
    let xd = x.data();
    let yd = y.data_mut();
    for b in 0..bsz {
        let xrow = &xd[b * n..(b + 1) * n];
        let yrow = &mut yd[b * m..(b + 1) * m];
        for mi in 0..m {
            let wrow = &wd[mi * n..(mi + 1) * n];
            yrow[mi] = bd[mi] + wrow.iter().zip(xrow).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    y
}

/// Gradients of [`fc_forward`] with respect to input, weight, and bias.
pub fn fc_backward(x: &TensorF64, weight: &Tensor, dy: &TensorF64) -> (TensorF64, TensorF64, TensorF64) {
    let (bsz, n) = dims2(x);
    let (m, _) = {
        let ws = weight.shape();
        (ws[0], ws[1])
    };
    let (dyb, dym) = dims2(dy);
    assert_eq!(dyb, bsz, "batch mismatch");
    assert_eq!(dym, m, "upstream gradient width mismatch");

    let wd: Vec<f64> = weight.data().iter().map(|&v| v as f64).collect();
    let mut dx = TensorF64::zeros(&[bsz, n]);
    let mut dw = TensorF64::zeros(&[m, n]);
    let mut db = TensorF64::zeros(&[m]);
    let xd = x.data();
    let dyd = dy.data();
    for b in 0..bsz {
        let xrow = &xd[b * n..(b + 1) * n];
        let dyrow = &dyd[b * m..(b + 1) * m];
        let dxrow = &mut dx.data_mut()[b * n..(b + 1) * n];
        for mi in 0..m {
            let g = dyrow[mi];
            if g == 0.0 {
                continue;
            }
            db.data_mut()[mi] += g;
            let wrow = &wd[mi * n..(mi + 1) * n];
            for ni in 0..n {
                dxrow[ni] += g * wrow[ni];
            }
            let dwrow = &mut dw.data_mut()[mi * n..(mi + 1) * n];
            for ni in 0..n {
                dwrow[ni] += g * xrow[ni];
            }
        }
    }
    (dx, dw, db)
}

/// Per-feature batch statistics retained for the backward pass.
pub struct BnCache {
    pub inv_std: Vec<f64>,
    pub xhat: TensorF64,
}

/// Batch normalization over the batch dimension of `[B,N]`, training mode.
///
/// Uses biased (1/B) variance for both normalization and the running
/// estimates; running stats update as `r = momentum*r + (1-momentum)*batch`.
pub fn bn_forward_train(
    x: &TensorF64,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &mut Tensor,
    running_var: &mut Tensor,
    momentum: f64,
    eps: f64,
) -> (TensorF64, BnCache) {
    let (bsz, n) = dims2(x);
    assert!(bsz >= 2, "batch statistics need at least 2 samples");
    assert_eq!(gamma.shape(), &[n], "gamma shape mismatch");
    assert_eq!(beta.shape(), &[n], "beta shape mismatch");

    let xd = x.data();
    let mut mean = vec![0.0f64; n];
    let mut var = vec![0.0f64; n];
    for b in 0..bsz {
        for (ni, m) in mean.iter_mut().enumerate() {
            *m += xd[b * n + ni];
        }
    }
    for m in &mut mean {
        *m /= bsz as f64;
    }
    for b in 0..bsz {
        for (ni, v) in var.iter_mut().enumerate() {
            let d = xd[b * n + ni] - mean[ni];
            *v += d * d;
        }
    }
    for v in &mut var {
        *v /= bsz as f64;
    }

    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
    let mut xhat = TensorF64::zeros(&[bsz, n]);
    {
        let xh = xhat.data_mut();
        for b in 0..bsz {
            for ni in 0..n {
                xh[b * n + ni] = (xd[b * n + ni] - mean[ni]) * inv_std[ni];
            }
        }
    }
    let gd: Vec<f64> = gamma.data().iter().map(|&v| v as f64).collect();
    let bd: Vec<f64> = beta.data().iter().map(|&v| v as f64).collect();
    let mut y = TensorF64::zeros(&[bsz, n]);
    {
        let yd = y.data_mut();
        let xh = xhat.data();
        for b in 0..bsz {
            for ni in 0..n {
                yd[b * n + ni] = gd[ni] * xh[b * n + ni] + bd[ni];
            }
        }
    }

    for (r, &m) in running_mean.data_mut().iter_mut().zip(&mean) {
        *r = (momentum * (*r as f64) + (1.0 - momentum) * m) as f32;
    }
    for (r, &v) in running_var.data_mut().iter_mut().zip(&var) {
        *r = (momentum * (*r as f64) + (1.0 - momentum) * v) as f32;
    }

    (y, BnCache { inv_std, xhat })
}

/// Batch normalization using running statistics only (no state update).
pub fn bn_forward_eval(
    x: &TensorF64,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &Tensor,
    running_var: &Tensor,
    eps: f64,
) -> TensorF64 {
    let (bsz, n) = dims2(x);
    assert_eq!(gamma.shape(), &[n], "gamma shape mismatch");
    let mut y = TensorF64::zeros(&[bsz, n]);
    let xd = x.data();
    let yd = y.data_mut();
    for ni in 0..n {
        let m = running_mean.data()[ni] as f64;
        let inv = 1.0 / ((running_var.data()[ni] as f64) + eps).sqrt();
        let g = gamma.data()[ni] as f64;
        let be = beta.data()[ni] as f64;
        for b in 0..bsz {
            yd[b * n + ni] = g * (xd[b * n + ni] - m) * inv + be;
        }
    }
    y
}

/// Gradients of [`bn_forward_train`] with respect to input, gamma, beta.
pub fn bn_backward(
    cache: &BnCache,
    gamma: &Tensor,
    dy: &TensorF64,
) -> (TensorF64, TensorF64, TensorF64) {
    let (bsz, n) = dims2(dy);
    assert_eq!(cache.xhat.shape(), dy.shape(), "cache does not match upstream gradient");
    let xh = cache.xhat.data();
    let dyd = dy.data();

    let mut dgamma = TensorF64::zeros(&[n]);
    let mut dbeta = TensorF64::zeros(&[n]);
    let mut sum_dxhat = vec![0.0f64; n];
    let mut sum_dxhat_xhat = vec![0.0f64; n];
    let gd: Vec<f64> = gamma.data().iter().map(|&v| v as f64).collect();

    for b in 0..bsz {
        for ni in 0..n {
            let g = dyd[b * n + ni];
            let x = xh[b * n + ni];
            dgamma.data_mut()[ni] += g * x;
            dbeta.data_mut()[ni] += g;
            let dxh = g * gd[ni];
            sum_dxhat[ni] += dxh;
            sum_dxhat_xhat[ni] += dxh * x;
        }
    }

    let mut dx = TensorF64::zeros(&[bsz, n]);
    let inv_b = 1.0 / bsz as f64;
    {
        let dxd = dx.data_mut();
        for b in 0..bsz {
            for ni in 0..n {
                let dxh = dyd[b * n + ni] * gd[ni];
                dxd[b * n + ni] = cache.inv_std[ni]
                    * (dxh - inv_b * sum_dxhat[ni] - xh[b * n + ni] * inv_b * sum_dxhat_xhat[ni]);
            }
        }
    }
    (dx, dgamma, dbeta)
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one prediction, clamped away from {0,1}.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Weighted sum of the two task losses.
pub fn joint_loss(l_temporal: f64, l_spatial: f64, spatial_weight: f64) -> f64 {
    l_temporal + spatial_weight * l_spatial
}

/// Sigmoid + mean BCE over a batch of logits. Returns per-sample
/// probabilities, the mean loss, and the loss gradient per logit,
/// which collapses to `(p - y) / B`.
pub fn sigmoid_bce(logits: &[f64], labels: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
    assert_eq!(logits.len(), labels.len(), "label count mismatch");
    assert!(!logits.is_empty(), "empty batch");
    let bsz = logits.len() as f64;
    let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    let loss = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| bce_loss(p, y))
        .sum::<f64>()
        / bsz;
    let dlogits: Vec<f64> = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (p - y) / bsz)
        .collect();
    (probs, loss, dlogits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::make_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_f64(shape: &[usize], label: &str) -> TensorF64 {
        let mut rng = make_rng(11, label);
        let data = (0..shape.iter().product::<usize>())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        TensorF64::from_vec(shape, data)
    }

    fn random_f32(shape: &[usize], label: &str) -> Tensor {
        random_f64(shape, label).narrow()
    }

    /// Weighted sum of outputs gives a scalar objective with a known
    /// upstream gradient (the weights themselves).
    fn objective(y: &TensorF64, coeffs: &TensorF64) -> f64 {
        y.data().iter().zip(coeffs.data()).map(|(a, b)| a * b).sum()
    }

    fn fd_grad_input<F>(x: &TensorF64, f: F, step: f64) -> TensorF64
    where
        F: Fn(&TensorF64) -> f64,
    {
        let mut g = TensorF64::zeros(x.shape());
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += step;
            let mut xm = x.clone();
            xm.data_mut()[i] -= step;
            g.data_mut()[i] = (f(&xp) - f(&xm)) / (2.0 * step);
        }
        g
    }

    fn fd_grad_param<F>(p: &Tensor, f: F, step: f64) -> TensorF64
    where
        F: Fn(&Tensor) -> f64,
    {
        let mut g = TensorF64::zeros(p.shape());
        for i in 0..p.len() {
            let mut pp = p.clone();
            pp.data_mut()[i] = (pp.data()[i] as f64 + step) as f32;
            let mut pm = p.clone();
            pm.data_mut()[i] = (pm.data()[i] as f64 - step) as f32;
            // Use the actually-realized f32 step so rounding cancels.
            let h = pp.data()[i] as f64 - pm.data()[i] as f64;
            g.data_mut()[i] = (f(&pp) - f(&pm)) / h;
        }
        g
    }

    fn assert_close(analytic: &TensorF64, fd: &TensorF64, tol: f64) {
        assert_eq!(analytic.shape(), fd.shape());
        for (i, (&a, &n)) in analytic.data().iter().zip(fd.data()).enumerate() {
            let denom = a.abs().max(n.abs()).max(1e-4);
            assert!(
                ((a - n) / denom).abs() < tol,
                "gradient mismatch at {i}: analytic {a}, finite-difference {n}"
            );
        }
    }

    #[test]
    fn conv_identity_kernel_with_delta_input_reads_out_the_kernel() {
        // One 5x5 kernel, delta image: the output window around the delta
        // holds the kernel point-reflected (cross-correlation convention).
        let mut k = Tensor::zeros(&[1, 1, 5, 5]);
        for (i, v) in k.data_mut().iter_mut().enumerate() {
            *v = (i + 1) as f32;
        }
        let b = Tensor::zeros(&[1]);
        let mut x = TensorF64::zeros(&[1, 1, 9, 9]);
        x.data_mut()[4 * 9 + 4] = 1.0; // delta at (4,4)
        let y = conv2d_forward(&x, &k, &b, 1, 2);
        assert_eq!(y.shape(), &[1, 1, 9, 9]);
        for ky in 0..5 {
            for kx in 0..5 {
                // Output position (4+2-ky, 4+2-kx) sees kernel entry (ky,kx).
                let oy = 4 + 2 - ky;
                let ox = 4 + 2 - kx;
                assert_eq!(y.data()[oy * 9 + ox], (ky * 5 + kx + 1) as f64);
            }
        }
    }

    #[test]
    fn conv_output_shape_and_stride() {
        let x = random_f64(&[2, 1, 64, 64], "conv.shape.x");
        let k = random_f32(&[8, 1, 5, 5], "conv.shape.k");
        let b = random_f32(&[8], "conv.shape.b");
        let y = conv2d_forward(&x, &k, &b, 2, 2);
        assert_eq!(y.shape(), &[2, 8, 32, 32]);
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let x = random_f64(&[2, 3, 8, 8], "conv.fd.x");
        let k = random_f32(&[4, 3, 3, 3], "conv.fd.k");
        let b = random_f32(&[4], "conv.fd.b");
        let coeffs = random_f64(&[2, 4, 4, 4], "conv.fd.c");
        let stride = 2;
        let pad = 1;

        let (dx, dk, db) = conv2d_backward(&x, &k, &coeffs, stride, pad);
        let fd_x = fd_grad_input(&x, |xx| objective(&conv2d_forward(xx, &k, &b, stride, pad), &coeffs), 1e-5);
        assert_close(&dx, &fd_x, 1e-6);
        let fd_k = fd_grad_param(&k, |kk| objective(&conv2d_forward(&x, kk, &b, stride, pad), &coeffs), 1e-3);
        assert_close(&dk, &fd_k, 1e-4);
        let fd_b = fd_grad_param(&b, |bb| objective(&conv2d_forward(&x, &k, bb, stride, pad), &coeffs), 1e-3);
        assert_close(&db, &fd_b, 1e-4);
    }

    #[test]
    fn maxpool_selects_maxima_and_routes_gradients() {
        let x = TensorF64::from_vec(
            &[1, 1, 4, 4],
            vec![
                1.0, 2.0, 5.0, 1.0, //
                3.0, 0.0, 1.0, 1.0, //
                9.0, 9.0, 0.0, 2.0, //
                0.0, 1.0, 4.0, 0.0,
            ],
        );
        let (y, idx) = maxpool2_forward(&x);
        assert_eq!(y.data(), &[3.0, 5.0, 9.0, 4.0]);
        // Tie at 9,9 resolves to the first in scan order (index 8).
        assert_eq!(idx[2], 8);
        let dy = TensorF64::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let dx = maxpool2_backward(&dy, &idx, &[1, 1, 4, 4]);
        assert_eq!(dx.data()[4], 1.0);
        assert_eq!(dx.data()[2], 2.0);
        assert_eq!(dx.data()[8], 3.0);
        assert_eq!(dx.data()[14], 4.0);
        assert_eq!(dx.data().iter().sum::<f64>(), 10.0);
    }

    #[test]
    fn leaky_relu_forward_and_backward() {
        let x = TensorF64::from_vec(&[4], vec![-2.0, -0.5, 0.5, 2.0]);
        let y = leaky_relu_forward(x.clone(), 0.1);
        assert_eq!(y.data(), &[-0.2, -0.05, 0.5, 2.0]);
        let dy = TensorF64::from_vec(&[4], vec![1.0, 1.0, 1.0, 1.0]);
        let dx = leaky_relu_backward(&dy, &y, 0.1);
        assert_eq!(dx.data(), &[0.1, 0.1, 1.0, 1.0]);
        // Plain ReLU is the slope-0 case.
        let y0 = leaky_relu_forward(x, 0.0);
        assert_eq!(y0.data(), &[0.0, 0.0, 0.5, 2.0]);
    }

    #[test]
    fn fc_gradients_match_finite_differences() {
        let x = random_f64(&[3, 6], "fc.fd.x");
        let w = random_f32(&[4, 6], "fc.fd.w");
        let b = random_f32(&[4], "fc.fd.b");
        let coeffs = random_f64(&[3, 4], "fc.fd.c");

        let (dx, dw, db) = fc_backward(&x, &w, &coeffs);
        let fd_x = fd_grad_input(&x, |xx| objective(&fc_forward(xx, &w, &b), &coeffs), 1e-5);
        assert_close(&dx, &fd_x, 1e-6);
        let fd_w = fd_grad_param(&w, |ww| objective(&fc_forward(&x, ww, &b), &coeffs), 1e-3);
        assert_close(&dw, &fd_w, 1e-4);
        let fd_b = fd_grad_param(&b, |bb| objective(&fc_forward(&x, &w, bb), &coeffs), 1e-3);
        assert_close(&db, &fd_b, 1e-4);
    }

    #[test]
    fn bn_train_normalizes_and_matches_finite_differences() {
        let x = random_f64(&[8, 5], "bn.fd.x");
        let gamma = random_f32(&[5], "bn.fd.g");
        let beta = random_f32(&[5], "bn.fd.b");
        let coeffs = random_f64(&[8, 5], "bn.fd.c");
        let momentum = 0.9;
        let eps = 1e-5;

        let mut rm = Tensor::zeros(&[5]);
        let mut rv = Tensor::from_vec(&[5], vec![1.0; 5]);
        let (y, cache) = bn_forward_train(&x, &gamma, &beta, &mut rm, &mut rv, momentum, eps);

        // Normalized pre-scale activations have batch mean 0 and variance 1.
        for ni in 0..5 {
            let col: Vec<f64> = (0..8).map(|b| cache.xhat.data()[b * 5 + ni]).collect();
            let mean = col.iter().sum::<f64>() / 8.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
            assert_relative_eq!(mean, 0.0, epsilon = 1e-3);
            assert_relative_eq!(var, 1.0, epsilon = 1e-3);
        }
        assert_eq!(y.shape(), &[8, 5]);

        let (dx, dgamma, dbeta) = bn_backward(&cache, &gamma, &coeffs);
        let fwd = |xx: &TensorF64| {
            let mut rm2 = Tensor::zeros(&[5]);
            let mut rv2 = Tensor::from_vec(&[5], vec![1.0; 5]);
            objective(
                &bn_forward_train(xx, &gamma, &beta, &mut rm2, &mut rv2, momentum, eps).0,
                &coeffs,
            )
        };
        let fd_x = fd_grad_input(&x, fwd, 1e-5);
        assert_close(&dx, &fd_x, 1e-5);

        let fd_g = fd_grad_param(
            &gamma,
            |gg| {
                let mut rm2 = Tensor::zeros(&[5]);
                let mut rv2 = Tensor::from_vec(&[5], vec![1.0; 5]);
                objective(
                    &bn_forward_train(&x, gg, &beta, &mut rm2, &mut rv2, momentum, eps).0,
                    &coeffs,
                )
            },
            1e-3,
        );
        assert_close(&dgamma, &fd_g, 1e-4);
        let fd_be = fd_grad_param(
            &beta,
            |bb| {
                let mut rm2 = Tensor::zeros(&[5]);
                let mut rv2 = Tensor::from_vec(&[5], vec![1.0; 5]);
                objective(
                    &bn_forward_train(&x, &gamma, bb, &mut rm2, &mut rv2, momentum, eps).0,
                    &coeffs,
                )
            },
            1e-3,
        );
        assert_close(&dbeta, &fd_be, 1e-4);
    }

    #[test]
    fn bn_running_stats_update_and_eval_uses_them() {
        let x = random_f64(&[16, 3], "bn.run.x");
        let gamma = Tensor::from_vec(&[3], vec![1.0; 3]);
        let beta = Tensor::zeros(&[3]);
        let mut rm = Tensor::zeros(&[3]);
        let mut rv = Tensor::from_vec(&[3], vec![1.0; 3]);
        let _ = bn_forward_train(&x, &gamma, &beta, &mut rm, &mut rv, 0.9, 1e-5);
        // r = 0.9*prev + 0.1*batch
        let batch_mean0: f64 = (0..16).map(|b| x.data()[b * 3]).sum::<f64>() / 16.0;
        assert_relative_eq!(rm.data()[0] as f64, 0.1 * batch_mean0, epsilon = 1e-6);

        // Eval mode is a pure function of running stats: same input twice
        // gives bit-identical output and leaves the stats untouched.
        let rm_before = rm.clone();
        let e1 = bn_forward_eval(&x, &gamma, &beta, &rm, &rv, 1e-5);
        let e2 = bn_forward_eval(&x, &gamma, &beta, &rm, &rv, 1e-5);
        assert_eq!(e1.data(), e2.data());
        assert_eq!(rm, rm_before);
    }

    #[test]
    fn bce_analytic_values() {
        assert_relative_eq!(bce_loss(0.5, 1.0), core::f64::consts::LN_2, epsilon = 1e-12);
        assert_relative_eq!(bce_loss(0.5, 0.0), core::f64::consts::LN_2, epsilon = 1e-12);
        assert_relative_eq!(bce_loss(0.9, 0.0), -(0.1f64).ln(), epsilon = 1e-12);
        // Perfect predictions cost (almost) nothing after clamping.
        assert!(bce_loss(1.0, 1.0) < 2e-7);
        assert!(bce_loss(0.0, 0.0) < 2e-7);
    }

    #[test]
    fn joint_loss_weighting() {
        assert_relative_eq!(joint_loss(0.7, 0.5, 0.1), 0.75, epsilon = 1e-15);
        assert_eq!(joint_loss(0.7, 0.5, 0.0), 0.7);
        assert_eq!(joint_loss(0.0, 0.0, 0.1), 0.0);
    }

    #[test]
    fn sigmoid_bce_gradient_matches_finite_differences() {
        let logits = vec![0.3, -1.2, 2.0, 0.0];
        let labels = vec![1.0, 0.0, 0.0, 1.0];
        let (probs, loss, dlogits) = sigmoid_bce(&logits, &labels);
        assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));
        assert!(loss.is_finite() && loss > 0.0);
        for i in 0..logits.len() {
            let h = 1e-6;
            let mut lp = logits.clone();
            lp[i] += h;
            let mut lm = logits.clone();
            lm[i] -= h;
            let fd = (sigmoid_bce(&lp, &labels).1 - sigmoid_bce(&lm, &labels).1) / (2.0 * h);
            assert_relative_eq!(dlogits[i], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_relative_eq!(sigmoid(0.0), 0.5, epsilon = 1e-15);
    }
}
