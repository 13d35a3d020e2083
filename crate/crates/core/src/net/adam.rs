//! Adam with bias correction and a two-tier learning-rate map: shared conv
//! layers train at a reduced rate, everything else at the base rate.
//!
//! Moments are stored as `f32` tensors (checkpoint width); each step runs
//! the update in `f64` and rounds once on write-back.

use alloc::vec::Vec;

use super::model::{is_conv_tensor, shape_of, trainable_tensors, ConvNetParams, Gradients};
use super::tensor::{Tensor, TensorF64};
#[allow(unused_imports)]
use crate::math::FloatMath;

/// Optimizer constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub base_lr: f64,
    pub conv_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            base_lr: 1e-4,
            conv_lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators for every trainable tensor, plus the
/// shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    /// Aligned with [`trainable_tensors`] order.
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new() -> Self {
        let m: Vec<Tensor> = trainable_tensors().map(|n| Tensor::zeros(shape_of(n))).collect();
        Self {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new()
    }
}

/// One Adam update for a single value. `t` must already count this step
/// (first call passes `t = 1`).
///
/// With `g = 1` from a fresh state: `m = 0.1`, `v = 0.001`, bias-corrected
/// `m_hat = 1`, `v_hat = 1`, and the parameter moves by `lr / (1 + eps)`.
#[allow(clippy::too_many_arguments)]
pub fn adam_update_value(
    w: f64,
    g: f64,
    m: &mut f64,
    v: &mut f64,
    t: u64,
    lr: f64,
    cfg: &AdamConfig,
) -> f64 {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    let m_hat = *m / (1.0 - pow_int(cfg.beta1, t));
    let v_hat = *v / (1.0 - pow_int(cfg.beta2, t));
    w - lr * m_hat / (v_hat.sqrt() + cfg.epsilon)
}

fn pow_int(base: f64, exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// Applies one optimizer step to every trainable tensor. Tensors missing
/// from `grads` are treated as zero-gradient (their moments still decay).
/// Increments `state.t` exactly once.
pub fn adam_step(
    params: &mut ConvNetParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    state.t += 1;
    let t = state.t;
    for (i, name) in trainable_tensors().enumerate() {
        let lr = if is_conv_tensor(name) { cfg.conv_lr } else { cfg.base_lr };
        let param = params.get_mut(name);
        if let Some(g) = grads.get(name) {
            assert_eq!(
                g.shape(),
                param.shape(),
                "gradient shape mismatch for {name}"
            );
        }
        let zero = TensorF64::zeros(param.shape());
        let g = grads.get(name).unwrap_or(&zero);
        let md = state.m[i].data_mut();
        let vd = state.v[i].data_mut();
        for (j, w) in param.data_mut().iter_mut().enumerate() {
            let mut m = md[j] as f64;
            let mut v = vd[j] as f64;
            let new_w = adam_update_value(*w as f64, g.data()[j], &mut m, &mut v, t, lr, cfg);
            *w = new_w as f32;
            md[j] = m as f32;
            vd[j] = v as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_step_matches_hand_computed_values() {
        let cfg = AdamConfig::default();
        let mut m = 0.0;
        let mut v = 0.0;
        let w = adam_update_value(1.0, 1.0, &mut m, &mut v, 1, 1e-4, &cfg);
        assert!((m - 0.1).abs() < 1e-15);
        assert!((v - 0.001).abs() < 1e-15);
        let m_hat = m / (1.0 - 0.9);
        let v_hat = v / (1.0 - 0.999);
        assert!((m_hat - 1.0).abs() < 1e-12);
        assert!((v_hat - 1.0).abs() < 1e-12);
        let expected = 1.0 - 1e-4 / (1.0 + 1e-8);
        assert!((w - expected).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_moves_linearly_after_bias_correction() {
        // With a constant gradient, m_hat / sqrt(v_hat) stays exactly 1,
        // so each step moves by lr / (1 + eps).
        let cfg = AdamConfig::default();
        let mut m = 0.0;
        let mut v = 0.0;
        let mut w = 0.5;
        for t in 1..=3u64 {
            w = adam_update_value(w, 1.0, &mut m, &mut v, t, 1e-4, &cfg);
            let expected = 0.5 - t as f64 * 1e-4 / (1.0 + 1e-8);
            assert_relative_eq!(w, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_gradient_fresh_state_leaves_params_unchanged() {
        let mut params = ConvNetParams::init(3);
        let before = params.clone();
        let mut state = AdamState::new();
        adam_step(&mut params, &Gradients::new(), &mut state, &AdamConfig::default());
        assert_eq!(params, before);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn conv_layers_step_ten_times_smaller() {
        let mut params = ConvNetParams::init(5);
        // Flat parameter values isolate the step size.
        for v in params.conv1_kernel.data_mut() {
            *v = 0.5;
        }
        for v in params.t_fc1_weight.data_mut() {
            *v = 0.5;
        }
        let mut grads = Gradients::new();
        grads.add(
            "conv1.kernel",
            TensorF64::from_vec(&[8, 1, 5, 5], alloc::vec![1.0; 200]),
        );
        grads.add(
            "temporal.fc1.weight",
            TensorF64::from_vec(&[128, 1024], alloc::vec![1.0; 128 * 1024]),
        );
        let mut state = AdamState::new();
        let cfg = AdamConfig::default();
        adam_step(&mut params, &grads, &mut state, &cfg);

        let conv_step = 0.5 - params.conv1_kernel.data()[0] as f64;
        let fc_step = 0.5 - params.t_fc1_weight.data()[0] as f64;
        assert_relative_eq!(conv_step, 1e-5, max_relative = 1e-2);
        assert_relative_eq!(fc_step, 1e-4, max_relative = 1e-2);
        assert_relative_eq!(conv_step / fc_step, 0.1, max_relative = 2e-2);
    }

    #[test]
    fn moments_align_with_trainable_tensors() {
        let state = AdamState::new();
        assert_eq!(state.m.len(), trainable_tensors().count());
        for (i, name) in trainable_tensors().enumerate() {
            assert_eq!(state.m[i].shape(), shape_of(name), "{name}");
            assert_eq!(state.v[i].shape(), shape_of(name), "{name}");
        }
        assert_eq!(state.t, 0);
    }

    #[test]
    #[should_panic(expected = "gradient shape mismatch")]
    fn wrong_gradient_shape_is_rejected() {
        let mut params = ConvNetParams::init(1);
        let mut grads = Gradients::new();
        grads.add("conv1.bias", TensorF64::zeros(&[3]));
        adam_step(&mut params, &grads, &mut AdamState::new(), &AdamConfig::default());
    }

    #[test]
    fn integer_power_matches_repeated_multiplication() {
        for t in [1u64, 2, 7, 40, 1000] {
            let mut slow = 1.0f64;
            for _ in 0..t {
                slow *= 0.999;
            }
            assert_relative_eq!(pow_int(0.999, t), slow, max_relative = 1e-12);
        }
        assert_eq!(pow_int(0.9, 0), 1.0);
    }
}
