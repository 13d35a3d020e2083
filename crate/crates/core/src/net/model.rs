//! The two-task embedding network.
//!
//! One shared convolutional stack (3 conv layers, 64x64 input, 512-dim
//! flattened output) feeds two heads: a temporal head scoring whether the
//! second crop of a pair lies a short time after the first, and a spatial
//! head scoring whether a crop overlaps the person. The conv parameters
//! have a single storage location; both temporal streams and the spatial
//! stream read and accumulate gradients into the same tensors.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::layers::{
    bn_forward_eval, bn_forward_train, bn_backward, conv2d_backward, conv2d_forward, fc_backward,
    fc_forward, leaky_relu_backward, leaky_relu_forward, maxpool2_backward, maxpool2_forward,
    sigmoid, BnCache,
};
use super::tensor::{Tensor, TensorF64};
use crate::image::GrayImage;
#[allow(unused_imports)]
use crate::math::FloatMath;
use crate::seed::make_rng;

/// Side length of the network input.
pub const INPUT_SIZE: usize = 64;
/// Dimension of the shared embedding (final pooled conv output).
pub const EMBED_DIM: usize = 512;

/// Non-tensor constants the forward pass depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetHyper {
    pub leaky_slope: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

impl Default for NetHyper {
    fn default() -> Self {
        Self {
            leaky_slope: 0.1,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
        }
    }
}

macro_rules! state_tensors {
    ($($field:ident : $name:literal => [$($dim:expr),+] trainable=$tr:literal;)+) => {
        /// Every tensor of the model, in checkpoint declaration order.
        #[derive(Debug, Clone, PartialEq)]
        pub struct ConvNetParams {
            $(pub $field: Tensor,)+
        }

        /// All state tensor names in declaration order.
        pub const STATE_TENSORS: &[&str] = &[$($name),+];

        /// Expected shape per state tensor, aligned with [`STATE_TENSORS`].
        pub const STATE_SHAPES: &[&[usize]] = &[$(&[$($dim),+]),+];

        const TRAINABLE_FLAGS: &[bool] = &[$($tr),+];

        impl ConvNetParams {
            pub fn get(&self, name: &str) -> &Tensor {
                match name {
                    $($name => &self.$field,)+
                    _ => panic!("unknown tensor {name}"),
                }
            }

            pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
                match name {
                    $($name => &mut self.$field,)+
                    _ => panic!("unknown tensor {name}"),
                }
            }
        }
    };
}

state_tensors! {
    conv1_kernel: "conv1.kernel" => [8, 1, 5, 5] trainable=true;
    conv1_bias:   "conv1.bias"   => [8] trainable=true;
    conv2_kernel: "conv2.kernel" => [16, 8, 3, 3] trainable=true;
    conv2_bias:   "conv2.bias"   => [16] trainable=true;
    conv3_kernel: "conv3.kernel" => [32, 16, 3, 3] trainable=true;
    conv3_bias:   "conv3.bias"   => [32] trainable=true;
    t_fc1_weight: "temporal.fc1.weight" => [128, 1024] trainable=true;
    t_fc1_bias:   "temporal.fc1.bias"   => [128] trainable=true;
    t_bn1_gamma:  "temporal.bn1.gamma"  => [128] trainable=true;
    t_bn1_beta:   "temporal.bn1.beta"   => [128] trainable=true;
    t_bn1_mean:   "temporal.bn1.running_mean" => [128] trainable=false;
    t_bn1_var:    "temporal.bn1.running_var"  => [128] trainable=false;
    t_fc2_weight: "temporal.fc2.weight" => [64, 128] trainable=true;
    t_fc2_bias:   "temporal.fc2.bias"   => [64] trainable=true;
    t_bn2_gamma:  "temporal.bn2.gamma"  => [64] trainable=true;
    t_bn2_beta:   "temporal.bn2.beta"   => [64] trainable=true;
    t_bn2_mean:   "temporal.bn2.running_mean" => [64] trainable=false;
    t_bn2_var:    "temporal.bn2.running_var"  => [64] trainable=false;
    t_fc3_weight: "temporal.fc3.weight" => [1, 64] trainable=true;
    t_fc3_bias:   "temporal.fc3.bias"   => [1] trainable=true;
    s_fc1_weight: "spatial.fc1.weight" => [128, 512] trainable=true;
    s_fc1_bias:   "spatial.fc1.bias"   => [128] trainable=true;
    s_bn1_gamma:  "spatial.bn1.gamma"  => [128] trainable=true;
    s_bn1_beta:   "spatial.bn1.beta"   => [128] trainable=true;
    s_bn1_mean:   "spatial.bn1.running_mean" => [128] trainable=false;
    s_bn1_var:    "spatial.bn1.running_var"  => [128] trainable=false;
    s_fc2_weight: "spatial.fc2.weight" => [1, 128] trainable=true;
    s_fc2_bias:   "spatial.fc2.bias"   => [1] trainable=true;
}

/// Names of the gradient-bearing tensors, in declaration order.
pub fn trainable_tensors() -> impl Iterator<Item = &'static str> {
    STATE_TENSORS
        .iter()
        .zip(TRAINABLE_FLAGS)
        .filter(|(_, &t)| t)
        .map(|(&n, _)| n)
}

/// True for convolutional parameters, which train at the reduced rate.
pub fn is_conv_tensor(name: &str) -> bool {
    name.starts_with("conv")
}

/// Expected shape of a state tensor.
pub fn shape_of(name: &str) -> &'static [usize] {
    STATE_TENSORS
        .iter()
        .position(|&n| n == name)
        .map(|i| STATE_SHAPES[i])
        .unwrap_or_else(|| panic!("unknown tensor {name}"))
}

impl ConvNetParams {
    /// He-initialized weights, zeroed final layers and biases, identity
    /// batch norm. The zero final layers make every untrained probability
    /// exactly 0.5. Deterministic in `seed`.
    pub fn init(seed: u64) -> Self {
        let mut rng = make_rng(seed, "train.init");
        let mut he = |shape: &[usize], fan_in: usize| {
            let normal = Normal::new(0.0f64, (2.0 / fan_in as f64).sqrt()).expect("valid sigma");
            let data = (0..shape.iter().product::<usize>())
                .map(|_| normal.sample(&mut rng) as f32)
                .collect();
            Tensor::from_vec(shape, data)
        };
        let ones = |n: usize| Tensor::from_vec(&[n], alloc::vec![1.0; n]);
        Self {
            conv1_kernel: he(&[8, 1, 5, 5], 25),
            conv1_bias: Tensor::zeros(&[8]),
            conv2_kernel: he(&[16, 8, 3, 3], 72),
            conv2_bias: Tensor::zeros(&[16]),
            conv3_kernel: he(&[32, 16, 3, 3], 144),
            conv3_bias: Tensor::zeros(&[32]),
            t_fc1_weight: he(&[128, 1024], 1024),
            t_fc1_bias: Tensor::zeros(&[128]),
            t_bn1_gamma: ones(128),
            t_bn1_beta: Tensor::zeros(&[128]),
            t_bn1_mean: Tensor::zeros(&[128]),
            t_bn1_var: ones(128),
            t_fc2_weight: he(&[64, 128], 128),
            t_fc2_bias: Tensor::zeros(&[64]),
            t_bn2_gamma: ones(64),
            t_bn2_beta: Tensor::zeros(&[64]),
            t_bn2_mean: Tensor::zeros(&[64]),
            t_bn2_var: ones(64),
            t_fc3_weight: Tensor::zeros(&[1, 64]),
            t_fc3_bias: Tensor::zeros(&[1]),
            s_fc1_weight: he(&[128, 512], 512),
            s_fc1_bias: Tensor::zeros(&[128]),
            s_bn1_gamma: ones(128),
            s_bn1_beta: Tensor::zeros(&[128]),
            s_bn1_mean: Tensor::zeros(&[128]),
            s_bn1_var: ones(128),
            s_fc2_weight: Tensor::zeros(&[1, 128]),
            s_fc2_bias: Tensor::zeros(&[1]),
        }
    }

    /// Random non-degenerate weights everywhere, including the final
    /// layers. Used by untrained baselines and order-sensitivity tests.
    pub fn random(seed: u64) -> Self {
        let mut p = Self::init(seed);
        let mut rng = make_rng(seed, "train.init.final");
        for name in ["temporal.fc3.weight", "spatial.fc2.weight"] {
            for v in p.get_mut(name).data_mut() {
                *v = rng.random_range(-0.1..0.1);
            }
        }
        p
    }

    pub fn all_finite(&self) -> bool {
        STATE_TENSORS.iter().all(|n| self.get(n).all_finite())
    }
}

/// Accumulated parameter gradients keyed by tensor name.
#[derive(Debug, Default)]
pub struct Gradients {
    grads: BTreeMap<&'static str, TensorF64>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `g` into the slot for `name` (shared tensors accumulate).
    pub fn add(&mut self, name: &'static str, g: TensorF64) {
        match self.grads.get_mut(name) {
            Some(acc) => acc.add_assign(&g),
            None => {
                self.grads.insert(name, g);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&TensorF64> {
        self.grads.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

/// Converts 64x64 grayscale crops to a `[B,1,64,64]` batch scaled to [0,1].
pub fn images_to_batch(images: &[&GrayImage]) -> TensorF64 {
    assert!(!images.is_empty(), "empty image batch");
    for im in images {
        assert_eq!(
            (im.width(), im.height()),
            (INPUT_SIZE as u32, INPUT_SIZE as u32),
            "network input must be {INPUT_SIZE}x{INPUT_SIZE}"
        );
    }
    let px = INPUT_SIZE * INPUT_SIZE;
    let mut data = Vec::with_capacity(images.len() * px);
    for im in images {
        data.extend(im.as_slice().iter().map(|&v| v as f64 / 255.0));
    }
    TensorF64::from_vec(&[images.len(), 1, INPUT_SIZE, INPUT_SIZE], data)
}

/// Activations retained by a train-mode pass through the conv stack.
pub struct EmbedCache {
    x: TensorF64,
    a1: TensorF64,
    idx1: Vec<u32>,
    p1: TensorF64,
    a2: TensorF64,
    idx2: Vec<u32>,
    p2: TensorF64,
    a3: TensorF64,
    idx3: Vec<u32>,
}

/// Shared conv stack: `[B,1,64,64]` to `[B,512]`.
///
/// conv(8@5x5, stride 2, pad 2) - ReLU - pool2 - conv(16@3x3, pad 1) - ReLU
/// - pool2 - conv(32@3x3, pad 1) - leaky ReLU - pool2 - flatten.
pub fn embed_forward(
    params: &ConvNetParams,
    hyper: &NetHyper,
    x: &TensorF64,
    want_cache: bool,
) -> (TensorF64, Option<EmbedCache>) {
    let shape = x.shape();
    assert_eq!(shape.len(), 4, "expected [B,1,64,64] input, got {:?}", shape);
    assert_eq!(
        &shape[1..],
        &[1, INPUT_SIZE, INPUT_SIZE],
        "expected [B,1,64,64] input, got {:?}",
        shape
    );
    let bsz = shape[0];

    let c1 = conv2d_forward(x, &params.conv1_kernel, &params.conv1_bias, 2, 2);
    let a1 = leaky_relu_forward(c1, 0.0);
    let (p1, idx1) = maxpool2_forward(&a1);
    let c2 = conv2d_forward(&p1, &params.conv2_kernel, &params.conv2_bias, 1, 1);
    let a2 = leaky_relu_forward(c2, 0.0);
    let (p2, idx2) = maxpool2_forward(&a2);
    let c3 = conv2d_forward(&p2, &params.conv3_kernel, &params.conv3_bias, 1, 1);
    let a3 = leaky_relu_forward(c3, hyper.leaky_slope);
    let (p3, idx3) = maxpool2_forward(&a3);

    let embed = TensorF64::from_vec(&[bsz, EMBED_DIM], p3.data().to_vec());
    let cache = want_cache.then(|| EmbedCache {
        x: x.clone(),
        a1,
        idx1,
        p1,
        a2,
        idx2,
        p2,
        a3,
        idx3,
    });
    (embed, cache)
}

/// Backpropagates an embedding gradient through the conv stack,
/// accumulating kernel/bias gradients. Returns nothing: the image gradient
/// is not needed.
pub fn embed_backward(
    params: &ConvNetParams,
    hyper: &NetHyper,
    cache: &EmbedCache,
    d_embed: &TensorF64,
    grads: &mut Gradients,
) {
    let bsz = cache.x.shape()[0];
    assert_eq!(d_embed.shape(), &[bsz, EMBED_DIM], "embedding gradient shape mismatch");

    let d_p3 = TensorF64::from_vec(&[bsz, 32, 4, 4], d_embed.data().to_vec());
    let d_a3 = maxpool2_backward(&d_p3, &cache.idx3, cache.a3.shape());
    let d_c3 = leaky_relu_backward(&d_a3, &cache.a3, hyper.leaky_slope);
    let (d_p2, dk3, db3) = conv2d_backward(&cache.p2, &params.conv3_kernel, &d_c3, 1, 1);
    grads.add("conv3.kernel", dk3);
    grads.add("conv3.bias", db3);

    let d_a2 = maxpool2_backward(&d_p2, &cache.idx2, cache.a2.shape());
    let d_c2 = leaky_relu_backward(&d_a2, &cache.a2, 0.0);
    let (d_p1, dk2, db2) = conv2d_backward(&cache.p1, &params.conv2_kernel, &d_c2, 1, 1);
    grads.add("conv2.kernel", dk2);
    grads.add("conv2.bias", db2);

    let d_a1 = maxpool2_backward(&d_p1, &cache.idx1, cache.a1.shape());
    let d_c1 = leaky_relu_backward(&d_a1, &cache.a1, 0.0);
    let (_, dk1, db1) = conv2d_backward(&cache.x, &params.conv1_kernel, &d_c1, 2, 2);
    grads.add("conv1.kernel", dk1);
    grads.add("conv1.bias", db1);
}

fn concat_rows(a: &TensorF64, b: &TensorF64) -> TensorF64 {
    let (bsz, n) = (a.shape()[0], a.shape()[1]);
    assert_eq!(a.shape(), b.shape(), "concat operand shapes differ");
    let mut data = Vec::with_capacity(bsz * 2 * n);
    for i in 0..bsz {
        data.extend_from_slice(&a.data()[i * n..(i + 1) * n]);
        data.extend_from_slice(&b.data()[i * n..(i + 1) * n]);
    }
    TensorF64::from_vec(&[bsz, 2 * n], data)
}

fn split_rows(z: &TensorF64) -> (TensorF64, TensorF64) {
    let (bsz, n2) = (z.shape()[0], z.shape()[1]);
    let n = n2 / 2;
    let mut a = Vec::with_capacity(bsz * n);
    let mut b = Vec::with_capacity(bsz * n);
    for i in 0..bsz {
        a.extend_from_slice(&z.data()[i * n2..i * n2 + n]);
        b.extend_from_slice(&z.data()[i * n2 + n..(i + 1) * n2]);
    }
    (
        TensorF64::from_vec(&[bsz, n], a),
        TensorF64::from_vec(&[bsz, n], b),
    )
}

/// Activations retained by a train-mode temporal head pass.
pub struct TemporalHeadCache {
    z: TensorF64,
    bn1: BnCache,
    h1: TensorF64,
    bn2: BnCache,
    h2: TensorF64,
}

/// Temporal head, train mode: concat(1024) - FC128 - BN - ReLU - FC64 - BN
/// - ReLU - FC1. Returns raw logits; updates running batch-norm stats.
pub fn temporal_head_train(
    params: &mut ConvNetParams,
    hyper: &NetHyper,
    embed_a: &TensorF64,
    embed_b: &TensorF64,
) -> (Vec<f64>, TemporalHeadCache) {
    let z = concat_rows(embed_a, embed_b);
    let f1 = fc_forward(&z, &params.t_fc1_weight, &params.t_fc1_bias);
    let (b1, bn1) = bn_forward_train(
        &f1,
        &params.t_bn1_gamma,
        &params.t_bn1_beta,
        &mut params.t_bn1_mean,
        &mut params.t_bn1_var,
        hyper.bn_momentum,
        hyper.bn_epsilon,
    );
    let h1 = leaky_relu_forward(b1, 0.0);
    let f2 = fc_forward(&h1, &params.t_fc2_weight, &params.t_fc2_bias);
    let (b2, bn2) = bn_forward_train(
        &f2,
        &params.t_bn2_gamma,
        &params.t_bn2_beta,
        &mut params.t_bn2_mean,
        &mut params.t_bn2_var,
        hyper.bn_momentum,
        hyper.bn_epsilon,
    );
    let h2 = leaky_relu_forward(b2, 0.0);
    let f3 = fc_forward(&h2, &params.t_fc3_weight, &params.t_fc3_bias);
    let logits = f3.data().to_vec();
    (logits, TemporalHeadCache { z, bn1, h1, bn2, h2 })
}

/// Temporal head, eval mode: running stats, no state change, probabilities.
pub fn temporal_head_eval(
    params: &ConvNetParams,
    hyper: &NetHyper,
    embed_a: &TensorF64,
    embed_b: &TensorF64,
) -> Vec<f64> {
    let z = concat_rows(embed_a, embed_b);
    let f1 = fc_forward(&z, &params.t_fc1_weight, &params.t_fc1_bias);
    let b1 = bn_forward_eval(
        &f1,
        &params.t_bn1_gamma,
        &params.t_bn1_beta,
        &params.t_bn1_mean,
        &params.t_bn1_var,
        hyper.bn_epsilon,
    );
    let h1 = leaky_relu_forward(b1, 0.0);
    let f2 = fc_forward(&h1, &params.t_fc2_weight, &params.t_fc2_bias);
    let b2 = bn_forward_eval(
        &f2,
        &params.t_bn2_gamma,
        &params.t_bn2_beta,
        &params.t_bn2_mean,
        &params.t_bn2_var,
        hyper.bn_epsilon,
    );
    let h2 = leaky_relu_forward(b2, 0.0);
    let f3 = fc_forward(&h2, &params.t_fc3_weight, &params.t_fc3_bias);
    f3.data().iter().map(|&z| sigmoid(z)).collect()
}

/// Backward through the temporal head. Returns gradients for the two
/// embedding streams.
pub fn temporal_head_backward(
    params: &ConvNetParams,
    cache: &TemporalHeadCache,
    dlogits: &[f64],
    grads: &mut Gradients,
) -> (TensorF64, TensorF64) {
    let bsz = cache.z.shape()[0];
    assert_eq!(dlogits.len(), bsz, "logit gradient count mismatch");
    let dy3 = TensorF64::from_vec(&[bsz, 1], dlogits.to_vec());

    let (dh2, dw3, db3) = fc_backward(&cache.h2, &params.t_fc3_weight, &dy3);
    grads.add("temporal.fc3.weight", dw3);
    grads.add("temporal.fc3.bias", db3);

    let db2out = leaky_relu_backward(&dh2, &cache.h2, 0.0);
    let (df2, dg2, dbe2) = bn_backward(&cache.bn2, &params.t_bn2_gamma, &db2out);
    grads.add("temporal.bn2.gamma", dg2);
    grads.add("temporal.bn2.beta", dbe2);

    let (dh1, dw2, db2) = fc_backward(&cache.h1, &params.t_fc2_weight, &df2);
    grads.add("temporal.fc2.weight", dw2);
    grads.add("temporal.fc2.bias", db2);

    let db1out = leaky_relu_backward(&dh1, &cache.h1, 0.0);
    let (df1, dg1, dbe1) = bn_backward(&cache.bn1, &params.t_bn1_gamma, &db1out);
    grads.add("temporal.bn1.gamma", dg1);
    grads.add("temporal.bn1.beta", dbe1);

    let (dz, dw1, db1) = fc_backward(&cache.z, &params.t_fc1_weight, &df1);
    grads.add("temporal.fc1.weight", dw1);
    grads.add("temporal.fc1.bias", db1);

    split_rows(&dz)
}

/// Activations retained by a train-mode spatial head pass.
pub struct SpatialHeadCache {
    z: TensorF64,
    bn1: BnCache,
    h1: TensorF64,
}

/// Spatial head, train mode: 512 - FC128 - BN - ReLU - FC1. Raw logits.
pub fn spatial_head_train(
    params: &mut ConvNetParams,
    hyper: &NetHyper,
    embed: &TensorF64,
) -> (Vec<f64>, SpatialHeadCache) {
    let f1 = fc_forward(embed, &params.s_fc1_weight, &params.s_fc1_bias);
    let (b1, bn1) = bn_forward_train(
        &f1,
        &params.s_bn1_gamma,
        &params.s_bn1_beta,
        &mut params.s_bn1_mean,
        &mut params.s_bn1_var,
        hyper.bn_momentum,
        hyper.bn_epsilon,
    );
    let h1 = leaky_relu_forward(b1, 0.0);
    let f2 = fc_forward(&h1, &params.s_fc2_weight, &params.s_fc2_bias);
    let logits = f2.data().to_vec();
    (
        logits,
        SpatialHeadCache {
            z: embed.clone(),
            bn1,
            h1,
        },
    )
}

/// Spatial head, eval mode: probabilities from running stats.
pub fn spatial_head_eval(params: &ConvNetParams, hyper: &NetHyper, embed: &TensorF64) -> Vec<f64> {
    let f1 = fc_forward(embed, &params.s_fc1_weight, &params.s_fc1_bias);
    let b1 = bn_forward_eval(
        &f1,
        &params.s_bn1_gamma,
        &params.s_bn1_beta,
        &params.s_bn1_mean,
        &params.s_bn1_var,
        hyper.bn_epsilon,
    );
    let h1 = leaky_relu_forward(b1, 0.0);
    let f2 = fc_forward(&h1, &params.s_fc2_weight, &params.s_fc2_bias);
    f2.data().iter().map(|&z| sigmoid(z)).collect()
}

/// Backward through the spatial head. Returns the embedding gradient.
pub fn spatial_head_backward(
    params: &ConvNetParams,
    cache: &SpatialHeadCache,
    dlogits: &[f64],
    grads: &mut Gradients,
) -> TensorF64 {
    let bsz = cache.z.shape()[0];
    assert_eq!(dlogits.len(), bsz, "logit gradient count mismatch");
    let dy2 = TensorF64::from_vec(&[bsz, 1], dlogits.to_vec());

    let (dh1, dw2, db2) = fc_backward(&cache.h1, &params.s_fc2_weight, &dy2);
    grads.add("spatial.fc2.weight", dw2);
    grads.add("spatial.fc2.bias", db2);

    let db1out = leaky_relu_backward(&dh1, &cache.h1, 0.0);
    let (df1, dg1, dbe1) = bn_backward(&cache.bn1, &params.s_bn1_gamma, &db1out);
    grads.add("spatial.bn1.gamma", dg1);
    grads.add("spatial.bn1.beta", dbe1);

    let (dz, dw1, db1) = fc_backward(&cache.z, &params.s_fc1_weight, &df1);
    grads.add("spatial.fc1.weight", dw1);
    grads.add("spatial.fc1.bias", db1);
    dz
}

/// Full temporal-task forward in train mode: probabilities plus everything
/// needed to backpropagate.
pub struct TemporalPassCache {
    pub embed_a: EmbedCache,
    pub embed_b: EmbedCache,
    pub head: TemporalHeadCache,
}

pub fn forward_temporal_train(
    params: &mut ConvNetParams,
    hyper: &NetHyper,
    img_a: &TensorF64,
    img_b: &TensorF64,
) -> (Vec<f64>, TemporalPassCache) {
    let (za, ca) = embed_forward(params, hyper, img_a, true);
    let (zb, cb) = embed_forward(params, hyper, img_b, true);
    let (logits, head) = temporal_head_train(params, hyper, &za, &zb);
    (
        logits,
        TemporalPassCache {
            embed_a: ca.expect("cache requested"),
            embed_b: cb.expect("cache requested"),
            head,
        },
    )
}

pub fn forward_temporal_eval(
    params: &ConvNetParams,
    hyper: &NetHyper,
    img_a: &TensorF64,
    img_b: &TensorF64,
) -> Vec<f64> {
    let (za, _) = embed_forward(params, hyper, img_a, false);
    let (zb, _) = embed_forward(params, hyper, img_b, false);
    temporal_head_eval(params, hyper, &za, &zb)
}

/// Backward for the whole temporal task; conv gradients accumulate from
/// both streams.
pub fn backward_temporal(
    params: &ConvNetParams,
    hyper: &NetHyper,
    cache: &TemporalPassCache,
    dlogits: &[f64],
    grads: &mut Gradients,
) {
    let (dza, dzb) = temporal_head_backward(params, &cache.head, dlogits, grads);
    embed_backward(params, hyper, &cache.embed_a, &dza, grads);
    embed_backward(params, hyper, &cache.embed_b, &dzb, grads);
}

pub struct SpatialPassCache {
    pub embed: EmbedCache,
    pub head: SpatialHeadCache,
}

pub fn forward_spatial_train(
    params: &mut ConvNetParams,
    hyper: &NetHyper,
    img: &TensorF64,
) -> (Vec<f64>, SpatialPassCache) {
    let (z, c) = embed_forward(params, hyper, img, true);
    let (logits, head) = spatial_head_train(params, hyper, &z);
    (
        logits,
        SpatialPassCache {
            embed: c.expect("cache requested"),
            head,
        },
    )
}

pub fn forward_spatial_eval(params: &ConvNetParams, hyper: &NetHyper, img: &TensorF64) -> Vec<f64> {
    let (z, _) = embed_forward(params, hyper, img, false);
    spatial_head_eval(params, hyper, &z)
}

pub fn backward_spatial(
    params: &ConvNetParams,
    hyper: &NetHyper,
    cache: &SpatialPassCache,
    dlogits: &[f64],
    grads: &mut Gradients,
) {
    let dz = spatial_head_backward(params, &cache.head, dlogits, grads);
    embed_backward(params, hyper, &cache.embed, &dz, grads);
}
