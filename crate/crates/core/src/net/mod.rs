//! Small convolutional network with manual backpropagation.
//!
//! Submodules: [`tensor`] (storage), [`layers`] (numeric kernels),
//! [`model`] (architecture and parameter registry), [`adam`] (optimizer),
//! [`train`] (the loop). Parameters live as `f32`; all arithmetic is `f64`.

pub mod adam;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, adam_update_value, AdamConfig, AdamState};
pub use layers::{bce_loss, joint_loss, sigmoid, sigmoid_bce, PROB_CLAMP};
pub use model::{
    backward_spatial, backward_temporal, embed_forward, forward_spatial_eval,
    forward_spatial_train, forward_temporal_eval, forward_temporal_train, images_to_batch,
    is_conv_tensor, shape_of, trainable_tensors, ConvNetParams, Gradients, NetHyper, EMBED_DIM,
    INPUT_SIZE, STATE_SHAPES, STATE_TENSORS,
};
pub use tensor::{Tensor, TensorF64};
pub use train::{
    train, train_from, BlockPool, LossRecord, ModelCheckpoint, TaskSelection, TrainConfig,
    TrainError, TrainingPool, CHECKPOINT_VERSION,
};
