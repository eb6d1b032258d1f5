//! Discrete-logarithm concept class and its kernel-learning pipeline.

mod group;
mod kernel;
mod pipeline;
mod ridge;

pub use group::{find_generator, is_prime, mod_pow, Concept, DlpGroup, MAX_MODULUS};
pub use kernel::{
    feature_state, kernel_entry, kernel_matrix, orbit, padded_kernel_entry, FeatureConfig,
    KernelMatrix, PSD_TOLERANCE,
};
pub use pipeline::{
    controlled_multiplier, decode_sample, delegated_kernel_pipeline, encode_sample,
    KernelEstimation, PipelineReport,
};
pub use ridge::{kernel_predict, train_kernel_classifier, RidgeModel};
