//! Variational classifier trained through the delegated protocol.

mod cost;
mod delegated;
mod model;
mod train;

pub use cost::{
    assemble_gradient, classify, expectation, finite_difference_gradient, local_cost_and_gradient,
    local_sample_gradient, mse_cost, mse_from, norm, parameter_shift_gradient, predict,
    split_shift_values, GradientMode,
};
pub use delegated::{delegated_evaluate, delegated_gradient, delegated_inference, response_bits};
pub use model::{toy_dataset, Ansatz, Class, Entangler, LabeledSample, SampleInput, VariationalModel};
pub use train::{
    delegated_batch_gradient, descend, train_delegated, train_delegated_on, train_local,
    upload_parameters, write_history_csv, DivergenceGuard, IterationRecord, TrainConfig,
    TrainOutcome, DIVERGENCE_FACTOR, DIVERGENCE_PATIENCE,
};
