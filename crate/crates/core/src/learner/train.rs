use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Channel, CommStats, Message, MessageKind, VALUE_BITS};

use super::cost::{assemble_gradient, local_cost_and_gradient, norm, GradientMode};
use super::delegated::delegated_gradient;
use super::model::{LabeledSample, VariationalModel};

/// Consecutive iterations above the divergence threshold before aborting.
pub const DIVERGENCE_PATIENCE: usize = 20;
/// Cost multiple of the initial cost counted as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub gradient: GradientMode,
    /// 0 selects exact expectations.
    pub shots: u64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        self.gradient.validate()
    }
}

/// One row of training history. Communication columns count this iteration only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub bits_sent: u64,
    pub qubits_sent: u64,
    pub rounds: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: VariationalModel,
    pub history: Vec<IterationRecord>,
    /// Parameters before each update, then the final ones.
    pub trajectory: Vec<Vec<f64>>,
}

pub fn write_history_csv<W: Write>(history: &[IterationRecord], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for r in history {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Guards a training loop against runaway cost.
#[derive(Clone, Debug, Default)]
pub struct DivergenceGuard {
    initial: Option<f64>,
    streak: usize,
}

impl DivergenceGuard {
    pub fn observe(&mut self, iteration: usize, cost: f64) -> Result<()> {
        let initial = *self.initial.get_or_insert(cost);
        if !cost.is_finite() || cost > DIVERGENCE_FACTOR * initial {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        if self.streak >= DIVERGENCE_PATIENCE || !cost.is_finite() {
            return Err(Error::Diverged { iteration, cost });
        }
        Ok(())
    }
}

/// `θ ← θ − η g`.
pub fn descend(model: &VariationalModel, grad: &[f64], learning_rate: f64) -> Result<VariationalModel> {
    let theta = model
        .theta()
        .iter()
        .zip(grad)
        .map(|(t, g)| t - learning_rate * g)
        .collect();
    model.clone().with_theta(theta)
}

fn run<F>(model: VariationalModel, config: &TrainConfig, mut step: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &VariationalModel) -> Result<(f64, Vec<f64>, CommStats)>,
{
    config.validate()?;
    let mut model = model;
    let mut history = Vec::with_capacity(config.max_iterations);
    let mut trajectory = Vec::with_capacity(config.max_iterations + 1);
    let mut guard = DivergenceGuard::default();
    for iteration in 0..config.max_iterations {
        trajectory.push(model.theta().to_vec());
        let (cost, grad, comm) = step(iteration, &model)?;
        guard.observe(iteration, cost)?;
        history.push(IterationRecord {
            iteration,
            cost,
            grad_norm: norm(&grad),
            bits_sent: comm.classical_bits,
            qubits_sent: comm.qubits_sent,
            rounds: comm.rounds,
        });
        model = descend(&model, &grad, config.learning_rate)?;
    }
    trajectory.push(model.theta().to_vec());
    Ok(TrainOutcome {
        model,
        history,
        trajectory,
    })
}

/// Full-batch cost and gradient with every expectation obtained through the
/// encrypted protocol, one round per sample.
pub fn delegated_batch_gradient(
    channel: &mut Channel,
    model: &VariationalModel,
    batch: &[&LabeledSample],
    mode: GradientMode,
    shots: u64,
    round: u64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::domain("gradient of an empty batch"));
    }
    let evaluations = batch
        .iter()
        .map(|s| delegated_gradient(channel, model, &s.input, mode, shots, round))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<f64> = batch.iter().map(|s| s.label()).collect();
    assemble_gradient(&evaluations, &labels)
}

/// The client uploads new parameters in the clear.
pub fn upload_parameters(channel: &mut Channel, num_params: usize, round: u64) -> Result<()> {
    let session = channel.transcript.next_session();
    channel.transcript.push(Message::new(
        MessageKind::ParamUpdate,
        0,
        VALUE_BITS * num_params as u64,
        session,
        round,
    ))
}

/// Gradient descent with every expectation evaluated by the server on
/// encrypted inputs.
pub fn train_delegated_on(
    channel: &mut Channel,
    model: VariationalModel,
    dataset: &[LabeledSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let batch: Vec<&LabeledSample> = dataset.iter().collect();
    run(model, config, |iteration, m| {
        let before = channel.transcript.totals();
        let (cost, grad) = delegated_batch_gradient(channel, m, &batch, config.gradient, config.shots, iteration as u64)?;
        upload_parameters(channel, m.num_params(), iteration as u64)?;
        Ok((cost, grad, channel.transcript.totals().since(&before)))
    })
}

/// [`train_delegated_on`] over a fresh channel seeded from `config.seed`.
pub fn train_delegated(model: VariationalModel, dataset: &[LabeledSample], config: &TrainConfig) -> Result<(TrainOutcome, Channel)> {
    let mut channel = Channel::new(0, config.seed);
    let outcome = train_delegated_on(&mut channel, model, dataset, config)?;
    Ok((outcome, channel))
}

/// The same loop on plaintext, with no communication.
pub fn train_local(model: VariationalModel, dataset: &[LabeledSample], config: &TrainConfig) -> Result<TrainOutcome> {
    if config.shots != 0 {
        return Err(Error::Validation("local training is exact; set shots to 0".into()));
    }
    run(model, config, |_, m| {
        let (cost, grad) = local_cost_and_gradient(m, dataset, config.gradient)?;
        Ok((cost, grad, CommStats::default()))
    })
}
