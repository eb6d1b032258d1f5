//! Multi-client training of one server-held model: each round a scheduled
//! client computes a delegated batch gradient under its own vault and uploads
//! the updated parameters.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{
    classify, delegated_batch_gradient, descend, mse_cost, norm, upload_parameters, DivergenceGuard,
    GradientMode, LabeledSample, VariationalModel,
};
use crate::protocol::{derive_seed, Channel, CommStats, Transcript};

/// Gradient clipping norm `C` and noise multiplier `σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub clip: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FedConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub gradient: GradientMode,
    /// 0 selects exact expectations.
    pub shots: u64,
    pub dp: Option<DpConfig>,
    pub seed: u64,
}

/// Client index selected in each round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule(pub Vec<usize>);

impl Schedule {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, num_clients: usize) -> Result<()> {
        match self.0.iter().find(|&&c| c >= num_clients) {
            Some(c) => Err(Error::Validation(format!(
                "schedule names client {c} of {num_clients}"
            ))),
            None => Ok(()),
        }
    }
}

pub fn generate_schedule<R: Rng + ?Sized>(iterations: usize, num_clients: usize, rng: &mut R) -> Result<Schedule> {
    if num_clients == 0 {
        return Err(Error::domain("a schedule needs at least one client"));
    }
    if iterations == 0 {
        return Err(Error::domain("a schedule needs at least one round"));
    }
    Ok(Schedule(
        (0..iterations).map(|_| rng.random_range(0..num_clients)).collect(),
    ))
}

/// `g·min(1, C/‖g‖) + N(0, σ²C²·I)`.
pub fn dp_sanitize<R: Rng + ?Sized>(g: &[f64], clip: f64, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(clip > 0.0 && clip.is_finite()) {
        return Err(Error::domain(format!("clip norm must be positive, got {clip}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("noise multiplier must be non-negative, got {sigma}")));
    }
    let n = norm(g);
    let scale = if n > clip { clip / n } else { 1.0 };
    let mut out: Vec<f64> = g.iter().map(|x| x * scale).collect();
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma * clip).map_err(|e| Error::domain(e.to_string()))?;
        for x in &mut out {
            *x += noise.sample(rng);
        }
    }
    Ok(out)
}

/// A participant: private data and a channel to the server under its own vault.
pub struct ClientNode {
    pub id: u64,
    pub dataset: Vec<LabeledSample>,
    pub channel: Channel,
    rng: ChaCha8Rng,
}

impl ClientNode {
    pub fn new(id: u64, dataset: Vec<LabeledSample>, master_seed: u64) -> Self {
        Self {
            id,
            dataset,
            channel: Channel::new(id, derive_seed(master_seed, 1000 + id)),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 2000 + id)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub client: usize,
    pub batch_cost: f64,
    pub holdout_cost: f64,
    pub holdout_accuracy: f64,
    pub grad_norm: f64,
    /// Running totals over all clients.
    pub bits_sent: u64,
    pub qubits_sent: u64,
    pub rounds: u64,
}

pub fn write_rounds_csv<W: Write>(history: &[RoundReport], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for r in history {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Cost and accuracy on plaintext data, computed by the experimenter.
pub fn evaluate_holdout(model: &VariationalModel, holdout: &[LabeledSample]) -> Result<(f64, f64)> {
    if holdout.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let cost = mse_cost(model, holdout)?;
    let mut correct = 0usize;
    for s in holdout {
        if classify(model, &s.input)?.label() == s.label() {
            correct += 1;
        }
    }
    Ok((cost, correct as f64 / holdout.len() as f64))
}

/// Shared model, client nodes and schedule of a federated run.
pub struct Federation {
    pub nodes: Vec<ClientNode>,
    pub model: VariationalModel,
    pub config: FedConfig,
    pub schedule: Schedule,
    pub holdout: Vec<LabeledSample>,
    dp_rng: ChaCha8Rng,
    guard: DivergenceGuard,
}

impl Federation {
    pub fn new(nodes: Vec<ClientNode>, model: VariationalModel, config: FedConfig, holdout: Vec<LabeledSample>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
        let schedule = generate_schedule(config.iterations, nodes.len(), &mut rng)?;
        Self::with_schedule(nodes, model, config, holdout, schedule)
    }

    pub fn with_schedule(
        nodes: Vec<ClientNode>,
        model: VariationalModel,
        config: FedConfig,
        holdout: Vec<LabeledSample>,
        schedule: Schedule,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("federation needs at least one client".into()));
        }
        if config.iterations == 0 || schedule.len() != config.iterations {
            return Err(Error::Validation(format!(
                "schedule of length {} for {} iterations",
                schedule.len(),
                config.iterations
            )));
        }
        schedule.validate(nodes.len())?;
        if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::Validation("learning rate must be finite and non-negative".into()));
        }
        config.gradient.validate()?;
        let smallest = nodes.iter().map(|n| n.dataset.len()).min().unwrap_or(0);
        if config.batch_size == 0 || config.batch_size > smallest {
            return Err(Error::Validation(format!(
                "batch size {} outside 1..={smallest}",
                config.batch_size
            )));
        }
        if let Some(dp) = config.dp {
            if dp.clip.is_nan() || dp.clip <= 0.0 || dp.sigma.is_nan() || dp.sigma < 0.0 {
                return Err(Error::Validation("dp needs clip > 0 and sigma >= 0".into()));
            }
        }
        Ok(Self {
            nodes,
            model,
            dp_rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1)),
            config,
            schedule,
            holdout,
            guard: DivergenceGuard::default(),
        })
    }

    pub fn totals(&self) -> CommStats {
        let mut t = CommStats::default();
        for n in &self.nodes {
            t.add(&n.channel.transcript.totals());
        }
        t
    }

    /// Round `i` of the schedule.
    pub fn round(&mut self, i: usize) -> Result<RoundReport> {
        let client = *self
            .schedule
            .0
            .get(i)
            .ok_or_else(|| Error::domain(format!("round {i} beyond the schedule")))?;
        let cfg = self.config;
        let node = &mut self.nodes[client];
        if cfg.batch_size > node.dataset.len() {
            return Err(Error::domain(format!(
                "batch of {} from a dataset of {}",
                cfg.batch_size,
                node.dataset.len()
            )));
        }
        let mut picks = sample(&mut node.rng, node.dataset.len(), cfg.batch_size).into_vec();
        picks.sort_unstable();
        let batch: Vec<&LabeledSample> = picks.iter().map(|&j| &node.dataset[j]).collect();
        let (cost, grad) = delegated_batch_gradient(&mut node.channel, &self.model, &batch, cfg.gradient, cfg.shots, i as u64)?;
        self.guard.observe(i, cost)?;
        let grad = match cfg.dp {
            Some(dp) => dp_sanitize(&grad, dp.clip, dp.sigma, &mut self.dp_rng)?,
            None => grad,
        };
        self.model = descend(&self.model, &grad, cfg.learning_rate)?;
        upload_parameters(&mut node.channel, self.model.num_params(), i as u64)?;
        let (holdout_cost, holdout_accuracy) = evaluate_holdout(&self.model, &self.holdout)?;
        let totals = self.totals();
        Ok(RoundReport {
            round: i,
            client,
            batch_cost: cost,
            holdout_cost,
            holdout_accuracy,
            grad_norm: norm(&grad),
            bits_sent: totals.classical_bits,
            qubits_sent: totals.qubits_sent,
            rounds: totals.rounds,
        })
    }

    /// All client transcripts, concatenated.
    pub fn merged_transcript(&self) -> Result<Transcript> {
        let mut t = Transcript::new();
        for n in &self.nodes {
            t.merge(&n.channel.transcript)?;
        }
        Ok(t)
    }
}

#[derive(Debug)]
pub struct FedOutcome {
    pub history: Vec<RoundReport>,
    /// Parameters before each round, then the final ones.
    pub trajectory: Vec<Vec<f64>>,
}

/// Executes every round of the schedule in order.
pub fn run_federated(fed: &mut Federation) -> Result<FedOutcome> {
    let mut history = Vec::with_capacity(fed.config.iterations);
    let mut trajectory = Vec::with_capacity(fed.config.iterations + 1);
    for i in 0..fed.config.iterations {
        trajectory.push(fed.model.theta().to_vec());
        history.push(fed.round(i)?);
    }
    trajectory.push(fed.model.theta().to_vec());
    Ok(FedOutcome {
        history,
        trajectory,
    })
}

impl std::fmt::Debug for ClientNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientNode")
            .field("id", &self.id)
            .field("samples", &self.dataset.len())
            .finish()
    }
}
