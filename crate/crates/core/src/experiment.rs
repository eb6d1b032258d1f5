//! Seeded, config-driven experiments producing a metrics CSV, a message
//! transcript and a summary document.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dlp::{
    delegated_kernel_pipeline, encode_sample, kernel_matrix, train_kernel_classifier, Concept,
    DlpGroup, FeatureConfig, KernelEstimation,
};
use crate::engine::{audit_mixedness_with, audit_server_view, PadFamily, Secret, ViewEvent};
use crate::error::{Error, Result};
use crate::federation::{run_federated, write_rounds_csv, ClientNode, DpConfig, FedConfig, Federation};
use crate::learner::{
    delegated_evaluate, mse_cost, predict, toy_dataset, train_delegated, write_history_csv, Ansatz,
    Class, GradientMode, LabeledSample, SampleInput, TrainConfig, VariationalModel,
};
use crate::protocol::{
    account, blind_baseline_cost, derive_seed, rounds_by_session, Channel, CostModel, Transcript,
    BRICKWORK_BITS_PER_SLOT, BRICKWORK_SLOTS_CNOT, BRICKWORK_SLOTS_SINGLE, VALUE_BITS,
};
use crate::simulator::{format_bits, PauliZ, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSettings {
    pub qubits: usize,
    pub layers: usize,
    pub samples: usize,
}

impl Default for DemoSettings {
    fn default() -> Self {
        Self {
            qubits: 3,
            layers: 2,
            samples: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// One qubit: `|0⟩ → +1`, `|1⟩ → −1`.
    Toy,
    /// Random states labeled by the sign of a random teacher model.
    Teacher,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub task: Task,
    pub qubits: usize,
    pub layers: usize,
    /// Copies of the toy pair, or teacher-labeled states.
    pub samples: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub gradient: GradientMode,
    /// Initial parameters are drawn uniformly from `[−init_range, init_range]`.
    pub init_range: f64,
    pub initial_theta: Option<Vec<f64>>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            task: Task::Toy,
            qubits: 1,
            layers: 1,
            samples: 1,
            learning_rate: 0.2,
            iterations: 200,
            gradient: GradientMode::ParameterShift,
            init_range: 1.5,
            initial_theta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederatedSettings {
    pub clients: usize,
    pub samples_per_client: usize,
    pub holdout_copies: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub gradient: GradientMode,
    pub dp: Option<DpConfig>,
    pub init_range: f64,
}

impl Default for FederatedSettings {
    fn default() -> Self {
        Self {
            clients: 3,
            samples_per_client: 4,
            holdout_copies: 5,
            iterations: 300,
            batch_size: 2,
            learning_rate: 0.2,
            gradient: GradientMode::ParameterShift,
            dp: None,
            init_range: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlpSettings {
    pub p: u64,
    pub k: usize,
    pub train: usize,
    pub test: usize,
    pub lambda: f64,
    pub concept: Option<u64>,
    pub epsilon: f64,
}

impl Default for DlpSettings {
    fn default() -> Self {
        Self {
            p: 127,
            k: 5,
            train: 60,
            test: 40,
            lambda: 1e-3,
            concept: None,
            epsilon: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub qubits: usize,
    pub states: usize,
    /// Delegated evaluations whose server view is scanned for leaks.
    pub sessions: usize,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            qubits: 2,
            states: 5,
            sessions: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    pub qubits: usize,
    pub layers: usize,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            qubits: 3,
            layers: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "settings", rename_all = "kebab-case")]
pub enum Experiment {
    DemoInference(DemoSettings),
    TrainDelegated(TrainSettings),
    TrainFederated(FederatedSettings),
    DlpKernel(DlpSettings),
    AuditPrivacy(AuditSettings),
    CompareComm(CompareSettings),
}

impl Experiment {
    pub const KINDS: [&'static str; 6] = [
        "demo-inference",
        "train-delegated",
        "train-federated",
        "dlp-kernel",
        "audit-privacy",
        "compare-comm",
    ];

    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "demo-inference" => Experiment::DemoInference(DemoSettings::default()),
            "train-delegated" => Experiment::TrainDelegated(TrainSettings::default()),
            "train-federated" => Experiment::TrainFederated(FederatedSettings::default()),
            "dlp-kernel" => Experiment::DlpKernel(DlpSettings::default()),
            "audit-privacy" => Experiment::AuditPrivacy(AuditSettings::default()),
            "compare-comm" => Experiment::CompareComm(CompareSettings::default()),
            other => return Err(Error::config("experiment.kind", format!("unknown experiment `{other}`"))),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::DemoInference(_) => Self::KINDS[0],
            Experiment::TrainDelegated(_) => Self::KINDS[1],
            Experiment::TrainFederated(_) => Self::KINDS[2],
            Experiment::DlpKernel(_) => Self::KINDS[3],
            Experiment::AuditPrivacy(_) => Self::KINDS[4],
            Experiment::CompareComm(_) => Self::KINDS[5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// 0 selects exact expectations.
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            shots: 0,
            out: None,
        }
    }

    /// Parses a JSON document, reporting the path of the first bad field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("experiment.settings.{field}"), msg));
        let max_q = crate::simulator::MAX_QUBITS;
        match &self.experiment {
            Experiment::DemoInference(s) => {
                if s.qubits == 0 || s.qubits > max_q {
                    return bad("qubits", format!("must be in 1..={max_q}"));
                }
            }
            Experiment::TrainDelegated(s) => {
                if s.task == Task::Toy && s.qubits != 1 {
                    return bad("qubits", "the toy task has one qubit".into());
                }
                if s.qubits == 0 || s.qubits > max_q {
                    return bad("qubits", format!("must be in 1..={max_q}"));
                }
                if s.samples == 0 {
                    return bad("samples", "must be positive".into());
                }
                if !(s.learning_rate >= 0.0 && s.learning_rate.is_finite()) {
                    return bad("learning_rate", "must be finite and non-negative".into());
                }
                if let GradientMode::FiniteDifference { epsilon } = s.gradient {
                    if epsilon.is_nan() || epsilon <= 0.0 {
                        return bad("gradient.epsilon", "must be positive".into());
                    }
                }
                if let Some(t) = &s.initial_theta {
                    if t.len() != 2 * s.qubits * s.layers {
                        return bad("initial_theta", format!("needs {} values", 2 * s.qubits * s.layers));
                    }
                }
            }
            Experiment::TrainFederated(s) => {
                if s.clients == 0 {
                    return bad("clients", "must be positive".into());
                }
                if s.iterations == 0 {
                    return bad("iterations", "must be positive".into());
                }
                if s.batch_size == 0 || s.batch_size > s.samples_per_client {
                    return bad("batch_size", "must be in 1..=samples_per_client".into());
                }
                if !(s.learning_rate >= 0.0 && s.learning_rate.is_finite()) {
                    return bad("learning_rate", "must be finite and non-negative".into());
                }
                if let Some(dp) = s.dp {
                    if dp.clip.is_nan() || dp.clip <= 0.0 {
                        return bad("dp.clip", "must be positive".into());
                    }
                    if dp.sigma.is_nan() || dp.sigma < 0.0 {
                        return bad("dp.sigma", "must be non-negative".into());
                    }
                }
            }
            Experiment::DlpKernel(s) => {
                let group = DlpGroup::new(s.p).map_err(|e| Error::config("experiment.settings.p", e.to_string()))?;
                FeatureConfig::new(s.k)
                    .validate(&group)
                    .map_err(|e| Error::config("experiment.settings.k", e.to_string()))?;
                if s.train == 0 || (s.train + s.test) as u64 > s.p - 1 {
                    return bad("train", format!("train + test must be in 1..={}", s.p - 1));
                }
                if s.lambda.is_nan() || s.lambda < 0.0 {
                    return bad("lambda", "must be non-negative".into());
                }
                if !(s.epsilon > 0.0 && s.epsilon.is_finite()) {
                    return bad("epsilon", "must be positive".into());
                }
                if let Some(i) = s.concept {
                    if i == 0 || i >= s.p {
                        return bad("concept", format!("must be in 1..={}", s.p - 1));
                    }
                }
            }
            Experiment::AuditPrivacy(s) => {
                if s.qubits == 0 || s.qubits > crate::engine::MIXEDNESS_MAX_QUBITS {
                    return bad("qubits", "must be in 1..=3".into());
                }
            }
            Experiment::CompareComm(s) => {
                if s.qubits == 0 || s.qubits > max_q {
                    return bad("qubits", format!("must be in 1..={max_q}"));
                }
            }
        }
        Ok(())
    }
}

/// Files produced by one experiment, held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct ArtifactBundle {
    pub metrics_csv: String,
    pub transcript_jsonl: String,
    pub summary: Value,
    /// Additional files by name.
    pub extra: Vec<(String, String)>,
}

impl ArtifactBundle {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = vec![
            ("metrics.csv".to_string(), self.metrics_csv.clone()),
            ("transcript.jsonl".to_string(), self.transcript_jsonl.clone()),
            (
                "summary.json".to_string(),
                serde_json::to_string_pretty(&self.summary)? + "\n",
            ),
        ];
        files.extend(self.extra.iter().cloned());
        let mut written = Vec::with_capacity(files.len());
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("writers emit utf-8")
}

fn jsonl(t: &Transcript) -> Result<String> {
    let mut buf = Vec::new();
    t.write_jsonl(&mut buf)?;
    Ok(utf8(buf))
}

fn view_jsonl(channel: &Channel) -> Result<String> {
    let mut buf = Vec::new();
    channel.server.log().write_jsonl(&mut buf)?;
    Ok(utf8(buf))
}

fn comm_json(t: &Transcript) -> Result<Value> {
    let stats = account(t)?;
    let per_session = rounds_by_session(t)?;
    let eval_sessions: Vec<u64> = t
        .messages()
        .iter()
        .filter(|m| m.kind == crate::protocol::MessageKind::EvalResponse)
        .map(|m| m.session)
        .collect();
    let max_eval_rounds = per_session
        .iter()
        .filter(|(s, _)| eval_sessions.contains(s))
        .map(|(_, r)| *r)
        .max()
        .unwrap_or(0);
    Ok(json!({
        "qubits_sent": stats.qubits_sent,
        "classical_bits": stats.classical_bits,
        "rounds": stats.rounds,
        "messages": stats.messages,
        "max_rounds_per_evaluation": max_eval_rounds,
    }))
}

fn random_model<R: Rng>(ansatz: Ansatz, range: f64, rng: &mut R) -> Result<VariationalModel> {
    let theta = (0..ansatz.num_params())
        .map(|_| if range > 0.0 { rng.random_range(-range..=range) } else { 0.0 })
        .collect();
    VariationalModel::new(ansatz, theta, PauliZ::new(0))
}

/// Runs the configured experiment. Output is a function of the config alone.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ArtifactBundle> {
    config.validate()?;
    let (results, metrics_csv, transcript_jsonl, extra) = match &config.experiment {
        Experiment::DemoInference(s) => demo_inference(s, config)?,
        Experiment::TrainDelegated(s) => train(s, config)?,
        Experiment::TrainFederated(s) => federated(s, config)?,
        Experiment::DlpKernel(s) => dlp(s, config)?,
        Experiment::AuditPrivacy(s) => audit(s, config)?,
        Experiment::CompareComm(s) => compare(s, config)?,
    };
    let summary = json!({
        "experiment": config.experiment.kind(),
        "config_hash": config.hash(),
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "shots": config.shots,
        "results": results,
    });
    Ok(ArtifactBundle {
        metrics_csv,
        transcript_jsonl,
        summary,
        extra,
    })
}

type Parts = (Value, String, String, Vec<(String, String)>);

#[derive(Serialize)]
struct DemoRow {
    sample: usize,
    plaintext_expectation: f64,
    delegated_expectation: f64,
    plaintext_class: u8,
    delegated_class: u8,
}

fn demo_inference(s: &DemoSettings, config: &ExperimentConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 10));
    let model = random_model(Ansatz::new(s.qubits, s.layers)?, std::f64::consts::PI, &mut rng)?;
    let mut channel = Channel::new(0, derive_seed(config.seed, 11));
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut agree = 0usize;
    let mut max_err = 0.0f64;
    for i in 0..s.samples {
        let input = SampleInput::Quantum(StateVector::random(s.qubits, &mut rng)?);
        let plain = predict(&model, &input)?;
        let delegated = delegated_evaluate(&mut channel, &model, &input, &[None], config.shots, i as u64)?[0];
        let (pc, dc) = (Class::from_expectation(plain), Class::from_expectation(delegated));
        agree += usize::from(pc == dc);
        max_err = max_err.max((plain - delegated).abs());
        writer.serialize(DemoRow {
            sample: i,
            plaintext_expectation: plain,
            delegated_expectation: delegated,
            plaintext_class: pc.number(),
            delegated_class: dc.number(),
        })?;
    }
    let audit = audit_server_view(channel.server.log(), &channel.client.pad_secrets());
    let results = json!({
        "samples": s.samples,
        "class_agreement": if s.samples == 0 { 1.0 } else { agree as f64 / s.samples as f64 },
        "max_expectation_error": max_err,
        "communication": comm_json(&channel.transcript)?,
        "server_view_audit_passed": audit.passed,
    });
    let metrics = utf8(writer.into_inner().map_err(|e| Error::Io(e.into_error()))?);
    Ok((results, metrics, jsonl(&channel.transcript)?, vec![("server_view.jsonl".into(), view_jsonl(&channel)?)]))
}

fn teacher_dataset<R: Rng>(qubits: usize, layers: usize, samples: usize, rng: &mut R) -> Result<Vec<LabeledSample>> {
    let teacher = random_model(Ansatz::new(qubits, layers.max(1))?, std::f64::consts::PI, rng)?;
    (0..samples)
        .map(|i| {
            let input = SampleInput::Quantum(StateVector::random(qubits, rng)?);
            let y = Class::from_expectation(predict(&teacher, &input)?).label();
            LabeledSample::new(input, y, i)
        })
        .collect()
}

fn train(s: &TrainSettings, config: &ExperimentConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 20));
    let dataset = match s.task {
        Task::Toy => toy_dataset(s.samples),
        Task::Teacher => teacher_dataset(s.qubits, s.layers, s.samples, &mut rng)?,
    };
    let ansatz = Ansatz::new(s.qubits, s.layers)?;
    let model = match &s.initial_theta {
        Some(t) => VariationalModel::new(ansatz, t.clone(), PauliZ::new(0))?,
        None => random_model(ansatz, s.init_range, &mut rng)?,
    };
    let tc = TrainConfig {
        learning_rate: s.learning_rate,
        max_iterations: s.iterations,
        gradient: s.gradient,
        shots: config.shots,
        seed: derive_seed(config.seed, 21),
    };
    let initial_cost = mse_cost(&model, &dataset)?;
    let (outcome, channel) = train_delegated(model, &dataset, &tc)?;
    let mut secrets = channel.client.pad_secrets();
    for sample in &dataset {
        if let SampleInput::Classical(bits) = &sample.input {
            secrets.push(Secret::sample(None, bits.clone()));
        }
    }
    let audit = audit_server_view(channel.server.log(), &secrets);
    let mut buf = Vec::new();
    write_history_csv(&outcome.history, &mut buf)?;
    let results = json!({
        "initial_cost": initial_cost,
        "final_cost": mse_cost(&outcome.model, &dataset)?,
        "last_recorded_cost": outcome.history.last().map(|r| r.cost),
        "iterations": outcome.history.len(),
        "final_theta": outcome.model.theta(),
        "communication": comm_json(&channel.transcript)?,
        "server_view_audit_passed": audit.passed,
    });
    Ok((results, utf8(buf), jsonl(&channel.transcript)?, Vec::new()))
}

fn federated(s: &FederatedSettings, config: &ExperimentConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 30));
    let nodes = (0..s.clients)
        .map(|c| {
            let data = (0..s.samples_per_client)
                .map(|j| {
                    let bit = j % 2 == 1;
                    let y = if bit { -1.0 } else { 1.0 };
                    LabeledSample::new(SampleInput::Classical(vec![bit]), y, c * s.samples_per_client + j)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ClientNode::new(c as u64, data, config.seed))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = random_model(Ansatz::new(1, 1)?, s.init_range, &mut rng)?;
    let fc = FedConfig {
        iterations: s.iterations,
        batch_size: s.batch_size,
        learning_rate: s.learning_rate,
        gradient: s.gradient,
        shots: config.shots,
        dp: s.dp,
        seed: config.seed,
    };
    let mut fed = Federation::new(nodes, model, fc, toy_dataset(s.holdout_copies))?;
    let outcome = run_federated(&mut fed)?;
    let mut buf = Vec::new();
    write_rounds_csv(&outcome.history, &mut buf)?;
    let merged = fed.merged_transcript()?;
    let mut counts = vec![0usize; s.clients];
    for &c in &fed.schedule.0 {
        counts[c] += 1;
    }
    let last = outcome.history.last();
    let results = json!({
        "rounds": outcome.history.len(),
        "final_holdout_cost": last.map(|r| r.holdout_cost),
        "final_holdout_accuracy": last.map(|r| r.holdout_accuracy),
        "final_theta": fed.model.theta(),
        "client_selections": counts,
        "communication": comm_json(&merged)?,
    });
    Ok((results, utf8(buf), jsonl(&merged)?, Vec::new()))
}

#[derive(Serialize)]
struct DlpRow {
    x: u64,
    label: f64,
    plaintext_prediction: f64,
    delegated_prediction: f64,
}

fn dlp(s: &DlpSettings, config: &ExperimentConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 40));
    let group = DlpGroup::new(s.p)?;
    let cfg = FeatureConfig::new(s.k);
    let i = match s.concept {
        Some(i) => i,
        None => rng.random_range(1..s.p),
    };
    let concept = Concept::new(group.clone(), i)?;
    let mut units: Vec<u64> = group.units().collect();
    units.shuffle(&mut rng);
    let samples: Vec<u64> = units[..s.train + s.test].to_vec();
    let labels = samples.iter().map(|&x| concept.label(x)).collect::<Result<Vec<_>>>()?;
    let estimation = if config.shots > 0 {
        KernelEstimation {
            epsilon: 1.0 / (config.shots as f64).sqrt(),
            sampled: true,
        }
    } else {
        KernelEstimation::exact(s.epsilon)
    };

    let plain = kernel_matrix(&group, &cfg, &samples)?;
    let mut channel = Channel::new(0, derive_seed(config.seed, 41));
    let (delegated, report) = delegated_kernel_pipeline(&mut channel, &samples, &group, &cfg, estimation)?;

    let train_idx: Vec<usize> = (0..s.train).collect();
    let test_idx: Vec<usize> = (s.train..s.train + s.test).collect();
    let y_train = &labels[..s.train];
    let fit = |k: &crate::dlp::KernelMatrix| -> Result<Vec<f64>> {
        let model = train_kernel_classifier(&k.block(&train_idx, &train_idx), y_train, s.lambda)?;
        model.predict_block(&k.block(&test_idx, &train_idx))
    };
    let plain_pred = fit(&plain)?;
    let deleg_pred = fit(&delegated)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let (mut plain_ok, mut deleg_ok, mut agree) = (0, 0, 0);
    for (t, &idx) in test_idx.iter().enumerate() {
        plain_ok += usize::from(plain_pred[t] == labels[idx]);
        deleg_ok += usize::from(deleg_pred[t] == labels[idx]);
        agree += usize::from(plain_pred[t] == deleg_pred[t]);
        writer.serialize(DlpRow {
            x: samples[idx],
            label: labels[idx],
            plaintext_prediction: plain_pred[t],
            delegated_prediction: deleg_pred[t],
        })?;
    }
    let frac = |c: usize| if s.test == 0 { f64::NAN } else { c as f64 / s.test as f64 };

    let mut secrets = channel.client.pad_secrets();
    for &x in &samples {
        secrets.push(Secret::sample(None, encode_sample(&group, x)?));
        secrets.push(Secret::sample(None, crate::simulator::index_to_bits(x as usize, group.bits())));
    }
    let audit = audit_server_view(channel.server.log(), &secrets);

    let mut kernel_csv = Vec::new();
    delegated.write_csv(&mut kernel_csv)?;
    let results = json!({
        "p": s.p,
        "generator": group.generator(),
        "qubits": group.bits(),
        "k": s.k,
        "concept": i,
        "max_abs_difference": plain.max_abs_diff(&delegated)?,
        "min_eigenvalue": delegated.min_eigenvalue(),
        "psd": delegated.is_psd(),
        "plaintext_test_accuracy": frac(plain_ok),
        "delegated_test_accuracy": frac(deleg_ok),
        "prediction_agreement": frac(agree),
        "pipeline": report,
        "server_view_audit_passed": audit.passed,
    });
    let metrics = utf8(writer.into_inner().map_err(|e| Error::Io(e.into_error()))?);
    Ok((results, metrics, jsonl(&channel.transcript)?, vec![("kernel.csv".into(), utf8(kernel_csv))]))
}

#[derive(Serialize)]
struct AuditRow {
    state: usize,
    full_deviation: f64,
    z_only_deviation: f64,
    x_only_deviation: f64,
}

fn audit(s: &AuditSettings, config: &ExperimentConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 50));
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut worst = 0.0f64;
    let mut partial = f64::INFINITY;
    for i in 0..s.states {
        let psi = StateVector::random(s.qubits, &mut rng)?;
        let row = AuditRow {
            state: i,
            full_deviation: audit_mixedness_with(&psi, PadFamily::Full)?,
            z_only_deviation: audit_mixedness_with(&psi, PadFamily::ZOnly)?,
            x_only_deviation: audit_mixedness_with(&psi, PadFamily::XOnly)?,
        };
        worst = worst.max(row.full_deviation);
        partial = partial.min(row.z_only_deviation.max(row.x_only_deviation));
        writer.serialize(row)?;
    }

    let mut channel = Channel::new(0, derive_seed(config.seed, 51));
    let model = random_model(Ansatz::new(s.qubits, 1)?, std::f64::consts::PI, &mut rng)?;
    for i in 0..s.sessions {
        let input = SampleInput::Quantum(StateVector::random(s.qubits, &mut rng)?);
        delegated_evaluate(&mut channel, &model, &input, &[None], config.shots, i as u64)?;
    }
    let secrets = channel.client.pad_secrets();
    let honest = audit_server_view(channel.server.log(), &secrets);
    let mut leaky = channel.server.log().clone();
    for issued in channel.client.issued_pads() {
        leaky.record(ViewEvent::Note {
            session: issued.session,
            label: "pad".into(),
            bits: format_bits(&issued.key.to_registers()),
        });
    }
    let leak = audit_server_view(&leaky, &secrets);
    let results = json!({
        "qubits": s.qubits,
        "states": s.states,
        "sessions": s.sessions,
        "max_mixedness_deviation": if s.states == 0 { 0.0 } else { worst },
        "min_partial_twirl_deviation": if s.states == 0 { Value::Null } else { json!(partial) },
        "server_view_audit_passed": honest.passed,
        "server_view_p_value": honest.p_value,
        "instrumented_leak_detected": !leak.passed,
        "communication": comm_json(&channel.transcript)?,
    });
    let metrics = utf8(writer.into_inner().map_err(|e| Error::Io(e.into_error()))?);
    Ok((results, metrics, jsonl(&channel.transcript)?, Vec::new()))
}

#[derive(Serialize)]
struct CompareRow {
    model: &'static str,
    qubits_sent: u64,
    classical_bits: u64,
    rounds: u64,
}

fn compare(s: &CompareSettings, config: &ExperimentConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 60));
    let model = random_model(Ansatz::new(s.qubits, s.layers)?, std::f64::consts::PI, &mut rng)?;
    let circuit = model.circuit();
    let depth = circuit.depth() as u64;
    let qhe = CostModel::Qhe.estimate(circuit);
    let blind = blind_baseline_cost(circuit);

    let mut channel = Channel::new(0, derive_seed(config.seed, 61));
    let input = SampleInput::Quantum(StateVector::random(s.qubits, &mut rng)?);
    delegated_evaluate(&mut channel, &model, &input, &[None], config.shots, 0)?;
    let measured = account(&channel.transcript)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    for (name, est) in [
        ("qhe_measured", (measured.qubits_sent, measured.classical_bits, measured.rounds)),
        ("qhe_model", (qhe.qubits_sent, qhe.classical_bits, qhe.rounds)),
        ("blind_brickwork_model", (blind.qubits_sent, blind.classical_bits, blind.rounds)),
    ] {
        writer.serialize(CompareRow {
            model: name,
            qubits_sent: est.0,
            classical_bits: est.1,
            rounds: est.2,
        })?;
    }
    let results = json!({
        "qubits": s.qubits,
        "layers": s.layers,
        "circuit_depth": depth,
        "gates": circuit.ops().len(),
        "qhe_measured": measured,
        "qhe_model": qhe,
        "blind_model": blind,
        "blind_rounds_at_least_depth": blind.rounds >= depth,
        "round_ratio": if measured.rounds == 0 { Value::Null } else { json!(blind.rounds as f64 / measured.rounds as f64) },
        "model_constants": {
            "qhe": "one padded state and its key ciphertext up; one value and key ciphertext down; one round",
            "blind_brickwork": {
                "slots_per_single_qubit_gate": BRICKWORK_SLOTS_SINGLE,
                "slots_per_cnot": BRICKWORK_SLOTS_CNOT,
                "bits_per_qubit_per_slot": BRICKWORK_BITS_PER_SLOT,
                "qubits_sent": "n * D",
                "classical_bits": "2 * n * D",
                "rounds": "D",
            },
            "value_bits": VALUE_BITS,
        },
    });
    let metrics = utf8(writer.into_inner().map_err(|e| Error::Io(e.into_error()))?);
    Ok((results, metrics, jsonl(&channel.transcript)?, Vec::new()))
}
