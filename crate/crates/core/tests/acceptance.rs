//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{plaintext, random_circuit, random_model, random_quantum_dataset, run_encrypted};
use qfl_core::dlp::*;
use qfl_core::engine::{audit_mixedness, audit_server_view, Secret, ViewEvent};
use qfl_core::experiment::{run_experiment, Experiment, ExperimentConfig};
use qfl_core::federation::*;
use qfl_core::learner::*;
use qfl_core::protocol::{rounds_by_session, Channel};
use qfl_core::simulator::{format_bits, PauliZ, StateVector};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn toy_model(theta: [f64; 2]) -> VariationalModel {
    VariationalModel::new(Ansatz::new(1, 1).unwrap(), theta.to_vec(), PauliZ::new(0)).unwrap()
}

fn max_traj_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn qotp_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for _ in 0..5 {
            let psi = StateVector::random(n, &mut rng).map_err(|e| e.to_string())?;
            worst = worst.max(audit_mixedness(&psi).map_err(|e| e.to_string())?);
        }
    }
    check(worst < 1e-10, format!("max deviation {worst:.2e} over 15 states"))
}

fn homomorphic_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut channel = Channel::new(0, 2);
    let mut worst = 1.0f64;
    for _ in 0..300 {
        let n = rng.random_range(1..=5);
        let gates = random_circuit(n, rng.random_range(1..=20), &mut rng);
        let psi = StateVector::random(n, &mut rng).unwrap();
        let got = run_encrypted(&mut channel, &psi, &gates).map_err(|e| e.to_string())?;
        worst = worst.min(got.fidelity(&plaintext(&psi, &gates)).unwrap());
    }
    check(worst >= 1.0 - 1e-9, format!("min fidelity 1 - {:.2e} over 300 circuits", 1.0 - worst))
}

fn sign_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut channel = Channel::new(0, 3);
    let mut worst = 0.0f64;
    let mut branches = [0usize; 2];
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let gates = random_circuit(n, rng.random_range(0..=15), &mut rng);
        let k = rng.random_range(0..n);
        let psi = StateVector::random(n, &mut rng).unwrap();
        let session = channel.transcript.next_session();
        let (padded, ct) = channel.client.encrypt_state(session, &psi).unwrap();
        let es = channel.server.receive(session, padded, ct).unwrap();
        let es = channel.server.homomorphic_apply(es, &gates).unwrap();
        let enc = channel.server.encrypted_expectation_z(&es, k, 0).unwrap();
        branches[usize::from(channel.client.decrypt_pad(&enc.key_ct_out).unwrap().b()[k])] += 1;
        let want = plaintext(&psi, &gates).expectation_z(PauliZ::new(k)).unwrap();
        worst = worst.max((channel.client.decrypt_expectation(&enc).unwrap() - want).abs());
    }
    check(
        worst < 1e-10 && branches[0] > 0 && branches[1] > 0,
        format!("max error {worst:.2e}; b'=0 cases {}, b'=1 cases {}", branches[0], branches[1]),
    )
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut channel = Channel::new(0, 4);
    let (mut fd_gap, mut deleg_gap) = (0.0f64, 0.0f64);
    let mut params = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let m = random_model(n, rng.random_range(1..=3), &mut rng);
        let data = random_quantum_dataset(n, 2, &mut rng);
        for j in 0..m.num_params() {
            let ps = parameter_shift_gradient(&m, &data, j).unwrap();
            let fd = finite_difference_gradient(&m, &data, j, 1e-5).unwrap();
            fd_gap = fd_gap.max((ps - fd).abs());
            params += 1;
        }
        let (_, local) = local_cost_and_gradient(&m, &data, GradientMode::ParameterShift).unwrap();
        let batch: Vec<&LabeledSample> = data.iter().collect();
        let (_, remote) = delegated_batch_gradient(&mut channel, &m, &batch, GradientMode::ParameterShift, 0, 0).unwrap();
        deleg_gap = local.iter().zip(&remote).map(|(a, b)| (a - b).abs()).fold(deleg_gap, f64::max);
    }
    check(
        fd_gap < 1e-4 && deleg_gap < 1e-10,
        format!("shift vs finite difference {fd_gap:.2e} over {params} parameters; delegated vs local {deleg_gap:.2e}"),
    )
}

fn delegated_training() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = toy_dataset(1);
    let mut worst_cost = 0.0f64;
    let mut worst_gap = 0.0f64;
    for seed in 0..5 {
        let model = toy_model([rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]);
        let config = TrainConfig {
            learning_rate: 0.2,
            max_iterations: 200,
            gradient: GradientMode::ParameterShift,
            shots: 0,
            seed,
        };
        let (delegated, _) = train_delegated(model.clone(), &data, &config).map_err(|e| e.to_string())?;
        let local = train_local(model, &data, &config).map_err(|e| e.to_string())?;
        worst_cost = worst_cost.max(mse_cost(&delegated.model, &data).unwrap());
        worst_gap = worst_gap.max(max_traj_diff(&delegated.trajectory, &local.trajectory));
    }
    check(
        worst_cost < 0.05 && worst_gap < 1e-9,
        format!("worst final MSE {worst_cost:.2e} over 5 initializations; trajectory gap {worst_gap:.2e}"),
    )
}

fn toy_nodes(clients: usize, per_client: usize, seed: u64) -> Vec<ClientNode> {
    (0..clients)
        .map(|c| {
            let data = (0..per_client)
                .map(|j| {
                    let bit = j % 2 == 1;
                    LabeledSample::new(SampleInput::Classical(vec![bit]), if bit { -1.0 } else { 1.0 }, c * per_client + j).unwrap()
                })
                .collect();
            ClientNode::new(c as u64, data, seed)
        })
        .collect()
}

fn fed_config(iterations: usize, batch_size: usize, seed: u64) -> FedConfig {
    FedConfig {
        iterations,
        batch_size,
        learning_rate: 0.2,
        gradient: GradientMode::ParameterShift,
        shots: 0,
        dp: None,
        seed,
    }
}

fn federation() -> Outcome {
    let data = toy_dataset(2);
    let start = toy_model([1.1, -0.6]);
    let mut single = Federation::new(
        vec![ClientNode::new(0, data.clone(), 6)],
        start.clone(),
        fed_config(50, data.len(), 6),
        toy_dataset(1),
    )
    .unwrap();
    let fed_out = run_federated(&mut single).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        learning_rate: 0.2,
        max_iterations: 50,
        gradient: GradientMode::ParameterShift,
        shots: 0,
        seed: 6,
    };
    let (train_out, _) = train_delegated(start.clone(), &data, &config).unwrap();
    let reduction_gap = max_traj_diff(&fed_out.trajectory, &train_out.trajectory);

    let run = |seed: u64| {
        let mut fed = Federation::new(toy_nodes(3, 4, seed), start.clone(), fed_config(300, 2, seed), toy_dataset(5)).unwrap();
        let out = run_federated(&mut fed).unwrap();
        let mut csv = Vec::new();
        write_rounds_csv(&out.history, &mut csv).unwrap();
        (out.history.last().unwrap().holdout_accuracy, csv)
    };
    let (accuracy, first) = run(7);
    let (_, second) = run(7);
    check(
        reduction_gap < 1e-9 && accuracy >= 0.9 && first == second,
        format!(
            "reduction gap {reduction_gap:.2e}; M=3 hold-out accuracy {accuracy:.3}; histories identical: {}",
            first == second
        ),
    )
}

fn dp_mechanism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let unchanged = dp_sanitize(&[0.3, -0.4], 1.0, 0.0, &mut rng).unwrap() == vec![0.3, -0.4];
    let clipped = norm(&dp_sanitize(&[1.2, -1.6], 1.0, 0.0, &mut rng).unwrap());
    let draws: Vec<f64> = (0..10_000).map(|_| dp_sanitize(&[0.0], 1.0, 0.1, &mut rng).unwrap()[0]).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    check(
        unchanged && (clipped - 1.0).abs() < 1e-12 && (std - 0.1).abs() < 0.005 && mean.abs() < 0.005,
        format!("in-ball unchanged {unchanged}; clipped norm {clipped:.12}; noise mean {mean:.4}, std {std:.4}"),
    )
}

fn dlp_pipeline() -> Outcome {
    let seven = DlpGroup::new(7).unwrap();
    let cfg1 = FeatureConfig::new(1);
    let c = Concept::new(seven.clone(), 1).unwrap();
    let plus: Vec<u64> = (1..7).filter(|&x| c.label(x).unwrap() == 1.0).collect();
    let phi = feature_state(&seven, &cfg1, 1).unwrap();
    let support: Vec<usize> = (0..8).filter(|&x| phi.probability(x) > 0.0).collect();
    let small_ok = find_generator(7).unwrap() == 3
        && seven.dlog_bruteforce(6).unwrap() == 3
        && plus == vec![2, 3, 6]
        && support == vec![1, 3]
        && kernel_entry(&seven, &cfg1, 1, 3).unwrap() == 0.5;

    let group = DlpGroup::new(127).unwrap();
    let cfg = FeatureConfig::new(5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let concept = Concept::new(group.clone(), rng.random_range(1..127)).unwrap();
    let mut units: Vec<u64> = group.units().collect();
    units.shuffle(&mut rng);
    let samples = &units[..100];
    let labels: Vec<f64> = samples.iter().map(|&x| concept.label(x).unwrap()).collect();
    let plain = kernel_matrix(&group, &cfg, samples).unwrap();
    let mut channel = Channel::new(0, 9);
    let (delegated, report) =
        delegated_kernel_pipeline(&mut channel, samples, &group, &cfg, KernelEstimation::exact(0.1)).map_err(|e| e.to_string())?;
    let diff = plain.max_abs_diff(&delegated).unwrap();
    let train: Vec<usize> = (0..60).collect();
    let test: Vec<usize> = (60..100).collect();
    let fit = |k: &KernelMatrix| {
        let model = train_kernel_classifier(&k.block(&train, &train), &labels[..60], 1e-3).unwrap();
        model.predict_block(&k.block(&test, &train)).unwrap()
    };
    let (pp, dp) = (fit(&plain), fit(&delegated));
    let accuracy = pp.iter().zip(&labels[60..]).filter(|(a, b)| a == b).count() as f64 / 40.0;
    check(
        small_ok && diff < 1e-10 && delegated.is_psd() && accuracy >= 0.85 && pp == dp,
        format!(
            "p=7 tables {small_ok}; p=127 max diff {diff:.2e}, min eigenvalue {:.2e}, test accuracy {accuracy:.3}, predictions identical {}, {} rounds",
            delegated.min_eigenvalue(),
            pp == dp,
            report.rounds
        ),
    )
}

fn communication() -> Outcome {
    let (out, channel) = train_delegated(
        toy_model([0.9, 0.2]),
        &toy_dataset(2),
        &TrainConfig {
            learning_rate: 0.2,
            max_iterations: 20,
            gradient: GradientMode::ParameterShift,
            shots: 0,
            seed: 10,
        },
    )
    .map_err(|e| e.to_string())?;
    let sessions = rounds_by_session(&channel.transcript).unwrap();
    let eval_sessions: Vec<u64> = sessions.iter().filter(|(_, r)| *r > 0).map(|&(_, r)| r).collect();
    let single_round = eval_sessions.iter().all(|&r| r == 1) && eval_sessions.len() == 20 * 4;
    let per_iteration = out.history.iter().all(|r| r.rounds == 4);

    let config = ExperimentConfig::new(Experiment::default_for("compare-comm").unwrap(), 10);
    let cmp = run_experiment(&config).map_err(|e| e.to_string())?.summary["results"].clone();
    let depth = cmp["circuit_depth"].as_u64().unwrap();
    let blind = cmp["blind_model"]["rounds"].as_u64().unwrap();
    let constants = &cmp["model_constants"]["blind_brickwork"];
    check(
        single_round && per_iteration && blind >= depth,
        format!(
            "{} evaluation sessions all single-round: {single_round}; blind rounds {blind} >= depth {depth} (slots single {}, cnot {}, bits/slot {}), QHE rounds {}",
            eval_sessions.len(),
            constants["slots_per_single_qubit_gate"],
            constants["slots_per_cnot"],
            constants["bits_per_qubit_per_slot"],
            cmp["qhe_measured"]["rounds"]
        ),
    )
}

fn privacy_audit() -> Outcome {
    let data = toy_dataset(1);
    let (_, channel) = train_delegated(
        toy_model([1.0, 0.4]),
        &data,
        &TrainConfig {
            learning_rate: 0.2,
            max_iterations: 200,
            gradient: GradientMode::ParameterShift,
            shots: 0,
            seed: 11,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut secrets = channel.client.pad_secrets();
    secrets.push(Secret::sample(None, vec![false]));
    secrets.push(Secret::sample(None, vec![true]));
    let honest = audit_server_view(channel.server.log(), &secrets);

    let group = DlpGroup::new(127).unwrap();
    let samples: Vec<u64> = (1..127).step_by(5).collect();
    let mut dlp_channel = Channel::new(1, 11);
    delegated_kernel_pipeline(&mut dlp_channel, &samples, &group, &FeatureConfig::new(5), KernelEstimation::exact(0.1))
        .map_err(|e| e.to_string())?;
    let mut dlp_secrets = dlp_channel.client.pad_secrets();
    for &x in &samples {
        dlp_secrets.push(Secret::sample(None, encode_sample(&group, x).unwrap()));
    }
    let dlp_honest = audit_server_view(dlp_channel.server.log(), &dlp_secrets);

    let mut leaky = channel.server.log().clone();
    for pad in channel.client.issued_pads() {
        leaky.record(ViewEvent::Note {
            session: pad.session,
            label: "pad".into(),
            bits: format_bits(&pad.key.to_registers()),
        });
    }
    let leak = audit_server_view(&leaky, &secrets);
    check(
        honest.passed && dlp_honest.passed && !leak.passed,
        format!(
            "training log p={:.3} ({} comparisons), kernel log p={:.3}; leak double p={:.1e} detected: {}",
            honest.p_value,
            honest.comparisons,
            dlp_honest.p_value,
            leak.p_value,
            !leak.passed
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 QOTP security identity", qotp_identity, Some(Duration::from_secs(10))),
        ("2 homomorphic soundness", homomorphic_soundness, Some(Duration::from_secs(60))),
        ("3 sign-decryption law", sign_law, None),
        ("4 gradient correctness", gradients, None),
        ("5 delegated training", delegated_training, None),
        ("6 federated reduction and determinism", federation, None),
        ("7 DP mechanism", dp_mechanism, None),
        ("8 DLP pipeline", dlp_pipeline, Some(Duration::from_secs(300))),
        ("9 communication accounting", communication, None),
        ("10 privacy information-flow audit", privacy_audit, None),
    ];
    let mut failures = 0;
    let mut out = std::io::stdout().lock();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) => match limit {
                Some(l) if elapsed > l => (false, format!("{d}; exceeded {l:?}")),
                _ => (true, d),
            },
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        writeln!(
            out,
            "{} criterion {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        )
        .unwrap();
    }
    writeln!(out, "acceptance: {}/10 criteria passed", 10 - failures).unwrap();
    if failures > 0 {
        std::process::exit(1);
    }
}
