mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qfl_core::federation::*;
use qfl_core::learner::*;
use qfl_core::protocol::{account, MessageKind};
use qfl_core::simulator::PauliZ;
use qfl_core::Error;

fn toy_model() -> VariationalModel {
    VariationalModel::new(Ansatz::new(1, 1).unwrap(), vec![1.2, 0.5], PauliZ::new(0)).unwrap()
}

fn config(iterations: usize, batch_size: usize, dp: Option<DpConfig>, seed: u64) -> FedConfig {
    FedConfig {
        iterations,
        batch_size,
        learning_rate: 0.2,
        gradient: GradientMode::ParameterShift,
        shots: 0,
        dp,
        seed,
    }
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

#[test]
fn schedule_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(generate_schedule(20, 1, &mut rng).unwrap().0.iter().all(|&c| c == 0));
    let a = generate_schedule(50, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let b = generate_schedule(50, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(a, b);
    assert!(matches!(generate_schedule(5, 0, &mut rng), Err(Error::Domain(_))));

    let s = generate_schedule(10_000, 4, &mut rng).unwrap();
    for c in 0..4 {
        let freq = s.0.iter().filter(|&&x| x == c).count() as f64 / 1e4;
        assert!((freq - 0.25).abs() < 0.05);
    }
}

#[test]
fn dp_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = vec![0.3, -0.4];
    assert_eq!(dp_sanitize(&g, 1.0, 0.0, &mut rng).unwrap(), g);
    let clipped = dp_sanitize(&[1.2, -1.6], 1.0, 0.0, &mut rng).unwrap();
    assert!((norm(&clipped) - 1.0).abs() < 1e-15);
    assert_eq!(dp_sanitize(&clipped, 1.0, 0.0, &mut rng).unwrap(), clipped);
    assert!(matches!(dp_sanitize(&g, 0.0, 0.0, &mut rng), Err(Error::Domain(_))));

    let draws: Vec<Vec<f64>> = (0..10_000).map(|_| dp_sanitize(&[0.0, 0.0, 0.0], 1.0, 0.1, &mut rng).unwrap()).collect();
    for coord in 0..3 {
        let xs: Vec<f64> = draws.iter().map(|d| d[coord]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(mean.abs() < 5.0 * 0.1 / 100.0);
        assert!((var.sqrt() - 0.1).abs() < 0.005);
    }
}

#[test]
fn single_client_full_batch_reduces_to_delegated_training() {
    let data = toy_dataset(2);
    let nodes = vec![ClientNode::new(0, data.clone(), 5)];
    let mut fed = Federation::new(nodes, toy_model(), config(30, data.len(), None, 5), toy_dataset(1)).unwrap();
    let fed_out = run_federated(&mut fed).unwrap();
    let tc = TrainConfig {
        learning_rate: 0.2,
        max_iterations: 30,
        gradient: GradientMode::ParameterShift,
        shots: 0,
        seed: 9,
    };
    let (train_out, _) = train_delegated(toy_model(), &data, &tc).unwrap();
    assert_eq!(fed_out.trajectory.len(), train_out.trajectory.len());
    for (a, b) in fed_out.trajectory.iter().zip(&train_out.trajectory) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn batch_of_one_uses_the_single_sample_gradient() {
    let mut fed = Federation::new(toy_nodes(1, 3, 6), toy_model(), config(1, 1, None, 6), toy_dataset(1)).unwrap();
    let before = fed.model.clone();
    fed.round(0).unwrap();
    let step: Vec<f64> = before.theta().iter().zip(fed.model.theta()).map(|(a, b)| (a - b) / 0.2).collect();
    let candidates: Vec<Vec<f64>> = fed.nodes[0]
        .dataset
        .iter()
        .map(|s| local_cost_and_gradient(&before, std::slice::from_ref(s), GradientMode::ParameterShift).unwrap().1)
        .collect();
    assert!(candidates
        .iter()
        .any(|g| g.iter().zip(&step).all(|(a, b)| (a - b).abs() < 1e-9)));
}

#[test]
fn boundaries_and_validation() {
    assert!(Federation::new(toy_nodes(2, 2, 1), toy_model(), config(0, 1, None, 1), toy_dataset(1)).is_err());
    assert!(Federation::new(toy_nodes(2, 2, 1), toy_model(), config(1, 3, None, 1), toy_dataset(1)).is_err());
    let mut fed = Federation::new(toy_nodes(2, 2, 1), toy_model(), config(1, 1, None, 1), toy_dataset(1)).unwrap();
    assert_eq!(run_federated(&mut fed).unwrap().history.len(), 1);
    let bad = Schedule(vec![0, 5]);
    assert!(Federation::with_schedule(toy_nodes(2, 2, 1), toy_model(), config(2, 1, None, 1), toy_dataset(1), bad).is_err());
}

#[test]
fn pooled_data_oracle() {
    // Two clients whose union is the single-client dataset, alternating turns.
    let pooled = toy_dataset(1);
    let nodes = vec![
        ClientNode::new(0, vec![pooled[0].clone()], 4),
        ClientNode::new(1, vec![pooled[1].clone()], 4),
    ];
    let t = 40;
    let schedule = Schedule((0..t).map(|i| i % 2).collect());
    let mut fed = Federation::with_schedule(nodes, toy_model(), config(t, 1, None, 4), pooled.clone(), schedule).unwrap();
    run_federated(&mut fed).unwrap();
    let single = train_local(
        toy_model(),
        &pooled,
        &TrainConfig {
            learning_rate: 0.2,
            max_iterations: t,
            gradient: GradientMode::ParameterShift,
            shots: 0,
            seed: 0,
        },
    )
    .unwrap();
    let fed_cost = mse_cost(&fed.model, &pooled).unwrap();
    let single_cost = mse_cost(&single.model, &pooled).unwrap();
    assert!((fed_cost - single_cost).abs() <= 0.1 * single_cost.max(1e-12));
}

#[test]
fn toy_federation_reaches_holdout_accuracy_and_is_deterministic() {
    let run = |seed| {
        let mut fed = Federation::new(toy_nodes(3, 4, seed), toy_model(), config(300, 2, None, seed), toy_dataset(5)).unwrap();
        let out = run_federated(&mut fed).unwrap();
        let mut csv = Vec::new();
        write_rounds_csv(&out.history, &mut csv).unwrap();
        (out, csv, fed)
    };
    let (out, csv, fed) = run(17);
    assert!(out.history.last().unwrap().holdout_accuracy >= 0.9);
    let (_, again, _) = run(17);
    assert_eq!(csv, again);

    // Each round: one evaluation round per batch sample plus one upload.
    let merged = fed.merged_transcript().unwrap();
    let stats = account(&merged).unwrap();
    assert_eq!(stats.rounds, 300 * 2);
    let uploads = merged.messages().iter().filter(|m| m.kind == MessageKind::ParamUpdate).count();
    assert_eq!(uploads, 300);
}

#[test]
fn client_vaults_are_distinct() {
    let fed = Federation::new(toy_nodes(3, 2, 8), toy_model(), config(3, 1, None, 8), toy_dataset(1)).unwrap();
    let ids: Vec<u64> = fed.nodes.iter().map(|n| n.channel.client.vault_id()).collect();
    for (i, n) in fed.nodes.iter().enumerate() {
        assert_eq!(n.channel.server.vault_id(), ids[i]);
    }
    assert!(ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2]);
}

#[test]
fn dp_noise_changes_trajectory_but_not_protocol() {
    let dp = Some(DpConfig { clip: 0.5, sigma: 0.1 });
    let mut fed = Federation::new(toy_nodes(2, 2, 9), toy_model(), config(10, 2, dp, 9), toy_dataset(1)).unwrap();
    let out = run_federated(&mut fed).unwrap();
    assert!(out.history.iter().all(|r| r.grad_norm.is_finite()));
    assert_eq!(account(&fed.merged_transcript().unwrap()).unwrap().rounds, 20);
}
