#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qfl_core::learner::{toy_dataset, Ansatz, LabeledSample, SampleInput, VariationalModel};
use qfl_core::protocol::Channel;
use qfl_core::simulator::{Gate, PauliZ, StateVector};
use qfl_core::Result;

/// A uniformly chosen gate from the Clifford+T set with continuous `Rz`.
pub fn random_gate(n: usize, rng: &mut ChaCha8Rng) -> Gate {
    let q = rng.random_range(0..n);
    let choices = if n > 1 { 7 } else { 6 };
    match rng.random_range(0..choices) {
        0 => Gate::X(q),
        1 => Gate::Z(q),
        2 => Gate::H(q),
        3 => Gate::S(q),
        4 => Gate::T(q),
        5 => Gate::Rz(q, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)),
        _ => {
            let mut t = rng.random_range(0..n - 1);
            if t >= q {
                t += 1;
            }
            Gate::Cnot { control: q, target: t }
        }
    }
}

pub fn random_circuit(n: usize, depth: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    (0..depth).map(|_| random_gate(n, rng)).collect()
}

pub fn plaintext(psi: &StateVector, gates: &[Gate]) -> StateVector {
    let mut out = psi.clone();
    out.apply_all(gates).unwrap();
    out
}

/// Pads `psi`, runs `gates` on the server and decrypts the result.
pub fn run_encrypted(channel: &mut Channel, psi: &StateVector, gates: &[Gate]) -> Result<StateVector> {
    let session = channel.transcript.next_session();
    let (padded, ct) = channel.client.encrypt_state(session, psi)?;
    let es = channel.server.receive(session, padded, ct)?;
    let es = channel.server.homomorphic_apply(es, gates)?;
    channel.client.decrypt_state(&es)
}

pub fn random_model(n: usize, layers: usize, rng: &mut ChaCha8Rng) -> VariationalModel {
    VariationalModel::random(Ansatz::new(n, layers).unwrap(), PauliZ::new(0), rng).unwrap()
}

pub fn random_quantum_dataset(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledSample> {
    (0..size)
        .map(|i| {
            let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
            LabeledSample::new(SampleInput::Quantum(StateVector::random(n, rng).unwrap()), y, i).unwrap()
        })
        .collect()
}

/// The one-qubit `|0⟩ → +1`, `|1⟩ → −1` task with quantum inputs.
pub fn toy_quantum(copies: usize) -> Vec<LabeledSample> {
    toy_dataset(copies)
        .into_iter()
        .map(|s| {
            let state = s.input.to_state().unwrap();
            LabeledSample::new(SampleInput::Quantum(state), s.label(), s.index).unwrap()
        })
        .collect()
}
