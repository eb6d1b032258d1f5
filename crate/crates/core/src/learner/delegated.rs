use crate::crypto::ciphertext_bits;
use crate::engine::Shift;
use crate::error::{Error, Result};
use crate::protocol::{Channel, Message, MessageKind, VALUE_BITS};

use super::cost::{split_shift_values, GradientMode};
use super::model::{Class, SampleInput, VariationalModel};

/// Classical bits of one evaluation response: the value and the updated key ciphertext.
pub fn response_bits(num_qubits: usize) -> u64 {
    VALUE_BITS + ciphertext_bits(num_qubits)
}

/// Runs one protocol round for `sample`: one freshly padded copy per entry of
/// `shifts` goes to the server, which evaluates the model circuit with that
/// shift and returns a sign-encrypted expectation per copy. Returns the
/// decrypted values in the order of `shifts`.
pub fn delegated_evaluate(
    channel: &mut Channel,
    model: &VariationalModel,
    sample: &SampleInput,
    shifts: &[Option<Shift>],
    shots: u64,
    round: u64,
) -> Result<Vec<f64>> {
    let n = model.num_qubits();
    if sample.num_qubits() != n {
        return Err(Error::domain(format!(
            "{}-qubit sample for a {n}-qubit model",
            sample.num_qubits()
        )));
    }
    if shifts.is_empty() {
        return Ok(Vec::new());
    }
    let session = channel.transcript.next_session();
    let before = channel.transcript.totals();

    let mut uploads = Vec::with_capacity(shifts.len());
    for _ in shifts {
        let msg = match sample {
            SampleInput::Quantum(psi) => {
                let (padded, ct) = channel.client.encrypt_state(session, psi)?;
                let m = Message::new(MessageKind::EncryptedSample, n as u64, ct.bit_len(), session, round);
                uploads.push(channel.server.receive(session, padded, ct)?);
                m
            }
            SampleInput::Classical(bits) => {
                let (padded, ct) = channel.client.encrypt_bits(session, bits)?;
                let m = Message::new(
                    MessageKind::EncryptedSample,
                    0,
                    n as u64 + ct.bit_len(),
                    session,
                    round,
                );
                uploads.push(channel.server.receive_classical(session, &padded, ct)?);
                m
            }
        };
        channel.transcript.push(msg)?;
    }

    let k = model.observable().qubit();
    let mut replies = Vec::with_capacity(shifts.len());
    for (es, shift) in uploads.into_iter().zip(shifts) {
        let gates = model.circuit().bind_shifted(model.theta(), *shift)?;
        let out = channel.server.homomorphic_apply(es, &gates)?;
        replies.push(channel.server.encrypted_expectation_z(&out, k, shots)?);
    }
    let bits: u64 = replies.iter().map(|r| VALUE_BITS + r.key_ct_out.bit_len()).sum();
    channel
        .transcript
        .push(Message::new(MessageKind::EvalResponse, 0, bits, session, round))?;

    let rounds = channel.transcript.totals().since(&before).rounds;
    if rounds != 1 {
        return Err(Error::Protocol(format!(
            "evaluation session {session} used {rounds} rounds"
        )));
    }
    replies.iter().map(|r| channel.client.decrypt_expectation(r)).collect()
}

/// `(E, ∂E/∂θ)` for one sample in a single round carrying `1 + 2P` copies.
pub fn delegated_gradient(
    channel: &mut Channel,
    model: &VariationalModel,
    sample: &SampleInput,
    mode: GradientMode,
    shots: u64,
    round: u64,
) -> Result<(f64, Vec<f64>)> {
    mode.validate()?;
    let values = delegated_evaluate(channel, model, sample, &mode.shifts(model.num_params()), shots, round)?;
    Ok(split_shift_values(&values, mode))
}

/// The client's class decision for a server-held model, from one copy.
pub fn delegated_inference(channel: &mut Channel, model: &VariationalModel, sample: &SampleInput, shots: u64, round: u64) -> Result<Class> {
    let values = delegated_evaluate(channel, model, sample, &[None], shots, round)?;
    Ok(Class::from_expectation(values[0]))
}
