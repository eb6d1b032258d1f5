use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::crypto::ciphertext_bits;
use crate::engine::{EncryptedState, Repad};
use crate::error::{Error, Result};
use crate::protocol::{Channel, Message, MessageKind, VALUE_BITS};
use crate::simulator::{bits_to_index, index_to_bits, Gate, Permutation};

use super::group::DlpGroup;
use super::kernel::{FeatureConfig, KernelMatrix};

/// Kernel estimation settings. `epsilon` is the target additive error; with
/// `sampled` set the server estimates each entry from `⌈1/ε²⌉` shots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimation {
    pub epsilon: f64,
    pub sampled: bool,
}

impl KernelEstimation {
    pub fn exact(epsilon: f64) -> Self {
        Self {
            epsilon,
            sampled: false,
        }
    }

    pub fn shots(&self) -> u64 {
        if self.sampled {
            (1.0 / (self.epsilon * self.epsilon)).ceil() as u64
        } else {
            0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub samples: u64,
    /// Padded feature-register copies the server prepares.
    pub copies: u64,
    pub shots: u64,
    pub classical_bits: u64,
    pub rounds: u64,
    /// `N²·n/ε²`.
    pub bound: f64,
    pub bound_ratio: f64,
}

/// `|j⟩_A |x⟩_B → |x·a^j⟩_A |x⟩_B` on two `n`-qubit registers, A low.
///
/// For a unit `x`, `j ∈ [0, p−2]` maps onto the units, `j = p−1` to 0, and
/// larger `j` are fixed; a non-unit `x` leaves A untouched.
pub fn controlled_multiplier(group: &DlpGroup) -> Result<Permutation> {
    let n = group.bits();
    let p = group.p() as usize;
    let mask = (1usize << n) - 1;
    let powers: Vec<usize> = (0..p - 1).map(|j| group.pow(j as u64) as usize).collect();
    Permutation::from_fn(2 * n, |idx| {
        let (j, x) = (idx & mask, idx >> n);
        let out = if x == 0 || x >= p {
            j
        } else if j < p - 1 {
            x * powers[j] % p
        } else if j == p - 1 {
            0
        } else {
            j
        };
        out | (x << n)
    })
}

/// Client-side encoding of sample `x`: A register zero, B register `x`.
pub fn encode_sample(group: &DlpGroup, x: u64) -> Result<Vec<bool>> {
    group.check_unit(x)?;
    let n = group.bits();
    Ok(index_to_bits((x as usize) << n, 2 * n))
}

/// Computes the Gram matrix with a purely classical client: it sends padded
/// bit strings and key ciphertexts; the server prepares padded feature states
/// whose A registers all carry one client-chosen pad and estimates overlaps.
pub fn delegated_kernel_pipeline(
    channel: &mut Channel,
    samples: &[u64],
    group: &DlpGroup,
    cfg: &FeatureConfig,
    estimation: KernelEstimation,
) -> Result<(KernelMatrix, PipelineReport)> {
    cfg.validate(group)?;
    if !(estimation.epsilon > 0.0 && estimation.epsilon.is_finite()) {
        return Err(Error::Validation("kernel epsilon must be positive".into()));
    }
    let n = group.bits();
    let big_n = samples.len();
    let session = channel.transcript.next_session();
    let before = channel.transcript.totals();

    let target = channel.client.issue_target_pad(session, n)?;
    let mut uploads = Vec::with_capacity(big_n);
    for &x in samples {
        let (padded, ct) = channel.client.encrypt_bits(session, &encode_sample(group, x)?)?;
        uploads.push((padded, ct));
    }

    let shots = estimation.shots();
    let pairs = (big_n * big_n.saturating_sub(1) / 2) as u64;
    let copies = if shots == 0 { big_n as u64 } else { 2 * pairs * shots };
    let per_copy = 2 * n as u64 + ciphertext_bits(2 * n);
    channel.transcript.push(Message::new(
        MessageKind::KernelRequest,
        0,
        copies * per_copy + target.bit_len(),
        session,
        0,
    ))?;

    let cmul = controlled_multiplier(group)?;
    let a_register: Vec<usize> = (0..n).collect();
    let hadamards: Vec<Gate> = (0..cfg.k).map(Gate::H).collect();
    let mut features: Vec<EncryptedState> = Vec::with_capacity(big_n);
    for (padded, ct) in uploads {
        let server = &mut channel.server;
        let es = server.receive_classical(session, &padded, ct)?;
        let es = server.homomorphic_apply(es, &hadamards)?;
        let es = server.permutation_gadget(
            es,
            &cmul,
            Repad::Shared {
                target: &target,
                qubits: &a_register,
            },
        )?;
        features.push(server.discard_register(es, n)?);
    }

    let mut values = DMatrix::identity(big_n, big_n);
    for i in 0..big_n {
        for j in i + 1..big_n {
            let v = channel.server.overlap(&features[i], &features[j], shots)?;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    channel.transcript.push(Message::new(
        MessageKind::KernelResponse,
        0,
        pairs * VALUE_BITS,
        session,
        0,
    ))?;

    let comm = channel.transcript.totals().since(&before);
    let bound = (big_n * big_n * n) as f64 / (estimation.epsilon * estimation.epsilon);
    let report = PipelineReport {
        samples: big_n as u64,
        copies,
        shots,
        classical_bits: comm.classical_bits,
        rounds: comm.rounds,
        bound,
        bound_ratio: if bound > 0.0 { comm.classical_bits as f64 / bound } else { 0.0 },
    };
    Ok((KernelMatrix::new(samples.to_vec(), values)?, report))
}

/// Decodes the B-register label used by [`encode_sample`].
pub fn decode_sample(group: &DlpGroup, bits: &[bool]) -> u64 {
    (bits_to_index(bits) >> group.bits()) as u64
}
