use num_complex::Complex64;

use crate::crypto::{qotp_encrypt, PadKey};
use crate::error::{Error, Result};
use crate::simulator::{format_bits, index_to_bits, StateVector};

use super::log::{ServerViewLog, ViewEvent};

/// Largest register the exhaustive pad average accepts.
pub const MIXEDNESS_MAX_QUBITS: usize = 3;

/// A server-view audit fails when the chance of seeing at least the observed
/// number of matches, under independent uniform bits, drops below this.
pub const AUDIT_SIGNIFICANCE: f64 = 1e-6;

/// Which Pauli pads enter the average.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadFamily {
    Full,
    ZOnly,
    XOnly,
}

/// Max-entrywise deviation of the average over all `4^n` pads of
/// `P·|ψ⟩⟨ψ|·P†` from `I/2^n`.
pub fn audit_mixedness(psi: &StateVector) -> Result<f64> {
    audit_mixedness_with(psi, PadFamily::Full)
}

pub fn audit_mixedness_with(psi: &StateVector, family: PadFamily) -> Result<f64> {
    let n = psi.num_qubits();
    if n > MIXEDNESS_MAX_QUBITS {
        return Err(Error::Resource(format!(
            "exhaustive pad average needs n <= {MIXEDNESS_MAX_QUBITS}, got {n}"
        )));
    }
    let dim = psi.dim();
    let (a_range, b_range) = match family {
        PadFamily::Full => (dim, dim),
        PadFamily::ZOnly => (dim, 1),
        PadFamily::XOnly => (1, dim),
    };
    let count = (a_range * b_range) as f64;
    let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
    for a in 0..a_range {
        for b in 0..b_range {
            let key = PadKey::new(index_to_bits(a, n), index_to_bits(b, n))?;
            let padded = qotp_encrypt(psi, &key)?;
            let amps = padded.amplitudes();
            for r in 0..dim {
                for c in 0..dim {
                    rho[r * dim + c] += amps[r] * amps[c].conj();
                }
            }
        }
    }
    let target = 1.0 / dim as f64;
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let ideal = if r == c { target } else { 0.0 };
            worst = worst.max((rho[r * dim + c] / count - ideal).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecretKind {
    PadKey,
    Sample,
}

/// A plaintext the server must never observe.
#[derive(Clone, Debug, PartialEq)]
pub struct Secret {
    /// Restricts the scan to one session; `None` scans every session.
    pub session: Option<u64>,
    pub kind: SecretKind,
    pub bits: Vec<bool>,
}

impl Secret {
    pub fn pad(session: Option<u64>, key: &PadKey) -> Self {
        Self {
            session,
            kind: SecretKind::PadKey,
            bits: key.to_registers(),
        }
    }

    pub fn sample(session: Option<u64>, bits: Vec<bool>) -> Self {
        Self {
            session,
            kind: SecretKind::Sample,
            bits,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditMatch {
    pub event_index: usize,
    pub secret_index: usize,
    pub kind: SecretKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub passed: bool,
    pub comparisons: u64,
    pub matches: Vec<AuditMatch>,
    /// Expected number of matches if logged fields were independent of the secrets.
    pub expected_chance: f64,
    pub p_value: f64,
}

fn logged_fields(event: &ViewEvent) -> Vec<String> {
    match event {
        ViewEvent::ReceivedBits { bits, .. }
        | ViewEvent::ObservedBits { bits, .. }
        | ViewEvent::Note { bits, .. } => vec![bits.clone()],
        ViewEvent::ReceivedCiphertext { ciphertext, .. }
        | ViewEvent::KeyEvaluated { ciphertext, .. } => {
            vec![format_bits(&ciphertext.masked_registers())]
        }
        _ => Vec::new(),
    }
}

// P(Poisson(mean) >= k)
fn poisson_tail(k: usize, mean: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    let mut log_term = -mean + k as f64 * mean.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let mut total = 0.0;
    for i in k..k + 1000 {
        let term = log_term.exp();
        total += term;
        if term < total * 1e-17 {
            break;
        }
        log_term += mean.ln() - ((i + 1) as f64).ln();
    }
    total.min(1.0)
}

/// Scans every bit-bearing field of the log against the secrets. A field
/// matches a secret of the same length when the bit patterns are equal; the
/// audit fails when the match count is implausible for unrelated bits.
pub fn audit_server_view(log: &ServerViewLog, secrets: &[Secret]) -> AuditReport {
    let mut comparisons = 0u64;
    let mut expected = 0.0;
    let mut matches = Vec::new();
    let encoded: Vec<String> = secrets.iter().map(|s| format_bits(&s.bits)).collect();
    for (event_index, event) in log.events().iter().enumerate() {
        for field in logged_fields(event) {
            for (secret_index, secret) in secrets.iter().enumerate() {
                if secret.session.is_some_and(|s| s != event.session()) {
                    continue;
                }
                if secret.bits.is_empty() || field.len() != secret.bits.len() {
                    continue;
                }
                comparisons += 1;
                expected += 0.5f64.powi(secret.bits.len() as i32);
                if field == encoded[secret_index] {
                    matches.push(AuditMatch {
                        event_index,
                        secret_index,
                        kind: secret.kind,
                    });
                }
            }
        }
    }
    let p_value = poisson_tail(matches.len(), expected);
    AuditReport {
        passed: p_value >= AUDIT_SIGNIFICANCE,
        comparisons,
        matches,
        expected_chance: expected,
        p_value,
    }
}
