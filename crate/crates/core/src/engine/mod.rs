//! Server side of the homomorphic protocol.
//!
//! The server holds padded states and key ciphertexts. Clifford gates are
//! applied directly and the key ciphertext follows via [`EvalHandle::eval`];
//! `T`, `Rz` and permutation gates go through sealed gadgets whose internal
//! key access never reaches the [`ServerViewLog`]. `Ry(θ)` is compiled as
//! `S·H·Rz(θ)·H·S·Z` (rightmost first).

mod audit;
mod circuit;
mod log;

pub use audit::{
    audit_mixedness, audit_mixedness_with, audit_server_view, AuditMatch, AuditReport, PadFamily,
    Secret, SecretKind, AUDIT_SIGNIFICANCE, MIXEDNESS_MAX_QUBITS,
};
pub use circuit::{CircuitOp, ServerCircuit, Shift};
pub use log::{ServerViewLog, ViewEvent};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::{key_update_rule, qotp_decrypt, qotp_encrypt, EvalHandle, KeyCiphertext, KeyOp, KeyUpdateCircuit, PadKey};
use crate::error::{Error, Result};
use crate::simulator::{format_bits, index_to_bits, Gate, PauliZ, Permutation, StateVector};

/// A padded state together with the ciphertext of its pad.
#[derive(Clone, Debug)]
pub struct EncryptedState {
    padded: StateVector,
    key_ct: KeyCiphertext,
    session: u64,
}

impl EncryptedState {
    pub fn padded(&self) -> &StateVector {
        &self.padded
    }

    pub fn key_ct(&self) -> &KeyCiphertext {
        &self.key_ct
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    pub fn num_qubits(&self) -> usize {
        self.padded.num_qubits()
    }
}

/// The server's measurement of `Z_k` on a padded state: `w = (−1)^{b'_k}⟨Z_k⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncryptedExpectation {
    pub w: f64,
    pub key_ct_out: KeyCiphertext,
    pub qubit: usize,
    /// 0 means exact expectation.
    pub shots: u64,
}

/// How a permutation gadget pads its output.
#[derive(Clone, Copy, Debug)]
pub enum Repad<'a> {
    /// Pad drawn inside the gadget.
    Fresh,
    /// The listed qubits take the pad carried by `target` (a ciphertext over
    /// exactly those qubits, from the same vault); the rest are fresh.
    Shared {
        target: &'a KeyCiphertext,
        qubits: &'a [usize],
    },
}

/// Server engine bound to one client vault.
pub struct ServerEngine {
    handle: EvalHandle,
    log: ServerViewLog,
    rng: ChaCha8Rng,
    gadget_calls: u64,
}

impl ServerEngine {
    pub fn new(handle: EvalHandle, seed: u64) -> Self {
        Self {
            handle,
            log: ServerViewLog::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            gadget_calls: 0,
        }
    }

    pub fn vault_id(&self) -> u64 {
        self.handle.vault_id()
    }

    pub fn log(&self) -> &ServerViewLog {
        &self.log
    }

    pub fn take_log(&mut self) -> ServerViewLog {
        std::mem::take(&mut self.log)
    }

    /// Test hook: lets a harness inject events (e.g. a deliberately leaky double).
    pub fn log_mut(&mut self) -> &mut ServerViewLog {
        &mut self.log
    }

    fn check_vault(&self, ct: &KeyCiphertext) -> Result<()> {
        if ct.vault_id() == self.handle.vault_id() {
            Ok(())
        } else {
            Err(Error::WrongKey {
                expected: self.handle.vault_id(),
                found: ct.vault_id(),
            })
        }
    }

    /// Accepts a padded quantum state and its key ciphertext.
    pub fn receive(&mut self, session: u64, padded: StateVector, key_ct: KeyCiphertext) -> Result<EncryptedState> {
        self.check_vault(&key_ct)?;
        if key_ct.num_qubits() != padded.num_qubits() {
            return Err(Error::Protocol(format!(
                "key ciphertext covers {} qubits, state has {}",
                key_ct.num_qubits(),
                padded.num_qubits()
            )));
        }
        self.log.record(ViewEvent::ReceivedState {
            session,
            num_qubits: padded.num_qubits(),
        });
        self.log.record(ViewEvent::ReceivedCiphertext {
            session,
            ciphertext: key_ct.clone(),
        });
        Ok(EncryptedState {
            padded,
            key_ct,
            session,
        })
    }

    /// Accepts a padded classical string and prepares the basis state it names.
    pub fn receive_classical(&mut self, session: u64, padded_bits: &[bool], key_ct: KeyCiphertext) -> Result<EncryptedState> {
        self.log.record(ViewEvent::ReceivedBits {
            session,
            bits: format_bits(padded_bits),
        });
        let state = StateVector::from_bits(padded_bits)?;
        self.receive(session, state, key_ct)
    }

    fn eval_key(&mut self, es: &mut EncryptedState, circuit: &KeyUpdateCircuit) -> Result<()> {
        if circuit.is_empty() {
            return Ok(());
        }
        es.key_ct = self.handle.eval(&es.key_ct, circuit)?;
        self.log.record(ViewEvent::KeyEvaluated {
            session: es.session,
            ciphertext: es.key_ct.clone(),
        });
        Ok(())
    }

    fn record_gate(&mut self, session: u64, gate: &Gate) {
        let angle = match gate {
            Gate::Rz(_, t) | Gate::Ry(_, t) => Some(*t),
            _ => None,
        };
        self.log.record(ViewEvent::AppliedGate {
            session,
            gate: gate.name().to_string(),
            qubits: gate.qubits().unwrap_or_default(),
            angle,
        });
    }

    fn apply_clifford(&mut self, es: &mut EncryptedState, gate: &Gate) -> Result<()> {
        let rule = key_update_rule(gate, es.num_qubits())?;
        es.padded.apply(gate)?;
        self.eval_key(es, &rule)
    }

    /// Homomorphically applies `gates`; decrypting the result with the
    /// updated key gives `U·ψ` up to global phase.
    pub fn homomorphic_apply(&mut self, mut es: EncryptedState, gates: &[Gate]) -> Result<EncryptedState> {
        self.check_vault(&es.key_ct)?;
        for gate in gates {
            gate.validate(es.num_qubits())?;
            match gate {
                Gate::X(_) | Gate::Z(_) | Gate::H(_) | Gate::S(_) | Gate::Cnot { .. } => {
                    self.record_gate(es.session, gate);
                    self.apply_clifford(&mut es, gate)?;
                }
                Gate::T(q) => es = self.t_gadget(es, *q)?,
                Gate::Rz(q, theta) => es = self.rotation_gadget(es, *q, *theta)?,
                Gate::Ry(q, theta) => {
                    self.record_gate(es.session, gate);
                    let q = *q;
                    for g in [Gate::Z(q), Gate::S(q), Gate::H(q)] {
                        self.apply_clifford(&mut es, &g)?;
                    }
                    self.sealed_rz(&mut es, q, *theta)?;
                    for g in [Gate::H(q), Gate::S(q)] {
                        self.apply_clifford(&mut es, &g)?;
                    }
                }
                Gate::Perm(p) => es = self.permutation_gadget(es, p, Repad::Fresh)?,
            }
        }
        Ok(es)
    }

    fn sealed_rz(&mut self, es: &mut EncryptedState, q: usize, theta: f64) -> Result<()> {
        let key = self.handle.sealed_open(&es.key_ct)?;
        let signed = if key.b()[q] { -theta } else { theta };
        es.padded.apply(&Gate::Rz(q, signed))
    }

    /// `Rz_j(θ)` on the plaintext. The pad is unchanged.
    pub fn rotation_gadget(&mut self, mut es: EncryptedState, j: usize, theta: f64) -> Result<EncryptedState> {
        self.check_vault(&es.key_ct)?;
        let gate = Gate::Rz(j, theta);
        gate.validate(es.num_qubits())?;
        self.record_gate(es.session, &gate);
        self.sealed_rz(&mut es, j, theta)?;
        Ok(es)
    }

    /// `T_j` on the plaintext, with the residual `S^{b_j}` corrected inside the gadget.
    pub fn t_gadget(&mut self, mut es: EncryptedState, j: usize) -> Result<EncryptedState> {
        self.check_vault(&es.key_ct)?;
        let gate = Gate::T(j);
        gate.validate(es.num_qubits())?;
        self.record_gate(es.session, &gate);
        let n = es.num_qubits();
        let b_j = self.handle.sealed_open(&es.key_ct)?.b()[j];
        es.padded.apply(&gate)?;
        let rule = key_update_rule(&gate, n)?;
        self.eval_key(&mut es, &rule)?;
        if b_j {
            // S† = S·Z
            es.padded.apply(&Gate::Z(j))?;
            es.padded.apply(&Gate::S(j))?;
        }
        // S†'s key update; a no-op when b_j = 0.
        let correction = KeyUpdateCircuit::new(2 * n).with(KeyOp::XorInto {
            src: crate::crypto::reg_b(j, n),
            dst: crate::crypto::reg_a(j),
        })?;
        self.eval_key(&mut es, &correction)?;
        Ok(es)
    }

    /// Applies a basis permutation to the plaintext and re-pads the output.
    pub fn permutation_gadget(&mut self, es: EncryptedState, perm: &Permutation, repad: Repad<'_>) -> Result<EncryptedState> {
        self.check_vault(&es.key_ct)?;
        let n = es.num_qubits();
        Gate::Perm(perm.clone()).validate(n)?;
        self.record_gate(es.session, &Gate::Perm(perm.clone()));
        self.gadget_calls += 1;

        let key = self.handle.sealed_open(&es.key_ct)?;
        let mut plain = qotp_decrypt(&es.padded, &key)?;
        plain.apply(&Gate::Perm(perm.clone()))?;

        let mut context = es.key_ct.to_bytes();
        context.extend_from_slice(&self.gadget_calls.to_le_bytes());
        let fresh = PadKey::from_registers(&self.handle.sealed_prf(&context, 2 * n))?;
        let new_key = match repad {
            Repad::Fresh => fresh,
            Repad::Shared { target, qubits } => {
                self.check_vault(target)?;
                if target.num_qubits() != qubits.len() {
                    return Err(Error::Protocol(format!(
                        "shared pad covers {} qubits, {} requested",
                        target.num_qubits(),
                        qubits.len()
                    )));
                }
                if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
                    return Err(Error::domain(format!("qubit {q} outside the register")));
                }
                let shared = self.handle.sealed_open(target)?;
                let (mut a, mut b) = (fresh.a().to_vec(), fresh.b().to_vec());
                for (i, &q) in qubits.iter().enumerate() {
                    a[q] = shared.a()[i];
                    b[q] = shared.b()[i];
                }
                PadKey::new(a, b)?
            }
        };
        let padded = qotp_encrypt(&plain, &new_key)?;
        let key_ct = self.handle.sealed_issue(&new_key, &context);
        self.log.record(ViewEvent::KeyEvaluated {
            session: es.session,
            ciphertext: key_ct.clone(),
        });
        Ok(EncryptedState {
            padded,
            key_ct,
            session: es.session,
        })
    }

    /// Measures and discards the qubits at index `keep..`, which must be in a
    /// basis state. The observed (padded) label is logged.
    pub fn discard_register(&mut self, es: EncryptedState, keep: usize) -> Result<EncryptedState> {
        self.check_vault(&es.key_ct)?;
        let n = es.num_qubits();
        let (low, label) = es.padded.detach_basis_register(keep)?;
        self.log.record(ViewEvent::ObservedBits {
            session: es.session,
            bits: format_bits(&index_to_bits(label, n - keep)),
        });
        let kept: Vec<usize> = (0..keep).collect();
        let key_ct = self.handle.select_qubits(&es.key_ct, &kept)?;
        self.log.record(ViewEvent::KeyEvaluated {
            session: es.session,
            ciphertext: key_ct.clone(),
        });
        Ok(EncryptedState {
            padded: low,
            key_ct,
            session: es.session,
        })
    }

    /// `w = ⟨Z_k⟩` of the padded state, exact when `shots == 0`.
    pub fn encrypted_expectation_z(&mut self, es: &EncryptedState, k: usize, shots: u64) -> Result<EncryptedExpectation> {
        self.check_vault(&es.key_ct)?;
        let obs = PauliZ::new(k);
        let w = if shots == 0 {
            es.padded.expectation_z(obs)?
        } else {
            es.padded.sample_z(obs, shots, &mut self.rng)?
        };
        self.log.record(ViewEvent::Measured {
            session: es.session,
            qubit: k,
            w,
            shots,
        });
        Ok(EncryptedExpectation {
            w,
            key_ct_out: es.key_ct.clone(),
            qubit: k,
            shots,
        })
    }

    /// Estimates `|⟨ψ1|ψ2⟩|` of two states padded with the same key. The
    /// modulus is used because each padded state carries an unobservable
    /// global phase. With `shots > 0` each shot is a ±1 outcome whose mean is
    /// the overlap.
    pub fn overlap(&mut self, e1: &EncryptedState, e2: &EncryptedState, shots: u64) -> Result<f64> {
        self.check_vault(&e1.key_ct)?;
        self.check_vault(&e2.key_ct)?;
        if self.handle.sealed_open(&e1.key_ct)? != self.handle.sealed_open(&e2.key_ct)? {
            return Err(Error::Protocol(
                "overlap of states under different pads is meaningless".into(),
            ));
        }
        let exact = e1.padded.inner_product(&e2.padded)?.norm().min(1.0);
        let value = if shots == 0 {
            exact
        } else {
            let p_plus = (1.0 + exact) / 2.0;
            let plus = (0..shots).filter(|_| self.rng.random::<f64>() < p_plus).count() as f64;
            (2.0 * plus - shots as f64) / shots as f64
        };
        self.log.record(ViewEvent::Overlap {
            session: e1.session,
            value,
            shots,
        });
        Ok(value)
    }
}
