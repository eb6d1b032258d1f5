//! Quantum and classical one-time pads.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{Gate, StateVector};

/// Pad key `(a, b)`: qubit `i` is masked by `Z^{a_i} X^{b_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PadKey {
    a: Vec<bool>,
    b: Vec<bool>,
}

impl PadKey {
    pub fn new(a: Vec<bool>, b: Vec<bool>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::domain(format!(
                "pad halves have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn identity(num_qubits: usize) -> Result<Self> {
        Self::new(vec![false; num_qubits], vec![false; num_qubits])
    }

    pub fn num_qubits(&self) -> usize {
        self.a.len()
    }

    /// Z-mask bits.
    pub fn a(&self) -> &[bool] {
        &self.a
    }

    /// X-mask bits.
    pub fn b(&self) -> &[bool] {
        &self.b
    }

    /// Register layout used by key ciphertexts: `a_0..a_{n-1}, b_0..b_{n-1}`.
    pub fn to_registers(&self) -> Vec<bool> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn from_registers(bits: &[bool]) -> Result<Self> {
        if !bits.len().is_multiple_of(2) {
            return Err(Error::domain("odd register count for a pad key"));
        }
        let (a, b) = bits.split_at(bits.len() / 2);
        Self::new(a.to_vec(), b.to_vec())
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.num_qubits() == n {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "pad covers {} qubits, data has {n}",
                self.num_qubits()
            )))
        }
    }
}

/// Draws `2n` independent uniform key bits.
pub fn gen_pad<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<PadKey> {
    if num_qubits == 0 {
        return Err(Error::domain("pad needs at least one qubit"));
    }
    let a = (0..num_qubits).map(|_| rng.random()).collect();
    let b = (0..num_qubits).map(|_| rng.random()).collect();
    PadKey::new(a, b)
}

/// `(⊗Z^{a_i})(⊗X^{b_i})|ψ⟩`: the X layer acts first.
pub fn qotp_encrypt(state: &StateVector, key: &PadKey) -> Result<StateVector> {
    key.check(state.num_qubits())?;
    let mut out = state.clone();
    for (q, &b) in key.b.iter().enumerate() {
        if b {
            out.apply(&Gate::X(q))?;
        }
    }
    for (q, &a) in key.a.iter().enumerate() {
        if a {
            out.apply(&Gate::Z(q))?;
        }
    }
    Ok(out)
}

/// Exact inverse of [`qotp_encrypt`]: strips the Z layer, then the X layer.
pub fn qotp_decrypt(state: &StateVector, key: &PadKey) -> Result<StateVector> {
    key.check(state.num_qubits())?;
    let mut out = state.clone();
    for (q, &a) in key.a.iter().enumerate() {
        if a {
            out.apply(&Gate::Z(q))?;
        }
    }
    for (q, &b) in key.b.iter().enumerate() {
        if b {
            out.apply(&Gate::X(q))?;
        }
    }
    Ok(out)
}

/// Pads a classical string: `x ⊕ b`. On basis states the Z half only adds a
/// global phase, so `a` is ignored here.
pub fn classical_otp(x: &[bool], key: &PadKey) -> Result<Vec<bool>> {
    key.check(x.len())?;
    Ok(x.iter().zip(&key.b).map(|(&xi, &bi)| xi ^ bi).collect())
}
