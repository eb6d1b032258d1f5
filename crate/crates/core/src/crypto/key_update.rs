//! Pauli key-update algebra.
//!
//! A gate `G` applied to a padded state `Z^a X^b |ψ⟩` yields
//! `Z^{a'} X^{b'} G|ψ⟩` (up to phase) for Clifford `G`. The map
//! `(a, b) → (a', b')` is a boolean circuit over the `2n` key registers,
//! laid out as `a_0..a_{n-1}, b_0..b_{n-1}`.

use serde::{Deserialize, Serialize};

use super::pad::PadKey;
use crate::error::{Error, Result};
use crate::simulator::Gate;

/// Register index of `a_q` in an `n`-qubit key.
pub fn reg_a(q: usize) -> usize {
    q
}

/// Register index of `b_q` in an `n`-qubit key.
pub fn reg_b(q: usize, num_qubits: usize) -> usize {
    num_qubits + q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyOp {
    Swap(usize, usize),
    /// `dst ← dst ⊕ src`
    XorInto { src: usize, dst: usize },
    /// `dst ← dst ⊕ (lhs ∧ rhs)`; `dst` must differ from both inputs.
    AndInto { lhs: usize, rhs: usize, dst: usize },
    Not(usize),
}

impl KeyOp {
    fn registers(&self) -> Vec<usize> {
        match *self {
            KeyOp::Swap(x, y) => vec![x, y],
            KeyOp::XorInto { src, dst } => vec![src, dst],
            KeyOp::AndInto { lhs, rhs, dst } => vec![lhs, rhs, dst],
            KeyOp::Not(r) => vec![r],
        }
    }
}

/// Non-Clifford remainder that a gadget has to correct after the Clifford
/// key update has been applied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Residual {
    /// `S^{b_q}` left next to the state (T gate).
    Phase { qubit: usize },
    /// The rotation angle is realized as `(−1)^{b_q}·θ` unless corrected.
    RotationSign { qubit: usize, theta: f64 },
}

/// Ordered boolean circuit over a fixed number of key registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyUpdateCircuit {
    num_registers: usize,
    ops: Vec<KeyOp>,
    residual: Option<Residual>,
}

impl KeyUpdateCircuit {
    pub fn new(num_registers: usize) -> Self {
        Self {
            num_registers,
            ops: Vec::new(),
            residual: None,
        }
    }

    pub fn push(&mut self, op: KeyOp) -> Result<()> {
        let regs = op.registers();
        if let Some(&r) = regs.iter().find(|&&r| r >= self.num_registers) {
            return Err(Error::domain(format!(
                "key register {r} out of range ({} registers)",
                self.num_registers
            )));
        }
        match op {
            KeyOp::XorInto { src, dst } if src == dst => {
                return Err(Error::domain("xor-into with src == dst"))
            }
            KeyOp::AndInto { lhs, rhs, dst } if dst == lhs || dst == rhs => {
                return Err(Error::domain("and-into target aliases an input"))
            }
            _ => {}
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn with(mut self, op: KeyOp) -> Result<Self> {
        self.push(op)?;
        Ok(self)
    }

    pub fn num_registers(&self) -> usize {
        self.num_registers
    }

    pub fn ops(&self) -> &[KeyOp] {
        &self.ops
    }

    pub fn residual(&self) -> Option<Residual> {
        self.residual
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Appends `other`'s ops. Residual flags are not composable and are dropped.
    pub fn extend(&mut self, other: &KeyUpdateCircuit) -> Result<()> {
        if other.num_registers != self.num_registers {
            return Err(Error::domain("composing circuits of different widths"));
        }
        self.ops.extend_from_slice(&other.ops);
        Ok(())
    }

    /// Runs the circuit on plaintext registers.
    pub fn evaluate(&self, bits: &mut [bool]) -> Result<()> {
        if bits.len() != self.num_registers {
            return Err(Error::domain(format!(
                "circuit over {} registers applied to {} bits",
                self.num_registers,
                bits.len()
            )));
        }
        for op in &self.ops {
            match *op {
                KeyOp::Swap(x, y) => bits.swap(x, y),
                KeyOp::XorInto { src, dst } => bits[dst] ^= bits[src],
                KeyOp::AndInto { lhs, rhs, dst } => bits[dst] ^= bits[lhs] & bits[rhs],
                KeyOp::Not(r) => bits[r] = !bits[r],
            }
        }
        Ok(())
    }

    pub fn apply_to_key(&self, key: &PadKey) -> Result<PadKey> {
        let mut regs = key.to_registers();
        self.evaluate(&mut regs)?;
        PadKey::from_registers(&regs)
    }

    /// Stable byte encoding, used to bind evaluated ciphertexts to the circuit.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = (self.num_registers as u32).to_le_bytes().to_vec();
        for op in &self.ops {
            let (tag, regs) = match *op {
                KeyOp::Swap(x, y) => (0u8, [x, y, 0]),
                KeyOp::XorInto { src, dst } => (1, [src, dst, 0]),
                KeyOp::AndInto { lhs, rhs, dst } => (2, [lhs, rhs, dst]),
                KeyOp::Not(r) => (3, [r, 0, 0]),
            };
            out.push(tag);
            for r in regs {
                out.extend_from_slice(&(r as u32).to_le_bytes());
            }
        }
        out
    }
}

/// Key-update circuit for one gate on an `n`-qubit pad.
///
/// | gate | update |
/// |------|--------|
/// | `X_j`, `Z_j` | none |
/// | `H_j` | swap `a_j`, `b_j` |
/// | `S_j` | `a_j ← a_j ⊕ b_j` |
/// | `CNOT(c,t)` | `a_c ← a_c ⊕ a_t`, `b_t ← b_t ⊕ b_c` |
/// | `T_j` | as `S_j`, plus residual `S^{b_j}` |
/// | `Rz_j(θ)` | none, plus residual sign flip of `θ` when `b_j = 1` |
///
/// `Ry` and whole-register permutations have no Pauli update of this form;
/// the server engine decomposes or gadgetizes them.
pub fn key_update_rule(gate: &Gate, num_qubits: usize) -> Result<KeyUpdateCircuit> {
    gate.validate(num_qubits)?;
    let n = num_qubits;
    let mut c = KeyUpdateCircuit::new(2 * n);
    match *gate {
        Gate::X(_) | Gate::Z(_) => {}
        Gate::H(q) => c.push(KeyOp::Swap(reg_a(q), reg_b(q, n)))?,
        Gate::S(q) => c.push(KeyOp::XorInto {
            src: reg_b(q, n),
            dst: reg_a(q),
        })?,
        Gate::T(q) => {
            c.push(KeyOp::XorInto {
                src: reg_b(q, n),
                dst: reg_a(q),
            })?;
            c.residual = Some(Residual::Phase { qubit: q });
        }
        Gate::Rz(q, theta) => c.residual = Some(Residual::RotationSign { qubit: q, theta }),
        Gate::Cnot { control, target } => {
            c.push(KeyOp::XorInto {
                src: reg_a(target),
                dst: reg_a(control),
            })?;
            c.push(KeyOp::XorInto {
                src: reg_b(control, n),
                dst: reg_b(target, n),
            })?;
        }
        Gate::Ry(..) | Gate::Perm(_) => {
            return Err(Error::UnsupportedGate(gate.name().to_string()))
        }
    }
    Ok(c)
}
