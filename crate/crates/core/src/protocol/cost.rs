use serde::{Deserialize, Serialize};

use crate::crypto::ciphertext_bits;
use crate::engine::{CircuitOp, ServerCircuit};
use crate::simulator::Gate;

/// Brickwork slots charged for one single-qubit gate.
pub const BRICKWORK_SLOTS_SINGLE: u64 = 4;
/// Brickwork slots charged for one CNOT.
pub const BRICKWORK_SLOTS_CNOT: u64 = 8;
/// Classical bits per qubit per slot: one measurement angle out, one outcome back.
pub const BRICKWORK_BITS_PER_SLOT: u64 = 2;
/// Width of a real number on the wire.
pub const VALUE_BITS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub qubits_sent: u64,
    pub classical_bits: u64,
    pub rounds: u64,
}

/// Which communication model an estimate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CostModel {
    /// One padded state plus key ciphertext up, one value plus key ciphertext down.
    Qhe,
    BlindBrickwork {
        slots_single: u64,
        slots_cnot: u64,
        bits_per_slot: u64,
    },
}

impl CostModel {
    pub fn blind_default() -> Self {
        CostModel::BlindBrickwork {
            slots_single: BRICKWORK_SLOTS_SINGLE,
            slots_cnot: BRICKWORK_SLOTS_CNOT,
            bits_per_slot: BRICKWORK_BITS_PER_SLOT,
        }
    }

    pub fn estimate(&self, circuit: &ServerCircuit) -> CostEstimate {
        let n = circuit.num_qubits() as u64;
        match *self {
            CostModel::Qhe => {
                if circuit.ops().is_empty() {
                    return CostEstimate {
                        qubits_sent: 0,
                        classical_bits: 0,
                        rounds: 0,
                    };
                }
                let ct = ciphertext_bits(circuit.num_qubits());
                CostEstimate {
                    qubits_sent: n,
                    classical_bits: ct + VALUE_BITS + ct,
                    rounds: 1,
                }
            }
            CostModel::BlindBrickwork {
                slots_single,
                slots_cnot,
                bits_per_slot,
            } => {
                let depth = brickwork_depth(circuit, slots_single, slots_cnot);
                CostEstimate {
                    qubits_sent: n * depth,
                    classical_bits: bits_per_slot * n * depth,
                    rounds: depth,
                }
            }
        }
    }
}

/// Greedy packing of slot-weighted gates; each qubit advances independently
/// and a CNOT starts once both its qubits are free.
pub fn brickwork_depth(circuit: &ServerCircuit, slots_single: u64, slots_cnot: u64) -> u64 {
    let mut frontier = vec![0u64; circuit.num_qubits()];
    for op in circuit.ops() {
        let (qubits, slots) = match op {
            CircuitOp::Fixed(Gate::Cnot { control, target }) => (vec![*control, *target], slots_cnot),
            CircuitOp::Fixed(g) => (g.qubits().unwrap_or_default(), slots_single),
            CircuitOp::Ry { qubit, .. } | CircuitOp::Rz { qubit, .. } => (vec![*qubit], slots_single),
        };
        let start = qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
        for q in qubits {
            frontier[q] = start + slots;
        }
    }
    frontier.into_iter().max().unwrap_or(0)
}

/// Blind-computing cost of `circuit` under the declared brickwork constants.
pub fn blind_baseline_cost(circuit: &ServerCircuit) -> CostEstimate {
    CostModel::blind_default().estimate(circuit)
}
