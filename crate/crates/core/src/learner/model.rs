use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::engine::{CircuitOp, ServerCircuit};
use crate::error::{Error, Result};
use crate::simulator::{Gate, PauliZ, StateVector};

/// Entangling block closing each layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entangler {
    /// `CNOT(q, q+1 mod n)` for every q; a single CNOT when n = 2.
    Ring,
    None,
}

/// Layered ansatz: each layer applies `Ry(θ)` then `Rz(θ)` on every qubit,
/// then the entangler. Slot `2(l·n + q)` drives `Ry` and the next slot `Rz`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ansatz {
    pub num_qubits: usize,
    pub layers: usize,
    pub entangler: Entangler,
}

impl Ansatz {
    pub fn new(num_qubits: usize, layers: usize) -> Result<Self> {
        Self::with_entangler(num_qubits, layers, Entangler::Ring)
    }

    pub fn with_entangler(num_qubits: usize, layers: usize, entangler: Entangler) -> Result<Self> {
        if num_qubits == 0 || num_qubits > crate::simulator::MAX_QUBITS {
            return Err(Error::domain(format!("ansatz width {num_qubits} unsupported")));
        }
        Ok(Self {
            num_qubits,
            layers,
            entangler,
        })
    }

    pub fn num_params(&self) -> usize {
        2 * self.num_qubits * self.layers
    }

    pub fn circuit(&self) -> ServerCircuit {
        let n = self.num_qubits;
        let mut c = ServerCircuit::new(n, self.num_params());
        let mut push = |op| c.push(op).expect("ansatz ops are in range");
        for l in 0..self.layers {
            for q in 0..n {
                let slot = 2 * (l * n + q);
                push(CircuitOp::Ry { qubit: q, slot });
                push(CircuitOp::Rz { qubit: q, slot: slot + 1 });
            }
            if self.entangler == Entangler::Ring && n > 1 {
                let pairs = if n == 2 { 1 } else { n };
                for q in 0..pairs {
                    push(CircuitOp::Fixed(Gate::Cnot {
                        control: q,
                        target: (q + 1) % n,
                    }));
                }
            }
        }
        c
    }
}

/// Ansatz, parameters and the measured qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalModel {
    ansatz: Ansatz,
    circuit: ServerCircuit,
    theta: Vec<f64>,
    observable: PauliZ,
}

impl VariationalModel {
    pub fn new(ansatz: Ansatz, theta: Vec<f64>, observable: PauliZ) -> Result<Self> {
        observable.validate(ansatz.num_qubits)?;
        let model = Self {
            circuit: ansatz.circuit(),
            ansatz,
            theta: Vec::new(),
            observable,
        };
        model.with_theta(theta)
    }

    pub fn zeros(ansatz: Ansatz, observable: PauliZ) -> Result<Self> {
        Self::new(ansatz, vec![0.0; ansatz.num_params()], observable)
    }

    /// Parameters uniform in `[−π, π)`.
    pub fn random<R: Rng + ?Sized>(ansatz: Ansatz, observable: PauliZ, rng: &mut R) -> Result<Self> {
        let theta = (0..ansatz.num_params()).map(|_| rng.random_range(-PI..PI)).collect();
        Self::new(ansatz, theta, observable)
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.ansatz.num_params() {
            return Err(Error::domain(format!(
                "{} parameters for an ansatz with {}",
                theta.len(),
                self.ansatz.num_params()
            )));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::domain(format!("non-finite parameter {t}")));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    pub fn circuit(&self) -> &ServerCircuit {
        &self.circuit
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn observable(&self) -> PauliZ {
        self.observable
    }

    pub fn num_qubits(&self) -> usize {
        self.ansatz.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }
}

/// A model input: a quantum state or a classical string prepared as `|x⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleInput {
    Quantum(StateVector),
    Classical(Vec<bool>),
}

impl SampleInput {
    pub fn num_qubits(&self) -> usize {
        match self {
            SampleInput::Quantum(s) => s.num_qubits(),
            SampleInput::Classical(b) => b.len(),
        }
    }

    pub fn to_state(&self) -> Result<StateVector> {
        match self {
            SampleInput::Quantum(s) => Ok(s.clone()),
            SampleInput::Classical(b) => StateVector::from_bits(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub input: SampleInput,
    label: f64,
    pub index: usize,
}

impl LabeledSample {
    pub fn new(input: SampleInput, label: f64, index: usize) -> Result<Self> {
        if label != 1.0 && label != -1.0 {
            return Err(Error::domain(format!("label must be +1 or -1, got {label}")));
        }
        Ok(Self { input, label, index })
    }

    pub fn label(&self) -> f64 {
        self.label
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    One,
    Two,
}

impl Class {
    /// Class 1 for non-negative values.
    pub fn from_expectation(e: f64) -> Self {
        if e >= 0.0 {
            Class::One
        } else {
            Class::Two
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Class::One => 1,
            Class::Two => 2,
        }
    }

    pub fn label(self) -> f64 {
        match self {
            Class::One => 1.0,
            Class::Two => -1.0,
        }
    }
}

/// The computational-basis toy task: `|0⟩ → +1`, `|1⟩ → −1`, on one qubit.
pub fn toy_dataset(copies: usize) -> Vec<LabeledSample> {
    (0..2 * copies)
        .map(|i| {
            let bit = i % 2 == 1;
            let y = if bit { -1.0 } else { 1.0 };
            LabeledSample::new(SampleInput::Classical(vec![bit]), y, i).expect("labels are ±1")
        })
        .collect()
}
