use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::Gate;

/// One step of a [`ServerCircuit`]: a fixed gate or a rotation whose angle is
/// read from a parameter slot at bind time.
#[derive(Clone, Debug, PartialEq)]
pub enum CircuitOp {
    Fixed(Gate),
    Ry { qubit: usize, slot: usize },
    Rz { qubit: usize, slot: usize },
}

/// A shift added to one parameter slot when binding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub slot: usize,
    pub delta: f64,
}

/// Gate list with named parameter slots.
#[derive(Clone, Debug, PartialEq)]
pub struct ServerCircuit {
    num_qubits: usize,
    num_params: usize,
    ops: Vec<CircuitOp>,
}

impl ServerCircuit {
    pub fn new(num_qubits: usize, num_params: usize) -> Self {
        Self {
            num_qubits,
            num_params,
            ops: Vec::new(),
        }
    }

    pub fn push(&mut self, op: CircuitOp) -> Result<()> {
        match &op {
            CircuitOp::Fixed(g) => {
                g.validate(self.num_qubits)?;
                if matches!(g, Gate::Perm(_)) {
                    return Err(Error::domain(
                        "whole-register permutations are not allowed in a learning circuit",
                    ));
                }
            }
            CircuitOp::Ry { qubit, slot } | CircuitOp::Rz { qubit, slot } => {
                if *qubit >= self.num_qubits {
                    return Err(Error::domain(format!("qubit {qubit} out of range")));
                }
                if *slot >= self.num_params {
                    return Err(Error::domain(format!("parameter slot {slot} out of range")));
                }
            }
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn bind(&self, params: &[f64]) -> Result<Vec<Gate>> {
        self.bind_shifted(params, None)
    }

    pub fn bind_shifted(&self, params: &[f64], shift: Option<Shift>) -> Result<Vec<Gate>> {
        if params.len() != self.num_params {
            return Err(Error::domain(format!(
                "{} parameters bound to a circuit with {} slots",
                params.len(),
                self.num_params
            )));
        }
        if let Some(s) = shift {
            if s.slot >= self.num_params {
                return Err(Error::domain(format!("shift of unknown slot {}", s.slot)));
            }
        }
        if let Some(bad) = params.iter().find(|t| !t.is_finite()) {
            return Err(Error::domain(format!("non-finite parameter {bad}")));
        }
        let angle = |slot: usize| {
            params[slot]
                + shift
                    .filter(|s| s.slot == slot)
                    .map_or(0.0, |s| s.delta)
        };
        Ok(self
            .ops
            .iter()
            .map(|op| match op {
                CircuitOp::Fixed(g) => g.clone(),
                CircuitOp::Ry { qubit, slot } => Gate::Ry(*qubit, angle(*slot)),
                CircuitOp::Rz { qubit, slot } => Gate::Rz(*qubit, angle(*slot)),
            })
            .collect())
    }

    /// Logical depth with gates packed as early as their qubits allow.
    pub fn depth(&self) -> usize {
        let mut frontier = vec![0usize; self.num_qubits];
        for op in &self.ops {
            let qubits = match op {
                CircuitOp::Fixed(g) => g.qubits().unwrap_or_else(|| (0..self.num_qubits).collect()),
                CircuitOp::Ry { qubit, .. } | CircuitOp::Rz { qubit, .. } => vec![*qubit],
            };
            let level = qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
            for q in qubits {
                frontier[q] = level;
            }
        }
        frontier.into_iter().max().unwrap_or(0)
    }
}
