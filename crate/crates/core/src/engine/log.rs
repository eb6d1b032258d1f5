use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::crypto::KeyCiphertext;
use crate::error::Result;

/// Something server-side code observed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ViewEvent {
    ReceivedState {
        session: u64,
        num_qubits: usize,
    },
    ReceivedBits {
        session: u64,
        bits: String,
    },
    ReceivedCiphertext {
        session: u64,
        ciphertext: KeyCiphertext,
    },
    AppliedGate {
        session: u64,
        gate: String,
        qubits: Vec<usize>,
        angle: Option<f64>,
    },
    KeyEvaluated {
        session: u64,
        ciphertext: KeyCiphertext,
    },
    ObservedBits {
        session: u64,
        bits: String,
    },
    Measured {
        session: u64,
        qubit: usize,
        w: f64,
        shots: u64,
    },
    Overlap {
        session: u64,
        value: f64,
        shots: u64,
    },
    /// Free-form annotation. Honest code paths never write key or data bits here.
    Note {
        session: u64,
        label: String,
        bits: String,
    },
}

impl ViewEvent {
    pub fn session(&self) -> u64 {
        match self {
            ViewEvent::ReceivedState { session, .. }
            | ViewEvent::ReceivedBits { session, .. }
            | ViewEvent::ReceivedCiphertext { session, .. }
            | ViewEvent::AppliedGate { session, .. }
            | ViewEvent::KeyEvaluated { session, .. }
            | ViewEvent::ObservedBits { session, .. }
            | ViewEvent::Measured { session, .. }
            | ViewEvent::Overlap { session, .. }
            | ViewEvent::Note { session, .. } => *session,
        }
    }
}

/// Append-only record of the server's view.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServerViewLog {
    events: Vec<ViewEvent>,
}

impl ServerViewLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, event: ViewEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[ViewEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn append(&mut self, other: ServerViewLog) {
        self.events.extend(other.events);
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut events = Vec::new();
        for line in r.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                events.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self { events })
    }
}
