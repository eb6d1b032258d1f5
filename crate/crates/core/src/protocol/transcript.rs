use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    EncryptedSample,
    EvalRequest,
    EvalResponse,
    ParamUpdate,
    KernelRequest,
    KernelResponse,
}

impl MessageKind {
    pub fn direction(self) -> Direction {
        match self {
            MessageKind::EvalResponse | MessageKind::KernelResponse => Direction::ServerToClient,
            _ => Direction::ClientToServer,
        }
    }

    fn opens(self, response: MessageKind) -> bool {
        match response {
            MessageKind::EvalResponse => {
                matches!(self, MessageKind::EncryptedSample | MessageKind::EvalRequest)
            }
            MessageKind::KernelResponse => {
                matches!(self, MessageKind::KernelRequest | MessageKind::EncryptedSample)
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub direction: Direction,
    pub kind: MessageKind,
    pub qubits: u64,
    pub classical_bits: u64,
    pub session: u64,
    pub round: u64,
}

impl Message {
    pub fn new(kind: MessageKind, qubits: u64, classical_bits: u64, session: u64, round: u64) -> Self {
        Self {
            direction: kind.direction(),
            kind,
            qubits,
            classical_bits,
            session,
            round,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub qubits_sent: u64,
    pub classical_bits: u64,
    pub rounds: u64,
    pub messages: u64,
}

impl CommStats {
    pub fn since(&self, earlier: &CommStats) -> CommStats {
        CommStats {
            qubits_sent: self.qubits_sent - earlier.qubits_sent,
            classical_bits: self.classical_bits - earlier.classical_bits,
            rounds: self.rounds - earlier.rounds,
            messages: self.messages - earlier.messages,
        }
    }

    pub fn add(&mut self, other: &CommStats) {
        self.qubits_sent += other.qubits_sent;
        self.classical_bits += other.classical_bits;
        self.rounds += other.rounds;
        self.messages += other.messages;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct SessionState {
    pending: Option<MessageKind>,
    last: Option<Direction>,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Grammar {
    sessions: HashMap<u64, SessionState>,
}

impl Grammar {
    fn clone_session(&self, session: u64) -> Grammar {
        let mut g = Grammar::default();
        if let Some(s) = self.sessions.get(&session) {
            g.sessions.insert(session, *s);
        }
        g
    }

    /// Checks one message and reports whether it closes a round.
    fn step(&mut self, index: usize, m: &Message) -> Result<bool> {
        if m.direction != m.kind.direction() {
            return Err(Error::Transcript(format!(
                "message {index}: {:?} cannot travel {:?}",
                m.kind, m.direction
            )));
        }
        let state = self.sessions.entry(m.session).or_default();
        let mut closes = false;
        match m.direction {
            Direction::ClientToServer => {
                if m.kind != MessageKind::ParamUpdate {
                    state.pending = Some(m.kind);
                }
            }
            Direction::ServerToClient => {
                match state.pending {
                    Some(open) if open.opens(m.kind) => {}
                    _ => {
                        return Err(Error::Transcript(format!(
                            "message {index}: {:?} in session {} without a matching request",
                            m.kind, m.session
                        )))
                    }
                }
                closes = state.last == Some(Direction::ClientToServer);
            }
        }
        state.last = Some(m.direction);
        Ok(closes)
    }
}

/// Append-only message log with cached totals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    messages: Vec<Message>,
    totals: CommStats,
    grammar: Grammar,
    namespace: u64,
    next_session: u64,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Session ids issued by this transcript start at `namespace << 32`, so
    /// transcripts from different clients merge without collisions.
    pub fn with_namespace(namespace: u64) -> Self {
        Self {
            namespace,
            ..Self::default()
        }
    }

    pub fn next_session(&mut self) -> u64 {
        let id = (self.namespace << 32) | self.next_session;
        self.next_session += 1;
        id
    }

    pub fn push(&mut self, message: Message) -> Result<()> {
        let mut grammar = self.grammar.clone_session(message.session);
        let closes = grammar.step(self.messages.len(), &message)?;
        self.grammar.sessions.extend(grammar.sessions);
        self.totals.qubits_sent += message.qubits;
        self.totals.classical_bits += message.classical_bits;
        self.totals.messages += 1;
        if closes {
            self.totals.rounds += 1;
        }
        self.messages.push(message);
        Ok(())
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn totals(&self) -> CommStats {
        self.totals
    }

    pub fn session_messages(&self, session: u64) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.session == session)
    }

    /// Appends the messages of another transcript, re-validating each.
    pub fn merge(&mut self, other: &Transcript) -> Result<()> {
        for m in &other.messages {
            self.push(m.clone())?;
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut t = Transcript::new();
        for line in r.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                t.push(serde_json::from_str(&line)?)?;
            }
        }
        Ok(t)
    }
}

/// Recomputes totals from the raw messages, validating grammar and checking
/// the cached totals.
pub fn account(transcript: &Transcript) -> Result<CommStats> {
    let mut grammar = Grammar::default();
    let mut stats = CommStats::default();
    for (i, m) in transcript.messages.iter().enumerate() {
        if grammar.step(i, m)? {
            stats.rounds += 1;
        }
        stats.qubits_sent += m.qubits;
        stats.classical_bits += m.classical_bits;
        stats.messages += 1;
    }
    if stats != transcript.totals {
        return Err(Error::Transcript(format!(
            "cached totals {:?} disagree with recomputed {:?}",
            transcript.totals, stats
        )));
    }
    Ok(stats)
}

/// Rounds per session, in order of first appearance.
pub fn rounds_by_session(transcript: &Transcript) -> Result<Vec<(u64, u64)>> {
    let mut grammar = Grammar::default();
    let mut order = Vec::new();
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for (i, m) in transcript.messages.iter().enumerate() {
        let closes = grammar.step(i, m)?;
        let entry = counts.entry(m.session).or_insert_with(|| {
            order.push(m.session);
            0
        });
        if closes {
            *entry += 1;
        }
    }
    Ok(order.into_iter().map(|s| (s, counts[&s])).collect())
}
