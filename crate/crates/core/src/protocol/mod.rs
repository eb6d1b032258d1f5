//! Message schema, transcripts and communication accounting.

mod channel;
mod cost;
mod transcript;

pub use channel::{derive_seed, Channel};
pub use cost::{
    blind_baseline_cost, brickwork_depth, CostEstimate, CostModel, BRICKWORK_BITS_PER_SLOT,
    BRICKWORK_SLOTS_CNOT, BRICKWORK_SLOTS_SINGLE, VALUE_BITS,
};
pub use transcript::{account, rounds_by_session, CommStats, Direction, Message, MessageKind, Transcript};
