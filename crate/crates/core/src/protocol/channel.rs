use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::client::Client;
use crate::engine::ServerEngine;

use super::transcript::Transcript;

/// Derives an independent seed for stream `stream` of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

/// A client, the server engine bound to its vault, and their transcript.
pub struct Channel {
    pub client: Client,
    pub server: ServerEngine,
    pub transcript: Transcript,
}

impl Channel {
    pub fn new(client_id: u64, seed: u64) -> Self {
        let client = Client::new(client_id, derive_seed(seed, 2 * client_id));
        let server = ServerEngine::new(client.eval_handle(), derive_seed(seed, 2 * client_id + 1));
        Self {
            client,
            server,
            transcript: Transcript::with_namespace(client_id),
        }
    }
}

impl std::fmt::Debug for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Channel")
            .field("client", &self.client)
            .field("messages", &self.transcript.messages().len())
            .finish()
    }
}
