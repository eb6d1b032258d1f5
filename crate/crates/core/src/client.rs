//! The data owner: holds the vault secret, pads every input with a fresh key
//! and decodes what the server returns.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::crypto::{classical_otp, gen_pad, qotp_decrypt, qotp_encrypt, EvalHandle, HeKeypair, KeyCiphertext, PadKey};
use crate::engine::{EncryptedExpectation, EncryptedState, Secret};
use crate::error::Result;
use crate::simulator::StateVector;

/// A pad the client issued, with the session it was used in.
#[derive(Clone, Debug, PartialEq)]
pub struct IssuedPad {
    pub session: u64,
    pub key: PadKey,
}

pub struct Client {
    id: u64,
    keypair: HeKeypair,
    rng: ChaCha8Rng,
    issued: Vec<IssuedPad>,
}

impl Client {
    pub fn new(id: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keypair = HeKeypair::generate(&mut rng);
        Self {
            id,
            keypair,
            rng,
            issued: Vec::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn vault_id(&self) -> u64 {
        self.keypair.vault_id()
    }

    pub fn eval_handle(&self) -> EvalHandle {
        self.keypair.eval_handle()
    }

    fn fresh_pad(&mut self, session: u64, n: usize) -> Result<PadKey> {
        let key = gen_pad(n, &mut self.rng)?;
        self.issued.push(IssuedPad {
            session,
            key: key.clone(),
        });
        Ok(key)
    }

    /// Pads `psi` with a fresh key and encrypts the key.
    pub fn encrypt_state(&mut self, session: u64, psi: &StateVector) -> Result<(StateVector, KeyCiphertext)> {
        let key = self.fresh_pad(session, psi.num_qubits())?;
        let padded = qotp_encrypt(psi, &key)?;
        let ct = self.keypair.encrypt_pad(&key, &mut self.rng);
        Ok((padded, ct))
    }

    /// Pads a classical string with a fresh key; only the X part acts.
    pub fn encrypt_bits(&mut self, session: u64, bits: &[bool]) -> Result<(Vec<bool>, KeyCiphertext)> {
        let key = self.fresh_pad(session, bits.len())?;
        let padded = classical_otp(bits, &key)?;
        let ct = self.keypair.encrypt_pad(&key, &mut self.rng);
        Ok((padded, ct))
    }

    /// Draws a fresh pad that is never applied by the client, only encrypted
    /// and handed to the server as a re-padding target.
    pub fn issue_target_pad(&mut self, session: u64, n: usize) -> Result<KeyCiphertext> {
        let key = self.fresh_pad(session, n)?;
        Ok(self.keypair.encrypt_pad(&key, &mut self.rng))
    }

    pub fn decrypt_pad(&self, ct: &KeyCiphertext) -> Result<PadKey> {
        self.keypair.decrypt_pad(ct)
    }

    /// `(−1)^{b'_k} · w`.
    pub fn decrypt_expectation(&self, e: &EncryptedExpectation) -> Result<f64> {
        let key = self.decrypt_pad(&e.key_ct_out)?;
        if e.qubit >= key.num_qubits() {
            return Err(crate::error::Error::domain(format!(
                "measured qubit {} outside a {}-qubit key",
                e.qubit,
                key.num_qubits()
            )));
        }
        Ok(if key.b()[e.qubit] { -e.w } else { e.w })
    }

    pub fn decrypt_state(&self, es: &EncryptedState) -> Result<StateVector> {
        let key = self.decrypt_pad(es.key_ct())?;
        qotp_decrypt(es.padded(), &key)
    }

    pub fn issued_pads(&self) -> &[IssuedPad] {
        &self.issued
    }

    /// Every issued pad as an audit secret bound to its session.
    pub fn pad_secrets(&self) -> Vec<Secret> {
        self.issued
            .iter()
            .map(|p| Secret::pad(Some(p.session), &p.key))
            .collect()
    }
}

impl std::fmt::Debug for Client {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Client")
            .field("id", &self.id)
            .field("vault", &format_args!("{:016x}", self.vault_id()))
            .field("issued", &self.issued.len())
            .finish()
    }
}
