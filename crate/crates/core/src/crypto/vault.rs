//! Sealed classical homomorphic encryption of pad keys.
//!
//! This is a functional stand-in for a lattice-based scheme, not a secure
//! cipher. Ciphertext payloads are masked with a SHA-256 keystream under a
//! per-vault seal. Evaluation unmasks, runs the boolean circuit and remasks
//! inside this module; the public surface of [`EvalHandle`] offers no way to
//! read plaintext bits. Only the keypair decrypts:
//!
//! ```
//! use qfl_core::crypto::HeKeypair;
//! use rand::SeedableRng;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let kp = HeKeypair::generate(&mut rng);
//! let ct = kp.encrypt(&[true, false], &mut rng);
//! let _handle = kp.eval_handle();
//! assert_eq!(kp.decrypt(&ct).unwrap(), vec![true, false]);
//! ```
//!
//! ```compile_fail
//! use qfl_core::crypto::HeKeypair;
//! use rand::SeedableRng;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let kp = HeKeypair::generate(&mut rng);
//! let ct = kp.encrypt(&[true, false], &mut rng);
//! let handle = kp.eval_handle();
//! let _ = handle.decrypt(&ct);
//! ```

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::key_update::KeyUpdateCircuit;
use super::pad::PadKey;
use crate::error::{Error, Result};

const NONCE_LEN: usize = 16;
const HEADER_LEN: usize = 8 + 4 + NONCE_LEN;

struct Seal {
    key: [u8; 32],
}

impl Seal {
    fn keystream(&self, nonce: &[u8; NONCE_LEN], len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len + 32);
        let mut counter = 0u64;
        while out.len() < len {
            let mut h = Sha256::new();
            h.update(self.key);
            h.update(nonce);
            h.update(counter.to_le_bytes());
            out.extend_from_slice(h.finalize().as_slice());
            counter += 1;
        }
        out.truncate(len);
        out
    }

    fn seal(&self, vault: u64, bits: &[bool], nonce: [u8; NONCE_LEN]) -> KeyCiphertext {
        let packed = pack(bits);
        let stream = self.keystream(&nonce, packed.len());
        KeyCiphertext {
            vault,
            len: bits.len() as u32,
            nonce,
            payload: packed.iter().zip(stream).map(|(p, s)| p ^ s).collect(),
        }
    }

    fn open(&self, ct: &KeyCiphertext) -> Vec<bool> {
        let stream = self.keystream(&ct.nonce, ct.payload.len());
        let packed: Vec<u8> = ct.payload.iter().zip(stream).map(|(p, s)| p ^ s).collect();
        unpack(&packed, ct.len as usize)
    }
}

fn pack(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn unpack(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1 == 1).collect()
}

fn derive_nonce(parts: &[&[u8]]) -> [u8; NONCE_LEN] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    let mut nonce = [0u8; NONCE_LEN];
    nonce.copy_from_slice(&digest.as_slice()[..NONCE_LEN]);
    nonce
}

/// Encrypted key registers, bound to the vault that issued them.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KeyCiphertext {
    vault: u64,
    len: u32,
    nonce: [u8; NONCE_LEN],
    payload: Vec<u8>,
}

impl KeyCiphertext {
    pub fn vault_id(&self) -> u64 {
        self.vault
    }

    pub fn num_registers(&self) -> usize {
        self.len as usize
    }

    /// Number of qubits whose pad this ciphertext carries.
    pub fn num_qubits(&self) -> usize {
        self.num_registers() / 2
    }

    /// Opaque wire encoding: vault id, register count, nonce, masked payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.vault.to_le_bytes());
        out.extend_from_slice(&self.len.to_le_bytes());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Validation("truncated key ciphertext".into()));
        }
        let vault = u64::from_le_bytes(bytes[0..8].try_into().expect("8 bytes"));
        let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        let nonce: [u8; NONCE_LEN] = bytes[12..HEADER_LEN].try_into().expect("nonce");
        let payload = bytes[HEADER_LEN..].to_vec();
        if payload.len() != (len as usize).div_ceil(8) {
            return Err(Error::Validation("key ciphertext payload length mismatch".into()));
        }
        Ok(Self {
            vault,
            len,
            nonce,
            payload,
        })
    }

    /// Size on the wire in bits.
    pub fn bit_len(&self) -> u64 {
        8 * (HEADER_LEN + self.payload.len()) as u64
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    /// Masked payload read as register bits, for information-flow scans.
    pub(crate) fn masked_registers(&self) -> Vec<bool> {
        unpack(&self.payload, self.len as usize)
    }
}

/// Wire size in bits of a ciphertext carrying an `n`-qubit pad.
pub fn ciphertext_bits(num_qubits: usize) -> u64 {
    8 * (HEADER_LEN + (2 * num_qubits).div_ceil(8)) as u64
}

impl fmt::Debug for KeyCiphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "KeyCiphertext(vault={:#x}, registers={}, {})",
            self.vault,
            self.len,
            hex::encode(&self.nonce[..4])
        )
    }
}

impl Serialize for KeyCiphertext {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for KeyCiphertext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        KeyCiphertext::from_bytes(&bytes).map_err(serde::de::Error::custom)
    }
}

/// Client-held keypair: decrypts and issues ciphertexts.
pub struct HeKeypair {
    vault: u64,
    seal: Arc<Seal>,
}

impl HeKeypair {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut key = [0u8; 32];
        rng.fill(&mut key);
        Self {
            vault: rng.random(),
            seal: Arc::new(Seal { key }),
        }
    }

    pub fn vault_id(&self) -> u64 {
        self.vault
    }

    /// Public evaluation handle to give to the server.
    pub fn eval_handle(&self) -> EvalHandle {
        EvalHandle {
            vault: self.vault,
            seal: Arc::clone(&self.seal),
        }
    }

    pub fn encrypt<R: Rng + ?Sized>(&self, bits: &[bool], rng: &mut R) -> KeyCiphertext {
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill(&mut nonce);
        self.seal.seal(self.vault, bits, nonce)
    }

    pub fn encrypt_pad<R: Rng + ?Sized>(&self, key: &PadKey, rng: &mut R) -> KeyCiphertext {
        self.encrypt(&key.to_registers(), rng)
    }

    pub fn decrypt(&self, ct: &KeyCiphertext) -> Result<Vec<bool>> {
        check_vault(self.vault, ct)?;
        Ok(self.seal.open(ct))
    }

    pub fn decrypt_pad(&self, ct: &KeyCiphertext) -> Result<PadKey> {
        PadKey::from_registers(&self.decrypt(ct)?)
    }
}

impl fmt::Debug for HeKeypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HeKeypair(vault={:#x})", self.vault)
    }
}

/// Server-side evaluation capability for one vault.
#[derive(Clone)]
pub struct EvalHandle {
    vault: u64,
    seal: Arc<Seal>,
}

impl EvalHandle {
    pub fn vault_id(&self) -> u64 {
        self.vault
    }

    /// Homomorphically applies `circuit` to the encrypted registers.
    ///
    /// The output depends only on `(ct, circuit)` and this handle.
    pub fn eval(&self, ct: &KeyCiphertext, circuit: &KeyUpdateCircuit) -> Result<KeyCiphertext> {
        check_vault(self.vault, ct)?;
        if circuit.num_registers() != ct.num_registers() {
            return Err(Error::domain(format!(
                "circuit over {} registers, ciphertext has {}",
                circuit.num_registers(),
                ct.num_registers()
            )));
        }
        if circuit.is_empty() {
            return Ok(ct.clone());
        }
        let mut bits = self.seal.open(ct);
        circuit.evaluate(&mut bits)?;
        let nonce = derive_nonce(&[b"eval", &ct.to_bytes(), &circuit.encode()]);
        Ok(self.seal.seal(self.vault, &bits, nonce))
    }

    /// Restricts a pad ciphertext to a subset of qubits (e.g. after the
    /// server discards a register).
    pub fn select_qubits(&self, ct: &KeyCiphertext, qubits: &[usize]) -> Result<KeyCiphertext> {
        check_vault(self.vault, ct)?;
        let n = ct.num_qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
            return Err(Error::domain(format!("qubit {q} not covered by a {n}-qubit pad")));
        }
        let bits = self.seal.open(ct);
        let selected: Vec<bool> = qubits
            .iter()
            .map(|&q| bits[q])
            .chain(qubits.iter().map(|&q| bits[n + q]))
            .collect();
        let encoded: Vec<u8> = qubits.iter().flat_map(|&q| (q as u32).to_le_bytes()).collect();
        let nonce = derive_nonce(&[b"select", &ct.to_bytes(), &encoded]);
        Ok(self.seal.seal(self.vault, &selected, nonce))
    }

    /// Gadget-internal read of the pad. Never exposed outside the crate.
    pub(crate) fn sealed_open(&self, ct: &KeyCiphertext) -> Result<PadKey> {
        check_vault(self.vault, ct)?;
        PadKey::from_registers(&self.seal.open(ct))
    }

    /// Gadget-internal issue of a ciphertext for a pad chosen inside the gadget.
    pub(crate) fn sealed_issue(&self, key: &PadKey, context: &[u8]) -> KeyCiphertext {
        let regs = key.to_registers();
        let nonce = derive_nonce(&[b"issue", context, &pack(&regs)]);
        self.seal.seal(self.vault, &regs, nonce)
    }

    /// Deterministic pseudo-random bits for gadget-internal pad refreshes.
    pub(crate) fn sealed_prf(&self, context: &[u8], len: usize) -> Vec<bool> {
        let nonce = derive_nonce(&[b"prf", context]);
        unpack(&self.seal.keystream(&nonce, len.div_ceil(8)), len)
    }
}

impl fmt::Debug for EvalHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EvalHandle(vault={:#x})", self.vault)
    }
}

fn check_vault(expected: u64, ct: &KeyCiphertext) -> Result<()> {
    if ct.vault == expected {
        Ok(())
    } else {
        Err(Error::WrongKey {
            expected,
            found: ct.vault,
        })
    }
}
