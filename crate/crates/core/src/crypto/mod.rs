//! Quantum one-time pad, Pauli key-update algebra and the sealed key vault.

mod key_update;
mod pad;
mod vault;

pub use key_update::{key_update_rule, reg_a, reg_b, KeyOp, KeyUpdateCircuit, Residual};
pub use pad::{classical_otp, gen_pad, qotp_decrypt, qotp_encrypt, PadKey};
pub use vault::{ciphertext_bits, EvalHandle, HeKeypair, KeyCiphertext};

use rand::Rng;

use crate::error::Result;

pub fn he_encrypt<R: Rng + ?Sized>(bits: &[bool], keypair: &HeKeypair, rng: &mut R) -> KeyCiphertext {
    keypair.encrypt(bits, rng)
}

pub fn he_decrypt(ct: &KeyCiphertext, keypair: &HeKeypair) -> Result<Vec<bool>> {
    keypair.decrypt(ct)
}

pub fn he_eval(ct: &KeyCiphertext, circuit: &KeyUpdateCircuit, handle: &EvalHandle) -> Result<KeyCiphertext> {
    handle.eval(ct, circuit)
}
