//! Thin wrapper over Ed25519 keypairs. Key bytes are treated as opaque by
//! the store; only the signing and verification entry points live here.

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeyError {
    #[error("public key bytes do not form a valid verifying key")]
    MalformedKey,
}

/// An agent keypair. The private half never leaves the owning agent.
#[derive(Clone)]
pub struct Keypair {
    signing: SigningKey,
}

impl Keypair {
    /// Deterministic construction from a 32-byte seed.
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(&seed),
        }
    }

    pub fn public_bytes(&self) -> Vec<u8> {
        self.signing.verifying_key().to_bytes().to_vec()
    }

    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        self.signing.sign(message).to_bytes().to_vec()
    }
}

impl std::fmt::Debug for Keypair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Keypair")
            .field("public", &hex::encode(self.public_bytes()))
            .finish_non_exhaustive()
    }
}

/// Verifies a detached signature. A wrong-length or mutated signature
/// verifies false; only an invalid public key is an error.
pub fn verify(public_key: &[u8], message: &[u8], signature: &[u8]) -> Result<bool, KeyError> {
    let key_bytes: [u8; 32] = public_key.try_into().map_err(|_| KeyError::MalformedKey)?;
    let key = VerifyingKey::from_bytes(&key_bytes).map_err(|_| KeyError::MalformedKey)?;
    let sig_bytes: [u8; 64] = match signature.try_into() {
        Ok(b) => b,
        Err(_) => return Ok(false),
    };
    Ok(key.verify(message, &Signature::from_bytes(&sig_bytes)).is_ok())
}
