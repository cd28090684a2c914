//! The four primitives the packet format composes: a KEM, a KDF keyed from
//! KEM shared secrets, a key-committing AEAD and the Lioness wide-block
//! cipher used on payloads.

pub mod aead;
pub mod kdf;
pub mod kem;
pub mod keyfile;
pub mod lioness;

pub use aead::{aead_open, aead_seal, HEADER_KEY_LEN};
pub use kdf::{kdf_derive, KdfContext, LayerKeys};
pub use kem::{KemKeyPair, KemSuite, SharedKey, SHARED_KEY_LEN};
pub use lioness::{se_decrypt, se_encrypt, Lioness};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("unsupported KEM suite id {0:#04x}")]
    UnsupportedSuite(u8),
    #[error("unknown KEM suite name {0:?}")]
    UnknownSuiteName(String),
    #[error("public key has {got} bytes, suite expects {expected}")]
    InvalidPublicKey { expected: usize, got: usize },
    #[error("secret key has {got} bytes, suite expects {expected}")]
    InvalidSecretKey { expected: usize, got: usize },
    #[error("KEM ciphertext has {got} bytes, suite expects {expected}")]
    InvalidCiphertext { expected: usize, got: usize },
    #[error("KEM decapsulation rejected the ciphertext")]
    Decapsulation,
    #[error("AEAD authentication failed")]
    AeadReject,
    #[error("AEAD tag length {0} is not supported")]
    InvalidTagLength(usize),
    #[error("wide-block input of {0} bytes is too short")]
    BlockTooShort(usize),
    #[error("KDF output of {0} bytes exceeds the expand limit")]
    KdfOutputTooLong(usize),
    #[error("malformed key file: {0}")]
    KeyFile(&'static str),
}
