//! Key file codec: `magic(4) ‖ suite_id(1) ‖ len(2, big-endian) ‖ key`.
//!
//! Public keys use the magic `OFK1`, secret keys `OFS1`.

use zeroize::Zeroizing;

use super::{CryptoError, KemKeyPair, KemSuite};

pub const PUBLIC_MAGIC: [u8; 4] = *b"OFK1";
pub const SECRET_MAGIC: [u8; 4] = *b"OFS1";

const PREFIX_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Public,
    Secret,
}

impl KeyKind {
    fn magic(self) -> [u8; 4] {
        match self {
            KeyKind::Public => PUBLIC_MAGIC,
            KeyKind::Secret => SECRET_MAGIC,
        }
    }
}

pub fn encode_key(kind: KeyKind, suite: KemSuite, key: &[u8]) -> Vec<u8> {
    let len = u16::try_from(key.len()).expect("KEM keys fit a 16-bit length");
    let mut out = Vec::with_capacity(PREFIX_LEN + key.len());
    out.extend_from_slice(&kind.magic());
    out.push(suite.id());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(key);
    out
}

pub fn decode_key(bytes: &[u8]) -> Result<(KeyKind, KemSuite, Zeroizing<Vec<u8>>), CryptoError> {
    if bytes.len() < PREFIX_LEN {
        return Err(CryptoError::KeyFile("shorter than the fixed prefix"));
    }
    let kind = match &bytes[..4] {
        m if m == PUBLIC_MAGIC => KeyKind::Public,
        m if m == SECRET_MAGIC => KeyKind::Secret,
        _ => return Err(CryptoError::KeyFile("bad magic")),
    };
    let suite = KemSuite::from_id(bytes[4])?;
    let len = u16::from_be_bytes([bytes[5], bytes[6]]) as usize;
    let key = &bytes[PREFIX_LEN..];
    if key.len() != len {
        return Err(CryptoError::KeyFile("length field disagrees with body"));
    }
    let expected = match kind {
        KeyKind::Public => suite.public_key_len(),
        KeyKind::Secret => suite.secret_key_len(),
    };
    if len != expected {
        return Err(CryptoError::KeyFile("key length does not match suite"));
    }
    Ok((kind, suite, Zeroizing::new(key.to_vec())))
}

/// Encodes both halves of a key pair as `(public_file, secret_file)`.
pub fn encode_keypair(kp: &KemKeyPair) -> (Vec<u8>, Zeroizing<Vec<u8>>) {
    (
        encode_key(KeyKind::Public, kp.suite(), kp.public()),
        Zeroizing::new(encode_key(KeyKind::Secret, kp.suite(), kp.secret())),
    )
}

pub fn decode_keypair(public_file: &[u8], secret_file: &[u8]) -> Result<KemKeyPair, CryptoError> {
    let (pk_kind, pk_suite, pk) = decode_key(public_file)?;
    let (sk_kind, sk_suite, sk) = decode_key(secret_file)?;
    if pk_kind != KeyKind::Public || sk_kind != KeyKind::Secret {
        return Err(CryptoError::KeyFile("expected one public and one secret key"));
    }
    if pk_suite != sk_suite {
        return Err(CryptoError::KeyFile("public and secret keys use different suites"));
    }
    KemKeyPair::from_parts(pk_suite, sk.to_vec(), pk.to_vec())
}
