//! Key-committing AEAD over header layers.
//!
//! Encrypt-then-MAC: ChaCha20 with an all-zero nonce produces `β` of the same
//! length as the plaintext, and `γ` is HMAC-SHA256 over `β`, truncated to the
//! requested tag length. Both sub-keys are expanded from the single header
//! key, so opening under any other key requires an HMAC collision; that is
//! what makes the scheme key-committing. Each header key is used exactly
//! once, which is why a fixed nonce is sound here.

use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha2::Sha256;
use zeroize::Zeroizing;

use super::CryptoError;

pub const HEADER_KEY_LEN: usize = 32;

const SUBKEY_INFO: &[u8] = b"outfox-aead-subkeys";
const NONCE: [u8; 12] = [0u8; 12];

type HmacSha256 = Hmac<Sha256>;

fn subkeys(key: &[u8; HEADER_KEY_LEN]) -> Zeroizing<[u8; 64]> {
    let hk = Hkdf::<Sha256>::from_prk(key).expect("32-byte PRK is valid");
    let mut okm = Zeroizing::new([0u8; 64]);
    hk.expand(SUBKEY_INFO, okm.as_mut()).expect("64 bytes is within the expand limit");
    okm
}

fn check_tag_len(tag_len: usize) -> Result<(), CryptoError> {
    if (16..=32).contains(&tag_len) {
        Ok(())
    } else {
        Err(CryptoError::InvalidTagLength(tag_len))
    }
}

fn keystream_xor(enc_key: &[u8], data: &mut [u8]) {
    let mut cipher = ChaCha20::new(enc_key.into(), &NONCE.into());
    cipher.apply_keystream(data);
}

fn mac(mac_key: &[u8]) -> HmacSha256 {
    <HmacSha256 as Mac>::new_from_slice(mac_key).expect("HMAC takes any key length")
}

/// Seals `plaintext`, returning `(β, γ)` with `|β| == |plaintext|` and
/// `|γ| == tag_len`.
pub fn aead_seal(
    key: &[u8; HEADER_KEY_LEN],
    plaintext: &[u8],
    tag_len: usize,
) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
    check_tag_len(tag_len)?;
    let sk = subkeys(key);
    let mut beta = plaintext.to_vec();
    keystream_xor(&sk[..32], &mut beta);
    let mut m = mac(&sk[32..]);
    m.update(&beta);
    let tag = m.finalize().into_bytes();
    Ok((beta, tag[..tag_len].to_vec()))
}

pub fn aead_open(key: &[u8; HEADER_KEY_LEN], beta: &[u8], gamma: &[u8]) -> Result<Vec<u8>, CryptoError> {
    check_tag_len(gamma.len()).map_err(|_| CryptoError::AeadReject)?;
    let sk = subkeys(key);
    let mut m = mac(&sk[32..]);
    m.update(beta);
    m.verify_truncated_left(gamma).map_err(|_| CryptoError::AeadReject)?;
    let mut plaintext = beta.to_vec();
    keystream_xor(&sk[..32], &mut plaintext);
    Ok(plaintext)
}
