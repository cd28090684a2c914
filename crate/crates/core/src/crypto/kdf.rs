//! HKDF-SHA256 keyed by KEM shared secrets, without salt.
//!
//! The context binds the KEM ciphertext, the recipient public key and the
//! session identifier, concatenated in that order with no separators. The
//! first two components have fixed widths for a given suite, so the
//! encoding is unambiguous.

use hkdf::Hkdf;
use sha2::Sha256;
use zeroize::Zeroizing;

use super::aead::HEADER_KEY_LEN;
use super::kem::SharedKey;
use super::CryptoError;

const MAX_OUTPUT: usize = 255 * 32;

#[derive(Debug, Clone, Copy)]
pub struct KdfContext<'a> {
    pub kem_ciphertext: &'a [u8],
    pub public_key: &'a [u8],
    pub session_id: &'a [u8],
}

impl KdfContext<'_> {
    /// The HKDF `info` string: `c ‖ pk ‖ session_id`.
    pub fn to_info(&self) -> Vec<u8> {
        let mut info =
            Vec::with_capacity(self.kem_ciphertext.len() + self.public_key.len() + self.session_id.len());
        info.extend_from_slice(self.kem_ciphertext);
        info.extend_from_slice(self.public_key);
        info.extend_from_slice(self.session_id);
        info
    }
}

/// Derives `out_len` bytes from `shared` under `ctx`.
pub fn kdf_derive(
    shared: &SharedKey,
    ctx: &KdfContext<'_>,
    out_len: usize,
) -> Result<Zeroizing<Vec<u8>>, CryptoError> {
    if out_len > MAX_OUTPUT {
        return Err(CryptoError::KdfOutputTooLong(out_len));
    }
    let hk = Hkdf::<Sha256>::new(None, shared.as_bytes());
    let mut out = Zeroizing::new(vec![0u8; out_len]);
    hk.expand(&ctx.to_info(), &mut out)
        .map_err(|_| CryptoError::KdfOutputTooLong(out_len))?;
    Ok(out)
}

/// The per-layer key pair `(s^h, s^p)`.
pub struct LayerKeys {
    pub header: Zeroizing<[u8; HEADER_KEY_LEN]>,
    pub payload: Zeroizing<Vec<u8>>,
}

impl LayerKeys {
    /// One KDF call of `HEADER_KEY_LEN + payload_key_len` bytes, split with the
    /// header key first.
    pub fn derive(
        shared: &SharedKey,
        ctx: &KdfContext<'_>,
        payload_key_len: usize,
    ) -> Result<LayerKeys, CryptoError> {
        let okm = kdf_derive(shared, ctx, HEADER_KEY_LEN + payload_key_len)?;
        let (h, p) = okm.split_at(HEADER_KEY_LEN);
        let mut header = Zeroizing::new([0u8; HEADER_KEY_LEN]);
        header.copy_from_slice(h);
        Ok(LayerKeys {
            header,
            payload: Zeroizing::new(p.to_vec()),
        })
    }
}
