//! Lioness wide-block cipher.
//!
//! A four-round unbalanced Feistel network over `L ‖ R` with `|L| = 32`:
//!
//! ```text
//! R ^= ChaCha20(L ^ K1)
//! L ^= HMAC-SHA256(K2, R)
//! R ^= ChaCha20(L ^ K3)
//! L ^= HMAC-SHA256(K4, R)
//! ```
//!
//! Decryption runs the rounds in reverse. The four round keys are expanded
//! with HKDF-SHA256 from the payload key, which may be any length.

use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha2::Sha256;
use zeroize::{Zeroize, ZeroizeOnDrop};

use super::CryptoError;

/// Width of the left half; equal to the stream-cipher key and MAC output size.
pub const LEFT_LEN: usize = 32;

/// Smallest block Lioness accepts: the left half plus at least one byte.
pub const MIN_BLOCK_LEN: usize = LEFT_LEN + 1;

const ROUND_KEY_INFO: &[u8] = b"outfox-lioness-round-keys";

#[derive(Zeroize, ZeroizeOnDrop)]
pub struct Lioness {
    k1: [u8; 32],
    k2: [u8; 32],
    k3: [u8; 32],
    k4: [u8; 32],
}

impl Lioness {
    pub fn new(key: &[u8]) -> Self {
        let hk = Hkdf::<Sha256>::new(None, key);
        let mut okm = [0u8; 128];
        hk.expand(ROUND_KEY_INFO, &mut okm).expect("128 bytes is within the expand limit");
        let mut cipher = Lioness { k1: [0; 32], k2: [0; 32], k3: [0; 32], k4: [0; 32] };
        cipher.k1.copy_from_slice(&okm[..32]);
        cipher.k2.copy_from_slice(&okm[32..64]);
        cipher.k3.copy_from_slice(&okm[64..96]);
        cipher.k4.copy_from_slice(&okm[96..]);
        okm.zeroize();
        cipher
    }

    pub fn encrypt(&self, block: &mut [u8]) -> Result<(), CryptoError> {
        let (left, right) = split(block)?;
        stream_round(left, &self.k1, right);
        hash_round(&self.k2, right, left);
        stream_round(left, &self.k3, right);
        hash_round(&self.k4, right, left);
        Ok(())
    }

    pub fn decrypt(&self, block: &mut [u8]) -> Result<(), CryptoError> {
        let (left, right) = split(block)?;
        hash_round(&self.k4, right, left);
        stream_round(left, &self.k3, right);
        hash_round(&self.k2, right, left);
        stream_round(left, &self.k1, right);
        Ok(())
    }
}

fn split(block: &mut [u8]) -> Result<(&mut [u8], &mut [u8]), CryptoError> {
    if block.len() < MIN_BLOCK_LEN {
        return Err(CryptoError::BlockTooShort(block.len()));
    }
    Ok(block.split_at_mut(LEFT_LEN))
}

fn stream_round(left: &[u8], round_key: &[u8; 32], right: &mut [u8]) {
    let mut key = [0u8; 32];
    for (k, (l, r)) in key.iter_mut().zip(left.iter().zip(round_key)) {
        *k = l ^ r;
    }
    let mut cipher = ChaCha20::new(&key.into(), &[0u8; 12].into());
    cipher.apply_keystream(right);
    key.zeroize();
}

fn hash_round(round_key: &[u8; 32], right: &[u8], left: &mut [u8]) {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(round_key).expect("HMAC takes any key length");
    mac.update(right);
    for (l, h) in left.iter_mut().zip(mac.finalize().into_bytes()) {
        *l ^= h;
    }
}

/// Length-preserving encryption of a whole block under `key`.
pub fn se_encrypt(key: &[u8], block: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let mut out = block.to_vec();
    Lioness::new(key).encrypt(&mut out)?;
    Ok(out)
}

pub fn se_decrypt(key: &[u8], block: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let mut out = block.to_vec();
    Lioness::new(key).decrypt(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::{RngCore, SeedableRng};

    #[test]
    fn two_sided_identity_on_kilobyte_block() {
        let key = [9u8; 16];
        let m: Vec<u8> = (0..1024).map(|i| (i * 7) as u8).collect();
        assert_eq!(se_decrypt(&key, &se_encrypt(&key, &m).unwrap()).unwrap(), m);
        assert_eq!(se_encrypt(&key, &se_decrypt(&key, &m).unwrap()).unwrap(), m);
    }

    #[test]
    fn output_length_equals_input_length() {
        for len in [MIN_BLOCK_LEN, 64, 1024, 1408, 4096] {
            assert_eq!(se_encrypt(b"k", &vec![0u8; len]).unwrap().len(), len);
        }
    }

    #[test]
    fn short_blocks_are_rejected() {
        assert_eq!(se_encrypt(b"k", &[0u8; LEFT_LEN]), Err(CryptoError::BlockTooShort(LEFT_LEN)));
    }

    #[test]
    fn wrong_key_never_yields_zero_prefix() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let mut block = vec![0u8; 1024];
        for _ in 0..1000 {
            let mut right = [0u8; 16];
            let mut wrong = [0u8; 16];
            rng.fill_bytes(&mut right);
            rng.fill_bytes(&mut wrong);
            rng.fill_bytes(&mut block[16..]);
            block[..16].fill(0);
            let ct = se_encrypt(&right, &block).unwrap();
            let pt = se_decrypt(&wrong, &ct).unwrap();
            assert_ne!(&pt[..16], &[0u8; 16]);
        }
    }

    #[test]
    fn single_bit_flip_diffuses_over_whole_block() {
        let key = [1u8; 16];
        let m = vec![0u8; 512];
        let mut ct = se_encrypt(&key, &m).unwrap();
        ct[300] ^= 0x04;
        let pt = se_decrypt(&key, &ct).unwrap();
        assert_ne!(&pt[..LEFT_LEN], &m[..LEFT_LEN]);
        assert_ne!(&pt[..16], &[0u8; 16]);
    }

    proptest! {
        #[test]
        fn permutation_pair(key in proptest::collection::vec(any::<u8>(), 1..48),
                            block in proptest::collection::vec(any::<u8>(), MIN_BLOCK_LEN..600)) {
            let c = Lioness::new(&key);
            let mut x = block.clone();
            c.encrypt(&mut x).unwrap();
            c.decrypt(&mut x).unwrap();
            prop_assert_eq!(&x, &block);
            c.decrypt(&mut x).unwrap();
            c.encrypt(&mut x).unwrap();
            prop_assert_eq!(&x, &block);
        }
    }
}
