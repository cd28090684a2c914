//! Key encapsulation mechanisms behind a single suite tag.
//!
//! X25519 is used as a KEM in the usual way: encapsulation draws an
//! ephemeral scalar, the ciphertext is the ephemeral public point and the
//! shared key is the Diffie-Hellman output. X-Wing combines ML-KEM-768 and
//! X25519 with the SHA3-256 combiner. `TestKem` is a hash-based toy KEM with
//! no security at all; it exists so test vectors can be reproduced by other
//! implementations with nothing more than SHA-256.

use std::fmt;
use std::str::FromStr;

use ml_kem::kem::{Decapsulate, DecapsulationKey, Encapsulate, EncapsulationKey};
use ml_kem::{EncodedSizeUser, KemCore, MlKem768, MlKem768Params};
use rand_core::CryptoRngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sha3::Sha3_256;
use x25519_dalek::{PublicKey as XPublic, StaticSecret};
use zeroize::Zeroizing;

use super::CryptoError;
use crate::metrics;

/// Every suite produces 32-byte shared keys.
pub const SHARED_KEY_LEN: usize = 32;

const MLKEM768_EK: usize = 1184;
const MLKEM768_DK: usize = 2400;
const MLKEM768_CT: usize = 1088;
const X25519_LEN: usize = 32;
const XWING_LABEL: [u8; 6] = *b"\\.//^\\";

const TESTKEM_PK_DOMAIN: &[u8] = b"outfox-testkem-pk";
const TESTKEM_MASK_DOMAIN: &[u8] = b"outfox-testkem-mask";
const TESTKEM_SS_DOMAIN: &[u8] = b"outfox-testkem-ss";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KemSuite {
    X25519,
    #[serde(rename = "mlkem768")]
    MlKem768,
    #[serde(rename = "xwing")]
    XWing,
    #[serde(rename = "testkem")]
    TestKem,
}

impl KemSuite {
    pub const ALL: [KemSuite; 4] = [
        KemSuite::X25519,
        KemSuite::MlKem768,
        KemSuite::XWing,
        KemSuite::TestKem,
    ];

    /// Suites offered on production interfaces (everything except the test KEM).
    pub const PRODUCTION: [KemSuite; 3] = [KemSuite::X25519, KemSuite::MlKem768, KemSuite::XWing];

    /// One-byte identifier used in key files.
    pub const fn id(self) -> u8 {
        match self {
            KemSuite::X25519 => 0x01,
            KemSuite::MlKem768 => 0x02,
            KemSuite::XWing => 0x03,
            KemSuite::TestKem => 0x7f,
        }
    }

    pub fn from_id(id: u8) -> Result<Self, CryptoError> {
        KemSuite::ALL
            .into_iter()
            .find(|s| s.id() == id)
            .ok_or(CryptoError::UnsupportedSuite(id))
    }

    pub const fn name(self) -> &'static str {
        match self {
            KemSuite::X25519 => "x25519",
            KemSuite::MlKem768 => "mlkem768",
            KemSuite::XWing => "xwing",
            KemSuite::TestKem => "testkem",
        }
    }

    pub const fn public_key_len(self) -> usize {
        match self {
            KemSuite::X25519 | KemSuite::TestKem => X25519_LEN,
            KemSuite::MlKem768 => MLKEM768_EK,
            KemSuite::XWing => MLKEM768_EK + X25519_LEN,
        }
    }

    pub const fn secret_key_len(self) -> usize {
        match self {
            KemSuite::X25519 | KemSuite::TestKem => X25519_LEN,
            KemSuite::MlKem768 => MLKEM768_DK,
            KemSuite::XWing => MLKEM768_DK + X25519_LEN,
        }
    }

    pub const fn ciphertext_len(self) -> usize {
        match self {
            KemSuite::X25519 | KemSuite::TestKem => X25519_LEN,
            KemSuite::MlKem768 => MLKEM768_CT,
            KemSuite::XWing => MLKEM768_CT + X25519_LEN,
        }
    }

    pub const fn shared_key_len(self) -> usize {
        SHARED_KEY_LEN
    }

    /// KEM ciphertext length in bits (`p` in the size formulas).
    pub const fn ciphertext_bits(self) -> usize {
        self.ciphertext_len() * 8
    }

    pub fn generate(self, rng: &mut impl CryptoRngCore) -> KemKeyPair {
        metrics::bump(|c| c.kem_keygen += 1);
        let (secret, public) = match self {
            KemSuite::X25519 => {
                let sk = StaticSecret::random_from_rng(&mut *rng);
                let pk = XPublic::from(&sk);
                (sk.to_bytes().to_vec(), pk.as_bytes().to_vec())
            }
            KemSuite::MlKem768 => {
                let (dk, ek) = MlKem768::generate(rng);
                (dk.as_bytes().to_vec(), ek.as_bytes().to_vec())
            }
            KemSuite::XWing => {
                let (dk, ek) = MlKem768::generate(rng);
                let sk_x = StaticSecret::random_from_rng(&mut *rng);
                let pk_x = XPublic::from(&sk_x);
                let mut secret = dk.as_bytes().to_vec();
                secret.extend_from_slice(&sk_x.to_bytes());
                let mut public = ek.as_bytes().to_vec();
                public.extend_from_slice(pk_x.as_bytes());
                (secret, public)
            }
            KemSuite::TestKem => {
                let mut sk = [0u8; 32];
                rng.fill_bytes(&mut sk);
                let pk = testkem_public(&sk);
                (sk.to_vec(), pk.to_vec())
            }
        };
        KemKeyPair {
            suite: self,
            secret: Zeroizing::new(secret),
            public,
        }
    }

    /// Encapsulates a fresh shared key to `public_key`, returning the key and
    /// its ciphertext.
    pub fn encapsulate(
        self,
        public_key: &[u8],
        rng: &mut impl CryptoRngCore,
    ) -> Result<(SharedKey, Vec<u8>), CryptoError> {
        check_len(public_key, self.public_key_len(), |expected, got| {
            CryptoError::InvalidPublicKey { expected, got }
        })?;
        metrics::bump(|c| c.kem_encap += 1);
        match self {
            KemSuite::X25519 => {
                let (ss, ct) = x25519_encap(public_key, rng);
                Ok((SharedKey::new(ss), ct.to_vec()))
            }
            KemSuite::MlKem768 => {
                let (ss, ct) = mlkem_encap(public_key, rng)?;
                Ok((SharedKey::new(ss), ct))
            }
            KemSuite::XWing => {
                let (pk_m, pk_x) = public_key.split_at(MLKEM768_EK);
                let (ss_m, mut ct) = mlkem_encap(pk_m, rng)?;
                let (ss_x, ct_x) = x25519_encap(pk_x, rng);
                let ss = xwing_combine(&ss_m, &ss_x, &ct_x, pk_x);
                ct.extend_from_slice(&ct_x);
                Ok((SharedKey::new(ss), ct))
            }
            KemSuite::TestKem => {
                let mut e = Zeroizing::new([0u8; 32]);
                rng.fill_bytes(e.as_mut());
                let mask = testkem_mask(public_key);
                let ct: Vec<u8> = e.iter().zip(mask.iter()).map(|(a, b)| a ^ b).collect();
                Ok((SharedKey::new(testkem_shared(public_key, e.as_ref())), ct))
            }
        }
    }

    /// Recovers the shared key for `ciphertext`. ML-KEM and X-Wing use
    /// implicit rejection: a well-formed but wrong ciphertext yields a
    /// pseudorandom key rather than an error.
    pub fn decapsulate(self, secret_key: &[u8], ciphertext: &[u8]) -> Result<SharedKey, CryptoError> {
        check_len(secret_key, self.secret_key_len(), |expected, got| {
            CryptoError::InvalidSecretKey { expected, got }
        })?;
        check_len(ciphertext, self.ciphertext_len(), |expected, got| {
            CryptoError::InvalidCiphertext { expected, got }
        })?;
        metrics::bump(|c| c.kem_decap += 1);
        match self {
            KemSuite::X25519 => Ok(SharedKey::new(x25519_decap(secret_key, ciphertext))),
            KemSuite::MlKem768 => Ok(SharedKey::new(mlkem_decap(secret_key, ciphertext)?)),
            KemSuite::XWing => {
                let (sk_m, sk_x) = secret_key.split_at(MLKEM768_DK);
                let (ct_m, ct_x) = ciphertext.split_at(MLKEM768_CT);
                let ss_m = mlkem_decap(sk_m, ct_m)?;
                let ss_x = x25519_decap(sk_x, ct_x);
                let pk_x = XPublic::from(&StaticSecret::from(to_array32(sk_x)));
                Ok(SharedKey::new(xwing_combine(&ss_m, &ss_x, ct_x, pk_x.as_bytes())))
            }
            KemSuite::TestKem => {
                let pk = testkem_public(secret_key);
                let mask = testkem_mask(&pk);
                let mut e = Zeroizing::new([0u8; 32]);
                for (i, b) in e.iter_mut().enumerate() {
                    *b = ciphertext[i] ^ mask[i];
                }
                Ok(SharedKey::new(testkem_shared(&pk, e.as_ref())))
            }
        }
    }
}

impl fmt::Display for KemSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KemSuite {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        KemSuite::ALL
            .into_iter()
            .find(|suite| suite.name() == norm)
            .ok_or_else(|| CryptoError::UnknownSuiteName(s.to_string()))
    }
}

/// A KEM key pair. The secret half is wiped when the pair is dropped.
#[derive(Clone)]
pub struct KemKeyPair {
    suite: KemSuite,
    secret: Zeroizing<Vec<u8>>,
    public: Vec<u8>,
}

impl KemKeyPair {
    pub fn from_parts(suite: KemSuite, secret: Vec<u8>, public: Vec<u8>) -> Result<Self, CryptoError> {
        let secret = Zeroizing::new(secret);
        check_len(&secret, suite.secret_key_len(), |expected, got| {
            CryptoError::InvalidSecretKey { expected, got }
        })?;
        check_len(&public, suite.public_key_len(), |expected, got| {
            CryptoError::InvalidPublicKey { expected, got }
        })?;
        Ok(KemKeyPair { suite, secret, public })
    }

    pub fn suite(&self) -> KemSuite {
        self.suite
    }

    pub fn public(&self) -> &[u8] {
        &self.public
    }

    pub fn secret(&self) -> &[u8] {
        &self.secret
    }

    pub fn decapsulate(&self, ciphertext: &[u8]) -> Result<SharedKey, CryptoError> {
        self.suite.decapsulate(&self.secret, ciphertext)
    }
}

impl fmt::Debug for KemKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KemKeyPair")
            .field("suite", &self.suite)
            .field("public", &hex::encode(&self.public))
            .finish_non_exhaustive()
    }
}

/// KEM shared secret. Deliberately not serializable.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedKey(Zeroizing<[u8; SHARED_KEY_LEN]>);

impl SharedKey {
    fn new(bytes: [u8; SHARED_KEY_LEN]) -> Self {
        SharedKey(Zeroizing::new(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; SHARED_KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for SharedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedKey(..)")
    }
}

fn check_len(
    bytes: &[u8],
    expected: usize,
    err: impl FnOnce(usize, usize) -> CryptoError,
) -> Result<(), CryptoError> {
    if bytes.len() == expected {
        Ok(())
    } else {
        Err(err(expected, bytes.len()))
    }
}

fn to_array32(bytes: &[u8]) -> [u8; 32] {
    let mut out = [0u8; 32];
    out.copy_from_slice(bytes);
    out
}

fn x25519_encap(public_key: &[u8], rng: &mut impl CryptoRngCore) -> ([u8; 32], [u8; 32]) {
    let peer = XPublic::from(to_array32(public_key));
    let eph = StaticSecret::random_from_rng(&mut *rng);
    let ct = XPublic::from(&eph);
    (eph.diffie_hellman(&peer).to_bytes(), ct.to_bytes())
}

fn x25519_decap(secret_key: &[u8], ciphertext: &[u8]) -> [u8; 32] {
    let sk = StaticSecret::from(to_array32(secret_key));
    sk.diffie_hellman(&XPublic::from(to_array32(ciphertext))).to_bytes()
}

fn mlkem_encap(public_key: &[u8], rng: &mut impl CryptoRngCore) -> Result<([u8; 32], Vec<u8>), CryptoError> {
    let encoded = public_key.try_into().map_err(|_| CryptoError::InvalidPublicKey {
        expected: MLKEM768_EK,
        got: public_key.len(),
    })?;
    let ek = EncapsulationKey::<MlKem768Params>::from_bytes(encoded);
    let (ct, ss) = ek.encapsulate(rng).map_err(|_| CryptoError::InvalidPublicKey {
        expected: MLKEM768_EK,
        got: public_key.len(),
    })?;
    Ok((to_array32(&ss), ct.to_vec()))
}

fn mlkem_decap(secret_key: &[u8], ciphertext: &[u8]) -> Result<[u8; 32], CryptoError> {
    let encoded = secret_key.try_into().map_err(|_| CryptoError::InvalidSecretKey {
        expected: MLKEM768_DK,
        got: secret_key.len(),
    })?;
    let dk = DecapsulationKey::<MlKem768Params>::from_bytes(encoded);
    let ct = ciphertext.try_into().map_err(|_| CryptoError::InvalidCiphertext {
        expected: MLKEM768_CT,
        got: ciphertext.len(),
    })?;
    let ss = dk.decapsulate(ct).map_err(|_| CryptoError::Decapsulation)?;
    Ok(to_array32(&ss))
}

fn xwing_combine(ss_m: &[u8], ss_x: &[u8], ct_x: &[u8], pk_x: &[u8]) -> [u8; 32] {
    let mut h = Sha3_256::new();
    h.update(ss_m);
    h.update(ss_x);
    h.update(ct_x);
    h.update(pk_x);
    h.update(XWING_LABEL);
    h.finalize().into()
}

fn testkem_public(secret: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain_update(TESTKEM_PK_DOMAIN)
        .chain_update(secret)
        .finalize()
        .into()
}

fn testkem_mask(public: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain_update(TESTKEM_MASK_DOMAIN)
        .chain_update(public)
        .finalize()
        .into()
}

fn testkem_shared(public: &[u8], ephemeral: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain_update(TESTKEM_SS_DOMAIN)
        .chain_update(public)
        .chain_update(ephemeral)
        .finalize()
        .into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;
    use std::collections::HashSet;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn declared_sizes_match_standard_lengths() {
        assert_eq!(KemSuite::X25519.public_key_len(), 32);
        assert_eq!(KemSuite::X25519.ciphertext_len(), 32);
        assert_eq!(KemSuite::MlKem768.public_key_len(), 1184);
        assert_eq!(KemSuite::MlKem768.ciphertext_len(), 1088);
        assert_eq!(KemSuite::XWing.public_key_len(), 1216);
        assert_eq!(KemSuite::XWing.ciphertext_len(), 1120);
    }

    #[test]
    fn generated_keys_have_declared_lengths() {
        for suite in KemSuite::ALL {
            let kp = suite.generate(&mut rng(1));
            assert_eq!(kp.public().len(), suite.public_key_len(), "{suite}");
            assert_eq!(kp.secret().len(), suite.secret_key_len(), "{suite}");
            let (_, ct) = suite.encapsulate(kp.public(), &mut rng(2)).unwrap();
            assert_eq!(ct.len(), suite.ciphertext_len(), "{suite}");
        }
    }

    #[test]
    fn testkem_keygen_is_deterministic_from_seed() {
        let a = KemSuite::TestKem.generate(&mut rng(7));
        let b = KemSuite::TestKem.generate(&mut rng(7));
        assert_eq!(a.public(), b.public());
        assert_eq!(a.secret(), b.secret());
    }

    #[test]
    fn roundtrip_over_random_keypairs() {
        for suite in KemSuite::ALL {
            let trials = if suite == KemSuite::XWing { 30 } else { 100 };
            for seed in 0..trials {
                let mut r = rng(seed);
                let kp = suite.generate(&mut r);
                let (k, ct) = suite.encapsulate(kp.public(), &mut r).unwrap();
                assert_eq!(kp.decapsulate(&ct).unwrap(), k, "{suite} seed {seed}");
            }
        }
    }

    #[test]
    fn fresh_randomness_gives_distinct_ciphertexts() {
        for suite in [KemSuite::TestKem, KemSuite::X25519] {
            let mut r = rng(11);
            let kp = suite.generate(&mut r);
            let mut seen = HashSet::new();
            for _ in 0..10_000 {
                let (_, ct) = suite.encapsulate(kp.public(), &mut r).unwrap();
                assert!(seen.insert(ct), "{suite} repeated a ciphertext");
            }
        }
    }

    #[test]
    fn wrong_secret_key_gives_different_shared_key() {
        for suite in KemSuite::ALL {
            let mut r = rng(5);
            let kp = suite.generate(&mut r);
            let other = suite.generate(&mut r);
            let (k, ct) = suite.encapsulate(kp.public(), &mut r).unwrap();
            assert_ne!(other.decapsulate(&ct).unwrap(), k, "{suite}");
        }
    }

    #[test]
    fn truncated_ciphertext_is_rejected() {
        for suite in KemSuite::ALL {
            let mut r = rng(9);
            let kp = suite.generate(&mut r);
            let (_, ct) = suite.encapsulate(kp.public(), &mut r).unwrap();
            let err = kp.decapsulate(&ct[..ct.len() - 1]).unwrap_err();
            assert!(matches!(err, CryptoError::InvalidCiphertext { .. }), "{suite}: {err}");
        }
    }

    #[test]
    fn malformed_public_key_is_rejected() {
        let err = KemSuite::MlKem768.encapsulate(&[0u8; 32], &mut rng(0)).unwrap_err();
        assert_eq!(err, CryptoError::InvalidPublicKey { expected: 1184, got: 32 });
    }

    #[test]
    fn suite_names_and_ids_roundtrip() {
        for suite in KemSuite::ALL {
            assert_eq!(KemSuite::from_id(suite.id()).unwrap(), suite);
            assert_eq!(suite.name().parse::<KemSuite>().unwrap(), suite);
        }
        assert_eq!("ML-KEM-768".parse::<KemSuite>().unwrap(), KemSuite::MlKem768);
        assert!(KemSuite::from_id(0x42).is_err());
    }
}
