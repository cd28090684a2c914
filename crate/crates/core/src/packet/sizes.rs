//! Size calculus for every layer of a packet.
//!
//! Layers are indexed from the outside in: layer `0` is the header the first
//! processing hop sees, layer `l = L - 1` is the innermost one. With `j = l - i`
//! counting processed layers from the inside, the bit lengths are
//!
//! ```text
//! AEAD ciphertext at layer i   3k + j·p + 2jk
//! header at layer i            4k + (j+1)·p + 2jk
//! single-use reply block       5k + (l+1)·p + 2lk
//! payload (every layer)        6k + |m| + (l+1)·p + 2lk
//! ```

use serde::Serialize;

use super::PacketError;
use crate::crypto::KemSuite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SizeProfile {
    /// Security parameter `k`, in bits.
    pub security_bits: usize,
    /// KEM ciphertext length `p`, in bits.
    pub kem_ciphertext_bits: usize,
    /// Number of encryption layers `L = l + 1`.
    pub layers: usize,
    /// Fixed message length `|m|`, in bits.
    pub message_bits: usize,
}

/// Byte lengths of everything at one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerSize {
    pub layer: usize,
    pub kem_ciphertext: usize,
    pub aead_ciphertext: usize,
    pub tag: usize,
    pub header: usize,
    pub payload: usize,
    pub packet: usize,
}

impl SizeProfile {
    pub fn new(
        security_bits: usize,
        kem_ciphertext_bits: usize,
        layers: usize,
        message_bits: usize,
    ) -> Result<Self, PacketError> {
        if security_bits != 128 && security_bits != 256 {
            return Err(PacketError::InvalidProfile("security parameter must be 128 or 256"));
        }
        if kem_ciphertext_bits == 0 || !kem_ciphertext_bits.is_multiple_of(8) {
            return Err(PacketError::InvalidProfile("KEM ciphertext length must be whole bytes"));
        }
        if layers == 0 {
            return Err(PacketError::InvalidProfile("at least one layer is required"));
        }
        if !message_bits.is_multiple_of(8) {
            return Err(PacketError::InvalidProfile("message length must be whole bytes"));
        }
        Ok(SizeProfile { security_bits, kem_ciphertext_bits, layers, message_bits })
    }

    pub fn for_suite(
        suite: KemSuite,
        security_bits: usize,
        layers: usize,
        message_len: usize,
    ) -> Result<Self, PacketError> {
        Self::new(security_bits, suite.ciphertext_bits(), layers, message_len * 8)
    }

    /// `l`, the index of the innermost layer.
    pub fn innermost(&self) -> usize {
        self.layers - 1
    }

    fn depth(&self, layer: usize) -> usize {
        assert!(layer < self.layers, "layer {layer} outside 0..{}", self.layers);
        self.innermost() - layer
    }

    pub fn aead_ciphertext_bits(&self, layer: usize) -> usize {
        let (k, p, j) = (self.security_bits, self.kem_ciphertext_bits, self.depth(layer));
        3 * k + j * p + 2 * j * k
    }

    pub fn header_bits(&self, layer: usize) -> usize {
        let (k, p, j) = (self.security_bits, self.kem_ciphertext_bits, self.depth(layer));
        4 * k + (j + 1) * p + 2 * j * k
    }

    pub fn surb_bits(&self) -> usize {
        let (k, p, l) = (self.security_bits, self.kem_ciphertext_bits, self.innermost());
        5 * k + (l + 1) * p + 2 * l * k
    }

    pub fn payload_bits(&self) -> usize {
        let (k, p, l) = (self.security_bits, self.kem_ciphertext_bits, self.innermost());
        6 * k + self.message_bits + (l + 1) * p + 2 * l * k
    }

    pub fn packet_bits(&self, layer: usize) -> usize {
        self.header_bits(layer) + self.payload_bits()
    }

    pub fn id_len(&self) -> usize {
        self.security_bits / 8
    }

    pub fn tag_len(&self) -> usize {
        self.security_bits / 8
    }

    pub fn payload_key_len(&self) -> usize {
        self.security_bits / 8
    }

    pub fn zero_prefix_len(&self) -> usize {
        self.security_bits / 8
    }

    pub fn kem_ciphertext_len(&self) -> usize {
        self.kem_ciphertext_bits / 8
    }

    pub fn message_len(&self) -> usize {
        self.message_bits / 8
    }

    /// Routing field width: `3k` at the innermost layer, `k` elsewhere.
    pub fn routing_len(&self, layer: usize) -> usize {
        if layer == self.innermost() {
            3 * self.id_len()
        } else {
            self.id_len()
        }
    }

    pub fn header_len(&self, layer: usize) -> usize {
        self.header_bits(layer) / 8
    }

    pub fn aead_ciphertext_len(&self, layer: usize) -> usize {
        self.aead_ciphertext_bits(layer) / 8
    }

    pub fn surb_len(&self) -> usize {
        self.surb_bits() / 8
    }

    pub fn payload_len(&self) -> usize {
        self.payload_bits() / 8
    }

    pub fn packet_len(&self, layer: usize) -> usize {
        self.packet_bits(layer) / 8
    }

    /// Which layer a header of `len` bytes belongs to, if any.
    pub fn layer_of_header_len(&self, len: usize) -> Option<usize> {
        (0..self.layers).find(|&i| self.header_len(i) == len)
    }

    pub fn layer_size(&self, layer: usize) -> LayerSize {
        LayerSize {
            layer,
            kem_ciphertext: self.kem_ciphertext_len(),
            aead_ciphertext: self.aead_ciphertext_len(layer),
            tag: self.tag_len(),
            header: self.header_len(layer),
            payload: self.payload_len(),
            packet: self.packet_len(layer),
        }
    }
}

/// Per-layer byte lengths, outermost first.
pub fn layer_sizes(profile: &SizeProfile) -> Vec<LayerSize> {
    (0..profile.layers).map(|i| profile.layer_size(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x25519(layers: usize, msg_bytes: usize) -> SizeProfile {
        SizeProfile::for_suite(KemSuite::X25519, 128, layers, msg_bytes).unwrap()
    }

    #[test]
    fn five_layer_x25519_spot_values() {
        let p = x25519(5, 1024);
        assert_eq!(p.header_len(0), 352);
        assert_eq!(p.header_len(4), 96);
        assert_eq!(p.surb_len(), 368);
        assert_eq!(p.payload_len(), 1408);
    }

    #[test]
    fn header_shrinks_by_p_plus_2k_per_layer() {
        for suite in KemSuite::ALL {
            for k in [128, 256] {
                let p = SizeProfile::for_suite(suite, k, 6, 64).unwrap();
                for i in 0..p.innermost() {
                    assert_eq!(
                        p.header_bits(i) - p.header_bits(i + 1),
                        p.kem_ciphertext_bits + 2 * k
                    );
                }
            }
        }
    }

    #[test]
    fn packet_row_matches_header_plus_payload_only_at_layer_zero() {
        // The closed form 10k + |m| + 2(j+1)p + 2(j+l)k implies a payload that
        // shrinks with j, but payloads have constant length. The two agree at
        // layer 0 and differ by (l-j)p at every inner layer.
        for suite in KemSuite::ALL {
            for layers in 1..=6 {
                let p = SizeProfile::for_suite(suite, 128, layers, 100).unwrap();
                let (k, pb, l, m) = (128, p.kem_ciphertext_bits, layers - 1, 800);
                assert_eq!(p.packet_bits(0), 10 * k + m + 2 * (l + 1) * pb + 4 * l * k);
                for i in 0..layers {
                    let j = l - i;
                    let row = 10 * k + m + 2 * (j + 1) * pb + 2 * (j + l) * k;
                    assert_eq!(p.packet_bits(i) - row, (l - j) * pb);
                }
            }
        }
    }

    #[test]
    fn payload_is_zero_prefix_plus_surb_plus_message() {
        let p = x25519(5, 1024);
        assert_eq!(p.payload_len(), p.zero_prefix_len() + p.surb_len() + p.message_len());
        assert_eq!(p.surb_len(), p.header_len(0) + p.payload_key_len());
    }

    #[test]
    fn header_is_kem_plus_aead_plus_tag() {
        let p = SizeProfile::for_suite(KemSuite::MlKem768, 256, 4, 0).unwrap();
        for s in layer_sizes(&p) {
            assert_eq!(s.header, s.kem_ciphertext + s.aead_ciphertext + s.tag);
            assert_eq!(s.packet, s.header + s.payload);
        }
    }

    #[test]
    fn single_layer_profile() {
        let p = x25519(1, 32);
        assert_eq!(p.header_bits(0), 4 * 128 + 256);
        assert_eq!(p.routing_len(0), 48);
        assert_eq!(p.layer_of_header_len(96), Some(0));
    }

    #[test]
    fn invalid_profiles() {
        assert!(SizeProfile::new(192, 256, 5, 8).is_err());
        assert!(SizeProfile::new(128, 0, 5, 8).is_err());
        assert!(SizeProfile::new(128, 256, 0, 8).is_err());
        assert!(SizeProfile::new(128, 256, 5, 7).is_err());
    }
}
