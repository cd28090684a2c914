use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zeroize::Zeroizing;

use super::routing::{PartyId, RoutingInfo};
use super::sizes::SizeProfile;
use super::PacketError;

/// One header layer: `c ‖ β ‖ γ`, serialized without length prefixes.
#[derive(Clone, PartialEq, Eq)]
pub struct Header {
    pub kem_ciphertext: Vec<u8>,
    pub aead_ciphertext: Vec<u8>,
    pub tag: Vec<u8>,
}

impl Header {
    pub fn len(&self) -> usize {
        self.kem_ciphertext.len() + self.aead_ciphertext.len() + self.tag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        self.write_to(&mut out);
        out
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.kem_ciphertext);
        out.extend_from_slice(&self.aead_ciphertext);
        out.extend_from_slice(&self.tag);
    }

    /// Splits `bytes` given the fixed KEM ciphertext and tag widths; whatever
    /// lies between is `β`. At least the innermost routing field must fit.
    pub fn from_bytes(bytes: &[u8], profile: &SizeProfile) -> Result<Header, PacketError> {
        let c = profile.kem_ciphertext_len();
        let t = profile.tag_len();
        if bytes.len() < c + t + profile.routing_len(profile.innermost()) {
            return Err(PacketError::Malformed("header shorter than the innermost layer"));
        }
        let (kem_ciphertext, rest) = bytes.split_at(c);
        let (aead_ciphertext, tag) = rest.split_at(rest.len() - t);
        Ok(Header {
            kem_ciphertext: kem_ciphertext.to_vec(),
            aead_ciphertext: aead_ciphertext.to_vec(),
            tag: tag.to_vec(),
        })
    }
}

impl fmt::Debug for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Header")
            .field("kem_ciphertext", &self.kem_ciphertext.len())
            .field("aead_ciphertext", &self.aead_ciphertext.len())
            .field("tag", &self.tag.len())
            .finish()
    }
}

/// The fixed-width payload. Its length never changes across hops.
#[derive(Clone, PartialEq, Eq)]
pub struct Payload(pub Vec<u8>);

impl Payload {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Payload({} bytes)", self.0.len())
    }
}

/// A header and a payload. The layer index is never encoded; the holder
/// knows it from its position in the route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub header: Header,
    pub payload: Payload,
}

impl Packet {
    pub fn len(&self) -> usize {
        self.header.len() + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Wire form: `header ‖ payload`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        self.header.write_to(&mut out);
        out.extend_from_slice(&self.payload.0);
        out
    }

    /// Parses a wire packet. The payload width is constant for a profile, so
    /// the header is everything before the last `payload_len` bytes.
    pub fn from_bytes(bytes: &[u8], profile: &SizeProfile) -> Result<Packet, PacketError> {
        let payload_len = profile.payload_len();
        if bytes.len() <= payload_len {
            return Err(PacketError::Malformed("packet shorter than its payload"));
        }
        let (header, payload) = bytes.split_at(bytes.len() - payload_len);
        Ok(Packet {
            header: Header::from_bytes(header, profile)?,
            payload: Payload(payload.to_vec()),
        })
    }
}

/// One route entry: who processes a layer, their KEM public key and the
/// routing information sealed into that layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteHop {
    pub party: PartyId,
    pub public_key: Vec<u8>,
    pub routing: RoutingInfo,
}

impl RouteHop {
    pub fn new(party: PartyId, public_key: impl Into<Vec<u8>>, routing: RoutingInfo) -> Self {
        RouteHop { party, public_key: public_key.into(), routing }
    }
}

/// A single-use reply block: the outermost reply header plus the payload key
/// of the innermost (sender) layer.
#[derive(Clone, PartialEq, Eq)]
pub struct Surb {
    pub header: Header,
    pub payload_key: Zeroizing<Vec<u8>>,
}

impl Surb {
    pub fn len(&self) -> usize {
        self.header.len() + self.payload_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        self.header.write_to(&mut out);
        out.extend_from_slice(&self.payload_key);
        out
    }

    pub fn from_bytes(bytes: &[u8], profile: &SizeProfile) -> Result<Surb, PacketError> {
        if bytes.len() != profile.surb_len() {
            return Err(PacketError::Malformed("reply block has the wrong length"));
        }
        let (header, key) = bytes.split_at(bytes.len() - profile.payload_key_len());
        Ok(Surb {
            header: Header::from_bytes(header, profile)?,
            payload_key: Zeroizing::new(key.to_vec()),
        })
    }
}

impl fmt::Debug for Surb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Surb").field("header", &self.header).finish_non_exhaustive()
    }
}

/// Identifies the reply block a reply packet was built from: SHA-256 of the
/// innermost reply header, which is exactly the header a reply carries when
/// it reaches the sender.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurbId(#[serde(with = "hex_array")] pub [u8; 32]);

impl SurbId {
    pub fn of_header(header: &Header) -> SurbId {
        let mut h = Sha256::new();
        h.update(&header.kem_ciphertext);
        h.update(&header.aead_ciphertext);
        h.update(&header.tag);
        SurbId(h.finalize().into())
    }
}

impl fmt::Debug for SurbId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SurbId({})", &hex::encode(self.0)[..12])
    }
}

impl fmt::Display for SurbId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

/// Payload keys of every reply layer, outermost first. Wiped on drop.
#[derive(Clone)]
pub struct SurbSecrets {
    pub(crate) payload_keys: Vec<Zeroizing<Vec<u8>>>,
}

impl SurbSecrets {
    pub fn len(&self) -> usize {
        self.payload_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload_keys.is_empty()
    }
}

impl fmt::Debug for SurbSecrets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SurbSecrets({} layers)", self.payload_keys.len())
    }
}
