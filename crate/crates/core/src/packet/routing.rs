//! Party identifiers and the fixed-width routing field carried in each header.
//!
//! A non-innermost layer carries exactly `k` bits: the next hop's identifier,
//! zero-padded when `k` exceeds the 128-bit identifier. The innermost layer
//! carries `3k` bits: either all zeros (no reply) or
//! `exit_gateway ‖ first_reply_hop ‖ flag`, where the flag block is a single
//! `0x01` byte followed by zeros.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub const PARTY_ID_LEN: usize = 16;

const TERMINAL_FLAG: u8 = 0x01;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId(pub [u8; PARTY_ID_LEN]);

impl PartyId {
    /// Parses 32 hex digits as a raw identifier; any other label is hashed.
    pub fn from_label(label: &str) -> PartyId {
        if let Ok(bytes) = hex::decode(label) {
            if let Ok(raw) = <[u8; PARTY_ID_LEN]>::try_from(bytes.as_slice()) {
                return PartyId(raw);
            }
        }
        let digest = Sha256::digest(label.as_bytes());
        let mut raw = [0u8; PARTY_ID_LEN];
        raw.copy_from_slice(&digest[..PARTY_ID_LEN]);
        PartyId(raw)
    }

    pub fn as_bytes(&self) -> &[u8; PARTY_ID_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PartyId({})", &self.to_hex()[..8])
    }
}

impl FromStr for PartyId {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut raw = [0u8; PARTY_ID_LEN];
        hex::decode_to_slice(s, &mut raw)?;
        Ok(PartyId(raw))
    }
}

impl Serialize for PartyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PartyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoutingInfo {
    /// Forward to this party.
    NextHop { party: PartyId },
    /// Innermost layer of a reply-enabled request: where the reply enters
    /// and which party processes it first.
    Terminal { exit_gateway: PartyId, first_hop: PartyId },
    /// Innermost layer that must not be forwarded.
    None,
}

impl RoutingInfo {
    pub fn next_hop(party: PartyId) -> Self {
        RoutingInfo::NextHop { party }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, RoutingInfo::Terminal { .. })
    }
}

fn put_id(out: &mut Vec<u8>, id: &PartyId, field_len: usize) {
    out.extend_from_slice(&id.0);
    out.resize(out.len() + field_len - PARTY_ID_LEN, 0);
}

fn take_id(field: &[u8]) -> Option<PartyId> {
    let (id, pad) = field.split_at(PARTY_ID_LEN);
    if pad.iter().any(|&b| b != 0) {
        return None;
    }
    Some(PartyId(id.try_into().ok()?))
}

/// `k`-bit next-hop field for a non-innermost layer.
pub(crate) fn encode_next_hop(party: &PartyId, id_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(id_len);
    put_id(&mut out, party, id_len);
    out
}

pub(crate) fn decode_next_hop(field: &[u8]) -> Option<PartyId> {
    take_id(field)
}

/// `3k`-bit innermost field. `NextHop` cannot be encoded here.
pub(crate) fn encode_terminal(info: &RoutingInfo, id_len: usize) -> Option<Vec<u8>> {
    let mut out = Vec::with_capacity(3 * id_len);
    match info {
        RoutingInfo::None => out.resize(3 * id_len, 0),
        RoutingInfo::Terminal { exit_gateway, first_hop } => {
            put_id(&mut out, exit_gateway, id_len);
            put_id(&mut out, first_hop, id_len);
            out.push(TERMINAL_FLAG);
            out.resize(3 * id_len, 0);
        }
        RoutingInfo::NextHop { .. } => return None,
    }
    Some(out)
}

pub(crate) fn decode_terminal(field: &[u8], id_len: usize) -> Option<RoutingInfo> {
    if field.len() != 3 * id_len {
        return None;
    }
    let (ids, flag) = field.split_at(2 * id_len);
    let (flag_byte, flag_pad) = flag.split_first()?;
    if flag_pad.iter().any(|&b| b != 0) {
        return None;
    }
    match *flag_byte {
        0 if ids.iter().all(|&b| b == 0) => Some(RoutingInfo::None),
        TERMINAL_FLAG => Some(RoutingInfo::Terminal {
            exit_gateway: take_id(&ids[..id_len])?,
            first_hop: take_id(&ids[id_len..])?,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_hashing_and_hex() {
        let raw = "00112233445566778899aabbccddeeff";
        assert_eq!(PartyId::from_label(raw).to_hex(), raw);
        assert_eq!(PartyId::from_label("alice"), PartyId::from_label("alice"));
        assert_ne!(PartyId::from_label("alice"), PartyId::from_label("bob"));
    }

    #[test]
    fn next_hop_field_is_k_bits() {
        let id = PartyId::from_label("n1");
        for id_len in [16, 32] {
            let f = encode_next_hop(&id, id_len);
            assert_eq!(f.len(), id_len);
            assert_eq!(decode_next_hop(&f), Some(id));
        }
        let mut bad = encode_next_hop(&id, 32);
        bad[20] = 1;
        assert_eq!(decode_next_hop(&bad), None);
    }

    #[test]
    fn terminal_field_is_3k_bits() {
        let t = RoutingInfo::Terminal {
            exit_gateway: PartyId::from_label("gw"),
            first_hop: PartyId::from_label("n1"),
        };
        for id_len in [16, 32] {
            let f = encode_terminal(&t, id_len).unwrap();
            assert_eq!(f.len(), 3 * id_len);
            assert_eq!(decode_terminal(&f, id_len), Some(t));
            let none = encode_terminal(&RoutingInfo::None, id_len).unwrap();
            assert_eq!(none, vec![0u8; 3 * id_len]);
            assert_eq!(decode_terminal(&none, id_len), Some(RoutingInfo::None));
        }
        assert!(encode_terminal(&RoutingInfo::next_hop(PartyId([0; 16])), 16).is_none());
    }

    #[test]
    fn terminal_with_zero_ids_is_still_terminal() {
        let t = RoutingInfo::Terminal { exit_gateway: PartyId([0; 16]), first_hop: PartyId([0; 16]) };
        let f = encode_terminal(&t, 16).unwrap();
        assert_eq!(decode_terminal(&f, 16), Some(t));
    }

    #[test]
    fn garbage_terminal_fields_fail_to_parse() {
        let mut f = vec![0u8; 48];
        f[40] = 2;
        assert_eq!(decode_terminal(&f, 16), None);
        let mut g = vec![0u8; 48];
        g[3] = 9;
        assert_eq!(decode_terminal(&g, 16), None);
        assert_eq!(decode_terminal(&[0u8; 47], 16), None);
    }
}
