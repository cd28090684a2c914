//! Known-answer vectors over the deterministic test KEM.
//!
//! With the test KEM, packet creation is a pure function of the route keys,
//! the message, the session id and the RNG seed, so a vector pins every
//! byte of the outermost packet. Checking a vector rebuilds the packet and,
//! on mismatch, reports the first differing component and the first layer at
//! which the stored packet no longer processes.

use std::fmt;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{KemKeyPair, KemSuite};
use crate::packet::{Packet, PacketFormat, PartyId, ProcessError, Processed, RouteHop, RoutingInfo};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorHop {
    pub party: PartyId,
    pub sk: String,
    pub pk: String,
}

/// One vector. `route` lists every layer's party, outermost first; the last
/// entry is the receiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vector {
    pub suite: KemSuite,
    pub seed: u64,
    pub k: usize,
    pub layers: usize,
    pub msg_len: usize,
    pub session_id: String,
    pub route: Vec<VectorHop>,
    pub msg: String,
    pub expected_packet_hex: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    KemCiphertext,
    AeadCiphertext,
    Tag,
    Payload,
    Length,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::KemCiphertext => "KEM ciphertext c",
            Component::AeadCiphertext => "AEAD ciphertext β",
            Component::Tag => "tag γ",
            Component::Payload => "payload",
            Component::Length => "length",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("vector is malformed: {0}")]
    Malformed(String),
    #[error("{}", describe(.component, .byte, .failing_layer, *.message_matches))]
    Mismatch {
        component: Component,
        byte: usize,
        /// First layer where the stored packet fails to process, and how.
        failing_layer: Option<(usize, ProcessError)>,
        /// Whether the stored packet still delivers the stored message.
        message_matches: bool,
    },
}

fn describe(c: &Component, byte: &usize, layer: &Option<(usize, ProcessError)>, msg_ok: bool) -> String {
    let mut s = format!("first difference in the {c} at packet byte {byte}");
    match layer {
        Some((l, e)) => s.push_str(&format!("; stored packet fails at layer {l} with {}", e.symbol())),
        None if msg_ok => s.push_str("; stored packet still processes and delivers the message"),
        None => s.push_str("; stored packet processes but delivers a different message"),
    }
    s
}

fn unhex(field: &str, s: &str) -> Result<Vec<u8>, VectorError> {
    hex::decode(s).map_err(|e| VectorError::Malformed(format!("{field}: {e}")))
}

impl Vector {
    /// Generates a vector: keys and encapsulation randomness both come from
    /// `seed`, in that order.
    pub fn generate(seed: u64, k: usize, layers: usize, msg_len: usize) -> Vector {
        let suite = KemSuite::TestKem;
        let session_id = format!("vector-{seed}").into_bytes();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let keys: Vec<KemKeyPair> = (0..layers).map(|_| suite.generate(&mut rng)).collect();
        let route = keys
            .iter()
            .enumerate()
            .map(|(i, kp)| VectorHop {
                party: PartyId::from_label(&format!("vector-{seed}-hop-{i}")),
                sk: hex::encode(kp.secret()),
                pk: hex::encode(kp.public()),
            })
            .collect();
        let msg: Vec<u8> = (0..msg_len).map(|i| (i as u64).wrapping_mul(31).wrapping_add(seed) as u8).collect();
        let mut v = Vector {
            suite,
            seed,
            k,
            layers,
            msg_len,
            session_id: hex::encode(session_id),
            route,
            msg: hex::encode(msg),
            expected_packet_hex: String::new(),
        };
        let packet = v.build().expect("generated vectors are well formed");
        v.expected_packet_hex = hex::encode(packet.to_bytes());
        v
    }

    fn format(&self) -> Result<PacketFormat, VectorError> {
        if self.route.len() != self.layers {
            return Err(VectorError::Malformed(format!("{} route entries for {} layers", self.route.len(), self.layers)));
        }
        PacketFormat::new(self.suite, self.k, self.layers, self.msg_len, unhex("session_id", &self.session_id)?)
            .map_err(|e| VectorError::Malformed(e.to_string()))
    }

    /// Rebuilds the packet from the vector's inputs.
    pub fn build(&self) -> Result<Packet, VectorError> {
        let fmt = self.format()?;
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        // Replay key generation so the encapsulation randomness lines up.
        for _ in 0..self.layers {
            self.suite.generate(&mut rng);
        }
        let mut hops = Vec::with_capacity(self.layers);
        for (i, h) in self.route.iter().enumerate() {
            let routing = match self.route.get(i + 1) {
                Some(next) => RoutingInfo::next_hop(next.party),
                None => RoutingInfo::None,
            };
            hops.push(RouteHop::new(h.party, unhex("pk", &h.pk)?, routing));
        }
        let receiver = hops.pop().expect("at least one layer");
        fmt.create_packet(&hops, &unhex("msg", &self.msg)?, &receiver, None, &mut rng)
            .map_err(|e| VectorError::Malformed(e.to_string()))
    }

    fn keypairs(&self) -> Result<Vec<KemKeyPair>, VectorError> {
        self.route
            .iter()
            .map(|h| {
                KemKeyPair::from_parts(self.suite, unhex("sk", &h.sk)?, unhex("pk", &h.pk)?)
                    .map_err(|e| VectorError::Malformed(e.to_string()))
            })
            .collect()
    }

    /// Processes the stored packet through every layer. Returns the failing
    /// layer, or the delivered message.
    fn walk(&self, fmt: &PacketFormat, packet: Packet) -> Result<Result<Vec<u8>, (usize, ProcessError)>, VectorError> {
        let keys = self.keypairs()?;
        let mut packet = packet;
        for (i, kp) in keys.iter().enumerate() {
            let last = i + 1 == keys.len();
            match fmt.process_packet(kp, &packet, last) {
                Ok(Processed::Forward { packet: next, .. }) => packet = next,
                Ok(Processed::Deliver(d)) => return Ok(Ok(d.message)),
                Err(e) => return Ok(Err((i, e))),
            }
        }
        Ok(Err((keys.len() - 1, ProcessError::HeaderFailure)))
    }

    pub fn check(&self) -> Result<(), VectorError> {
        let fmt = self.format()?;
        let expected = unhex("expected_packet_hex", &self.expected_packet_hex)?;
        let rebuilt = self.build()?.to_bytes();
        if rebuilt == expected {
            return Ok(());
        }
        let profile = fmt.profile();
        let byte = rebuilt.iter().zip(&expected).position(|(a, b)| a != b).unwrap_or(rebuilt.len().min(expected.len()));
        let (c, t, h) = (profile.kem_ciphertext_len(), profile.tag_len(), profile.header_len(0));
        let component = if rebuilt.len() != expected.len() && byte == rebuilt.len().min(expected.len()) {
            Component::Length
        } else if byte < c {
            Component::KemCiphertext
        } else if byte < h - t {
            Component::AeadCiphertext
        } else if byte < h {
            Component::Tag
        } else {
            Component::Payload
        };
        let (failing_layer, message_matches) = match Packet::from_bytes(&expected, profile) {
            Ok(stored) => match self.walk(&fmt, stored)? {
                Ok(m) => (None, hex::encode(m) == self.msg),
                Err(f) => (Some(f), false),
            },
            Err(_) => (Some((0, ProcessError::HeaderFailure)), false),
        };
        Err(VectorError::Mismatch { component, byte, failing_layer, message_matches })
    }
}

/// A spread of vectors over layer counts, both security levels and a few
/// message lengths.
pub fn emit(count: usize, base_seed: u64) -> Vec<Vector> {
    (0..count)
        .map(|i| {
            let seed = base_seed + i as u64;
            let layers = 1 + i % 6;
            let k = if i % 4 == 3 { 256 } else { 128 };
            let msg_len = [0, 1, 32, 100][i % 4];
            Vector::generate(seed, k, layers, msg_len)
        })
        .collect()
}

pub fn to_jsonl(vectors: &[Vector]) -> String {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&serde_json::to_string(v).expect("vectors serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<Vector>, VectorError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| VectorError::Malformed(format!("line {}: {e}", i + 1))))
        .collect()
}
