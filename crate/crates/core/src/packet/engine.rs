//! The six packet algorithms.

use rand_core::CryptoRngCore;
use zeroize::Zeroizing;

use super::routing::{self, PartyId, RoutingInfo};
use super::sizes::SizeProfile;
use super::types::{Header, Packet, Payload, RouteHop, Surb, SurbId, SurbSecrets};
use super::{PacketError, ProcessError};
use crate::crypto::{aead_open, aead_seal, KdfContext, KemKeyPair, KemSuite, LayerKeys, Lioness};
use crate::metrics;

/// What a successful `process_packet` call yields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Processed {
    /// The next inner packet and the party it goes to.
    Forward { packet: Packet, next_hop: PartyId },
    /// The innermost layer was removed.
    Deliver(Delivery),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub message: Vec<u8>,
    pub surb: Option<Surb>,
    pub routing: RoutingInfo,
}

/// Parameters shared by every party in one protocol session: the KEM suite,
/// the size profile and the session identifier bound into every KDF call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketFormat {
    suite: KemSuite,
    profile: SizeProfile,
    session_id: Vec<u8>,
}

struct LayerSecrets {
    headers: Vec<Header>,
    payload_keys: Vec<Zeroizing<Vec<u8>>>,
}

impl PacketFormat {
    pub fn new(
        suite: KemSuite,
        security_bits: usize,
        layers: usize,
        message_len: usize,
        session_id: impl Into<Vec<u8>>,
    ) -> Result<Self, PacketError> {
        let profile = SizeProfile::for_suite(suite, security_bits, layers, message_len)?;
        Ok(PacketFormat { suite, profile, session_id: session_id.into() })
    }

    pub fn suite(&self) -> KemSuite {
        self.suite
    }

    pub fn profile(&self) -> &SizeProfile {
        &self.profile
    }

    pub fn session_id(&self) -> &[u8] {
        &self.session_id
    }

    fn layer_keys(&self, shared: &crate::crypto::SharedKey, c: &[u8], pk: &[u8]) -> Result<LayerKeys, PacketError> {
        let ctx = KdfContext { kem_ciphertext: c, public_key: pk, session_id: &self.session_id };
        Ok(LayerKeys::derive(shared, &ctx, self.profile.payload_key_len())?)
    }

    fn check_route(&self, route: &[RouteHop], terminal: &RouteHop) -> Result<(), PacketError> {
        let expected = self.profile.innermost();
        if route.len() != expected {
            return Err(PacketError::RouteLength { expected, got: route.len() });
        }
        if let Some(bad) = route.iter().position(|h| !matches!(h.routing, RoutingInfo::NextHop { .. })) {
            return Err(PacketError::Routing(format!("hop {bad} must carry next-hop routing")));
        }
        if matches!(terminal.routing, RoutingInfo::NextHop { .. }) {
            return Err(PacketError::Routing("terminal hop cannot carry next-hop routing".into()));
        }
        Ok(())
    }

    /// Encapsulates to every hop, derives the layer keys and seals the nested
    /// headers from the inside out. Returns `h_0 … h_l` and `s^p_0 … s^p_l`.
    fn seal_headers(
        &self,
        route: &[RouteHop],
        terminal: &RouteHop,
        rng: &mut impl CryptoRngCore,
    ) -> Result<LayerSecrets, PacketError> {
        let id_len = self.profile.id_len();
        let tag_len = self.profile.tag_len();
        let hops: Vec<&RouteHop> = route.iter().chain(std::iter::once(terminal)).collect();

        let mut kem_cts = Vec::with_capacity(hops.len());
        let mut keys = Vec::with_capacity(hops.len());
        for hop in &hops {
            let (shared, c) = self.suite.encapsulate(&hop.public_key, rng)?;
            keys.push(self.layer_keys(&shared, &c, &hop.public_key)?);
            kem_cts.push(c);
        }

        let innermost = hops.len() - 1;
        let mut headers: Vec<Header> = Vec::with_capacity(hops.len());
        let terminal_field = routing::encode_terminal(&terminal.routing, id_len)
            .ok_or_else(|| PacketError::Routing("terminal routing".into()))?;
        let (beta, gamma) = aead_seal(&keys[innermost].header, &terminal_field, tag_len)?;
        headers.push(Header { kem_ciphertext: kem_cts[innermost].clone(), aead_ciphertext: beta, tag: gamma });

        for i in (0..innermost).rev() {
            let RoutingInfo::NextHop { party } = hops[i].routing else {
                unreachable!("checked by check_route");
            };
            let inner = headers.last().expect("innermost header was pushed");
            let mut plaintext = routing::encode_next_hop(&party, id_len);
            inner.write_to(&mut plaintext);
            let (beta, gamma) = aead_seal(&keys[i].header, &plaintext, tag_len)?;
            headers.push(Header { kem_ciphertext: kem_cts[i].clone(), aead_ciphertext: beta, tag: gamma });
        }
        headers.reverse();

        let payload_keys = keys.into_iter().map(|k| k.payload).collect();
        Ok(LayerSecrets { headers, payload_keys })
    }

    fn check_message(&self, msg: &[u8]) -> Result<(), PacketError> {
        let expected = self.profile.message_len();
        if msg.len() != expected {
            return Err(PacketError::MessageOutOfSpace { expected, got: msg.len() });
        }
        Ok(())
    }

    /// Innermost payload plaintext: `0^k ‖ (surb | 0^s) ‖ m`.
    fn inner_plaintext(&self, msg: &[u8], surb: Option<&Surb>) -> Vec<u8> {
        let mut out = vec![0u8; self.profile.zero_prefix_len()];
        match surb {
            Some(s) => out.extend_from_slice(&s.to_bytes()),
            None => out.resize(out.len() + self.profile.surb_len(), 0),
        }
        out.extend_from_slice(msg);
        out
    }

    fn check_request(
        &self,
        route: &[RouteHop],
        msg: &[u8],
        receiver: &RouteHop,
        surb: Option<&Surb>,
    ) -> Result<(), PacketError> {
        self.check_message(msg)?;
        self.check_route(route, receiver)?;
        match (surb, &receiver.routing) {
            (None, RoutingInfo::None) => {}
            (Some(s), RoutingInfo::Terminal { .. }) => {
                if s.len() != self.profile.surb_len() {
                    return Err(PacketError::Malformed("reply block does not match the size profile"));
                }
            }
            (None, _) => return Err(PacketError::Routing("receiver routing must be empty without a reply block".into())),
            (Some(_), _) => return Err(PacketError::Routing("a reply block requires terminal receiver routing".into())),
        }
        Ok(())
    }

    /// Builds a request packet and returns it at every layer, outermost first.
    /// Element `i` is exactly what the party at layer `i` receives.
    pub fn create_layers(
        &self,
        route: &[RouteHop],
        msg: &[u8],
        receiver: &RouteHop,
        surb: Option<&Surb>,
        rng: &mut impl CryptoRngCore,
    ) -> Result<Vec<Packet>, PacketError> {
        self.check_request(route, msg, receiver, surb)?;
        let secrets = self.seal_headers(route, receiver, rng)?;
        let mut payload = self.inner_plaintext(msg, surb);
        let mut packets = Vec::with_capacity(secrets.headers.len());
        for (header, key) in secrets.headers.into_iter().zip(&secrets.payload_keys).rev() {
            Lioness::new(key).encrypt(&mut payload)?;
            packets.push(Packet { header, payload: Payload(payload.clone()) });
        }
        packets.reverse();
        Ok(packets)
    }

    /// Builds a request packet for `route` followed by `receiver`.
    ///
    /// `receiver.routing` must be `Terminal` exactly when `surb` is present and
    /// `None` otherwise.
    pub fn create_packet(
        &self,
        route: &[RouteHop],
        msg: &[u8],
        receiver: &RouteHop,
        surb: Option<&Surb>,
        rng: &mut impl CryptoRngCore,
    ) -> Result<Packet, PacketError> {
        self.check_request(route, msg, receiver, surb)?;
        let secrets = self.seal_headers(route, receiver, rng)?;
        let mut payload = self.inner_plaintext(msg, surb);
        for key in secrets.payload_keys.iter().rev() {
            Lioness::new(key).encrypt(&mut payload)?;
        }
        let header = secrets.headers.into_iter().next().expect("at least one layer");
        Ok(Packet { header, payload: Payload(payload) })
    }

    /// Removes one layer. Nodes and gateways pass `last_layer = false`; the
    /// user at the end of a request route passes `true`.
    ///
    /// Request and reply packets go through this same function.
    pub fn process_packet(
        &self,
        keypair: &KemKeyPair,
        packet: &Packet,
        last_layer: bool,
    ) -> Result<Processed, ProcessError> {
        metrics::bump(|c| c.packet_process += 1);
        if keypair.suite() != self.suite {
            return Err(ProcessError::HeaderFailure);
        }
        let header = &packet.header;
        let shared = keypair
            .decapsulate(&header.kem_ciphertext)
            .map_err(|_| ProcessError::HeaderFailure)?;
        let keys = self
            .layer_keys(&shared, &header.kem_ciphertext, keypair.public())
            .map_err(|_| ProcessError::HeaderFailure)?;
        let opened = aead_open(&keys.header, &header.aead_ciphertext, &header.tag)
            .map_err(|_| ProcessError::HeaderFailure)?;

        let id_len = self.profile.id_len();
        let routed = if last_layer {
            let info = routing::decode_terminal(&opened, id_len).ok_or(ProcessError::HeaderFailure)?;
            Err(info)
        } else {
            if opened.len() < id_len {
                return Err(ProcessError::HeaderFailure);
            }
            let (field, inner) = opened.split_at(id_len);
            let next_hop = routing::decode_next_hop(field).ok_or(ProcessError::HeaderFailure)?;
            let inner = Header::from_bytes(inner, &self.profile).map_err(|_| ProcessError::HeaderFailure)?;
            Ok((next_hop, inner))
        };

        if packet.payload.len() != self.profile.payload_len() {
            return Err(ProcessError::PayloadFailure);
        }
        let mut payload = packet.payload.0.clone();
        Lioness::new(&keys.payload)
            .decrypt(&mut payload)
            .map_err(|_| ProcessError::PayloadFailure)?;

        match routed {
            Ok((next_hop, header)) => Ok(Processed::Forward {
                packet: Packet { header, payload: Payload(payload) },
                next_hop,
            }),
            Err(routing) => self.parse_delivery(&payload, routing).map(Processed::Deliver),
        }
    }

    fn parse_delivery(&self, plaintext: &[u8], routing: RoutingInfo) -> Result<Delivery, ProcessError> {
        let zeros = self.profile.zero_prefix_len();
        let surb_len = self.profile.surb_len();
        if plaintext[..zeros].iter().any(|&b| b != 0) {
            return Err(ProcessError::PayloadFailure);
        }
        let surb_bytes = &plaintext[zeros..zeros + surb_len];
        let message = plaintext[zeros + surb_len..].to_vec();
        let surb = match routing {
            RoutingInfo::None => {
                if surb_bytes.iter().any(|&b| b != 0) {
                    return Err(ProcessError::PayloadFailure);
                }
                None
            }
            _ => Some(Surb::from_bytes(surb_bytes, &self.profile).map_err(|_| ProcessError::PayloadFailure)?),
        };
        Ok(Delivery { message, surb, routing })
    }

    /// Builds a reply block for `reply_route` ending at `sender`, whose routing
    /// must be `None`.
    pub fn create_surb(
        &self,
        reply_route: &[RouteHop],
        sender: &RouteHop,
        rng: &mut impl CryptoRngCore,
    ) -> Result<(Surb, SurbId, SurbSecrets), PacketError> {
        self.check_route(reply_route, sender)?;
        if sender.routing != RoutingInfo::None {
            return Err(PacketError::Routing("sender routing in a reply block must be empty".into()));
        }
        let LayerSecrets { mut headers, payload_keys } = self.seal_headers(reply_route, sender, rng)?;
        let id = SurbId::of_header(headers.last().expect("at least one layer"));
        let surb = Surb {
            header: headers.swap_remove(0),
            payload_key: payload_keys.last().expect("at least one layer").clone(),
        };
        Ok((surb, id, SurbSecrets { payload_keys }))
    }

    /// Turns a reply block into a reply packet. Deterministic in its inputs.
    pub fn use_surb(&self, surb: &Surb, msg: &[u8]) -> Result<Packet, PacketError> {
        self.check_message(msg)?;
        if surb.header.len() != self.profile.header_len(0) || surb.payload_key.len() != self.profile.payload_key_len() {
            return Err(PacketError::Malformed("reply block does not match the size profile"));
        }
        let mut payload = vec![0u8; self.profile.zero_prefix_len() + self.profile.surb_len()];
        payload.extend_from_slice(msg);
        Lioness::new(&surb.payload_key).encrypt(&mut payload)?;
        Ok(Packet { header: surb.header.clone(), payload: Payload(payload) })
    }

    /// Undoes the payload transformations of every reply hop and strips the
    /// zero padding.
    pub fn recover_surb(&self, packet: &Packet, secrets: &SurbSecrets) -> Result<Vec<u8>, ProcessError> {
        if secrets.len() != self.profile.layers || packet.payload.len() != self.profile.payload_len() {
            return Err(ProcessError::PayloadFailure);
        }
        let (sender_key, hop_keys) = secrets.payload_keys.split_last().expect("at least one layer");
        let mut payload = packet.payload.0.clone();
        for key in hop_keys.iter().rev() {
            Lioness::new(key).encrypt(&mut payload).map_err(|_| ProcessError::PayloadFailure)?;
        }
        Lioness::new(sender_key)
            .decrypt(&mut payload)
            .map_err(|_| ProcessError::PayloadFailure)?;
        let pad = self.profile.zero_prefix_len() + self.profile.surb_len();
        if payload[..pad].iter().any(|&b| b != 0) {
            return Err(ProcessError::PayloadFailure);
        }
        Ok(payload[pad..].to_vec())
    }
}

/// Whether `packet` carries the innermost header of the reply block `id`.
/// Only the header is compared.
pub fn surb_check(packet: &Packet, id: &SurbId) -> bool {
    SurbId::of_header(&packet.header) == *id
}
