//! A desk-scale layered mixnet: users, gateways and node layers running the
//! setup, registration, request, reply and forward phases over in-process
//! channels.
//!
//! Every message on a channel is `hint ‖ packet`, where `hint` is a 16-byte
//! party id. Users set it to the party the packet must go to next, since
//! gateways store user packets without processing them; everyone else sends
//! zeros.

mod scenario;
mod topology;

pub use scenario::{bundled, parse_script, run_scenario, Action, ScenarioError, TamperTarget};
pub use topology::{Role, Topology};

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{KemKeyPair, KemSuite};
use crate::directory::{Directory, DirectoryError, Privacy};
use crate::packet::{
    surb_check, Packet, PacketError, PacketFormat, PartyId, ProcessError, Processed, RouteHop, RoutingInfo,
    Surb, SurbId, SurbSecrets, PARTY_ID_LEN,
};
use crate::transport::{Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MixnetError {
    #[error("topology: {0}")]
    Topology(String),
    #[error("unknown party {0:?}")]
    UnknownParty(String),
    #[error("{party} has role {actual:?}, expected {expected}")]
    Role { party: String, actual: Role, expected: &'static str },
    #[error("{0} has already run setup")]
    AlreadySetUp(String),
    #[error("{0} has already registered")]
    AlreadyRegistered(String),
    #[error("{0} has not registered")]
    NotRegistered(String),
    #[error("registration of {user} aborted: no key for {missing}")]
    RegisterAbort { user: String, missing: String },
    #[error("{party} holds no packet {lpid}")]
    UnknownLpid { party: String, lpid: u64 },
    #[error("{party} has no reply context {lpid}")]
    UnknownReply { party: String, lpid: u64 },
    #[error("route: {0}")]
    Route(String),
    #[error("message has {got} bytes, the network carries at most {max}")]
    MessageTooLong { max: usize, got: usize },
    #[error("lpid collision")]
    LpidCollision,
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Directory(#[from] DirectoryError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixnetConfig {
    pub suite: KemSuite,
    pub security_bits: usize,
    pub message_len: usize,
}

impl Default for MixnetConfig {
    fn default() -> Self {
        MixnetConfig { suite: KemSuite::X25519, security_bits: 128, message_len: 256 }
    }
}

/// A request path by label: `[We, N1, …, Nn, Wx]`, plus the optional reply
/// path `[Ŵx, N̂1, …, N̂n, Ŵe]`. The sender and receiver are given separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub path: Vec<String>,
    #[serde(default)]
    pub reply_path: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryKind {
    Request,
    Reply,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    Setup { party: String },
    Register { party: String },
    /// A packet left `from`. `layer` is the header layer it carries.
    Dispatch { from: String, to: String, length: usize, layer: Option<usize> },
    /// Nothing arrived: the channel dropped it.
    Lost { from: String, to: String },
    Stored { party: String, lpid: u64, next: String, processed: bool },
    Deliver {
        party: String,
        kind: DeliveryKind,
        message_hex: String,
        text: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        reply_lpid: Option<u64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        surb_id: Option<String>,
    },
    HeaderFailure { party: String, from: String },
    PayloadFailure { party: String, from: String },
    Abort { party: String, reason: String },
    ReplyReused { party: String, lpid: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub events: Vec<RunEvent>,
}

impl RunLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn deliveries(&self) -> impl Iterator<Item = &RunEvent> {
        self.events.iter().filter(|e| matches!(e, RunEvent::Deliver { .. }))
    }

    pub fn header_failures(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, RunEvent::HeaderFailure { .. })).count()
    }

    pub fn payload_failures(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, RunEvent::PayloadFailure { .. })).count()
    }

    pub fn aborts(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, RunEvent::Abort { .. })).count()
    }
}

struct StoredPacket {
    packet: Packet,
    next: PartyId,
}

struct SurbEntry {
    id: SurbId,
    secrets: SurbSecrets,
    entry_gateway: PartyId,
}

struct ReplyContext {
    surb: Surb,
    exit_gateway: PartyId,
    first_hop: PartyId,
    used: bool,
}

struct PartyState {
    label: String,
    role: Role,
    keypair: KemKeyPair,
    set_up: bool,
    registered: bool,
    key_cache: BTreeMap<PartyId, Vec<u8>>,
    pending: BTreeMap<u64, StoredPacket>,
    surb_table: Vec<SurbEntry>,
    reply_ctx: BTreeMap<u64, ReplyContext>,
    last_reply_lpid: Option<u64>,
    processed: u64,
}

/// Read-only view of one party, for tests and reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartySummary {
    pub label: String,
    pub role: Role,
    pub processed: u64,
    pub pending: Vec<u64>,
    pub surb_entries: usize,
    pub reply_contexts: Vec<u64>,
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Role::User => s.serialize_str("user"),
            Role::Gateway => s.serialize_str("gateway"),
            Role::Node(l) => s.serialize_str(&format!("node{l}")),
        }
    }
}

pub struct Mixnet {
    topology: Topology,
    format: PacketFormat,
    directory: Directory,
    transport: Transport,
    parties: BTreeMap<PartyId, PartyState>,
    labels: BTreeMap<String, PartyId>,
    /// Stored packets across all parties in the order they were stored.
    queue: VecDeque<(PartyId, u64)>,
    used_lpids: HashSet<u64>,
    rng: ChaCha20Rng,
    log: RunLog,
}

impl Mixnet {
    /// Builds the network and generates every party's key pair from `seed`.
    pub fn new(topology: Topology, config: MixnetConfig, seed: u64) -> Result<Mixnet, MixnetError> {
        topology.validate()?;
        let format = PacketFormat::new(
            config.suite,
            config.security_bits,
            topology.packet_layers(),
            config.message_len,
            topology.session_id.clone().into_bytes(),
        )?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut parties = BTreeMap::new();
        let mut labels = BTreeMap::new();
        let infrastructure: Vec<PartyId> = topology
            .parties()
            .iter()
            .filter(|(_, r)| !r.is_user())
            .map(|(l, _)| PartyId::from_label(l))
            .collect();
        for (label, role) in topology.parties() {
            let id = PartyId::from_label(&label);
            let keypair = config.suite.generate(&mut rng);
            labels.insert(label.clone(), id);
            parties.insert(
                id,
                PartyState {
                    label,
                    role,
                    keypair,
                    set_up: false,
                    registered: false,
                    key_cache: BTreeMap::new(),
                    pending: BTreeMap::new(),
                    surb_table: Vec::new(),
                    reply_ctx: BTreeMap::new(),
                    last_reply_lpid: None,
                    processed: 0,
                },
            );
        }
        Ok(Mixnet {
            transport: Transport::new(parties.keys().copied()),
            directory: Directory::with_authorized(infrastructure),
            topology,
            format,
            parties,
            labels,
            queue: VecDeque::new(),
            used_lpids: HashSet::new(),
            rng,
            log: RunLog::default(),
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn format(&self) -> &PacketFormat {
        &self.format
    }

    pub fn directory(&self) -> &Directory {
        &self.directory
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    pub fn transport_mut(&mut self) -> &mut Transport {
        &mut self.transport
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn id(&self, label: &str) -> Result<PartyId, MixnetError> {
        self.labels.get(label).copied().ok_or_else(|| MixnetError::UnknownParty(label.to_string()))
    }

    pub fn label(&self, id: &PartyId) -> String {
        self.parties.get(id).map_or_else(|| id.to_hex(), |p| p.label.clone())
    }

    pub fn role(&self, label: &str) -> Result<Role, MixnetError> {
        Ok(self.parties[&self.id(label)?].role)
    }

    pub fn party(&self, label: &str) -> Result<PartySummary, MixnetError> {
        let id = self.id(label)?;
        let p = &self.parties[&id];
        Ok(PartySummary {
            label: p.label.clone(),
            role: p.role,
            processed: p.processed,
            pending: self.queue.iter().filter(|(q, _)| *q == id).map(|(_, l)| *l).collect(),
            surb_entries: p.surb_table.len(),
            reply_contexts: p.reply_ctx.keys().copied().collect(),
        })
    }

    /// Packets stored and waiting to be forwarded, oldest first.
    pub fn pending(&self) -> impl Iterator<Item = (String, u64)> + '_ {
        self.queue.iter().map(|(id, lpid)| (self.label(id), *lpid))
    }

    /// The most recent reply context held by `user`.
    pub fn last_reply_lpid(&self, user: &str) -> Result<Option<u64>, MixnetError> {
        Ok(self.parties[&self.id(user)?].last_reply_lpid)
    }

    fn push(&mut self, e: RunEvent) {
        self.log.events.push(e);
    }

    fn expect_role(&self, label: &str, ok: impl Fn(Role) -> bool, expected: &'static str) -> Result<PartyId, MixnetError> {
        let id = self.id(label)?;
        let actual = self.parties[&id].role;
        if !ok(actual) {
            return Err(MixnetError::Role { party: label.to_string(), actual, expected });
        }
        Ok(id)
    }

    fn fresh_lpid(&mut self) -> Result<u64, MixnetError> {
        let lpid = self.rng.next_u64();
        if !self.used_lpids.insert(lpid) {
            return Err(MixnetError::LpidCollision);
        }
        Ok(lpid)
    }

    /// Setup phase: a node or gateway publishes its key.
    pub fn setup(&mut self, label: &str) -> Result<(), MixnetError> {
        let id = self.expect_role(label, |r| !r.is_user(), "node or gateway")?;
        let p = &self.parties[&id];
        if p.set_up {
            return Err(MixnetError::AlreadySetUp(label.to_string()));
        }
        let pk = p.keypair.public().to_vec();
        self.directory.register(id, self.format.suite(), pk, Privacy::Public)?;
        self.parties.get_mut(&id).expect("known").set_up = true;
        self.push(RunEvent::Setup { party: label.to_string() });
        Ok(())
    }

    /// Registration phase: a user fetches every node and gateway key and
    /// registers its own key privately. Aborts if any key is missing.
    pub fn register(&mut self, label: &str) -> Result<(), MixnetError> {
        let id = self.expect_role(label, Role::is_user, "user")?;
        if self.parties[&id].registered {
            return Err(MixnetError::AlreadyRegistered(label.to_string()));
        }
        let targets: Vec<(PartyId, String)> = self
            .parties
            .iter()
            .filter(|(_, p)| !p.role.is_user())
            .map(|(t, p)| (*t, p.label.clone()))
            .collect();
        let mut cache = BTreeMap::new();
        for (target, target_label) in targets {
            match self.directory.retrieve(id, target) {
                Some(r) => {
                    cache.insert(target, r.public_key.clone());
                }
                None => {
                    self.push(RunEvent::Abort {
                        party: label.to_string(),
                        reason: format!("no key for {target_label}"),
                    });
                    return Err(MixnetError::RegisterAbort { user: label.to_string(), missing: target_label });
                }
            }
        }
        let pk = self.parties[&id].keypair.public().to_vec();
        self.directory.register(id, self.format.suite(), pk, Privacy::Private)?;
        let p = self.parties.get_mut(&id).expect("known");
        p.key_cache = cache;
        p.registered = true;
        self.push(RunEvent::Register { party: label.to_string() });
        Ok(())
    }

    fn check_path(&self, path: &[String], what: &str) -> Result<Vec<PartyId>, MixnetError> {
        let n = self.topology.node_layers();
        if path.len() != n + 2 {
            return Err(MixnetError::Route(format!("{what} has {} entries, expected {}", path.len(), n + 2)));
        }
        path.iter()
            .enumerate()
            .map(|(slot, label)| {
                let id = self.id(label)?;
                let role = self.parties[&id].role;
                let expected = if slot == 0 || slot == n + 1 { Role::Gateway } else { Role::Node(slot) };
                if role != expected {
                    return Err(MixnetError::Route(format!(
                        "{what}: {label} in slot {slot} has role {role:?}, expected {expected:?}"
                    )));
                }
                Ok(id)
            })
            .collect()
    }

    /// A uniformly random path `[W, N1, …, Nn, W′]`.
    pub fn random_path(&mut self) -> Vec<String> {
        let mut pick = |set: &[String]| set[(self.rng.next_u32() as usize) % set.len()].clone();
        let mut path = vec![pick(&self.topology.gateways)];
        for layer in &self.topology.layers {
            path.push(pick(layer));
        }
        path.push(pick(&self.topology.gateways));
        path
    }

    fn hops(&self, sender: &PartyState, ids: &[PartyId]) -> Result<Vec<RouteHop>, MixnetError> {
        ids.windows(2)
            .map(|w| {
                let pk = sender
                    .key_cache
                    .get(&w[0])
                    .ok_or_else(|| MixnetError::Route(format!("no cached key for {}", self.label(&w[0]))))?;
                Ok(RouteHop::new(w[0], pk.clone(), RoutingInfo::next_hop(w[1])))
            })
            .collect()
    }

    /// Pads `msg` with zeros to the fixed message length.
    pub fn pad_message(&self, msg: &[u8]) -> Result<Vec<u8>, MixnetError> {
        let max = self.format.profile().message_len();
        if msg.len() > max {
            return Err(MixnetError::MessageTooLong { max, got: msg.len() });
        }
        let mut out = msg.to_vec();
        out.resize(max, 0);
        Ok(out)
    }

    /// Request phase. Builds the packet (and a reply block when `route`
    /// carries a reply path) and hands it to the entry gateway.
    pub fn send_request(&mut self, sender: &str, receiver: &str, route: &RouteSpec, msg: &[u8]) -> Result<(), MixnetError> {
        let t = self.expect_role(sender, Role::is_user, "user")?;
        let r = self.expect_role(receiver, Role::is_user, "user")?;
        if !self.parties[&t].registered {
            return Err(MixnetError::NotRegistered(sender.to_string()));
        }
        let msg = self.pad_message(msg)?;
        let path = self.check_path(&route.path, "request path")?;
        let reply_path = route.reply_path.as_deref().map(|p| self.check_path(p, "reply path")).transpose()?;

        // The receiver's key comes from the private directory, so this lookup
        // does not reveal who the sender is writing to.
        let pk_r = self
            .directory
            .retrieve(t, r)
            .map(|rec| rec.public_key.clone())
            .ok_or_else(|| MixnetError::NotRegistered(receiver.to_string()))?;

        let sender_state = &self.parties[&t];
        let entry = path[0];
        let mut request_ids = path[1..].to_vec();
        request_ids.push(r);
        let request_hops = self.hops(sender_state, &request_ids)?;

        let mut surb_parts = None;
        let receiver_routing = match &reply_path {
            Some(rp) => {
                let mut reply_ids = rp[1..].to_vec();
                reply_ids.push(t);
                let reply_hops = self.hops(sender_state, &reply_ids)?;
                let sender_hop = RouteHop::new(t, sender_state.keypair.public(), RoutingInfo::None);
                surb_parts = Some((reply_hops, sender_hop, *rp.last().expect("checked length")));
                RoutingInfo::Terminal { exit_gateway: rp[0], first_hop: rp[1] }
            }
            None => RoutingInfo::None,
        };

        let surb = match surb_parts {
            Some((hops, sender_hop, entry_gateway)) => {
                let (surb, id, secrets) = self.format.create_surb(&hops, &sender_hop, &mut self.rng)?;
                self.parties
                    .get_mut(&t)
                    .expect("known")
                    .surb_table
                    .push(SurbEntry { id, secrets, entry_gateway });
                Some(surb)
            }
            None => None,
        };
        let receiver_hop = RouteHop::new(r, pk_r, receiver_routing);
        let packet =
            self.format
                .create_packet(&request_hops, &msg, &receiver_hop, surb.as_ref(), &mut self.rng)?;
        self.dispatch(t, entry, Some(path[1]), &packet)
    }

    /// Reply phase: the receiver answers through the reply block delivered
    /// with request `lpid`. Reuse is allowed and logged.
    pub fn send_reply(&mut self, receiver: &str, lpid: u64, msg: &[u8]) -> Result<(), MixnetError> {
        let r = self.expect_role(receiver, Role::is_user, "user")?;
        let msg = self.pad_message(msg)?;
        let ctx = self.parties[&r]
            .reply_ctx
            .get(&lpid)
            .ok_or(MixnetError::UnknownReply { party: receiver.to_string(), lpid })?;
        let packet = self.format.use_surb(&ctx.surb, &msg)?;
        let (exit, first_hop, reused) = (ctx.exit_gateway, ctx.first_hop, ctx.used);
        self.parties.get_mut(&r).expect("known").reply_ctx.get_mut(&lpid).expect("present").used = true;
        if reused {
            self.push(RunEvent::ReplyReused { party: receiver.to_string(), lpid });
        }
        self.dispatch(r, exit, Some(first_hop), &packet)
    }

    /// Forward phase: `party` sends stored packet `lpid` on.
    pub fn forward(&mut self, party: &str, lpid: u64) -> Result<(), MixnetError> {
        let id = self.id(party)?;
        let stored = self
            .parties
            .get_mut(&id)
            .expect("known")
            .pending
            .remove(&lpid)
            .ok_or(MixnetError::UnknownLpid { party: party.to_string(), lpid })?;
        self.queue.retain(|e| *e != (id, lpid));
        if !self.parties.contains_key(&stored.next) {
            self.push(RunEvent::Abort { party: party.to_string(), reason: format!("unknown next hop {}", stored.next) });
            return Ok(());
        }
        self.dispatch(id, stored.next, None, &stored.packet)
    }

    /// The packet `party` holds under `lpid`, if any.
    pub fn stored_packet(&self, party: &str, lpid: u64) -> Result<Option<&Packet>, MixnetError> {
        Ok(self.parties[&self.id(party)?].pending.get(&lpid).map(|s| &s.packet))
    }

    /// Adversarial injection: `from` sends `packet` to `to` outside the
    /// protocol flow. The recipient handles it like any other arrival.
    pub fn inject(&mut self, from: &str, to: &str, packet: &Packet) -> Result<(), MixnetError> {
        let (from, to) = (self.id(from)?, self.id(to)?);
        self.dispatch(from, to, None, packet)
    }

    /// Forwards the oldest stored packet. Returns false when nothing is stored.
    pub fn step(&mut self) -> Result<bool, MixnetError> {
        match self.queue.front().copied() {
            Some((id, lpid)) => {
                let label = self.label(&id);
                self.forward(&label, lpid)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Forwards until nothing is stored anywhere.
    pub fn flush(&mut self) -> Result<(), MixnetError> {
        while self.step()? {}
        Ok(())
    }

    fn dispatch(&mut self, from: PartyId, to: PartyId, hint: Option<PartyId>, packet: &Packet) -> Result<(), MixnetError> {
        let mut frame = Vec::with_capacity(PARTY_ID_LEN + packet.len());
        frame.extend_from_slice(&hint.map_or([0u8; PARTY_ID_LEN], |h| h.0));
        packet.header.write_to(&mut frame);
        frame.extend_from_slice(packet.payload.as_bytes());
        let layer = self.format.profile().layer_of_header_len(packet.header.len());
        self.push(RunEvent::Dispatch { from: self.label(&from), to: self.label(&to), length: packet.len(), layer });
        self.transport.send(from, to, frame)?;
        if self.transport.pending(to) == 0 {
            self.push(RunEvent::Lost { from: self.label(&from), to: self.label(&to) });
        }
        while let Some(env) = self.transport.recv(to)? {
            self.receive(to, env.from, &env.bytes)?;
        }
        Ok(())
    }

    fn store(&mut self, party: PartyId, packet: Packet, next: PartyId, processed: bool) -> Result<(), MixnetError> {
        let lpid = self.fresh_lpid()?;
        self.parties.get_mut(&party).expect("known").pending.insert(lpid, StoredPacket { packet, next });
        self.queue.push_back((party, lpid));
        self.push(RunEvent::Stored { party: self.label(&party), lpid, next: self.label(&next), processed });
        Ok(())
    }

    fn failure(&mut self, party: PartyId, from: PartyId, err: ProcessError) {
        let (party, from) = (self.label(&party), self.label(&from));
        self.push(match err {
            ProcessError::HeaderFailure => RunEvent::HeaderFailure { party: party.clone(), from },
            ProcessError::PayloadFailure => RunEvent::PayloadFailure { party: party.clone(), from },
        });
        self.push(RunEvent::Abort { party, reason: err.symbol().to_string() });
    }

    /// The one place any party removes a layer, for requests and replies alike.
    fn peel(&mut self, at: PartyId, packet: &Packet, last_layer: bool) -> Result<Processed, ProcessError> {
        let p = self.parties.get_mut(&at).expect("known");
        p.processed += 1;
        self.format.process_packet(&p.keypair, packet, last_layer)
    }

    fn receive(&mut self, at: PartyId, from: PartyId, frame: &[u8]) -> Result<(), MixnetError> {
        let from_role = self.parties[&from].role;
        let role = self.parties[&at].role;
        let parsed = (frame.len() > PARTY_ID_LEN)
            .then(|| {
                let (hint, bytes) = frame.split_at(PARTY_ID_LEN);
                Packet::from_bytes(bytes, self.format.profile())
                    .ok()
                    .map(|p| (PartyId(hint.try_into().expect("fixed width")), p))
            })
            .flatten();
        let Some((hint, packet)) = parsed else {
            self.failure(at, from, ProcessError::HeaderFailure);
            return Ok(());
        };

        if !role.is_user() {
            if from_role.is_user() {
                // Entry gateways (requests) and exit gateways (replies) pass
                // user packets on untouched.
                return self.store(at, packet, hint, false);
            }
            return match self.peel(at, &packet, false) {
                Ok(Processed::Forward { packet, next_hop }) => self.store(at, packet, next_hop, true),
                Ok(Processed::Deliver(_)) => unreachable!("only the last layer delivers"),
                Err(e) => {
                    self.failure(at, from, e);
                    Ok(())
                }
            };
        }

        let hit = self.parties[&at].surb_table.iter().position(|e| surb_check(&packet, &e.id));
        if let Some(i) = hit {
            let entry = &self.parties[&at].surb_table[i];
            if from != entry.entry_gateway {
                let reason = format!("reply arrived from {}, expected {}", self.label(&from), self.label(&entry.entry_gateway));
                self.push(RunEvent::Abort { party: self.label(&at), reason });
                return Ok(());
            }
            let surb_id = entry.id.to_string();
            match self.format.recover_surb(&packet, &entry.secrets) {
                Ok(message) => self.push(RunEvent::Deliver {
                    party: self.label(&at),
                    kind: DeliveryKind::Reply,
                    text: text_of(&message),
                    message_hex: hex::encode(&message),
                    reply_lpid: None,
                    surb_id: Some(surb_id),
                }),
                Err(e) => self.failure(at, from, e),
            }
            return Ok(());
        }

        match self.peel(at, &packet, true) {
            Ok(Processed::Deliver(d)) => {
                let reply_lpid = match (d.surb, d.routing) {
                    (Some(surb), RoutingInfo::Terminal { exit_gateway, first_hop }) => {
                        let lpid = self.fresh_lpid()?;
                        let p = self.parties.get_mut(&at).expect("known");
                        p.reply_ctx.insert(lpid, ReplyContext { surb, exit_gateway, first_hop, used: false });
                        p.last_reply_lpid = Some(lpid);
                        Some(lpid)
                    }
                    _ => None,
                };
                self.push(RunEvent::Deliver {
                    party: self.label(&at),
                    kind: DeliveryKind::Request,
                    text: text_of(&d.message),
                    message_hex: hex::encode(&d.message),
                    reply_lpid,
                    surb_id: None,
                });
            }
            Ok(Processed::Forward { .. }) => unreachable!("the last layer never forwards"),
            Err(e) => self.failure(at, from, e),
        }
        Ok(())
    }
}

/// The message as text, with the zero padding removed.
fn text_of(msg: &[u8]) -> String {
    let end = msg.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    String::from_utf8_lossy(&msg[..end]).into_owned()
}
