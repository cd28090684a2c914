//! Secure point-to-point channels between parties.
//!
//! A channel delivers exactly the bytes it was given and reveals only their
//! length. Adversarial behaviour is modelled by hooks that fire at the
//! recipient's ingress, standing in for a corrupt endpoint; nothing can alter
//! bytes while they sit in a queue.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::PartyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HookAction {
    Drop,
    /// XOR `xor_mask` into byte `byte_index`, counted from the end when
    /// `from_end` is set and taken modulo the length either way.
    Tamper {
        byte_index: usize,
        xor_mask: u8,
        #[serde(default)]
        from_end: bool,
    },
    Duplicate,
}

/// Which messages a hook applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HookRule {
    pub to: PartyId,
    #[serde(default)]
    pub from: Option<PartyId>,
    pub action: HookAction,
    /// How many more messages the hook fires on; `None` for unlimited.
    #[serde(default)]
    pub remaining: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HookId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelAction {
    Delivered,
    Dropped,
    Tampered { byte_index: usize, xor_mask: u8 },
    Duplicated,
}

/// What the channel leaks: endpoints and length, never contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelEvent {
    pub seq: u64,
    pub from: PartyId,
    pub to: PartyId,
    pub length: usize,
    pub action: ChannelAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: PartyId,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
}

#[derive(Debug, Default)]
pub struct Transport {
    queues: BTreeMap<PartyId, VecDeque<Envelope>>,
    hooks: Vec<(HookId, HookRule)>,
    next_hook: u64,
    seq: u64,
    events: Vec<ChannelEvent>,
}

impl Transport {
    pub fn new(parties: impl IntoIterator<Item = PartyId>) -> Self {
        Transport { queues: parties.into_iter().map(|p| (p, VecDeque::new())).collect(), ..Self::default() }
    }

    pub fn add_party(&mut self, party: PartyId) {
        self.queues.entry(party).or_default();
    }

    pub fn install_hook(&mut self, rule: HookRule) -> HookId {
        let id = HookId(self.next_hook);
        self.next_hook += 1;
        self.hooks.push((id, rule));
        id
    }

    pub fn remove_hook(&mut self, id: HookId) -> bool {
        let before = self.hooks.len();
        self.hooks.retain(|(h, _)| *h != id);
        self.hooks.len() != before
    }

    pub fn hooks(&self) -> impl Iterator<Item = (HookId, &HookRule)> {
        self.hooks.iter().map(|(id, r)| (*id, r))
    }

    fn take_hook(&mut self, from: PartyId, to: PartyId) -> Option<HookAction> {
        let pos = self
            .hooks
            .iter()
            .position(|(_, r)| r.to == to && r.from.is_none_or(|f| f == from) && r.remaining != Some(0))?;
        let rule = &mut self.hooks[pos].1;
        let action = rule.action;
        if let Some(n) = rule.remaining.as_mut() {
            *n -= 1;
            if *n == 0 {
                self.hooks.remove(pos);
            }
        }
        Some(action)
    }

    /// Queues `bytes` for `to`, applying the first matching hook. Returns the
    /// sequence number of the event.
    pub fn send(&mut self, from: PartyId, to: PartyId, mut bytes: Vec<u8>) -> Result<u64, TransportError> {
        if !self.queues.contains_key(&from) {
            return Err(TransportError::UnknownParty(from));
        }
        if !self.queues.contains_key(&to) {
            return Err(TransportError::UnknownParty(to));
        }
        let length = bytes.len();
        let action = match self.take_hook(from, to) {
            None => ChannelAction::Delivered,
            Some(HookAction::Drop) => ChannelAction::Dropped,
            Some(HookAction::Tamper { byte_index, xor_mask, from_end }) => {
                let byte_index = match (length, from_end) {
                    (0, _) => 0,
                    (n, false) => byte_index % n,
                    (n, true) => n - 1 - byte_index % n,
                };
                if let Some(b) = bytes.get_mut(byte_index) {
                    *b ^= xor_mask;
                }
                ChannelAction::Tampered { byte_index, xor_mask }
            }
            Some(HookAction::Duplicate) => ChannelAction::Duplicated,
        };
        let queue = self.queues.get_mut(&to).expect("checked above");
        match action {
            ChannelAction::Dropped => {}
            ChannelAction::Duplicated => {
                queue.push_back(Envelope { from, bytes: bytes.clone() });
                queue.push_back(Envelope { from, bytes });
            }
            _ => queue.push_back(Envelope { from, bytes }),
        }
        let seq = self.seq;
        self.seq += 1;
        self.events.push(ChannelEvent { seq, from, to, length, action });
        Ok(seq)
    }

    /// Takes the oldest message waiting for `to`.
    pub fn recv(&mut self, to: PartyId) -> Result<Option<Envelope>, TransportError> {
        let queue = self.queues.get_mut(&to).ok_or(TransportError::UnknownParty(to))?;
        Ok(queue.pop_front())
    }

    pub fn pending(&self, to: PartyId) -> usize {
        self.queues.get(&to).map_or(0, VecDeque::len)
    }

    pub fn events(&self) -> &[ChannelEvent] {
        &self.events
    }

    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}
