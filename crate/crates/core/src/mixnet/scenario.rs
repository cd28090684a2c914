//! Scripted runs. A script is JSON lines, one action per line; blank lines
//! and lines starting with `#` are skipped.

use serde::Deserialize;
use thiserror::Error;

use super::{Mixnet, MixnetConfig, MixnetError, Role, RouteSpec, RunLog, Topology};
use crate::packet::PARTY_ID_LEN;
use crate::transport::{HookAction, HookRule};

fn one() -> u32 {
    1
}

fn bit() -> u8 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperTarget {
    Header,
    Payload,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    /// One node or gateway, or all of them.
    Setup {
        #[serde(default)]
        party: Option<String>,
    },
    /// One user, or all of them.
    Register {
        #[serde(default)]
        user: Option<String>,
    },
    /// Missing paths are drawn at random from the topology.
    Request {
        from: String,
        to: String,
        #[serde(default)]
        msg: String,
        #[serde(default)]
        path: Option<Vec<String>>,
        #[serde(default)]
        reply: bool,
        #[serde(default)]
        reply_path: Option<Vec<String>>,
    },
    /// Without `lpid`, answers the most recent request `from` received.
    Reply {
        from: String,
        #[serde(default)]
        msg: String,
        #[serde(default)]
        lpid: Option<u64>,
    },
    /// Without `party`, forwards everything until the network is idle.
    /// With `party` but no `lpid`, forwards everything that party holds.
    Forward {
        #[serde(default)]
        party: Option<String>,
        #[serde(default)]
        lpid: Option<u64>,
    },
    Drop {
        to: String,
        #[serde(default)]
        from: Option<String>,
        #[serde(default = "one")]
        count: u32,
    },
    /// Flips bits at byte `offset` of the header or payload of the next
    /// packet(s) `to` receives.
    Tamper {
        to: String,
        #[serde(default)]
        from: Option<String>,
        target: TamperTarget,
        offset: usize,
        #[serde(default = "bit")]
        mask: u8,
        #[serde(default = "one")]
        count: u32,
    },
    Duplicate {
        to: String,
        #[serde(default)]
        from: Option<String>,
        #[serde(default = "one")]
        count: u32,
    },
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// The script or topology is unusable.
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
    /// A phase failed while running.
    #[error("line {line}: {error}")]
    Protocol { line: usize, error: MixnetError, log: RunLog },
}

pub fn parse_script(script: &str) -> Result<Vec<(usize, Action)>, ScenarioError> {
    script
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            serde_json::from_str(l)
                .map(|a| (line, a))
                .map_err(|e| ScenarioError::Config { line, message: e.to_string() })
        })
        .collect()
}

impl Mixnet {
    fn hook(&mut self, to: &str, from: Option<&str>, action: HookAction, count: u32) -> Result<(), MixnetError> {
        let to = self.id(to)?;
        let from = from.map(|f| self.id(f)).transpose()?;
        self.transport_mut().install_hook(HookRule { to, from, action, remaining: Some(count) });
        Ok(())
    }

    pub fn apply(&mut self, action: &Action) -> Result<(), MixnetError> {
        match action {
            Action::Setup { party: Some(p) } => self.setup(p),
            Action::Setup { party: None } => {
                for (label, role) in self.topology().parties() {
                    if role != Role::User {
                        self.setup(&label)?;
                    }
                }
                Ok(())
            }
            Action::Register { user: Some(u) } => self.register(u),
            Action::Register { user: None } => {
                for u in self.topology().users.clone() {
                    self.register(&u)?;
                }
                Ok(())
            }
            Action::Request { from, to, msg, path, reply, reply_path } => {
                let path = path.clone().unwrap_or_else(|| self.random_path());
                let reply_path = match (reply, reply_path) {
                    (_, Some(p)) => Some(p.clone()),
                    (true, None) => Some(self.random_path()),
                    (false, None) => None,
                };
                self.send_request(from, to, &RouteSpec { path, reply_path }, msg.as_bytes())
            }
            Action::Reply { from, msg, lpid } => {
                let lpid = match lpid {
                    Some(l) => *l,
                    None => self
                        .last_reply_lpid(from)?
                        .ok_or_else(|| MixnetError::Route(format!("{from} has nothing to reply to")))?,
                };
                self.send_reply(from, lpid, msg.as_bytes())
            }
            Action::Forward { party: None, .. } => self.flush(),
            Action::Forward { party: Some(p), lpid: Some(l) } => self.forward(p, *l),
            Action::Forward { party: Some(p), lpid: None } => {
                for lpid in self.party(p)?.pending {
                    self.forward(p, lpid)?;
                }
                Ok(())
            }
            Action::Drop { to, from, count } => self.hook(to, from.as_deref(), HookAction::Drop, *count),
            Action::Duplicate { to, from, count } => self.hook(to, from.as_deref(), HookAction::Duplicate, *count),
            Action::Tamper { to, from, target, offset, mask, count } => {
                let action = match target {
                    TamperTarget::Header => {
                        HookAction::Tamper { byte_index: PARTY_ID_LEN + offset, xor_mask: *mask, from_end: false }
                    }
                    TamperTarget::Payload => {
                        let payload_len = self.format().profile().payload_len();
                        if *offset >= payload_len {
                            return Err(MixnetError::Route(format!("payload offset {offset} is past {payload_len}")));
                        }
                        HookAction::Tamper { byte_index: payload_len - 1 - offset, xor_mask: *mask, from_end: true }
                    }
                };
                self.hook(to, from.as_deref(), action, *count)
            }
        }
    }
}

/// Runs `script` against a fresh network. Aborts caused by packet
/// processing are logged and do not stop the run; phase errors do.
pub fn run_scenario(topology: Topology, config: MixnetConfig, script: &str, seed: u64) -> Result<Mixnet, ScenarioError> {
    let actions = parse_script(script)?;
    let mut net = Mixnet::new(topology, config, seed).map_err(|e| ScenarioError::Config { line: 0, message: e.to_string() })?;
    for (line, action) in actions {
        if let Err(error) = net.apply(&action) {
            return Err(match error {
                MixnetError::UnknownParty(_) | MixnetError::MessageTooLong { .. } => {
                    ScenarioError::Config { line, message: error.to_string() }
                }
                error => ScenarioError::Protocol { line, error, log: net.log().clone() },
            });
        }
    }
    Ok(net)
}

/// The topology and scripts shipped with the crate.
pub mod bundled {
    pub const TOPOLOGY: &str = include_str!("../../scenarios/topology.json");
    pub const HAPPY_PATH: &str = include_str!("../../scenarios/happy_path.jsonl");
    pub const HEADER_TAMPER: &str = include_str!("../../scenarios/header_tamper.jsonl");
    pub const PAYLOAD_TAMPER: &str = include_str!("../../scenarios/payload_tamper.jsonl");

    pub fn scenario(name: &str) -> Option<&'static str> {
        match name {
            "happy_path" | "happy-path" => Some(HAPPY_PATH),
            "header_tamper" | "header-tamper" => Some(HEADER_TAMPER),
            "payload_tamper" | "payload-tamper" => Some(PAYLOAD_TAMPER),
            _ => None,
        }
    }
}
