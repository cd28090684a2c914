use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::MixnetError;
use crate::packet::PartyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    User,
    Gateway,
    /// Mix node in layer `1..=n`.
    Node(usize),
}

impl Role {
    pub fn is_user(self) -> bool {
        self == Role::User
    }
}

/// The sets of parties in one simulated network, by label.
///
/// The file form is a JSON object with `session_id`, `gateways`, `users` and
/// one `layerN` array per node layer, numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub session_id: String,
    pub gateways: Vec<String>,
    pub layers: Vec<Vec<String>>,
    pub users: Vec<String>,
}

fn labels(obj: &Map<String, Value>, key: &str) -> Result<Vec<String>, MixnetError> {
    let v = obj.get(key).ok_or_else(|| MixnetError::Topology(format!("missing {key:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| MixnetError::Topology(format!("{key}: {e}")))
}

impl Topology {
    pub fn from_json(json: &str) -> Result<Topology, MixnetError> {
        let value: Value = serde_json::from_str(json).map_err(|e| MixnetError::Topology(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| MixnetError::Topology("expected an object".into()))?;
        let session_id = obj
            .get("session_id")
            .and_then(Value::as_str)
            .ok_or_else(|| MixnetError::Topology("missing string \"session_id\"".into()))?
            .to_string();
        let mut layers = Vec::new();
        loop {
            let key = format!("layer{}", layers.len() + 1);
            if !obj.contains_key(&key) {
                break;
            }
            layers.push(labels(obj, &key)?);
        }
        for key in obj.keys() {
            let known = matches!(key.as_str(), "session_id" | "gateways" | "users")
                || key
                    .strip_prefix("layer")
                    .and_then(|n| n.parse::<usize>().ok())
                    .is_some_and(|n| (1..=layers.len()).contains(&n));
            if !known {
                return Err(MixnetError::Topology(format!("unexpected key {key:?}")));
            }
        }
        let topo = Topology { session_id, gateways: labels(obj, "gateways")?, layers, users: labels(obj, "users")? };
        topo.validate()?;
        Ok(topo)
    }

    pub fn to_json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("session_id".into(), Value::from(self.session_id.clone()));
        obj.insert("gateways".into(), Value::from(self.gateways.clone()));
        for (i, layer) in self.layers.iter().enumerate() {
            obj.insert(format!("layer{}", i + 1), Value::from(layer.clone()));
        }
        obj.insert("users".into(), Value::from(self.users.clone()));
        serde_json::to_string_pretty(&Value::Object(obj)).expect("topology serializes")
    }

    /// A small network: `per_set` parties in every set.
    pub fn uniform(session_id: &str, node_layers: usize, per_set: usize) -> Topology {
        let set = |prefix: &str| (1..=per_set).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
        Topology {
            session_id: session_id.to_string(),
            gateways: set("gw"),
            layers: (1..=node_layers).map(|l| set(&format!("n{l}."))).collect(),
            users: set("user"),
        }
    }

    pub fn validate(&self) -> Result<(), MixnetError> {
        if self.layers.is_empty() {
            return Err(MixnetError::Topology("at least one node layer is required".into()));
        }
        let mut seen: BTreeMap<PartyId, &str> = BTreeMap::new();
        let sets = std::iter::once(("gateways", &self.gateways))
            .chain(self.layers.iter().map(|l| ("layer", l)))
            .chain(std::iter::once(("users", &self.users)));
        for (name, set) in sets {
            if set.is_empty() {
                return Err(MixnetError::Topology(format!("{name} set is empty")));
            }
            for label in set {
                if let Some(prev) = seen.insert(PartyId::from_label(label), label) {
                    return Err(MixnetError::Topology(format!("{label:?} collides with {prev:?}; sets must be disjoint")));
                }
            }
        }
        Ok(())
    }

    pub fn node_layers(&self) -> usize {
        self.layers.len()
    }

    /// Encryption layers per packet: the node layers, the exit gateway on a
    /// request (entry gateway on a reply) and the final user.
    pub fn packet_layers(&self) -> usize {
        self.layers.len() + 2
    }

    /// Every party with its role, gateways first, then layers, then users.
    pub fn parties(&self) -> Vec<(String, Role)> {
        let mut out: Vec<(String, Role)> = self.gateways.iter().map(|g| (g.clone(), Role::Gateway)).collect();
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(layer.iter().map(|n| (n.clone(), Role::Node(i + 1))));
        }
        out.extend(self.users.iter().map(|u| (u.clone(), Role::User)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_layers() {
        let t = Topology::from_json(
            r#"{"session_id":"s","gateways":["g1","g2"],"layer1":["a"],"layer2":["b"],"layer3":["c"],"users":["u","v"]}"#,
        )
        .unwrap();
        assert_eq!(t.node_layers(), 3);
        assert_eq!(t.packet_layers(), 5);
        assert_eq!(Topology::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn rejects_overlap_empty_sets_and_stray_keys() {
        let overlap = r#"{"session_id":"s","gateways":["g"],"layer1":["g"],"users":["u"]}"#;
        assert!(Topology::from_json(overlap).is_err());
        let empty = r#"{"session_id":"s","gateways":[],"layer1":["a"],"users":["u"]}"#;
        assert!(Topology::from_json(empty).is_err());
        let gap = r#"{"session_id":"s","gateways":["g"],"layer1":["a"],"layer3":["c"],"users":["u"]}"#;
        assert!(Topology::from_json(gap).is_err());
        assert!(Topology::from_json("[]").is_err());
    }

    #[test]
    fn uniform_is_valid() {
        for n in 1..=4 {
            Topology::uniform("x", n, 2).validate().unwrap();
        }
    }
}
