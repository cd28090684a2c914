//! Key directory backing the setup and registration phases.
//!
//! Public records model a registration service that reveals who is being
//! looked up; private records model one that does not. The retrieval audit
//! log is the observable leakage: a private lookup leaves only the requester
//! in it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{CryptoError, KemSuite};
use crate::packet::PartyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Privacy {
    Public,
    Private,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectoryRecord {
    pub party: PartyId,
    pub suite: KemSuite,
    pub public_key: Vec<u8>,
    pub privacy: Privacy,
}

/// One line of the retrieval audit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub requester: PartyId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<PartyId>,
    pub found: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DirectoryError {
    #[error("party {0} is already registered")]
    Duplicate(PartyId),
    #[error("party {0} may not register a public record")]
    Unauthorized(PartyId),
    #[error("public key does not fit suite {suite}: {source}")]
    BadKey { suite: KemSuite, source: CryptoError },
    #[error("directory file: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
struct ExportRecord {
    party_hex: String,
    suite: KemSuite,
    pk_hex: String,
    privacy: Privacy,
}

#[derive(Debug, Default, Clone)]
pub struct Directory {
    records: BTreeMap<PartyId, DirectoryRecord>,
    /// When set, only these parties may write public records.
    authorized: Option<BTreeSet<PartyId>>,
    registrations: Vec<(PartyId, Privacy)>,
    audit: Vec<AuditEntry>,
}

impl Directory {
    pub fn new() -> Self {
        Self::default()
    }

    /// A directory that accepts public records only from `parties`. Private
    /// records may come from anyone.
    pub fn with_authorized(parties: impl IntoIterator<Item = PartyId>) -> Self {
        Directory { authorized: Some(parties.into_iter().collect()), ..Self::default() }
    }

    pub fn register(
        &mut self,
        party: PartyId,
        suite: KemSuite,
        public_key: Vec<u8>,
        privacy: Privacy,
    ) -> Result<(), DirectoryError> {
        if self.records.contains_key(&party) {
            return Err(DirectoryError::Duplicate(party));
        }
        if privacy == Privacy::Public {
            if let Some(allowed) = &self.authorized {
                if !allowed.contains(&party) {
                    return Err(DirectoryError::Unauthorized(party));
                }
            }
        }
        if public_key.len() != suite.public_key_len() {
            return Err(DirectoryError::BadKey {
                suite,
                source: CryptoError::InvalidPublicKey { expected: suite.public_key_len(), got: public_key.len() },
            });
        }
        self.records.insert(party, DirectoryRecord { party, suite, public_key, privacy });
        self.registrations.push((party, privacy));
        Ok(())
    }

    /// Looks up `target` on behalf of `requester`. Absence is a value, not an
    /// error.
    pub fn retrieve(&mut self, requester: PartyId, target: PartyId) -> Option<&DirectoryRecord> {
        let record = self.records.get(&target);
        let logged_target = match record {
            Some(r) if r.privacy == Privacy::Private => None,
            // An absent target has no privacy setting; it is logged as private
            // so a miss does not reveal what was asked for.
            None => None,
            Some(_) => Some(target),
        };
        self.audit.push(AuditEntry { requester, target: logged_target, found: record.is_some() });
        record
    }

    pub fn contains(&self, party: &PartyId) -> bool {
        self.records.contains_key(party)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &DirectoryRecord> {
        self.records.values()
    }

    /// Retrieval audit log, oldest first.
    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Audit log as JSON lines.
    pub fn audit_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.audit {
            out.push_str(&serde_json::to_string(e).expect("audit entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Who registered, in order, and with which privacy.
    pub fn registration_log(&self) -> &[(PartyId, Privacy)] {
        &self.registrations
    }

    pub fn export_json(&self) -> String {
        let rows: Vec<ExportRecord> = self
            .records
            .values()
            .map(|r| ExportRecord {
                party_hex: r.party.to_hex(),
                suite: r.suite,
                pk_hex: hex::encode(&r.public_key),
                privacy: r.privacy,
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("records serialize")
    }

    /// Loads records into an empty directory. Duplicate rows are rejected.
    pub fn import_json(json: &str) -> Result<Directory, DirectoryError> {
        let rows: Vec<ExportRecord> = serde_json::from_str(json).map_err(|e| DirectoryError::Format(e.to_string()))?;
        let mut dir = Directory::new();
        for row in rows {
            let party: PartyId = row.party_hex.parse().map_err(|e| DirectoryError::Format(format!("party_hex: {e}")))?;
            let pk = hex::decode(&row.pk_hex).map_err(|e| DirectoryError::Format(format!("pk_hex: {e}")))?;
            dir.register(party, row.suite, pk, row.privacy)?;
        }
        Ok(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> PartyId {
        PartyId::from_label(s)
    }

    #[test]
    fn register_then_retrieve() {
        let mut d = Directory::new();
        d.register(id("n1"), KemSuite::X25519, vec![7; 32], Privacy::Public).unwrap();
        let r = d.retrieve(id("u"), id("n1")).unwrap();
        assert_eq!(r.public_key, vec![7; 32]);
        assert!(d.retrieve(id("u"), id("nobody")).is_none());
    }

    #[test]
    fn write_once() {
        let mut d = Directory::new();
        d.register(id("n1"), KemSuite::X25519, vec![7; 32], Privacy::Public).unwrap();
        assert_eq!(
            d.register(id("n1"), KemSuite::X25519, vec![8; 32], Privacy::Private),
            Err(DirectoryError::Duplicate(id("n1")))
        );
        assert_eq!(d.retrieve(id("u"), id("n1")).unwrap().public_key, vec![7; 32]);
    }

    #[test]
    fn authorized_set_limits_public_records_only() {
        let mut d = Directory::with_authorized([id("n1")]);
        assert!(d.register(id("n1"), KemSuite::X25519, vec![1; 32], Privacy::Public).is_ok());
        assert_eq!(
            d.register(id("u"), KemSuite::X25519, vec![1; 32], Privacy::Public),
            Err(DirectoryError::Unauthorized(id("u")))
        );
        assert!(d.register(id("u"), KemSuite::X25519, vec![1; 32], Privacy::Private).is_ok());
    }

    #[test]
    fn audit_omits_private_targets() {
        let mut d = Directory::new();
        d.register(id("pub"), KemSuite::TestKem, vec![1; 32], Privacy::Public).unwrap();
        d.register(id("priv"), KemSuite::TestKem, vec![2; 32], Privacy::Private).unwrap();
        d.retrieve(id("a"), id("pub"));
        d.retrieve(id("b"), id("priv"));
        let log = d.audit_jsonl();
        assert!(log.contains(&id("pub").to_hex()));
        assert!(!log.contains(&id("priv").to_hex()));
        assert!(log.contains(&id("b").to_hex()));
    }

    #[test]
    fn wrong_key_length_is_rejected() {
        let mut d = Directory::new();
        assert!(matches!(
            d.register(id("n"), KemSuite::MlKem768, vec![0; 32], Privacy::Public),
            Err(DirectoryError::BadKey { .. })
        ));
    }

    #[test]
    fn json_roundtrip() {
        let mut d = Directory::new();
        d.register(id("n1"), KemSuite::X25519, vec![3; 32], Privacy::Public).unwrap();
        d.register(id("u1"), KemSuite::TestKem, vec![4; 32], Privacy::Private).unwrap();
        let back = Directory::import_json(&d.export_json()).unwrap();
        assert_eq!(back.records().cloned().collect::<Vec<_>>(), d.records().cloned().collect::<Vec<_>>());
        assert!(Directory::import_json("[{\"party_hex\":\"zz\"}]").is_err());
    }
}
