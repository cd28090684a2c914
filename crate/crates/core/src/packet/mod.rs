//! Packet format: nested KEM/AEAD headers over a Lioness-encrypted payload,
//! and single-use reply blocks built from the same headers.

mod engine;
pub mod routing;
pub mod sizes;
mod types;

pub use engine::{surb_check, Delivery, PacketFormat, Processed};
pub use routing::{PartyId, RoutingInfo, PARTY_ID_LEN};
pub use sizes::{layer_sizes, LayerSize, SizeProfile};
pub use types::{Header, Packet, Payload, RouteHop, Surb, SurbId, SurbSecrets};

use thiserror::Error;

use crate::crypto::CryptoError;

/// Errors from building packets or reply blocks. Processing has its own,
/// deliberately uninformative, error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("message has {got} bytes, the profile fixes {expected}")]
    MessageOutOfSpace { expected: usize, got: usize },
    #[error("route has {got} processing hops before the terminal one, the profile needs {expected}")]
    RouteLength { expected: usize, got: usize },
    #[error("routing: {0}")]
    Routing(String),
    #[error("invalid size profile: {0}")]
    InvalidProfile(&'static str),
    #[error("malformed: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// The only two ways processing can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum ProcessError {
    /// ⊤: the header did not authenticate or its routing did not parse.
    #[error("header rejected")]
    HeaderFailure,
    /// ⊥: the header was fine but the payload was not.
    #[error("payload rejected")]
    PayloadFailure,
}

impl ProcessError {
    pub fn symbol(self) -> &'static str {
        match self {
            ProcessError::HeaderFailure => "⊤",
            ProcessError::PayloadFailure => "⊥",
        }
    }
}
