//! Outfox: a layered-encryption packet format with pluggable KEMs, plus a
//! desk-scale layered mixnet that exercises requests, anonymous replies,
//! forwarding and tamper detection on top of it.

pub mod crypto;
pub mod metrics;
pub mod packet;
pub mod directory;
pub mod mixnet;
pub mod transport;
pub mod vectors;
