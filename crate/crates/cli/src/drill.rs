use std::fmt;

use outfox_core::crypto::KemKeyPair;
use outfox_core::packet::{Packet, PacketError, PacketFormat, PartyId, ProcessError, Processed, RouteHop, RoutingInfo};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::FormatArgs;

/// How a batch of single-bit flips was received.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DrillReport {
    pub target: &'static str,
    pub trials: usize,
    /// Flips rejected with ⊤ by the first hop after the flip.
    pub header_failures: usize,
    /// Flips rejected with ⊥ by the final receiver.
    pub payload_failures: usize,
    /// ⊤ from an intermediate hop on a payload-only flip.
    pub intermediate_header_failures: usize,
    /// Flips that were delivered anyway.
    pub undetected: usize,
}

impl DrillReport {
    pub fn all_detected(&self) -> bool {
        self.undetected == 0
            && match self.target {
                "header" => self.header_failures == self.trials,
                _ => self.payload_failures == self.trials && self.intermediate_header_failures == 0,
            }
    }
}

impl fmt::Display for DrillReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} drill: {} single-bit flips", self.target, self.trials)?;
        writeln!(f, "  ⊤ at the next hop        {}", self.header_failures)?;
        writeln!(f, "  ⊥ at the receiver        {}", self.payload_failures)?;
        writeln!(f, "  ⊤ at an intermediate hop {}", self.intermediate_header_failures)?;
        writeln!(f, "  undetected               {}", self.undetected)
    }
}

struct Fixture {
    fmt: PacketFormat,
    keys: Vec<KemKeyPair>,
    layers: Vec<Packet>,
}

fn fixture(args: &FormatArgs, seed: u64) -> Result<Fixture, PacketError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let fmt = PacketFormat::new(args.suite, args.k, args.layers, args.msg_len, b"drill".to_vec())?;
    let keys: Vec<KemKeyPair> = (0..args.layers).map(|_| args.suite.generate(&mut rng)).collect();
    let ids: Vec<PartyId> = (0..args.layers).map(|i| PartyId::from_label(&format!("drill-{i}"))).collect();
    let mut route: Vec<RouteHop> = (0..args.layers)
        .map(|i| {
            let routing = ids.get(i + 1).map_or(RoutingInfo::None, |n| RoutingInfo::next_hop(*n));
            RouteHop::new(ids[i], keys[i].public(), routing)
        })
        .collect();
    let receiver = route.pop().expect("at least one layer");
    let msg = vec![0x33; args.msg_len];
    let layers = fmt.create_layers(&route, &msg, &receiver, None, &mut rng)?;
    Ok(Fixture { fmt, keys, layers })
}

/// Processes `packet` from layer `from` to the end. `Err` carries the layer
/// that failed.
fn walk(fx: &Fixture, from: usize, packet: Packet) -> Result<(), (usize, ProcessError)> {
    let last = fx.keys.len() - 1;
    let mut packet = packet;
    for i in from..=last {
        match fx.fmt.process_packet(&fx.keys[i], &packet, i == last) {
            Ok(Processed::Forward { packet: next, .. }) => packet = next,
            Ok(Processed::Deliver(_)) => return Ok(()),
            Err(e) => return Err((i, e)),
        }
    }
    Ok(())
}

/// Flips every bit of the outermost header, one at a time.
pub fn header_drill(args: &FormatArgs, seed: u64) -> Result<DrillReport, PacketError> {
    let fx = fixture(args, seed)?;
    let outer = &fx.layers[0];
    let header_bits = outer.header.len() * 8;
    let mut report = DrillReport { target: "header", trials: header_bits, ..Default::default() };
    let bytes = outer.to_bytes();
    for bit in 0..header_bits {
        let mut flipped = bytes.clone();
        flipped[bit / 8] ^= 1 << (bit % 8);
        let packet = Packet::from_bytes(&flipped, fx.fmt.profile())?;
        match walk(&fx, 0, packet) {
            Err((0, ProcessError::HeaderFailure)) => report.header_failures += 1,
            Err((_, ProcessError::HeaderFailure)) => report.intermediate_header_failures += 1,
            Err((_, ProcessError::PayloadFailure)) => report.payload_failures += 1,
            Ok(()) => report.undetected += 1,
        }
    }
    Ok(report)
}

/// Flips `trials` random payload bits, each entering a random hop.
pub fn payload_drill(args: &FormatArgs, trials: usize, seed: u64) -> Result<DrillReport, PacketError> {
    let fx = fixture(args, seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let mut report = DrillReport { target: "payload", trials, ..Default::default() };
    let last = fx.keys.len() - 1;
    for _ in 0..trials {
        let hop = (rng.next_u32() as usize) % fx.layers.len();
        let mut packet = fx.layers[hop].clone();
        let bit = (rng.next_u64() as usize) % (packet.payload.len() * 8);
        packet.payload.0[bit / 8] ^= 1 << (bit % 8);
        match walk(&fx, hop, packet) {
            Err((i, ProcessError::PayloadFailure)) if i == last => report.payload_failures += 1,
            Err((_, ProcessError::HeaderFailure)) => report.intermediate_header_failures += 1,
            Err(_) => report.undetected += 1,
            Ok(()) => report.undetected += 1,
        }
    }
    Ok(report)
}
