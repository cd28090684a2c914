//! Browser bindings for the packet format.
//!
//! Each export takes plain values and returns a JSON string. Failures come
//! back as `{"error": "..."}` so the page never has to catch.

use outfox_core::crypto::{KemKeyPair, KemSuite};
use outfox_core::packet::{
    layer_sizes, Packet, PacketFormat, PartyId, ProcessError, Processed, RouteHop, RoutingInfo, SizeProfile,
};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

/// Message capacity of the peel and tamper demos, in bytes.
pub const DEMO_MSG_LEN: usize = 64;
const K: usize = 128;

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn suite(name: &str) -> Result<KemSuite, String> {
    name.parse().map_err(|e| format!("{e}"))
}

/// Per-layer sizes in bytes for a suite, layer count and message length.
#[wasm_bindgen]
pub fn sizes(suite_name: &str, layers: usize, msg_len: usize) -> String {
    respond((|| {
        let s = suite(suite_name)?;
        let profile = SizeProfile::for_suite(s, K, layers, msg_len).map_err(|e| e.to_string())?;
        Ok(json!({
            "suite": s.name(),
            "layers": layers,
            "msg_len": msg_len,
            "kem_ciphertext": s.ciphertext_len(),
            "surb": profile.surb_len(),
            "payload": profile.payload_len(),
            "per_layer": layer_sizes(&profile),
        }))
    })())
}

struct Demo {
    fmt: PacketFormat,
    keys: Vec<KemKeyPair>,
    labels: Vec<String>,
    layers: Vec<Packet>,
}

fn demo(suite_name: &str, layers: usize, message: &str, seed: u32) -> Result<Demo, String> {
    let s = suite(suite_name)?;
    if message.len() > DEMO_MSG_LEN {
        return Err(format!("message is {} bytes, at most {DEMO_MSG_LEN} fit", message.len()));
    }
    let fmt = PacketFormat::new(s, K, layers, DEMO_MSG_LEN, b"outfox-web".to_vec()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(u64::from(seed));
    let keys: Vec<KemKeyPair> = (0..layers).map(|_| s.generate(&mut rng)).collect();
    let labels: Vec<String> = (0..layers)
        .map(|i| if i + 1 == layers { "receiver".to_string() } else { format!("hop-{}", i + 1) })
        .collect();
    let ids: Vec<PartyId> = labels.iter().map(|l| PartyId::from_label(l)).collect();
    let mut route: Vec<RouteHop> = (0..layers)
        .map(|i| {
            let routing = ids.get(i + 1).map_or(RoutingInfo::None, |n| RoutingInfo::next_hop(*n));
            RouteHop::new(ids[i], keys[i].public(), routing)
        })
        .collect();
    let receiver = route.pop().ok_or("at least one layer")?;
    let mut msg = message.as_bytes().to_vec();
    msg.resize(DEMO_MSG_LEN, 0);
    let packets = fmt.create_layers(&route, &msg, &receiver, None, &mut rng).map_err(|e| e.to_string())?;
    Ok(Demo { fmt, keys, labels, layers: packets })
}

fn preview(bytes: &[u8]) -> String {
    hex::encode(&bytes[..bytes.len().min(12)])
}

fn text(msg: &[u8]) -> String {
    let end = msg.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    String::from_utf8_lossy(&msg[..end]).into_owned()
}

/// Runs `packet` from hop `from` to the receiver, one trace row per hop.
fn walk(d: &Demo, from: usize, packet: Packet) -> Vec<serde_json::Value> {
    let last = d.keys.len() - 1;
    let mut packet = packet;
    let mut trace = Vec::new();
    for i in from..=last {
        let header = &packet.header;
        let mut row = json!({
            "hop": i,
            "party": d.labels[i],
            "packet_len": packet.len(),
            "header_len": header.len(),
            "payload_len": packet.payload.len(),
            "c": preview(&header.kem_ciphertext),
            "beta": preview(&header.aead_ciphertext),
            "gamma": hex::encode(&header.tag),
        });
        match d.fmt.process_packet(&d.keys[i], &packet, i == last) {
            Ok(Processed::Forward { packet: next, next_hop }) => {
                row["outcome"] = "forward".into();
                row["next"] = d.labels.get(i + 1).map_or_else(|| next_hop.to_hex(), Clone::clone).into();
                trace.push(row);
                packet = next;
            }
            Ok(Processed::Deliver(delivery)) => {
                row["outcome"] = "deliver".into();
                row["message"] = text(&delivery.message).into();
                trace.push(row);
                break;
            }
            Err(e) => {
                row["outcome"] = e.symbol().into();
                trace.push(row);
                break;
            }
        }
    }
    trace
}

/// Builds a packet for `message` and removes its layers one hop at a time.
#[wasm_bindgen]
pub fn peel(suite_name: &str, layers: usize, message: &str, seed: u32) -> String {
    respond((|| {
        let d = demo(suite_name, layers, message, seed)?;
        Ok(json!({ "suite": d.fmt.suite().name(), "layers": layers, "trace": walk(&d, 0, d.layers[0].clone()) }))
    })())
}

/// Flips one bit of the header or payload as the packet enters `hop` and
/// reports which hop notices, and how.
#[wasm_bindgen]
pub fn tamper(suite_name: &str, layers: usize, target: &str, hop: usize, bit: usize, seed: u32) -> String {
    respond((|| {
        let d = demo(suite_name, layers, "tamper demo", seed)?;
        let entering = d.layers.get(hop).ok_or_else(|| format!("hop {hop} outside 0..{layers}"))?;
        let header_bits = entering.header.len() * 8;
        let bit = match target {
            "header" => bit % header_bits,
            "payload" => header_bits + bit % (entering.payload.len() * 8),
            other => return Err(format!("unknown target {other:?}, expected header or payload")),
        };
        let mut bytes = entering.to_bytes();
        bytes[bit / 8] ^= 1 << (bit % 8);
        let packet = Packet::from_bytes(&bytes, d.fmt.profile()).map_err(|e| e.to_string())?;
        let trace = walk(&d, hop, packet);
        let verdict = trace
            .iter()
            .find_map(|row| {
                let outcome = row["outcome"].as_str()?;
                [ProcessError::HeaderFailure, ProcessError::PayloadFailure]
                    .into_iter()
                    .any(|e| e.symbol() == outcome)
                    .then(|| format!("{outcome} at {}", row["party"].as_str().unwrap_or("?")))
            })
            .unwrap_or_else(|| "undetected".to_string());
        Ok(json!({ "target": target, "hop": hop, "packet_bit": bit, "trace": trace, "verdict": verdict }))
    })())
}
