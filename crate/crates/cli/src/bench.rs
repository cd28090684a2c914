use std::time::Instant;

use outfox_core::crypto::KemSuite;
use outfox_core::metrics::{self, OpCounts};
use outfox_core::packet::{PacketError, PacketFormat, PartyId, RouteHop, RoutingInfo};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::Serialize;

/// Timings in microseconds per call, plus the KEM operations one create and
/// one process call performed.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub suite: KemSuite,
    pub layers: usize,
    pub iterations: u32,
    pub keygen_us: f64,
    pub encap_us: f64,
    pub decap_us: f64,
    pub create_us: f64,
    pub process_us: f64,
    pub create_ops: OpCounts,
    pub process_ops: OpCounts,
}

impl BenchRow {
    /// Creation costs one encapsulation per layer and no decapsulation;
    /// processing costs exactly one decapsulation; processing is faster.
    pub fn passed(&self) -> bool {
        self.create_ops.kem_encap == self.layers as u64
            && self.create_ops.kem_decap == 0
            && self.process_ops.kem_decap == 1
            && self.process_ops.kem_encap == 0
            && self.process_us < self.create_us
    }
}

fn mean_us<T>(iterations: u32, mut f: impl FnMut() -> T) -> f64 {
    let start = Instant::now();
    for _ in 0..iterations {
        std::hint::black_box(f());
    }
    start.elapsed().as_secs_f64() * 1e6 / f64::from(iterations)
}

pub fn bench(suite: KemSuite, layers: usize, msg_len: usize, iterations: u32) -> Result<BenchRow, PacketError> {
    let iterations = iterations.max(1);
    let mut rng = ChaCha20Rng::seed_from_u64(0x0f0f);
    let fmt = PacketFormat::new(suite, 128, layers, msg_len, b"bench".to_vec())?;
    let keys: Vec<_> = (0..layers).map(|_| suite.generate(&mut rng)).collect();
    let ids: Vec<_> = (0..layers).map(|i| PartyId::from_label(&format!("bench-{i}"))).collect();
    let mut route: Vec<RouteHop> = (0..layers)
        .map(|i| {
            let routing = ids.get(i + 1).map_or(RoutingInfo::None, |n| RoutingInfo::next_hop(*n));
            RouteHop::new(ids[i], keys[i].public(), routing)
        })
        .collect();
    let receiver = route.pop().expect("at least one layer");
    let msg = vec![0x42; msg_len];

    let keygen_us = mean_us(iterations, || suite.generate(&mut rng));
    let encap_us = mean_us(iterations, || suite.encapsulate(keys[0].public(), &mut rng));
    let (_, ct) = suite.encapsulate(keys[0].public(), &mut rng)?;
    let decap_us = mean_us(iterations, || keys[0].decapsulate(&ct));

    let (packet, create_ops) = metrics::measure(|| fmt.create_packet(&route, &msg, &receiver, None, &mut rng));
    let packet = packet?;
    let create_us = mean_us(iterations, || fmt.create_packet(&route, &msg, &receiver, None, &mut rng));

    let last = layers == 1;
    let (outcome, process_ops) = metrics::measure(|| fmt.process_packet(&keys[0], &packet, last));
    if outcome.is_err() {
        return Err(PacketError::Malformed("benchmark packet failed to process"));
    }
    let process_us = mean_us(iterations, || fmt.process_packet(&keys[0], &packet, last));

    Ok(BenchRow {
        suite,
        layers,
        iterations,
        keygen_us,
        encap_us,
        decap_us,
        create_us,
        process_us,
        create_ops,
        process_ops,
    })
}
