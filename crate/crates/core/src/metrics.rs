//! Per-thread operation counters.
//!
//! Every KEM call and every packet-processing call bumps a counter here, so
//! tests and the bench report can assert exact operation counts without
//! threading an instrumentation handle through the APIs. Counters are
//! thread-local: parallel test threads never observe each other's work.

use std::cell::Cell;

use serde::Serialize;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub kem_keygen: u64,
    pub kem_encap: u64,
    pub kem_decap: u64,
    pub packet_process: u64,
}

impl OpCounts {
    /// Counts accumulated since `earlier` was taken.
    pub fn since(self, earlier: OpCounts) -> OpCounts {
        OpCounts {
            kem_keygen: self.kem_keygen - earlier.kem_keygen,
            kem_encap: self.kem_encap - earlier.kem_encap,
            kem_decap: self.kem_decap - earlier.kem_decap,
            packet_process: self.packet_process - earlier.packet_process,
        }
    }
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts {
        kem_keygen: 0,
        kem_encap: 0,
        kem_decap: 0,
        packet_process: 0,
    }) };
}

pub fn snapshot() -> OpCounts {
    COUNTS.with(Cell::get)
}

/// Runs `f` and returns its result together with the operations it performed.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCounts) {
    let before = snapshot();
    let out = f();
    (out, snapshot().since(before))
}

pub(crate) fn bump(update: impl FnOnce(&mut OpCounts)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        update(&mut v);
        c.set(v);
    });
}
