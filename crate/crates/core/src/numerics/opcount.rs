//! Thread-local operation counters.
//!
//! Dense products routed through the crate's matmul helpers add `m·k·n`
//! multiply-accumulates; sketch applications add one per input entry read.
//! Counters are per thread, so concurrent estimators do not disturb each
//! other's tallies.

use std::cell::Cell;

thread_local! {
    static MACS: Cell<u64> = const { Cell::new(0) };
    static SKETCH_READS: Cell<u64> = const { Cell::new(0) };
}

pub(crate) fn record_macs(n: usize) {
    MACS.with(|c| c.set(c.get() + n as u64));
}

pub(crate) fn record_sketch_reads(n: usize) {
    SKETCH_READS.with(|c| c.set(c.get() + n as u64));
}

/// Snapshot of both counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCount {
    pub dense_macs: u64,
    pub sketch_reads: u64,
}

pub fn reset() {
    MACS.with(|c| c.set(0));
    SKETCH_READS.with(|c| c.set(0));
}

pub fn snapshot() -> OpCount {
    OpCount {
        dense_macs: MACS.with(Cell::get),
        sketch_reads: SKETCH_READS.with(Cell::get),
    }
}

/// Runs `f` with fresh counters and returns its result with the tally.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCount) {
    let saved = snapshot();
    reset();
    let out = f();
    let counted = snapshot();
    MACS.with(|c| c.set(saved.dense_macs + counted.dense_macs));
    SKETCH_READS.with(|c| c.set(saved.sketch_reads + counted.sketch_reads));
    (out, counted)
}
