//! Streams a generated 100 MB dump through the reader while a counting
//! allocator tracks the peak live heap.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::io::BufReader;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use traitleak::ingest::WikiDumpReader;
use traitleak::model::TimeGrid;

use common::dumpgen::{DumpGen, DumpStream};
use common::rng;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

const TARGET: u64 = 100 * 1024 * 1024;
/// Heap growth allowed while parsing, independent of dump size.
const MEMORY_CAP: usize = 16 * 1024 * 1024;

#[test]
fn hundred_megabyte_dump_streams_under_a_memory_cap() {
    let frames = 26;
    let stream = DumpStream::new(DumpGen::new(rng(9)), frames, TARGET);
    let baseline = LIVE.load(Ordering::Relaxed);
    PEAK.store(baseline, Ordering::Relaxed);

    let start = Instant::now();
    let mut reader = WikiDumpReader::new(BufReader::with_capacity(1 << 16, stream), TimeGrid::default(), None);
    let mut events = 0u64;
    for ev in reader.by_ref() {
        ev.unwrap();
        events += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let peak = PEAK.load(Ordering::Relaxed) - baseline;
    let report = reader.report().clone();
    assert!(report.is_conserved());
    assert_eq!(report.events_emitted, events);
    let mb = TARGET as f64 / (1024.0 * 1024.0);
    println!(
        "streamed {mb:.0} MB, {} revisions, {events} events in {elapsed:.2} s ({:.1} MB/s), peak heap growth {:.2} MB",
        report.revisions_scanned,
        mb / elapsed,
        peak as f64 / (1024.0 * 1024.0)
    );
    assert!(peak <= MEMORY_CAP, "peak heap growth {peak} bytes exceeds the cap");
}
