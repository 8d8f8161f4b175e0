use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// Milliseconds since the session started.
pub trait Clock: Send + Sync + std::fmt::Debug {
    fn now_ms(&self) -> u64;
}

#[derive(Debug)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

/// Advances one millisecond per reading, so logs are reproducible.
#[derive(Debug, Default)]
pub struct LogicalClock {
    ticks: AtomicU64,
}

impl Clock for LogicalClock {
    fn now_ms(&self) -> u64 {
        self.ticks.fetch_add(1, Ordering::Relaxed)
    }
}
