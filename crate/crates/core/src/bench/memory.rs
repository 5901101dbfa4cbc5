//! Peak resident-set sampling from procfs.

use std::fs;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

const SAMPLE_PERIOD: Duration = Duration::from_millis(50);

/// `VmRSS` or `VmHWM` of this process in KiB.
fn status_kib(field: &str) -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find(|l| l.starts_with(field))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}

/// Resets the kernel's peak-RSS counter; false where unsupported.
fn reset_peak() -> bool {
    fs::write("/proc/self/clear_refs", "5").is_ok()
}

/// Samples resident memory at 20 Hz on a background thread.
pub struct PeakSampler {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<u64>>,
    hwm_reset: bool,
}

impl PeakSampler {
    pub fn start() -> Self {
        let hwm_reset = reset_peak();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            let mut peak = status_kib("VmRSS:").unwrap_or(0);
            while !flag.load(Ordering::Relaxed) {
                std::thread::sleep(SAMPLE_PERIOD);
                peak = peak.max(status_kib("VmRSS:").unwrap_or(0));
            }
            peak
        });
        Self {
            stop,
            handle: Some(handle),
            hwm_reset,
        }
    }

    /// Peak resident set in MiB over the sampled interval.
    pub fn finish(mut self) -> f64 {
        self.stop.store(true, Ordering::Relaxed);
        let mut peak = self.handle.take().and_then(|h| h.join().ok()).unwrap_or(0);
        peak = peak.max(status_kib("VmRSS:").unwrap_or(0));
        if self.hwm_reset {
            peak = peak.max(status_kib("VmHWM:").unwrap_or(0));
        }
        peak as f64 / 1024.0
    }
}

impl Drop for PeakSampler {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
    }
}
