//! Request pacing: at most N request starts per minute, evenly spaced.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug)]
pub struct RateLimiter {
    interval: Option<Duration>,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `0` means unlimited.
    pub fn per_minute(requests: u32) -> Self {
        let interval = (requests > 0).then(|| Duration::from_secs(60) / requests);
        RateLimiter {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    /// Blocks until the caller may start a request. The slot is reserved under
    /// the lock; the wait happens outside it.
    pub fn acquire(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let wait = {
            let mut next = self.next_slot.lock().expect("limiter poisoned");
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}
