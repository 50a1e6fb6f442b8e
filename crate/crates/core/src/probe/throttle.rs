use std::time::{Duration, Instant};

/// Token-bucket rate limiter for a byte stream. Starts empty, so the
/// long-run rate never exceeds the configured one.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    bytes_per_s: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(mbps: f64) -> Self {
        TokenBucket { bytes_per_s: mbps * 1e6 / 8.0, tokens: 0.0, last: Instant::now() }
    }

    fn refill(&mut self) {
        let now = Instant::now();
        self.tokens += now.duration_since(self.last).as_secs_f64() * self.bytes_per_s;
        self.last = now;
    }

    /// Blocks until `n` bytes may be sent, then spends them.
    pub fn acquire(&mut self, n: usize) {
        self.refill();
        let need = n as f64 - self.tokens;
        if need > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(need / self.bytes_per_s));
            self.refill();
        }
        self.tokens -= n as f64;
    }
}
