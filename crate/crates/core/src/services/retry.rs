//! Clock abstraction, jittered exponential backoff and the sliding-window
//! rate limiter.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Test clock: `sleep` advances time instantly and is logged.
#[derive(Debug, Default)]
pub struct ManualClock {
    state: Mutex<(Duration, Vec<Duration>)>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        self.state.lock().unwrap().0 += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().unwrap().1.clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.state.lock().unwrap().0
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().unwrap();
        s.0 += d;
        s.1.push(d);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackoffPolicy {
    pub base: Duration,
    pub factor: f64,
    pub cap: Duration,
}

impl Default for BackoffPolicy {
    fn default() -> Self {
        Self {
            base: Duration::from_millis(500),
            factor: 2.0,
            cap: Duration::from_secs(30),
        }
    }
}

impl BackoffPolicy {
    /// Un-jittered delay before retry number `retry` (0-based).
    pub fn ceiling(&self, retry: u32) -> Duration {
        let secs = self.base.as_secs_f64() * self.factor.powi(retry.min(64) as i32);
        Duration::from_secs_f64(secs.min(self.cap.as_secs_f64()))
    }
}

/// Equal-jitter backoff: each delay is uniform in `[ceiling/2, ceiling]`.
#[derive(Debug)]
pub struct Backoff {
    policy: BackoffPolicy,
    rng: Mutex<ChaCha8Rng>,
}

impl Backoff {
    pub fn new(policy: BackoffPolicy, seed: u64) -> Self {
        Self {
            policy,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn delay(&self, retry: u32) -> Duration {
        let ceiling = self.policy.ceiling(retry).as_secs_f64();
        let u: f64 = self.rng.lock().unwrap().random();
        Duration::from_secs_f64(ceiling / 2.0 + u * ceiling / 2.0)
    }
}

pub const RATE_WINDOW: Duration = Duration::from_secs(60);

/// At most `per_minute` acquisitions in any sliding 60 s window.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: u32,
    dispatched: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(per_minute: u32) -> Self {
        Self {
            per_minute,
            dispatched: Mutex::new(VecDeque::new()),
        }
    }

    /// Block until a slot is free, then take it. Returns the dispatch time.
    pub fn acquire(&self, clock: &dyn Clock) -> Duration {
        if self.per_minute == 0 {
            return clock.now();
        }
        loop {
            let wait = {
                let mut q = self.dispatched.lock().unwrap();
                let now = clock.now();
                while q.front().is_some_and(|t| now.saturating_sub(*t) >= RATE_WINDOW) {
                    q.pop_front();
                }
                if q.len() < self.per_minute as usize {
                    q.push_back(now);
                    return now;
                }
                (q[0] + RATE_WINDOW).saturating_sub(now)
            };
            clock.sleep(wait.max(Duration::from_millis(1)));
        }
    }
}
