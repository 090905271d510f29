use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::units::{self, Unit};

/// Manually advanced clock in microseconds, shareable across threads.
#[derive(Debug, Clone, Default)]
pub struct VirtualClock(Arc<AtomicI64>);

impl VirtualClock {
    pub fn new(start_us: i64) -> Self {
        Self(Arc::new(AtomicI64::new(start_us)))
    }

    pub fn now(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }

    /// Moves the clock to `t_us`; never moves it backwards.
    pub fn set(&self, t_us: i64) {
        self.0.fetch_max(t_us, Ordering::SeqCst);
    }

    pub fn advance(&self, dt_us: i64) {
        self.0.fetch_add(dt_us.max(0), Ordering::SeqCst);
    }
}

#[derive(Debug, Clone)]
enum Clock {
    System,
    Virtual(VirtualClock),
}

/// The model's notion of "now", in microseconds since the Unix epoch.
#[derive(Debug)]
pub struct TimeService {
    clock: Clock,
    last: AtomicI64,
}

impl Default for TimeService {
    fn default() -> Self {
        Self::system()
    }
}

impl TimeService {
    pub fn system() -> Self {
        Self {
            clock: Clock::System,
            last: AtomicI64::new(i64::MIN),
        }
    }

    pub fn virtual_clock(clock: VirtualClock) -> Self {
        Self {
            clock: Clock::Virtual(clock),
            last: AtomicI64::new(i64::MIN),
        }
    }

    pub fn unit(&self) -> Unit {
        units::microsecond()
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self.clock, Clock::Virtual(_))
    }

    pub fn virtual_handle(&self) -> Option<VirtualClock> {
        match &self.clock {
            Clock::Virtual(c) => Some(c.clone()),
            Clock::System => None,
        }
    }

    /// Current time; never earlier than a previously returned value.
    pub fn now(&self) -> i64 {
        let raw = match &self.clock {
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_micros() as i64)
                .unwrap_or(0),
            Clock::Virtual(c) => c.now(),
        };
        let prev = self.last.fetch_max(raw, Ordering::SeqCst);
        prev.max(raw)
    }
}
