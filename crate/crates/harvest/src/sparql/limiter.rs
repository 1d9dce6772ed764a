use std::sync::Arc;
use std::time::Duration;

use tokio::sync::{Mutex, OwnedSemaphorePermit, Semaphore};
use tokio::time::Instant;

const ARRIVAL_GUARD: Duration = Duration::from_millis(1);

/// Per-endpoint admission control: a minimum spacing between consecutive
/// request starts plus a cap on requests in flight.
///
/// Admission slots are handed out in order under a mutex, so concurrent
/// callers queue up behind each other instead of bunching. Each slot carries
/// a small guard on top of the interval: the spacing that matters is the one
/// the server observes, and connection setup can shift a request's arrival
/// by a fraction of a millisecond relative to its neighbours.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    next_slot: Mutex<Option<Instant>>,
    in_flight: Arc<Semaphore>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration, max_in_flight: usize) -> Self {
        RateLimiter {
            min_interval,
            next_slot: Mutex::new(None),
            in_flight: Arc::new(Semaphore::new(max_in_flight.max(1))),
        }
    }

    /// Waits for an in-flight permit and then for this caller's time slot.
    /// The request must be sent while the permit is held.
    pub async fn admit(&self) -> OwnedSemaphorePermit {
        let permit = Arc::clone(&self.in_flight)
            .acquire_owned()
            .await
            .expect("limiter semaphore is never closed");
        let slot = {
            let mut next = self.next_slot.lock().await;
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            let spacing = if self.min_interval.is_zero() {
                Duration::ZERO
            } else {
                self.min_interval + ARRIVAL_GUARD
            };
            *next = Some(slot + spacing);
            slot
        };
        tokio::time::sleep_until(slot).await;
        permit
    }

    pub fn min_interval(&self) -> Duration {
        self.min_interval
    }
}
