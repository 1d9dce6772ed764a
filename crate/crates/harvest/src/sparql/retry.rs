use std::collections::BTreeSet;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClientError, ErrorClass};

/// Exponential backoff schedule.
///
/// Attempt `n` (1-based) that fails with a retryable class waits
/// `base_backoff_ms * backoff_multiplier^(n-1)`, scaled by a uniform factor
/// in `[1 - jitter, 1 + jitter]`, before attempt `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub backoff_multiplier: f64,
    pub jitter: f64,
    pub retryable_classes: BTreeSet<ErrorClass>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_backoff_ms: 1000,
            backoff_multiplier: 2.0,
            jitter: 0.2,
            retryable_classes: [
                ErrorClass::Timeout,
                ErrorClass::RateLimited,
                ErrorClass::ServerError,
                ErrorClass::Network,
            ]
            .into(),
        }
    }
}

impl RetryPolicy {
    /// Default classes with a custom schedule and no jitter; handy in tests.
    pub fn fixed(max_attempts: u32, base_backoff_ms: u64, backoff_multiplier: f64) -> Self {
        RetryPolicy {
            max_attempts,
            base_backoff_ms,
            backoff_multiplier,
            jitter: 0.0,
            ..RetryPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_attempts == 0 {
            return Err(ClientError::InvalidConfig(
                "max_attempts must be at least 1".into(),
            ));
        }
        if self.base_backoff_ms == 0 {
            return Err(ClientError::InvalidConfig(
                "base_backoff_ms must be positive".into(),
            ));
        }
        if !(self.backoff_multiplier >= 1.0 && self.backoff_multiplier.is_finite()) {
            return Err(ClientError::InvalidConfig(
                "backoff_multiplier must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(ClientError::InvalidConfig(
                "jitter must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn is_retryable(&self, class: ErrorClass) -> bool {
        self.retryable_classes.contains(&class)
    }

    /// Un-jittered wait after failed attempt `attempt` (1-based).
    pub fn nominal_backoff(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1).min(62) as i32;
        let ms = self.base_backoff_ms as f64 * self.backoff_multiplier.powi(exp);
        Duration::from_secs_f64((ms / 1000.0).min(3600.0))
    }

    pub fn backoff<R: Rng + ?Sized>(&self, attempt: u32, rng: &mut R) -> Duration {
        let nominal = self.nominal_backoff(attempt);
        if self.jitter == 0.0 {
            return nominal;
        }
        let factor = rng.random_range((1.0 - self.jitter)..=(1.0 + self.jitter));
        nominal.mul_f64(factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn nominal_schedule_doubles() {
        let p = RetryPolicy::default();
        let waits: Vec<u128> = (1..=4).map(|n| p.nominal_backoff(n).as_millis()).collect();
        assert_eq!(waits, vec![1000, 2000, 4000, 8000]);
    }

    #[test]
    fn jitter_stays_within_twenty_percent() {
        let p = RetryPolicy::default();
        let mut rng = StdRng::seed_from_u64(7);
        for n in 1..=5 {
            let nominal = p.nominal_backoff(n).as_secs_f64();
            for _ in 0..200 {
                let w = p.backoff(n, &mut rng).as_secs_f64();
                assert!(w >= nominal * 0.8 - 1e-9 && w <= nominal * 1.2 + 1e-9);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(RetryPolicy::default().validate().is_ok());
        assert!(RetryPolicy::fixed(0, 10, 2.0).validate().is_err());
        assert!(RetryPolicy::fixed(3, 10, 0.5).validate().is_err());
        assert!(RetryPolicy::fixed(3, 0, 2.0).validate().is_err());
    }
}
