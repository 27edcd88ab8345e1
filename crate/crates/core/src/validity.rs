//! Domain of validity: the shrinking region that particles started outside the
//! truncated domain cannot have reached.

use crate::error::{Error, Result};
use crate::model::lattice_coordinate;

/// Valid region at a given step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Validity {
    Interval { lo: f64, hi: f64 },
    Exhausted,
}

impl Validity {
    pub fn half_width(&self) -> f64 {
        match *self {
            Validity::Interval { hi, .. } => hi,
            Validity::Exhausted => 0.0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Validity::Interval { lo, hi } => lo <= x && x <= hi,
            Validity::Exhausted => false,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, Validity::Exhausted)
    }
}

/// Running sum `P^n` of the per-step maximum speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityTracker {
    speeds: Vec<f64>,
    cumulative: f64,
    initial_half_length: f64,
    dt: f64,
}

impl ValidityTracker {
    pub fn new(initial_half_length: f64, dt: f64) -> Self {
        ValidityTracker {
            speeds: Vec::new(),
            cumulative: 0.0,
            initial_half_length,
            dt,
        }
    }

    pub fn record_step(&mut self, speed: f64) {
        debug_assert!(speed >= 0.0);
        self.speeds.push(speed);
        self.cumulative += speed;
    }

    pub fn speed_history(&self) -> &[f64] {
        &self.speeds
    }

    /// `P^n`.
    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn initial_half_length(&self) -> f64 {
        self.initial_half_length
    }

    /// `[-L + P dt, L - P dt]`, or `Exhausted` once `P dt >= L`.
    pub fn valid_interval(&self) -> Validity {
        interval_for(self.initial_half_length, self.cumulative * self.dt)
    }

    /// Earliest `t^n` at which `[-I, I]` is no longer inside the valid interval.
    ///
    /// Step `n` is the one whose interval uses the first `n + 1` recorded speeds.
    pub fn validity_time(&self, monitor_half_width: f64) -> Result<Option<f64>> {
        if monitor_half_width > self.initial_half_length {
            return Err(Error::MonitorTooWide {
                half_width: monitor_half_width,
                half_length: self.initial_half_length,
            });
        }
        let mut p = 0.0;
        for (n, s) in self.speeds.iter().enumerate() {
            p += s;
            if self.initial_half_length - p * self.dt < monitor_half_width {
                return Ok(Some(lattice_coordinate(n as i64, self.dt)));
            }
        }
        Ok(None)
    }
}

fn interval_for(half_length: f64, shrink: f64) -> Validity {
    let hi = half_length - shrink;
    if hi <= 0.0 {
        Validity::Exhausted
    } else {
        Validity::Interval { lo: -hi, hi }
    }
}
