use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::two_mode::SequenceSpec;

/// Default Rabi frequency of the coupling pulses, rad/s.
pub const DEFAULT_RABI_FREQUENCY: f64 = 5.0e4;

/// Real-time coupling schedule. The coupling is `Ω₀` on `[t0, t1]`,
/// off on `[t1, t2]` and `Ω₀e^{iφ}` on `[t2, t3]`. Times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// rad/s
    pub omega0: f64,
    /// rad
    pub phi2: f64,
}

impl PulseSchedule {
    /// Pulses of areas `theta1`, `theta2` at Rabi frequency `omega0`,
    /// starting at zero.
    pub fn from_areas(theta1: f64, theta2: f64, omega0: f64, t_hold: f64, phi2: f64) -> Result<Self> {
        ensure_positive("omega0", omega0)?;
        let t1 = theta1 / omega0;
        let t2 = t1 + t_hold;
        let s = PulseSchedule {
            t0: 0.0,
            t1,
            t2,
            t3: t2 + theta2 / omega0,
            omega0,
            phi2,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_sequence(seq: &SequenceSpec, omega0: f64) -> Result<Self> {
        seq.validate()?;
        Self::from_areas(seq.theta1, seq.theta2, omega0, seq.t_hold, seq.phi)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t0", self.t0), ("t1", self.t1), ("t2", self.t2), ("t3", self.t3)] {
            ensure_finite(name, t)?;
        }
        ensure_finite("omega0", self.omega0)?;
        ensure_finite("phi2", self.phi2)?;
        if !(self.t0 <= self.t1 && self.t1 <= self.t2 && self.t2 <= self.t3) {
            return Err(Error::param("schedule", "times must satisfy t0 <= t1 <= t2 <= t3"));
        }
        Ok(())
    }

    pub fn theta1(&self) -> f64 {
        self.omega0 * (self.t1 - self.t0)
    }

    pub fn theta2(&self) -> f64 {
        self.omega0 * (self.t3 - self.t2)
    }

    pub fn t_hold(&self) -> f64 {
        self.t2 - self.t1
    }

    /// Instantaneous-pulse sequence with the same areas and hold.
    pub fn sequence(&self) -> Result<SequenceSpec> {
        SequenceSpec::new(self.theta1(), self.theta2(), self.phi2, self.t_hold())
    }

    pub fn with_phi(&self, phi2: f64) -> Self {
        PulseSchedule { phi2, ..*self }
    }
}
