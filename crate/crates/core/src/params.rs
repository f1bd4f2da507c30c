use crate::error::{Error, Result};

/// The triple (gamma, p, omega) fixing the equation and the standing-wave frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Delta strength; negative means repulsive.
    pub gamma: f64,
    /// Nonlinearity power.
    pub p: f64,
    /// Standing-wave frequency.
    pub omega: f64,
}

impl ModelParams {
    /// Validated constructor: gamma < 0, p > 5, omega > 0.
    pub fn new(gamma: f64, p: f64, omega: f64) -> Result<Self> {
        let params = Self { gamma, p, omega };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma < 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be negative (got {})", self.gamma)));
        }
        if !(self.p.is_finite() && self.p > 5.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 5 (got {})", self.p)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive (got {})", self.omega)));
        }
        Ok(())
    }

    /// gamma^2 / 4, the frequency below which no ground state exists.
    pub fn omega_threshold(&self) -> f64 {
        0.25 * self.gamma * self.gamma
    }

    pub fn has_ground_state(&self) -> bool {
        self.omega > self.omega_threshold()
    }

    /// Coefficient c in u'(0+) = c u(0).
    pub fn robin_coefficient(&self) -> f64 {
        -0.5 * self.gamma
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }
}
