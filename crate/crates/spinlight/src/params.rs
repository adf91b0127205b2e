//! Model parameters for the driven-dissipative collective spin ensemble.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Parameters of the collective spin model and of the measurement protocols
/// built on top of it.
///
/// `kappa` sets the unit of time. The critical Rabi frequency
/// `omega_c = N * kappa / 2` is always derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of two-level emitters (N >= 1).
    pub n: usize,
    /// Rabi frequency of the collective drive, in units of `kappa`.
    pub omega: f64,
    /// Collective decay rate; must be positive.
    pub kappa: f64,
    /// Phase difference between source and decoder imprints,
    /// `dphi = phi - phi'`, in (-pi, pi].
    pub dphi: f64,
    /// Homodyne offset `phi - beta`, in (-pi, pi].
    pub phase_offset: f64,
    /// Counting/homodyne bias used by tilted and deformed generators.
    pub s: f64,
}

impl ModelParams {
    /// Construct parameters with all phases and biases zero.
    pub fn new(n: usize, omega: f64, kappa: f64) -> Result<Self> {
        let params = Self {
            n,
            omega,
            kappa,
            dphi: 0.0,
            phase_offset: 0.0,
            s: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Construct from the ratio `omega / omega_c`, with `omega_c = N kappa / 2`.
    pub fn from_omega_ratio(n: usize, ratio: f64, kappa: f64) -> Result<Self> {
        if !(ratio >= 0.0) {
            return Err(Error::InvalidParams {
                field: "omega_over_omega_c",
                reason: format!("must be >= 0, got {ratio}"),
            });
        }
        Self::new(n, ratio * (n as f64) * kappa / 2.0, kappa)
    }

    /// Set the source-decoder phase difference.
    pub fn with_dphi(mut self, dphi: f64) -> Result<Self> {
        self.dphi = dphi;
        self.validate()?;
        Ok(self)
    }

    /// Set the homodyne offset `phi - beta`.
    pub fn with_phase_offset(mut self, phase_offset: f64) -> Result<Self> {
        self.phase_offset = phase_offset;
        self.validate()?;
        Ok(self)
    }

    /// Set the counting/homodyne bias.
    pub fn with_bias(mut self, s: f64) -> Result<Self> {
        self.s = s;
        self.validate()?;
        Ok(self)
    }

    /// Critical Rabi frequency `omega_c = N kappa / 2`.
    pub fn omega_c(&self) -> f64 {
        (self.n as f64) * self.kappa / 2.0
    }

    /// Drive strength relative to the critical frequency.
    pub fn omega_ratio(&self) -> f64 {
        self.omega / self.omega_c()
    }

    /// Hilbert dimension of the single-ensemble sector, `N + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Hilbert dimension of the source-decoder product space, `(N + 1)^2`.
    pub fn cascaded_dim(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Check all field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams {
                field: "n",
                reason: "number of emitters must be >= 1".into(),
            });
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParams {
                field: "kappa",
                reason: format!("decay rate must be > 0, got {}", self.kappa),
            });
        }
        if !(self.omega >= 0.0) {
            return Err(Error::InvalidParams {
                field: "omega",
                reason: format!("Rabi frequency must be >= 0, got {}", self.omega),
            });
        }
        if !self.dphi.is_finite() || self.dphi <= -PI || self.dphi > PI {
            return Err(Error::InvalidParams {
                field: "dphi",
                reason: format!("phase difference must lie in (-pi, pi], got {}", self.dphi),
            });
        }
        if !self.phase_offset.is_finite()
            || self.phase_offset <= -PI
            || self.phase_offset > PI
        {
            return Err(Error::InvalidParams {
                field: "phase_offset",
                reason: format!(
                    "homodyne offset must lie in (-pi, pi], got {}",
                    self.phase_offset
                ),
            });
        }
        if !self.s.is_finite() {
            return Err(Error::InvalidParams {
                field: "s",
                reason: "bias must be finite".into(),
            });
        }
        Ok(())
    }
}
