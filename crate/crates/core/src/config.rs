use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation, priors, chain length and feature options for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Number of explicit sticks; the truncated mixture has `sticks + 1` components.
    pub sticks: usize,
    pub nu0: f64,
    pub s0_sq: f64,
    pub a_rho: f64,
    pub b_rho: f64,
    pub a_zeta: f64,
    pub b_zeta: f64,
    pub burn_in: usize,
    pub keep: usize,
    pub thin: usize,
    pub seed: u64,
    pub include_pscore_in_atoms: bool,
    pub include_pscore_in_weights: bool,
    pub standardize: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sticks: 20,
            nu0: 10.0,
            s0_sq: 0.2,
            a_rho: 2.0,
            b_rho: 2.0,
            a_zeta: 2.0,
            b_zeta: 2.0,
            burn_in: 4000,
            keep: 4000,
            thin: 1,
            seed: 1,
            include_pscore_in_atoms: false,
            include_pscore_in_weights: false,
            standardize: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu0", self.nu0),
            ("s0_sq", self.s0_sq),
            ("a_rho", self.a_rho),
            ("b_rho", self.b_rho),
            ("a_zeta", self.a_zeta),
            ("b_zeta", self.b_zeta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.keep == 0 {
            return Err(Error::InvalidConfig("keep must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        Ok(())
    }

    pub fn uses_pscore(&self) -> bool {
        self.include_pscore_in_atoms || self.include_pscore_in_weights
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.keep * self.thin
    }
}
