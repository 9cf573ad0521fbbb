//! Ideal-gas closures.
//!
//! With specific entropy `s`, the pressure is `p = κ ρ^γ exp(s / c_v)`; with
//! total energy density `E` it is `p = (γ-1)(E - |m|²/2ρ)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosParams {
    gamma: f64,
    cv: f64,
    kappa: f64,
}

impl Default for EosParams {
    /// `γ = 1.4`, `c_v = 2.5`, `κ = 1`.
    fn default() -> Self {
        Self { gamma: 1.4, cv: 2.5, kappa: 1.0 }
    }
}

fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain { quantity, value })
    }
}

impl EosParams {
    pub fn new(gamma: f64, cv: f64, kappa: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
        }
        positive("c_v", cv)?;
        positive("kappa", kappa)?;
        Ok(Self { gamma, cv, kappa })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cv(&self) -> f64 {
        self.cv
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn pressure_from_entropy(&self, rho: f64, s: f64) -> Result<f64> {
        positive("density", rho)?;
        Ok(self.p_rho_s(rho, s))
    }

    pub fn entropy_from_pressure(&self, rho: f64, p: f64) -> Result<f64> {
        positive("density", rho)?;
        positive("pressure", p)?;
        Ok(self.cv * (p / (self.kappa * rho.powf(self.gamma))).ln())
    }

    /// Negative results are returned as-is; positivity is the caller's call.
    pub fn pressure_from_energy(&self, rho: f64, momentum: [f64; 2], energy: f64) -> Result<f64> {
        positive("density", rho)?;
        Ok(self.p_energy(rho, momentum, energy))
    }

    pub fn energy_from_pressure(&self, rho: f64, momentum: [f64; 2], p: f64) -> Result<f64> {
        positive("density", rho)?;
        let m2 = momentum[0] * momentum[0] + momentum[1] * momentum[1];
        Ok(p / (self.gamma - 1.0) + 0.5 * m2 / rho)
    }

    pub fn sound_speed(&self, rho: f64, p: f64) -> Result<f64> {
        positive("density", rho)?;
        positive("pressure", p)?;
        Ok(self.c(rho, p))
    }

    // Unchecked kernels for inner loops that have already validated inputs.

    #[inline]
    pub(crate) fn p_rho_s(&self, rho: f64, s: f64) -> f64 {
        self.kappa * rho.powf(self.gamma) * (s / self.cv).exp()
    }

    /// Pressure from density and entropy density `π = ρs`.
    #[inline]
    pub(crate) fn p_rho_pi(&self, rho: f64, pi: f64) -> f64 {
        self.p_rho_s(rho, pi / rho)
    }

    #[inline]
    pub(crate) fn p_energy(&self, rho: f64, m: [f64; 2], energy: f64) -> f64 {
        (self.gamma - 1.0) * (energy - 0.5 * (m[0] * m[0] + m[1] * m[1]) / rho)
    }

    #[inline]
    pub(crate) fn c(&self, rho: f64, p: f64) -> f64 {
        (self.gamma * p / rho).sqrt()
    }
}
