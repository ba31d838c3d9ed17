//! Pump pulse profiles expressed through the dimensionless pump parameter μ(t).
//!
//! μ(t) = √(N₀(t)/N_th) where N₀ is the instantaneous pump flux; profiles can
//! be specified directly in μ (rectangular, gaussian, sampled) or converted
//! from flux samples at the boundary.

use crate::error::{Error, Result};

/// Optional phase modulation φ_in(t) of the pump pulses, radians.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseModulation {
    Zero,
    /// Piecewise-linear samples (t, φ_in(t)), t ascending within the pulse window.
    Sampled(Vec<(f64, f64)>),
}

impl PhaseModulation {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            PhaseModulation::Zero => 0.0,
            PhaseModulation::Sampled(points) => interp_clamped(points, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// μ(t) = μ₀ for |t| ≤ τ_p/2, zero elsewhere.
    Rectangular { mu0: f64, tau_p: f64 },
    /// μ(t) = μ₀·exp(−2(t/τ_p)²).
    Gaussian { mu0: f64, tau_p: f64 },
    /// Piecewise-linear samples (t, μ(t)); zero outside the sampled range.
    Sampled(Vec<(f64, f64)>),
}

/// Pump parameter profile over one pulse window t ∈ [−T_R/2, T_R/2].
#[derive(Debug, Clone, PartialEq)]
pub struct PumpProfile {
    shape: Shape,
    phase: PhaseModulation,
}

impl PumpProfile {
    pub fn rectangular(mu0: f64, tau_p: f64) -> Result<Self> {
        check_amplitude(mu0)?;
        check_duration(tau_p)?;
        Ok(Self {
            shape: Shape::Rectangular { mu0, tau_p },
            phase: PhaseModulation::Zero,
        })
    }

    pub fn gaussian(mu0: f64, tau_p: f64) -> Result<Self> {
        check_amplitude(mu0)?;
        check_duration(tau_p)?;
        Ok(Self {
            shape: Shape::Gaussian { mu0, tau_p },
            phase: PhaseModulation::Zero,
        })
    }

    /// Profile from explicit (t, μ) samples, t strictly ascending.
    pub fn sampled(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter {
                what: "pump samples",
                message: "need at least two points".into(),
            });
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParameter {
                    what: "pump samples",
                    message: "times must be strictly ascending".into(),
                });
            }
        }
        if points.iter().any(|&(_, mu)| !(mu >= 0.0) || !mu.is_finite()) {
            return Err(Error::InvalidParameter {
                what: "pump samples",
                message: "mu(t) must be finite and >= 0".into(),
            });
        }
        Ok(Self {
            shape: Shape::Sampled(points),
            phase: PhaseModulation::Zero,
        })
    }

    /// Convert flux samples N₀(t) to a μ profile using the threshold flux.
    pub fn from_flux_samples(points: Vec<(f64, f64)>, threshold_flux: f64) -> Result<Self> {
        if !(threshold_flux > 0.0) {
            return Err(Error::InvalidParameter {
                what: "threshold flux",
                message: format!("must be > 0, got {threshold_flux}"),
            });
        }
        let mu_points = points
            .into_iter()
            .map(|(t, n0)| (t, (n0 / threshold_flux).max(0.0).sqrt()))
            .collect();
        Self::sampled(mu_points)
    }

    pub fn with_phase_modulation(mut self, phase: PhaseModulation) -> Self {
        self.phase = phase;
        self
    }

    pub fn phase_modulation(&self) -> &PhaseModulation {
        &self.phase
    }

    /// Peak pump parameter μ₀ of the profile.
    pub fn peak(&self) -> f64 {
        match &self.shape {
            Shape::Rectangular { mu0, .. } | Shape::Gaussian { mu0, .. } => *mu0,
            Shape::Sampled(points) => points.iter().map(|&(_, mu)| mu).fold(0.0, f64::max),
        }
    }

    /// Nominal pulse duration (τ_p for the analytic shapes, sampled span otherwise).
    pub fn duration(&self) -> f64 {
        match &self.shape {
            Shape::Rectangular { tau_p, .. } | Shape::Gaussian { tau_p, .. } => *tau_p,
            Shape::Sampled(points) => points.last().unwrap().0 - points.first().unwrap().0,
        }
    }

    /// Pump parameter μ(t) for t inside the pulse window of the given oscillator.
    pub fn pump_parameter(&self, t: f64, roundtrip_time: f64) -> Result<f64> {
        let half = roundtrip_time / 2.0;
        if !(t >= -half && t <= half) {
            return Err(Error::TimeOutOfRange { t, half_period: half });
        }
        if self.duration() > roundtrip_time {
            return Err(Error::InvalidParameter {
                what: "pump duration",
                message: format!(
                    "tau_p = {} exceeds roundtrip time {roundtrip_time}",
                    self.duration()
                ),
            });
        }
        Ok(self.mu_unchecked(t))
    }

    /// μ(t) without the window check; used by integrators that guarantee the domain.
    pub(crate) fn mu_unchecked(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Rectangular { mu0, tau_p } => {
                if t.abs() <= tau_p / 2.0 {
                    *mu0
                } else {
                    0.0
                }
            }
            Shape::Gaussian { mu0, tau_p } => {
                let u = t / tau_p;
                mu0 * (-2.0 * u * u).exp()
            }
            Shape::Sampled(points) => {
                if t < points.first().unwrap().0 || t > points.last().unwrap().0 {
                    0.0
                } else {
                    interp_clamped(points, t)
                }
            }
        }
    }

    /// Phase modulation φ_in(t), radians.
    pub fn phase(&self, t: f64) -> f64 {
        self.phase.value(t)
    }
}

fn check_amplitude(mu0: f64) -> Result<()> {
    if mu0 >= 0.0 && mu0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            what: "mu0",
            message: format!("must be finite and >= 0, got {mu0}"),
        })
    }
}

fn check_duration(tau_p: f64) -> Result<()> {
    if tau_p > 0.0 && tau_p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            what: "tau_p",
            message: format!("must be finite and > 0, got {tau_p}"),
        })
    }
}

/// Linear interpolation over ascending (x, y) samples, clamped at the ends.
fn interp_clamped(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points.first().unwrap();
    let last = points.last().unwrap();
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let idx = points.partition_point(|&(t, _)| t < x);
    let (x0, y0) = points[idx - 1];
    let (x1, y1) = points[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
