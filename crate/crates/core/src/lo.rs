//! Pulsed local-oscillator profiles for balanced homodyne detection.

use crate::comb::Field;
use crate::error::{Error, Result};

/// Constant phase offset Φ of the local oscillator; Φ = 0 reads the amplitude
/// (X) quadrature of the analyzed field, Φ = π/2 the phase (Y) quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadraturePhase {
    /// Φ = 0
    X,
    /// Φ = π/2
    Y,
}

/// Local-oscillator intensity envelope N_LO(t), photons/s.
#[derive(Debug, Clone, PartialEq)]
pub enum LOShape {
    /// Constant `peak` inside a window of width `tau_lo`.
    Rectangular { peak: f64, tau_lo: f64 },
    /// peak·exp(−2(t/τ_LO)²), matching the pump-parameter convention.
    Gaussian { peak: f64, tau_lo: f64 },
    /// Idealized infinitely short probe; analytic evaluation only.
    Delta,
    /// Piecewise-linear samples (t, N_LO(t)), ascending t.
    Sampled(Vec<(f64, f64)>),
}

/// Pulsed local oscillator: envelope, delay relative to the analyzed pulse
/// centers, quadrature phase, and the field whose phase modulation it tracks
/// (pump LO at φ_in(t), signal LO at φ_in(t)/2).
#[derive(Debug, Clone, PartialEq)]
pub struct LOProfile {
    pub shape: LOShape,
    pub delay: f64,
    pub phase: QuadraturePhase,
    pub target: Field,
}

impl LOProfile {
    pub fn new(shape: LOShape, delay: f64, phase: QuadraturePhase, target: Field) -> Result<Self> {
        match &shape {
            LOShape::Rectangular { peak, tau_lo } | LOShape::Gaussian { peak, tau_lo } => {
                if !(*peak >= 0.0) || !peak.is_finite() {
                    return Err(Error::InvalidParameter {
                        what: "LO peak",
                        message: format!("must be finite and >= 0, got {peak}"),
                    });
                }
                if !(*tau_lo > 0.0) {
                    return Err(Error::InvalidParameter {
                        what: "tau_lo",
                        message: format!("must be > 0, got {tau_lo}"),
                    });
                }
            }
            LOShape::Delta => {}
            LOShape::Sampled(points) => {
                if points.len() < 2 {
                    return Err(Error::InvalidParameter {
                        what: "LO samples",
                        message: "need at least two points".into(),
                    });
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidParameter {
                            what: "LO samples",
                            message: "times must be strictly ascending".into(),
                        });
                    }
                }
                if points.iter().any(|&(_, v)| !(v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidParameter {
                        what: "LO samples",
                        message: "N_LO must be finite and >= 0".into(),
                    });
                }
            }
        }
        Ok(Self {
            shape,
            delay,
            phase,
            target,
        })
    }

    /// Nominal envelope duration; `None` for the delta probe.
    pub fn duration(&self) -> Option<f64> {
        match &self.shape {
            LOShape::Rectangular { tau_lo, .. } | LOShape::Gaussian { tau_lo, .. } => Some(*tau_lo),
            LOShape::Delta => None,
            LOShape::Sampled(points) => Some(points.last().unwrap().0 - points.first().unwrap().0),
        }
    }

    /// Envelope N_LO(t − delay) in photons/s at absolute pulse-frame time `t`.
    /// The delta shape has no finite envelope value.
    pub fn intensity(&self, t: f64) -> f64 {
        let u = t - self.delay;
        match &self.shape {
            LOShape::Rectangular { peak, tau_lo } => {
                if u.abs() <= tau_lo / 2.0 {
                    *peak
                } else {
                    0.0
                }
            }
            LOShape::Gaussian { peak, tau_lo } => {
                let r = u / tau_lo;
                peak * (-2.0 * r * r).exp()
            }
            LOShape::Delta => panic!("delta LO has no finite intensity; handle it analytically"),
            LOShape::Sampled(points) => {
                if u < points.first().unwrap().0 || u > points.last().unwrap().0 {
                    0.0
                } else {
                    let idx = points.partition_point(|&(x, _)| x < u);
                    if idx == 0 {
                        points[0].1
                    } else if idx == points.len() {
                        points[points.len() - 1].1
                    } else {
                        let (x0, y0) = points[idx - 1];
                        let (x1, y1) = points[idx];
                        y0 + (y1 - y0) * (u - x0) / (x1 - x0)
                    }
                }
            }
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.shape, LOShape::Delta)
    }
}

/// Mean photocurrent of the LO over one repetition period: ⟨I⟩ = (1/T_R)∫N_LO dt.
/// This is the shot-noise normalization of the photocurrent spectrum.
pub fn lo_mean_current(lo: &LOProfile, roundtrip_time: f64) -> Result<f64> {
    if lo.is_delta() {
        return Err(Error::InvalidParameter {
            what: "LO",
            message: "delta LO has no finite mean current".into(),
        });
    }
    let half = roundtrip_time / 2.0;
    // The envelopes are simple; 4096-panel trapezoid resolves them far below 1e-12
    // except for rectangular edges, which are handled exactly.
    if let LOShape::Rectangular { peak, tau_lo } = lo.shape {
        let l05 = tau_lo / 2.0;
        let lo_start = (lo.delay - l05).max(-half);
        let lo_end = (lo.delay + l05).min(half);
        let width = (lo_end - lo_start).max(0.0);
        return Ok(peak * width / roundtrip_time);
    }
    let n = 4096usize;
    let dt = roundtrip_time / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = -half + i as f64 * dt;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * lo.intensity(t);
    }
    Ok(acc * dt / roundtrip_time)
}
