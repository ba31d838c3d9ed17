//! Cavity parameters, thresholds, steady states and effective fluctuation rates.
//!
//! Everything works internally in photon-flux units (photons/s); SI power and
//! wavelength appear only at the boundary through [`watts_to_flux`].

use crate::error::{Error, Result};

/// Planck constant times speed of light, J·m.
pub const HC: f64 = 6.626_070_15e-34 * 299_792_458.0;

/// Convert optical power to photon flux at the given vacuum wavelength.
///
/// flux = P·λ/(hc)
pub fn watts_to_flux(power_w: f64, wavelength_m: f64) -> Result<f64> {
    if !(power_w >= 0.0) {
        return Err(Error::InvalidParameter {
            what: "power",
            message: format!("must be >= 0, got {power_w}"),
        });
    }
    if !(wavelength_m > 0.0) {
        return Err(Error::InvalidParameter {
            what: "wavelength",
            message: format!("must be > 0, got {wavelength_m}"),
        });
    }
    Ok(power_w * wavelength_m / HC)
}

/// Inverse of [`watts_to_flux`].
pub fn flux_to_watts(flux: f64, wavelength_m: f64) -> Result<f64> {
    if !(flux >= 0.0) {
        return Err(Error::InvalidParameter {
            what: "flux",
            message: format!("must be >= 0, got {flux}"),
        });
    }
    if !(wavelength_m > 0.0) {
        return Err(Error::InvalidParameter {
            what: "wavelength",
            message: format!("must be > 0, got {wavelength_m}"),
        });
    }
    Ok(flux * HC / wavelength_m)
}

/// Sign of the bright steady-state branch: the signal amplitude is `±√N_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Cavity and coupling constants of the doubly resonant ring oscillator.
///
/// `coupling` is the parametric constant g in 1/(s·√flux); the threshold flux
/// `κ_s²/(4g²)` is derived from it, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    roundtrip_time: f64,
    loss_rate_signal: f64,
    loss_rate_pump: f64,
    coupling: f64,
}

/// Signal-loss high-finesse bound: construction rejects κ_s·T_R at or above this.
pub const MAX_KAPPA_S_TR: f64 = 0.1;
/// Pump-loss bound. Wider than the signal bound so that deep-adiabatic
/// configurations (κ_p ≫ κ_s at fixed κ_s·T_R) stay constructible; the pump
/// mirror coefficient only ever enters through √(2κ_p·T_R).
pub const MAX_KAPPA_P_TR: f64 = 2.0;

impl OscillatorParams {
    /// Build and validate a parameter set.
    ///
    /// All rates are angular loss rates in 1/s; `coupling` is g in s^(-1/2)
    /// per √(photons/s).
    pub fn new(
        roundtrip_time: f64,
        loss_rate_signal: f64,
        loss_rate_pump: f64,
        coupling: f64,
    ) -> Result<Self> {
        fn positive(what: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    what,
                    message: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        positive("roundtrip_time", roundtrip_time)?;
        positive("loss_rate_signal", loss_rate_signal)?;
        positive("loss_rate_pump", loss_rate_pump)?;
        positive("coupling", coupling)?;
        let ks_tr = loss_rate_signal * roundtrip_time;
        if ks_tr >= MAX_KAPPA_S_TR {
            return Err(Error::InvalidParameter {
                what: "loss_rate_signal",
                message: format!(
                    "high-finesse bound violated: kappa_s*T_R = {ks_tr} >= {MAX_KAPPA_S_TR}"
                ),
            });
        }
        let kp_tr = loss_rate_pump * roundtrip_time;
        if kp_tr > MAX_KAPPA_P_TR {
            return Err(Error::InvalidParameter {
                what: "loss_rate_pump",
                message: format!("kappa_p*T_R = {kp_tr} > {MAX_KAPPA_P_TR}"),
            });
        }
        Ok(Self {
            roundtrip_time,
            loss_rate_signal,
            loss_rate_pump,
            coupling,
        })
    }

    /// Derive the coupling from a threshold expressed as optical power:
    /// g = κ_s/(2√N_th) with N_th = P_th·λ/(hc).
    pub fn from_threshold_power(
        roundtrip_time: f64,
        loss_rate_signal: f64,
        loss_rate_pump: f64,
        threshold_power_w: f64,
        pump_wavelength_m: f64,
    ) -> Result<Self> {
        let n_th = watts_to_flux(threshold_power_w, pump_wavelength_m)?;
        if n_th <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "threshold_power",
                message: "must be > 0".into(),
            });
        }
        let coupling = loss_rate_signal / (2.0 * n_th.sqrt());
        Self::new(roundtrip_time, loss_rate_signal, loss_rate_pump, coupling)
    }

    pub fn roundtrip_time(&self) -> f64 {
        self.roundtrip_time
    }
    pub fn loss_rate_signal(&self) -> f64 {
        self.loss_rate_signal
    }
    pub fn loss_rate_pump(&self) -> f64 {
        self.loss_rate_pump
    }
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Mirror transmission of the signal coupler, 𝒯_s = 2κ_s·T_R.
    pub fn mirror_transmission_signal(&self) -> f64 {
        2.0 * self.loss_rate_signal * self.roundtrip_time
    }

    /// Mirror transmission of the pump coupler, 𝒯_p = 2κ_p·T_R.
    pub fn mirror_transmission_pump(&self) -> f64 {
        2.0 * self.loss_rate_pump * self.roundtrip_time
    }

    /// Continuous-generation threshold flux N_th = κ_s²/(4g²), photons/s.
    pub fn threshold_flux(&self) -> f64 {
        let ks = self.loss_rate_signal;
        ks * ks / (4.0 * self.coupling * self.coupling)
    }
}

/// Bright stationary solution above threshold.
///
/// The intracavity pump amplitude clamps at the threshold flux regardless of
/// how far above threshold the pump is driven; the signal flux grows linearly
/// in μ₀ − 1. Phases follow the pump phase modulation: the pump sits at
/// φ_in(t), the signal at half of it, offset by π on the minus branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub pump_flux: f64,
    pub signal_flux: f64,
    pub branch: Branch,
}

impl SteadyState {
    /// Pump steady-state phase given the pump phase modulation at `t`.
    pub fn pump_phase(&self, phase_in: f64) -> f64 {
        phase_in
    }

    /// Signal steady-state phase given the pump phase modulation at `t`.
    pub fn signal_phase(&self, phase_in: f64) -> f64 {
        let base = 0.5 * phase_in;
        match self.branch {
            Branch::Plus => base,
            Branch::Minus => base + std::f64::consts::PI,
        }
    }
}

/// Stationary fluxes for pump parameter `mu0 ≥ 1` on the chosen branch.
///
/// N_p = N_th and N_s = (2κ_p/κ_s)(μ₀−1)·N_th. Below threshold there is no
/// bright state and the below-threshold spectrum path must be used instead.
pub fn steady_state(params: &OscillatorParams, mu0: f64, branch: Branch) -> Result<SteadyState> {
    if !(mu0 >= 1.0) {
        return Err(Error::BelowThreshold { mu0 });
    }
    let n_th = params.threshold_flux();
    let signal_flux =
        2.0 * params.loss_rate_pump / params.loss_rate_signal * (mu0 - 1.0) * n_th;
    Ok(SteadyState {
        pump_flux: n_th,
        signal_flux,
        branch,
    })
}

/// Effective damping rates of the quadrature fluctuations above threshold.
///
/// κ_x = 2κ_s(μ₀−1) damps the amplitude quadrature, κ_y = 2κ_s·μ₀ the phase
/// quadrature; their difference is exactly 2κ_s. `adiabatic_warning` is set
/// when μ₀ ≥ 0.1·κ_p/κ_s, i.e. when the pump can no longer be considered the
/// fastest decay in the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub kappa_x: f64,
    pub kappa_y: f64,
    pub adiabatic_warning: bool,
}

pub fn effective_rates(params: &OscillatorParams, mu0: f64) -> Result<EffectiveRates> {
    if !(mu0 >= 1.0) {
        return Err(Error::BelowThreshold { mu0 });
    }
    let ks = params.loss_rate_signal;
    let kappa_x = 2.0 * ks * (mu0 - 1.0);
    let kappa_y = 2.0 * ks * mu0;
    let adiabatic_warning = mu0 >= 0.1 * params.loss_rate_pump / ks;
    Ok(EffectiveRates {
        kappa_x,
        kappa_y,
        adiabatic_warning,
    })
}

/// Lower bound on μ₀ − 1 for the linearized (small-fluctuation) treatment:
/// √( (κ_s/κ_p) / (N_th·T_F) ), with `T_F` the fast-time averaging window.
/// The caller must keep μ₀ − 1 well above the returned value.
pub fn validity_margin(params: &OscillatorParams, n_th: f64, t_f: f64) -> Result<f64> {
    if !(n_th > 0.0) || !(t_f > 0.0) {
        return Err(Error::InvalidParameter {
            what: "validity_margin inputs",
            message: format!("need n_th > 0 and t_f > 0, got {n_th}, {t_f}"),
        });
    }
    Ok((params.loss_rate_signal / params.loss_rate_pump / (n_th * t_f)).sqrt())
}

/// Decade the margin rounds up to: 10^ceil(log10(margin)).
pub fn margin_order_of_magnitude(margin: f64) -> f64 {
    10f64.powi(margin.log10().ceil() as i32)
}
