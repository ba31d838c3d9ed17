//! Closed-form homodyne noise spectra, shot noise ≡ 1.
//!
//! Spectra are sums of Lorentzians sitting on every cavity resonance
//! Ω_m = 2πm/T_R: phase (Y) quadratures dip below shot noise, amplitude (X)
//! quadratures rise above it. For arbitrary pulse shapes the spectrum is the
//! LO-intensity-weighted average of the instantaneous rectangular-pump result,
//! using the below-threshold form wherever μ(t) ≤ 1.

use crate::comb::{CorrelationComb, Field, Quadrature};
use crate::error::{Error, Result};
use crate::lo::LOProfile;
use crate::params::OscillatorParams;
use crate::profile::PumpProfile;

/// Default resonance-sum truncation for a spectrum evaluated up to `omega_max`:
/// every resonance inside the range plus ten guard terms.
pub fn default_m_max(omega_max: f64, roundtrip_time: f64) -> usize {
    let covered = (omega_max.abs() * roundtrip_time / (2.0 * std::f64::consts::PI)).ceil();
    covered as usize + 10
}

/// Shot-noise-normalized spectrum of the correlator represented by `comb`:
///
/// S(Ω) = vac + s · Σ_{m=0..m_max} 2γ(c/T_R) / (γ² + (Ω − 2πm/T_R)²)
///
/// This is the Fourier transform of the δ-comb in the small κT_R limit and
/// reproduces the closed-form spectra exactly.
pub fn comb_to_spectrum(
    comb: &CorrelationComb,
    omega: f64,
    params: &OscillatorParams,
    m_max: usize,
) -> f64 {
    let t_r = params.roundtrip_time();
    let gamma = comb.decay_rate;
    let base = if comb.has_vacuum_term { 1.0 } else { 0.0 };
    if comb.coefficient == 0.0 || gamma == 0.0 {
        return base;
    }
    let peak_num = 2.0 * gamma * comb.coefficient / t_r;
    let mut acc = 0.0;
    for m in 0..=m_max {
        let detune = omega - 2.0 * std::f64::consts::PI * m as f64 / t_r;
        acc += peak_num / (gamma * gamma + detune * detune);
    }
    base + comb.sign * acc
}

/// Above-threshold spectrum of one field quadrature for a rectangular pump
/// with matched rectangular LO.
pub fn spectrum_above(
    field: Field,
    quad: Quadrature,
    omega: f64,
    mu0: f64,
    params: &OscillatorParams,
    m_max: usize,
) -> Result<f64> {
    if !(mu0 > 1.0) {
        return Err(Error::BelowThreshold { mu0 });
    }
    Ok(spectrum_above_unchecked(field, quad, omega, mu0, params, m_max))
}

fn spectrum_above_unchecked(
    field: Field,
    quad: Quadrature,
    omega: f64,
    mu0: f64,
    params: &OscillatorParams,
    m_max: usize,
) -> f64 {
    let ks = params.loss_rate_signal();
    let t_r = params.roundtrip_time();
    let ks2 = ks * ks;
    let (num, gamma, sign) = match (field, quad) {
        (Field::Pump, Quadrature::Y) => (8.0 * ks2 * (mu0 - 1.0), 2.0 * ks * mu0, -1.0),
        (Field::Pump, Quadrature::X) => (8.0 * ks2 * (mu0 - 1.0), 2.0 * ks * (mu0 - 1.0), 1.0),
        (Field::Signal, Quadrature::Y) => (4.0 * ks2, 2.0 * ks * mu0, -1.0),
        (Field::Signal, Quadrature::X) => (4.0 * ks2, 2.0 * ks * (mu0 - 1.0), 1.0),
    };
    let mut acc = 0.0;
    for m in 0..=m_max {
        let detune = omega - 2.0 * std::f64::consts::PI * m as f64 / t_r;
        acc += num / (gamma * gamma + detune * detune);
    }
    1.0 + sign * acc
}

/// Single-resonance value: the m-term alone, evaluated on its resonance.
/// This is the quantity quoted for noise floors and threshold limits
/// (pump Y: 1 − 2(μ₀−1)/μ₀², signal Y: 1 − 1/μ₀², X counterparts above 1).
pub fn resonance_value(field: Field, quad: Quadrature, mu0: f64) -> Result<f64> {
    if !(mu0 > 1.0) {
        return Err(Error::BelowThreshold { mu0 });
    }
    Ok(match (field, quad) {
        (Field::Pump, Quadrature::Y) => 1.0 - 2.0 * (mu0 - 1.0) / (mu0 * mu0),
        (Field::Pump, Quadrature::X) => 1.0 + 2.0 / (mu0 - 1.0),
        (Field::Signal, Quadrature::Y) => 1.0 - 1.0 / (mu0 * mu0),
        (Field::Signal, Quadrature::X) => 1.0 + 1.0 / ((mu0 - 1.0) * (mu0 - 1.0)),
    })
}

/// Below-threshold signal spectrum at instantaneous pump parameter μ ≥ 0:
///
/// S(Ω) = 1 − Σ_m 4κ_s²μ / (κ_s²(1+μ)² + (Ω − 2πm/T_R)²)
pub fn spectrum_below(
    omega: f64,
    mu: f64,
    params: &OscillatorParams,
    m_max: usize,
) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter {
            what: "mu",
            message: format!("must be >= 0, got {mu}"),
        });
    }
    let ks = params.loss_rate_signal();
    let t_r = params.roundtrip_time();
    let num = 4.0 * ks * ks * mu;
    let gamma = ks * (1.0 + mu);
    let mut acc = 0.0;
    for m in 0..=m_max {
        let detune = omega - 2.0 * std::f64::consts::PI * m as f64 / t_r;
        acc += num / (gamma * gamma + detune * detune);
    }
    Ok(1.0 - acc)
}

/// Instantaneous signal-phase-quadrature spectrum, stitched at threshold:
/// above-threshold form for μ > 1, below-threshold form for μ ≤ 1 (the two
/// agree term by term at μ = 1, so the seam is exact).
fn instantaneous_signal_y(omega: f64, mu: f64, params: &OscillatorParams, m_max: usize) -> f64 {
    if mu > 1.0 {
        spectrum_above_unchecked(Field::Signal, Quadrature::Y, omega, mu, params, m_max)
    } else {
        spectrum_below(omega, mu, params, m_max).expect("mu >= 0 by construction")
    }
}

/// Instantaneous pump-phase-quadrature spectrum. Below threshold the pump
/// output is taken at the shot-noise level (no closed form is available there).
fn instantaneous_pump_y(omega: f64, mu: f64, params: &OscillatorParams, m_max: usize) -> f64 {
    if mu > 1.0 {
        spectrum_above_unchecked(Field::Pump, Quadrature::Y, omega, mu, params, m_max)
    } else {
        1.0
    }
}

/// Phase-quadrature spectrum for an arbitrary pump shape and pulsed LO:
/// the LO-intensity-weighted average of the instantaneous spectrum,
/// normalized so that shot noise is exactly 1.
///
/// A delta-like LO evaluates the integrand at the LO delay. An LO entirely
/// outside the pump support returns 1 (vacuum in, vacuum out); an LO with
/// zero integrated intensity is an error.
pub fn spectrum_general(
    field: Field,
    omega: f64,
    pump: &PumpProfile,
    lo: &LOProfile,
    params: &OscillatorParams,
    m_max: usize,
) -> Result<f64> {
    let t_r = params.roundtrip_time();
    let half = t_r / 2.0;
    if pump.duration() > t_r {
        return Err(Error::InvalidParameter {
            what: "pump duration",
            message: format!("tau_p = {} exceeds roundtrip time {t_r}", pump.duration()),
        });
    }
    crate::homodyne::check_lo_duration(lo, t_r)?;
    let instantaneous = |t: f64| -> f64 {
        let mu = pump.mu_unchecked(t);
        match field {
            Field::Signal => instantaneous_signal_y(omega, mu, params, m_max),
            Field::Pump => instantaneous_pump_y(omega, mu, params, m_max),
        }
    };
    if lo.is_delta() {
        if lo.delay.abs() > half {
            return Err(Error::TimeOutOfRange {
                t: lo.delay,
                half_period: half,
            });
        }
        return Ok(instantaneous(lo.delay));
    }

    // Integration window: LO support clipped to one period.
    let (start, end) = match lo.duration() {
        Some(tau) => ((lo.delay - tau / 2.0).max(-half), (lo.delay + tau / 2.0).min(half)),
        None => (-half, half),
    };
    if !(end > start) {
        return Err(Error::InvalidParameter {
            what: "LO support",
            message: "LO window has zero overlap with the pulse period".into(),
        });
    }

    // Adaptive trapezoid, refined until both the weight and the weighted
    // integral are stable to 1e-6 relative.
    let mut n = 64usize;
    let mut prev: Option<(f64, f64)> = None;
    loop {
        let h = (end - start) / n as f64;
        let mut weight = 0.0;
        let mut integral = 0.0;
        for i in 0..=n {
            let t = start + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let nlo = lo.intensity(t);
            weight += w * nlo;
            integral += w * nlo * instantaneous(t);
        }
        weight *= h;
        integral *= h;
        if let Some((pw, pi)) = prev {
            let w_ok = (weight - pw).abs() <= 1e-6 * weight.abs().max(f64::MIN_POSITIVE);
            let i_ok = (integral - pi).abs() <= 1e-6 * integral.abs().max(1e-300);
            if (w_ok && i_ok) || n >= (1 << 20) {
                if weight <= 0.0 {
                    return Err(Error::InvalidParameter {
                        what: "LO",
                        message: "zero-measure LO intensity".into(),
                    });
                }
                return Ok(integral / weight);
            }
        }
        prev = Some((weight, integral));
        n *= 2;
    }
}

/// One row of the delay-scan table: zero-frequency noise vs LO delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayScanRow {
    pub mu0: f64,
    pub delay: f64,
    pub noise_at_zero: f64,
}

/// Delay scan of the zero-frequency signal noise for gaussian pump pulses:
/// one row per (μ₀, Δt) pair. `lo_width = 0` uses the idealized delta probe;
/// finite widths average the instantaneous spectrum over the LO envelope.
pub fn delay_scan(
    params: &OscillatorParams,
    mu0_list: &[f64],
    delays: &[f64],
    tau_p: f64,
    lo_width: f64,
    m_max: usize,
) -> Result<Vec<DelayScanRow>> {
    use crate::lo::{LOShape, QuadraturePhase};
    let mut rows = Vec::with_capacity(mu0_list.len() * delays.len());
    for &mu0 in mu0_list {
        let pump = PumpProfile::gaussian(mu0, tau_p)?;
        for &delay in delays {
            let shape = if lo_width > 0.0 {
                LOShape::Rectangular {
                    peak: 1.0,
                    tau_lo: lo_width,
                }
            } else {
                LOShape::Delta
            };
            let lo = LOProfile::new(shape, delay, QuadraturePhase::Y, Field::Signal)?;
            let noise = spectrum_general(Field::Signal, 0.0, &pump, &lo, params, m_max)?;
            rows.push(DelayScanRow {
                mu0,
                delay,
                noise_at_zero: noise,
            });
        }
    }
    Ok(rows)
}

/// A sampled spectrum on a frequency grid, shot noise ≡ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    /// Angular frequencies, rad/s.
    pub omega: Vec<f64>,
    /// Normalized noise values.
    pub values: Vec<f64>,
    /// Per-point standard errors (empty for analytic series).
    pub stderr: Vec<f64>,
    pub field: Field,
    pub quadrature: Quadrature,
    /// Free-form provenance tag (pump parameter or profile description).
    pub label: String,
}

impl SpectrumSeries {
    /// Analytic above-threshold series on the given grid.
    pub fn analytic_above(
        field: Field,
        quad: Quadrature,
        omega: &[f64],
        mu0: f64,
        params: &OscillatorParams,
        m_max: usize,
    ) -> Result<Self> {
        let values = omega
            .iter()
            .map(|&w| spectrum_above(field, quad, w, mu0, params, m_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            omega: omega.to_vec(),
            values,
            stderr: Vec::new(),
            field,
            quadrature: quad,
            label: format!("analytic mu0={mu0} m_max={m_max}"),
        })
    }

    /// Constant series (used for shot-noise calibration references).
    pub fn constant(
        value: f64,
        field: Field,
        quad: Quadrature,
        omega: &[f64],
        label: &str,
    ) -> Self {
        Self {
            omega: omega.to_vec(),
            values: vec![value; omega.len()],
            stderr: Vec::new(),
            field,
            quadrature: quad,
            label: label.to_string(),
        }
    }

    /// CSV payload with a unit-bearing header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_rad_s,value,stderr\n");
        for i in 0..self.omega.len() {
            let se = self.stderr.get(i).copied().unwrap_or(0.0);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.omega[i], self.values[i], se
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::{cross_comb, quadrature_comb};
    use crate::lo::{LOShape, QuadraturePhase};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const T_R: f64 = 1e-8;

    fn params_ks_tr(ks_tr: f64) -> OscillatorParams {
        OscillatorParams::new(T_R, ks_tr / T_R, 100.0 * ks_tr / T_R, 1e-4).unwrap()
    }

    #[test]
    fn comb_spectrum_matches_closed_form_resonance() {
        let p = params_ks_tr(0.01);
        for mu0 in [1.2, 1.5, 2.0, 3.0] {
            let comb = quadrature_comb(Field::Signal, Quadrature::Y, &p, mu0).unwrap();
            let s = comb_to_spectrum(&comb, 0.0, &p, 0);
            assert_abs_diff_eq!(s, 1.0 - 1.0 / (mu0 * mu0), epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_coefficient_comb_is_flat() {
        let p = params_ks_tr(0.01);
        let mut comb = quadrature_comb(Field::Pump, Quadrature::Y, &p, 1.5).unwrap();
        comb.coefficient = 0.0;
        for w in [0.0, 1e8, 5.5e8] {
            assert_eq!(comb_to_spectrum(&comb, w, &p, 8), 1.0);
        }
    }

    #[test]
    fn midgap_value_returns_to_shot_noise() {
        let p = params_ks_tr(0.01);
        let comb = quadrature_comb(Field::Signal, Quadrature::Y, &p, 1.5).unwrap();
        let mid = std::f64::consts::PI / T_R;
        let s = comb_to_spectrum(&comb, mid, &p, 10);
        assert!((s - 1.0).abs() < 1e-3, "midgap value {s}");
    }

    #[test]
    fn comb_and_spectrum_routes_agree() {
        // The Lorentzian-sum of the comb must reproduce the closed-form
        // spectra to near machine precision across fields and quadratures.
        let p = params_ks_tr(0.01);
        let omegas: Vec<f64> = (0..200).map(|i| i as f64 * 4.0e6).collect();
        for mu0 in [1.1, 1.5, 2.7] {
            for field in [Field::Pump, Field::Signal] {
                for quad in [Quadrature::X, Quadrature::Y] {
                    let comb = quadrature_comb(field, quad, &p, mu0).unwrap();
                    for &w in &omegas {
                        let via_comb = comb_to_spectrum(&comb, w, &p, 12);
                        let direct = spectrum_above(field, quad, w, mu0, &p, 12).unwrap();
                        assert_relative_eq!(via_comb, direct, max_relative = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pump_y_fifty_percent_floor() {
        let p = params_ks_tr(0.01);
        let s = spectrum_above(Field::Pump, Quadrature::Y, 0.0, 2.0, &p, 0).unwrap();
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            resonance_value(Field::Pump, Quadrature::Y, 2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn signal_y_threshold_limit() {
        let p = params_ks_tr(0.01);
        let s = spectrum_above(Field::Signal, Quadrature::Y, 0.0, 1.1, &p, 0).unwrap();
        assert_relative_eq!(s, 1.0 - 1.0 / 1.21, max_relative = 1e-12);
        // full noise reduction as mu0 -> 1+
        let s = resonance_value(Field::Signal, Quadrature::Y, 1.0 + 1e-9).unwrap();
        assert!(s < 3e-9);
    }

    #[test]
    fn below_threshold_values() {
        let p = params_ks_tr(0.01);
        for w in [0.0, 1e7, 6.28e8] {
            assert_eq!(spectrum_below(w, 0.0, &p, 10).unwrap(), 1.0);
        }
        let s = spectrum_below(0.0, 1.0, &p, 0).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-14);
        let s = spectrum_below(0.0, 0.5, &p, 0).unwrap();
        assert_relative_eq!(s, 1.0 - 2.0 / 2.25, max_relative = 1e-12);
    }

    #[test]
    fn continuity_across_threshold() {
        let p = params_ks_tr(0.01);
        let m_max = 12;
        for i in 0..1000 {
            let w = i as f64 * 2.0e6;
            let below = spectrum_below(w, 1.0, &p, m_max).unwrap();
            let above = spectrum_above_unchecked(Field::Signal, Quadrature::Y, w, 1.0, &p, m_max);
            assert!(
                (below - above).abs() < 1e-12,
                "seam at omega={w}: {below} vs {above}"
            );
        }
    }

    #[test]
    fn general_spectrum_reduces_to_rectangular_case() {
        let p = params_ks_tr(0.01);
        let tau_p = 2.5e-9;
        let pump = PumpProfile::rectangular(1.5, tau_p).unwrap();
        let lo = LOProfile::new(
            LOShape::Rectangular {
                peak: 1e18,
                tau_lo: tau_p,
            },
            0.0,
            QuadraturePhase::Y,
            Field::Signal,
        )
        .unwrap();
        for w in [0.0, 4e7, 6.283e8] {
            let general = spectrum_general(Field::Signal, w, &pump, &lo, &p, 12).unwrap();
            let rect = spectrum_above(Field::Signal, Quadrature::Y, w, 1.5, &p, 12).unwrap();
            assert_relative_eq!(general, rect, max_relative = 1e-9);
        }
    }

    #[test]
    fn general_spectrum_delta_lo_points() {
        let p = params_ks_tr(0.01);
        let tau_p = 2.5e-9;
        let pump = PumpProfile::gaussian(2.0, tau_p).unwrap();
        let delta_at = |delay| {
            LOProfile::new(LOShape::Delta, delay, QuadraturePhase::Y, Field::Signal).unwrap()
        };
        // center of the pulse: 1 - 1/mu(0)^2 = 0.75
        let s0 = spectrum_general(Field::Signal, 0.0, &pump, &delta_at(0.0), &p, 0).unwrap();
        assert_abs_diff_eq!(s0, 0.75, epsilon = 1e-12);
        // threshold crossing: both branches vanish
        let t_star = tau_p * (0.5 * 2.0f64.ln()).sqrt();
        let s1 = spectrum_general(Field::Signal, 0.0, &pump, &delta_at(t_star), &p, 0).unwrap();
        assert_abs_diff_eq!(s1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lo_outside_pump_sees_vacuum() {
        let p = params_ks_tr(0.01);
        let pump = PumpProfile::rectangular(1.5, 1e-9).unwrap();
        let lo = LOProfile::new(
            LOShape::Rectangular {
                peak: 1.0,
                tau_lo: 1e-9,
            },
            3e-9,
            QuadraturePhase::Y,
            Field::Signal,
        )
        .unwrap();
        let s = spectrum_general(Field::Signal, 0.0, &pump, &lo, &p, 12).unwrap();
        assert_relative_eq!(s, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn zero_measure_lo_is_error() {
        let p = params_ks_tr(0.01);
        let pump = PumpProfile::rectangular(1.5, 2e-9).unwrap();
        let lo = LOProfile::new(
            LOShape::Rectangular {
                peak: 0.0,
                tau_lo: 1e-9,
            },
            0.0,
            QuadraturePhase::Y,
            Field::Signal,
        )
        .unwrap();
        assert!(spectrum_general(Field::Signal, 0.0, &pump, &lo, &p, 4).is_err());
    }

    #[test]
    fn delay_scan_features() {
        let p = params_ks_tr(0.01);
        let tau_p = 2.5e-9;
        let delays: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.02 * tau_p).collect();
        let rows = delay_scan(&p, &[0.5, 2.0], &delays, tau_p, 0.0, 0).unwrap();

        let curve =
            |mu0: f64| -> Vec<&DelayScanRow> { rows.iter().filter(|r| r.mu0 == mu0).collect() };

        // mu0 = 0.5: single minimum at zero delay, value 1 - 2/2.25
        let below = curve(0.5);
        let min = below
            .iter()
            .min_by(|a, b| a.noise_at_zero.total_cmp(&b.noise_at_zero))
            .unwrap();
        assert_eq!(min.delay, 0.0);
        assert_relative_eq!(min.noise_at_zero, 1.0 - 2.0 / 2.25, max_relative = 1e-12);

        // mu0 = 2: local maximum 0.75 at zero delay, zeros near 0.589 tau_p
        let above = curve(2.0);
        let at = |d: f64| {
            above
                .iter()
                .find(|r| (r.delay - d).abs() < 1e-15)
                .unwrap()
                .noise_at_zero
        };
        assert_abs_diff_eq!(at(0.0), 0.75, epsilon = 1e-12);
        assert!(at(0.02 * tau_p) < 0.75);
        let t_star = tau_p * (0.5 * 2.0f64.ln()).sqrt();
        let near_zero = above
            .iter()
            .min_by(|a, b| a.noise_at_zero.total_cmp(&b.noise_at_zero))
            .unwrap();
        assert!((near_zero.delay.abs() - t_star).abs() <= 0.02 * tau_p + 1e-15);

        // symmetric under delay reflection
        for r in &above {
            let mirrored = above
                .iter()
                .find(|q| (q.delay + r.delay).abs() < 1e-15)
                .unwrap();
            assert_abs_diff_eq!(r.noise_at_zero, mirrored.noise_at_zero, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectra_bounds_and_uncertainty_product() {
        let p = params_ks_tr(0.01);
        let omegas: Vec<f64> = (0..400).map(|i| i as f64 * 2.5e6).collect();
        for i in 0..40 {
            let mu0 = 1.01 + 0.25 * i as f64;
            for &w in &omegas {
                let sy = spectrum_above(Field::Signal, Quadrature::Y, w, mu0, &p, 12).unwrap();
                let py = spectrum_above(Field::Pump, Quadrature::Y, w, mu0, &p, 12).unwrap();
                let sx = spectrum_above(Field::Signal, Quadrature::X, w, mu0, &p, 12).unwrap();
                let px = spectrum_above(Field::Pump, Quadrature::X, w, mu0, &p, 12).unwrap();
                assert!((0.0..=1.0).contains(&sy), "signal Y out of [0,1]: {sy}");
                assert!((0.0..=1.0).contains(&py), "pump Y out of [0,1]: {py}");
                assert!(sx >= 1.0 && px >= 1.0);
            }
            for field in [Field::Pump, Field::Signal] {
                let x = resonance_value(field, Quadrature::X, mu0).unwrap();
                let y = resonance_value(field, Quadrature::Y, mu0).unwrap();
                assert!(x * y >= 1.0, "uncertainty product {}", x * y);
            }
        }
    }

    #[test]
    fn pump_y_floor_minimized_at_two() {
        let mut best = (0.0, f64::INFINITY);
        let mut mu0 = 1.01;
        while mu0 <= 4.0 {
            let v = resonance_value(Field::Pump, Quadrature::Y, mu0).unwrap();
            if v < best.1 {
                best = (mu0, v);
            }
            mu0 += 0.0005;
        }
        assert!((best.0 - 2.0).abs() < 0.01, "minimum at {}", best.0);
        assert!((best.1 - 0.5).abs() < 1e-6, "floor {}", best.1);
    }

    #[test]
    fn csv_has_units_header() {
        let p = params_ks_tr(0.01);
        let s = SpectrumSeries::analytic_above(
            Field::Signal,
            Quadrature::Y,
            &[0.0, 1e7],
            1.5,
            &p,
            8,
        )
        .unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("omega_rad_s,value,stderr\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
