//! Pulse-train quantum noise of a synchronously pumped optical parametric
//! oscillator above threshold.
//!
//! Two engines cross-check each other:
//!
//! * an **analytic engine** with the closed-form inter-pulse correlation
//!   combs and shot-noise-normalized homodyne spectra ([`comb`], [`spectrum`]);
//! * an independent **Langevin engine** that integrates the linearized
//!   quadrature equations slice by slice, forms output pulse trains through
//!   the cavity mirror, and recovers the same combs and spectra by Monte
//!   Carlo estimation ([`sim`], [`estimate`], [`homodyne`]).
//!
//! [`params`] holds the shared vocabulary: oscillator constants, threshold
//! flux, steady states, effective fluctuation rates and the small-fluctuation
//! validity bound.

pub mod comb;
pub mod error;
pub mod estimate;
pub mod homodyne;
pub mod lo;
pub mod params;
pub mod profile;
pub mod rng;
pub mod sim;
pub mod spectrum;

pub use comb::{cross_comb, quadrature_comb, CorrelationComb, Field, FieldPair, Quadrature};
pub use error::{Error, Result};
pub use estimate::{
    compare_study, estimate_comb, estimate_cross, run_comb_study, CombEstimate, CombStudy,
    EstimateOptions,
};
pub use homodyne::{
    compare_spectra, photocurrent_spectrum, run_homodyne_measurement, synthesize_photocurrent,
    ComparisonReport, PhotocurrentSeries,
};
pub use lo::{lo_mean_current, LOProfile, LOShape, QuadraturePhase};
pub use params::{
    effective_rates, margin_order_of_magnitude, steady_state, validity_margin, watts_to_flux,
    Branch, EffectiveRates, OscillatorParams, SteadyState,
};
pub use profile::{PhaseModulation, PumpProfile};
pub use sim::{simulate, InitMode, PulseTrainRecord, SimConfig, SimMode, SimOutput};
pub use spectrum::{
    comb_to_spectrum, default_m_max, delay_scan, resonance_value, spectrum_above, spectrum_below,
    spectrum_general, DelayScanRow, SpectrumSeries,
};
