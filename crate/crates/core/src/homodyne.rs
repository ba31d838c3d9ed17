//! Virtual balanced homodyne detection of simulated pulse trains.
//!
//! The difference photocurrent is synthesized on the full period grid
//! (B bins of width Δt per round trip, zero where the LO is dark):
//!
//! ```text
//! δi(t_j + n T_R) = 2 √(N_LO(t_j − Δt_LO)) · Q_out[j][n]
//! ```
//!
//! with Q = X for Φ = 0 and Q = Y for Φ = π/2. Its spectrum is the
//! segment-averaged rectangular-window periodogram (Δt/L)|FFT|², normalized by
//! the mean LO current ⟨I⟩ so that vacuum input reads exactly 1. Slices that
//! were not simulated (below threshold) are masked out of both the synthesis
//! and ⟨I⟩.

use crate::comb::{Field, Quadrature};
use crate::error::{Error, Result};
use crate::lo::{LOProfile, QuadraturePhase};
use crate::params::OscillatorParams;
use crate::profile::PumpProfile;
use crate::sim::{run_slice, PulseTrainRecord, SimConfig, SliceInfo};
use crate::spectrum::SpectrumSeries;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Difference-photocurrent fluctuation samples for every trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentSeries {
    pub bin_width: f64,
    pub roundtrip_time: f64,
    pub bins_per_period: usize,
    pub pulses: usize,
    pub trajectories: usize,
    /// Shot-noise normalization ⟨I⟩ from the masked LO, photons/s.
    pub mean_current: f64,
    pub field: Field,
    pub phase: QuadraturePhase,
    /// Samples, trajectory-major; each trajectory holds pulses·bins_per_period bins.
    data: Vec<f64>,
}

impl PhotocurrentSeries {
    pub fn trajectory(&self, traj: usize) -> &[f64] {
        let len = self.pulses * self.bins_per_period;
        &self.data[traj * len..(traj + 1) * len]
    }
}

/// LO pulses may not outlast the repetition period.
pub(crate) fn check_lo_duration(lo: &LOProfile, roundtrip_time: f64) -> Result<()> {
    if let Some(tau) = lo.duration() {
        if tau > roundtrip_time {
            return Err(Error::InvalidParameter {
                what: "LO duration",
                message: format!("tau_lo = {tau} exceeds the round-trip time {roundtrip_time}"),
            });
        }
    }
    Ok(())
}

/// Per-slice LO weights masked to the simulated slices.
fn masked_weights(record: &PulseTrainRecord, lo: &LOProfile) -> Result<Vec<(usize, f64)>> {
    check_lo_duration(lo, record.roundtrip_time)?;
    if lo.is_delta() {
        return Err(Error::GridMismatch {
            message: "delta LO cannot be sampled on the bin grid".into(),
        });
    }
    if lo.target != record.field {
        return Err(Error::GridMismatch {
            message: format!(
                "LO targets the {} field but the record holds {}",
                lo.target.label(),
                record.field.label()
            ),
        });
    }
    let weights: Vec<(usize, f64)> = record
        .slices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.simulated)
        .map(|(idx, s)| (idx, lo.intensity(s.t)))
        .collect();
    if weights.iter().all(|&(_, w)| w == 0.0) && lo_has_power(lo) {
        return Err(Error::GridMismatch {
            message: "LO support lies entirely off the recorded slices".into(),
        });
    }
    Ok(weights)
}

fn lo_has_power(lo: &LOProfile) -> bool {
    use crate::lo::LOShape;
    match &lo.shape {
        LOShape::Rectangular { peak, .. } | LOShape::Gaussian { peak, .. } => *peak > 0.0,
        LOShape::Delta => true,
        LOShape::Sampled(p) => p.iter().any(|&(_, v)| v > 0.0),
    }
}

/// Build the photocurrent series from a record and a pulsed LO.
pub fn synthesize_photocurrent(
    record: &PulseTrainRecord,
    lo: &LOProfile,
) -> Result<PhotocurrentSeries> {
    let b = record.bins_per_period.ok_or_else(|| Error::GridMismatch {
        message: "record lacks a period grid (bins_per_period)".into(),
    })?;
    let weights = masked_weights(record, lo)?;
    let mean_current = weights.iter().map(|&(_, w)| w).sum::<f64>() * record.bin_width
        / record.roundtrip_time;

    let len = record.pulses * b;
    let mut data = vec![0.0; record.trajectories * len];
    for traj in 0..record.trajectories {
        let base = traj * len;
        for &(slice_idx, w) in &weights {
            if w == 0.0 {
                continue;
            }
            let amp = 2.0 * w.sqrt();
            let bin = record.slices[slice_idx].bin;
            let series = match lo.phase {
                QuadraturePhase::X => record.x_series(traj, slice_idx),
                QuadraturePhase::Y => record.y_series(traj, slice_idx),
            };
            for (n, &q) in series.iter().enumerate() {
                data[base + n * b + bin] = amp * q;
            }
        }
    }
    Ok(PhotocurrentSeries {
        bin_width: record.bin_width,
        roundtrip_time: record.roundtrip_time,
        bins_per_period: b,
        pulses: record.pulses,
        trajectories: record.trajectories,
        mean_current,
        field: record.field,
        phase: lo.phase,
        data,
    })
}

struct Periodogram {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
    scale: f64,
}

impl Periodogram {
    fn new(len: usize, bin_width: f64) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        Periodogram {
            fft,
            len,
            scale: bin_width / len as f64,
        }
    }

    /// (Δt/L)|FFT|² for bins 0..=L/2.
    fn run(&self, segment: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = segment
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.fft.process(&mut buf);
        buf[..=self.len / 2]
            .iter()
            .map(|c| c.norm_sqr() * self.scale)
            .collect()
    }
}

/// Segment-averaged, shot-noise-normalized photocurrent spectrum.
///
/// Each trajectory is cut into non-overlapping segments of `segment_pulses`
/// round trips; per-point standard errors come from the segment scatter.
pub fn photocurrent_spectrum(
    series: &PhotocurrentSeries,
    segment_pulses: usize,
) -> Result<SpectrumSeries> {
    if series.mean_current <= 0.0 {
        return Err(Error::Estimation {
            message: "zero mean LO current; spectrum undefined".into(),
        });
    }
    if segment_pulses == 0 || segment_pulses > series.pulses {
        return Err(Error::Estimation {
            message: format!(
                "segment_pulses {} outside 1..={}",
                segment_pulses, series.pulses
            ),
        });
    }
    let segs_per_traj = series.pulses / segment_pulses;
    let n_segments = segs_per_traj * series.trajectories;
    if n_segments < 4 {
        return Err(Error::Estimation {
            message: format!("need >= 4 segments, got {n_segments}"),
        });
    }
    let l = segment_pulses * series.bins_per_period;
    let pg = Periodogram::new(l, series.bin_width);
    let bins = l / 2 + 1;

    let mut sum = vec![0.0; bins];
    let mut sum_sq = vec![0.0; bins];
    let batch = 32usize;
    let mut t0 = 0usize;
    while t0 < series.trajectories {
        let t1 = (t0 + batch).min(series.trajectories);
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (t0..t1)
            .into_par_iter()
            .map(|traj| {
                let mut s = vec![0.0; bins];
                let mut s2 = vec![0.0; bins];
                let data = series.trajectory(traj);
                for seg in 0..segs_per_traj {
                    let start = seg * l;
                    let p = pg.run(&data[start..start + l]);
                    for (k, &v) in p.iter().enumerate() {
                        s[k] += v;
                        s2[k] += v * v;
                    }
                }
                (s, s2)
            })
            .collect();
        for (s, s2) in &partials {
            for k in 0..bins {
                sum[k] += s[k];
                sum_sq[k] += s2[k];
            }
        }
        t0 = t1;
    }

    let n = n_segments as f64;
    let norm = series.mean_current;
    let mut values = Vec::with_capacity(bins);
    let mut stderr = Vec::with_capacity(bins);
    for k in 0..bins {
        let mean = sum[k] / n;
        let var = ((sum_sq[k] / n - mean * mean) * n / (n - 1.0)).max(0.0);
        values.push(mean / norm);
        stderr.push((var / n).sqrt() / norm);
    }
    let omega: Vec<f64> = (0..bins)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / (l as f64 * series.bin_width))
        .collect();
    Ok(SpectrumSeries {
        omega,
        values,
        stderr,
        field: series.field,
        quadrature: match series.phase {
            QuadraturePhase::X => Quadrature::X,
            QuadraturePhase::Y => Quadrature::Y,
        },
        label: format!("measured segments={n_segments}"),
    })
}

impl SpectrumSeries {
    /// Index of the grid point closest to `omega`.
    pub fn nearest_bin(&self, omega: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &w) in self.omega.iter().enumerate() {
            let d = (w - omega).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Restrict the series to ω ≤ omega_max (for comparisons on a common band).
    pub fn truncated(&self, omega_max: f64) -> SpectrumSeries {
        let n = self.omega.iter().take_while(|&&w| w <= omega_max).count();
        SpectrumSeries {
            omega: self.omega[..n].to_vec(),
            values: self.values[..n].to_vec(),
            stderr: if self.stderr.is_empty() {
                Vec::new()
            } else {
                self.stderr[..n].to_vec()
            },
            field: self.field,
            quadrature: self.quadrature,
            label: self.label.clone(),
        }
    }
}

/// Result of a measured-vs-predicted spectrum comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n_points: usize,
    pub max_abs_z: f64,
    pub worst_omega: f64,
    /// Family-wise significance threshold on |z| (3σ base, corrected for the
    /// number of points).
    pub threshold: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let notes = self
            .notes
            .iter()
            .map(|n| format!("\"{}\"", n.replace('"', "'")))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "{{\"n_points\":{},\"max_z\":{:.6},\"worst_omega_rad_s\":{:.6e},\"threshold\":{:.4},\"pass\":{},\"notes\":[{}]}}",
            self.n_points, self.max_abs_z, self.worst_omega, self.threshold, self.pass, notes
        )
    }
}

/// Complementary error function (Abramowitz-Stegun 7.1.26, |ε| < 1.5e-7).
fn erfc(x: f64) -> f64 {
    let sign_neg = x < 0.0;
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let e = poly * (-x * x).exp();
    if sign_neg {
        2.0 - e
    } else {
        e
    }
}

/// |z| threshold giving the same family-wise error as a single 3σ test.
pub fn family_threshold(n_points: usize) -> f64 {
    let alpha = erfc(3.0 / std::f64::consts::SQRT_2); // two-sided 3 sigma
    let target = alpha / n_points.max(1) as f64;
    let (mut lo, mut hi) = (1.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if erfc(mid / std::f64::consts::SQRT_2) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-point z-test of a measured spectrum against a prediction on the same grid.
pub fn compare_spectra(
    measured: &SpectrumSeries,
    predicted: &SpectrumSeries,
) -> Result<ComparisonReport> {
    if measured.omega.len() != predicted.omega.len() {
        return Err(Error::GridMismatch {
            message: format!(
                "grids differ in length: {} vs {}",
                measured.omega.len(),
                predicted.omega.len()
            ),
        });
    }
    for (a, b) in measured.omega.iter().zip(&predicted.omega) {
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            return Err(Error::GridMismatch {
                message: format!("grid points differ: {a} vs {b}"),
            });
        }
    }
    if measured.stderr.len() != measured.omega.len() {
        return Err(Error::GridMismatch {
            message: "measured series carries no standard errors".into(),
        });
    }
    let mut max_abs_z = 0.0f64;
    let mut worst_omega = 0.0;
    for i in 0..measured.omega.len() {
        let d = measured.values[i] - predicted.values[i];
        let se = measured.stderr[i];
        let z = if d == 0.0 {
            0.0
        } else if se > 0.0 {
            d / se
        } else {
            f64::INFINITY
        };
        if z.abs() > max_abs_z {
            max_abs_z = z.abs();
            worst_omega = measured.omega[i];
        }
    }
    let threshold = family_threshold(measured.omega.len());
    Ok(ComparisonReport {
        n_points: measured.omega.len(),
        max_abs_z,
        worst_omega,
        threshold,
        pass: max_abs_z <= threshold,
        notes: Vec::new(),
    })
}

/// Streamed measurement: simulate the configured run once and return the
/// normalized spectrum for each LO (e.g. a delay scan). Avoids materializing
/// records for large ensembles; bit-identical for any thread count.
pub fn run_homodyne_measurement(
    params: &OscillatorParams,
    pump: &PumpProfile,
    cfg: &SimConfig,
    los: &[LOProfile],
    segment_pulses: usize,
) -> Result<Vec<SpectrumSeries>> {
    let plan = cfg.validate(params, pump)?;
    let b = cfg.bins_per_period.ok_or_else(|| Error::InvalidConfig {
        message: "homodyne runs need bins_per_period".into(),
    })?;
    if segment_pulses == 0 || segment_pulses > cfg.pulses {
        return Err(Error::Estimation {
            message: "segment_pulses outside the record length".into(),
        });
    }
    let segs_per_traj = cfg.pulses / segment_pulses;
    let n_segments = segs_per_traj * cfg.trajectories;
    if n_segments < 4 {
        return Err(Error::Estimation {
            message: format!("need >= 4 segments, got {n_segments}"),
        });
    }
    let live: Vec<SliceInfo> = plan
        .slices
        .iter()
        .copied()
        .filter(|s| s.simulated)
        .collect();

    // Masked weights and normalizations per LO.
    let mut weights: Vec<Vec<(usize, f64)>> = Vec::with_capacity(los.len());
    let mut currents = Vec::with_capacity(los.len());
    for lo in los {
        check_lo_duration(lo, params.roundtrip_time())?;
        if lo.is_delta() {
            return Err(Error::GridMismatch {
                message: "delta LO cannot be sampled on the bin grid".into(),
            });
        }
        let w: Vec<(usize, f64)> = live
            .iter()
            .enumerate()
            .map(|(i, s)| (i, lo.intensity(s.t)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if w.is_empty() {
            return Err(Error::GridMismatch {
                message: "LO support lies entirely off the simulated slices".into(),
            });
        }
        let current = w.iter().map(|&(_, v)| v).sum::<f64>() * cfg.bin_width
            / params.roundtrip_time();
        weights.push(w);
        currents.push(current);
    }

    let l = segment_pulses * b;
    let pg = Periodogram::new(l, cfg.bin_width);
    let bins = l / 2 + 1;
    let mut sum = vec![vec![0.0; bins]; los.len()];
    let mut sum_sq = vec![vec![0.0; bins]; los.len()];

    let batch = 16usize;
    let mut t0 = 0usize;
    while t0 < cfg.trajectories {
        let t1 = (t0 + batch).min(cfg.trajectories);
        let partials: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (t0..t1)
            .into_par_iter()
            .map(|traj| {
                let slices: Vec<_> = live
                    .iter()
                    .map(|info| run_slice(params, cfg, info, traj))
                    .collect();
                let mut per_lo = Vec::with_capacity(los.len());
                let mut series = vec![0.0; cfg.pulses * b];
                for (lo_idx, lo) in los.iter().enumerate() {
                    series.iter_mut().for_each(|v| *v = 0.0);
                    for &(live_idx, w) in &weights[lo_idx] {
                        let amp = 2.0 * w.sqrt();
                        let bin = live[live_idx].bin;
                        let q = match lo.phase {
                            QuadraturePhase::X => &slices[live_idx].xs,
                            QuadraturePhase::Y => &slices[live_idx].ys,
                        };
                        let q = match lo.target {
                            Field::Signal => q,
                            Field::Pump => match lo.phase {
                                QuadraturePhase::X => &slices[live_idx].xp,
                                QuadraturePhase::Y => &slices[live_idx].yp,
                            },
                        };
                        for (n, &v) in q.iter().enumerate() {
                            series[n * b + bin] = amp * v;
                        }
                    }
                    let mut s = vec![0.0; bins];
                    let mut s2 = vec![0.0; bins];
                    for seg in 0..segs_per_traj {
                        let p = pg.run(&series[seg * l..(seg + 1) * l]);
                        for (k, &v) in p.iter().enumerate() {
                            s[k] += v;
                            s2[k] += v * v;
                        }
                    }
                    per_lo.push((s, s2));
                }
                per_lo
            })
            .collect();
        for traj_partial in &partials {
            for (lo_idx, (s, s2)) in traj_partial.iter().enumerate() {
                for k in 0..bins {
                    sum[lo_idx][k] += s[k];
                    sum_sq[lo_idx][k] += s2[k];
                }
            }
        }
        t0 = t1;
    }

    let omega: Vec<f64> = (0..bins)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / (l as f64 * cfg.bin_width))
        .collect();
    let n = n_segments as f64;
    let mut result = Vec::with_capacity(los.len());
    for (lo_idx, lo) in los.iter().enumerate() {
        let norm = currents[lo_idx];
        let mut values = Vec::with_capacity(bins);
        let mut stderr = Vec::with_capacity(bins);
        for k in 0..bins {
            let mean = sum[lo_idx][k] / n;
            let var = ((sum_sq[lo_idx][k] / n - mean * mean) * n / (n - 1.0)).max(0.0);
            values.push(mean / norm);
            stderr.push((var / n).sqrt() / norm);
        }
        result.push(SpectrumSeries {
            omega: omega.clone(),
            values,
            stderr,
            field: lo.target,
            quadrature: match lo.phase {
                QuadraturePhase::X => Quadrature::X,
                QuadraturePhase::Y => Quadrature::Y,
            },
            label: format!("measured delay={:.3e} segments={n_segments}", lo.delay),
        });
    }
    Ok(result)
}
