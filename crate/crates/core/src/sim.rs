//! Monte Carlo integration of the linearized quadrature Langevin equations.
//!
//! Fast time t is discretized into slices of width Δt that evolve
//! independently in the slow (pulse-to-pulse) time T. Per slice the quadrature
//! pair obeys a linear SDE driven by white noise whose per-Euler-step variance
//! is (κ_r/(2Δt))·ΔT. Output samples are formed once per round trip through
//! the high-finesse input-output relation
//!
//! ```text
//! Q_out[n] = √(2κ_r T_R) · Q̄_cav[n] − Q̄_in[n]
//! ```
//!
//! where Q̄_cav is the round-trip average of the cavity quadrature and Q̄_in is
//! the round-trip-binned input vacuum (variance exactly 1/(4Δt)) built from
//! the same deviates that drive the Langevin source during that trip. The
//! interference between the transmitted and reflected parts is what produces
//! the inter-pulse comb coefficients, so the two must share their noise.

use crate::comb::Field;
use crate::error::{Error, Result};
use crate::params::{Branch, OscillatorParams};
use crate::profile::PumpProfile;
use rayon::prelude::*;

/// Integration regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Coupled pump + signal quadrature pairs (no adiabatic elimination).
    Full,
    /// Pump eliminated; each signal quadrature is an Ornstein-Uhlenbeck
    /// process with rate κ_x (amplitude) or κ_y (phase), and the pump output
    /// is reconstructed from the signal state and the pump input vacuum.
    Adiabatic,
    /// Parametric coupling zeroed, cavities empty: pure reflected vacuum.
    /// Used for shot-noise calibration.
    Vacuum,
}

/// How each (trajectory, slice) chain starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Draw the exact stationary Gaussian of the discrete chain; warmup may be 0.
    Stationary,
    /// Start from zero; warmup must cover ≥ 5/κ_x of slow time.
    Zero,
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: SimMode,
    /// Slow-time Euler step ΔT, seconds. Must divide the round-trip time.
    pub step: f64,
    /// Recorded round trips per trajectory.
    pub pulses: usize,
    /// Discarded round trips before recording.
    pub warmup: usize,
    /// Fast-time slices per pulse.
    pub slices: usize,
    /// Fast-time bin width Δt, seconds.
    pub bin_width: f64,
    /// Independent trajectories.
    pub trajectories: usize,
    pub seed: u64,
    /// Nominal (peak) pump parameter; cross-checked against the pump profile.
    pub mu0: f64,
    pub init: InitMode,
    /// Period grid size for homodyne alignment; `Some(B)` requires B·Δt = T_R.
    pub bins_per_period: Option<usize>,
    pub branch: Branch,
}

impl SimConfig {
    /// Reasonable defaults for a rectangular pump at `mu0`: ΔT = T_R/12
    /// (adiabatic/vacuum) or T_R/max(16, 10·κ_p·T_R) (full), stationary init,
    /// small safety warmup.
    pub fn new(
        mode: SimMode,
        params: &OscillatorParams,
        mu0: f64,
        slices: usize,
        bin_width: f64,
        pulses: usize,
        trajectories: usize,
        seed: u64,
    ) -> Self {
        let t_r = params.roundtrip_time();
        let substeps = match mode {
            // Both modes step the pump cavity explicitly.
            SimMode::Full | SimMode::Vacuum => {
                let need = (10.0 * params.loss_rate_pump() * t_r).ceil() as usize;
                need.max(16)
            }
            SimMode::Adiabatic => 12,
        };
        SimConfig {
            mode,
            step: t_r / substeps as f64,
            pulses,
            warmup: 16,
            slices,
            bin_width,
            trajectories,
            seed,
            mu0,
            init: InitMode::Stationary,
            bins_per_period: None,
            branch: Branch::Plus,
        }
    }

    /// Euler substeps per round trip.
    pub fn substeps(&self, params: &OscillatorParams) -> usize {
        (params.roundtrip_time() / self.step).round() as usize
    }

    /// Stable 64-bit digest of the configuration (records carry it so a dump
    /// can be traced back to its exact settings).
    pub fn digest(&self, params: &OscillatorParams) -> u64 {
        fn mix(mut z: u64) -> u64 {
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        }
        let mut h = 0xCBF2_9CE4_8422_2325u64;
        let mut feed = |v: u64| {
            h = mix(h ^ v);
        };
        feed(match self.mode {
            SimMode::Full => 1,
            SimMode::Adiabatic => 2,
            SimMode::Vacuum => 3,
        });
        feed(self.step.to_bits());
        feed(self.pulses as u64);
        feed(self.warmup as u64);
        feed(self.slices as u64);
        feed(self.bin_width.to_bits());
        feed(self.trajectories as u64);
        feed(self.seed);
        feed(self.mu0.to_bits());
        feed(match self.init {
            InitMode::Stationary => 11,
            InitMode::Zero => 12,
        });
        feed(self.bins_per_period.map(|b| b as u64 + 1).unwrap_or(0));
        feed(self.branch.sign().to_bits());
        feed(params.roundtrip_time().to_bits());
        feed(params.loss_rate_signal().to_bits());
        feed(params.loss_rate_pump().to_bits());
        feed(params.coupling().to_bits());
        h
    }

    /// Validate the configuration against a parameter set and pump profile.
    pub fn validate(&self, params: &OscillatorParams, pump: &PumpProfile) -> Result<SlicePlan> {
        let t_r = params.roundtrip_time();
        if !(self.step > 0.0) {
            return Err(Error::InvalidConfig {
                message: format!("step must be > 0, got {}", self.step),
            });
        }
        let substeps_f = t_r / self.step;
        let substeps = substeps_f.round();
        if substeps < 1.0 || (substeps_f - substeps).abs() > 1e-9 * substeps_f {
            return Err(Error::InvalidConfig {
                message: format!(
                    "step {} must divide the round-trip time {} into whole substeps",
                    self.step, t_r
                ),
            });
        }
        if self.pulses == 0 || self.trajectories == 0 || self.slices == 0 {
            return Err(Error::InvalidConfig {
                message: "pulses, trajectories and slices must all be >= 1".into(),
            });
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::InvalidConfig {
                message: format!("bin_width must be > 0, got {}", self.bin_width),
            });
        }
        if let Some(b) = self.bins_per_period {
            if b < self.slices {
                return Err(Error::InvalidConfig {
                    message: format!("bins_per_period {b} < slices {}", self.slices),
                });
            }
            if ((b as f64 * self.bin_width) - t_r).abs() > 1e-9 * t_r {
                return Err(Error::InvalidConfig {
                    message: format!(
                        "bins_per_period * bin_width = {} must equal the round-trip time {}",
                        b as f64 * self.bin_width,
                        t_r
                    ),
                });
            }
        } else if self.slices as f64 * self.bin_width > t_r * (1.0 + 1e-9) {
            return Err(Error::InvalidConfig {
                message: "slices * bin_width exceeds the round-trip time".into(),
            });
        }

        // Mode-dependent step bounds; all imply Euler stability (rate·ΔT ≤ 0.1 ≪ 2).
        let ky_peak = 2.0 * params.loss_rate_signal() * self.mu0.max(1.0);
        let bound = match self.mode {
            SimMode::Full | SimMode::Vacuum => 0.1 / params.loss_rate_pump(),
            SimMode::Adiabatic => 0.1 / ky_peak,
        };
        if self.step > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig {
                message: format!(
                    "step {} exceeds the {:?}-mode bound {bound}",
                    self.step, self.mode
                ),
            });
        }

        if self.mode != SimMode::Vacuum {
            let peak = pump.peak();
            if (peak - self.mu0).abs() > 1e-9 * self.mu0.max(1.0) {
                return Err(Error::InvalidConfig {
                    message: format!(
                        "config mu0 = {} does not match the pump profile peak {peak}",
                        self.mu0
                    ),
                });
            }
            if !(self.mu0 > 1.0) {
                return Err(Error::InvalidConfig {
                    message: format!(
                        "above-threshold simulation needs mu0 > 1, got {}",
                        self.mu0
                    ),
                });
            }
        }

        let plan = self.slice_plan(params, pump)?;

        if self.init == InitMode::Zero {
            // Slowest transient: κ_x on the weakest live slice (κ_s in vacuum mode).
            let slowest = match self.mode {
                SimMode::Vacuum => params.loss_rate_signal(),
                _ => plan
                    .slices
                    .iter()
                    .filter(|s| s.simulated)
                    .map(|s| 2.0 * params.loss_rate_signal() * (s.mu - 1.0))
                    .fold(f64::INFINITY, f64::min),
            };
            let needed = 5.0 / (slowest * t_r);
            if (self.warmup as f64) < needed {
                return Err(Error::InvalidConfig {
                    message: format!(
                        "zero-init warmup {} round trips < required {:.0} (5/kappa_x slow time)",
                        self.warmup,
                        needed.ceil()
                    ),
                });
            }
        }
        Ok(plan)
    }

    fn slice_plan(&self, params: &OscillatorParams, pump: &PumpProfile) -> Result<SlicePlan> {
        let t_r = params.roundtrip_time();
        let b = self.bins_per_period.unwrap_or(self.slices);
        let first_bin = (b - self.slices) / 2;
        let mut slices = Vec::with_capacity(self.slices);
        let mut any_live = false;
        for j in 0..self.slices {
            let bin = first_bin + j;
            let t = (bin as f64 + 0.5) * self.bin_width - b as f64 * self.bin_width / 2.0;
            let mu = if self.mode == SimMode::Vacuum {
                0.0
            } else {
                pump.pump_parameter(t, t_r)?
            };
            let simulated = self.mode == SimMode::Vacuum || mu > 1.0;
            any_live |= simulated;
            slices.push(SliceInfo {
                bin,
                t,
                mu,
                simulated,
            });
        }
        if !any_live {
            return Err(Error::InvalidConfig {
                message: "no slice is above threshold; nothing to simulate".into(),
            });
        }
        Ok(SlicePlan { slices })
    }
}

/// Metadata of one fast-time slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceInfo {
    /// Bin index on the period grid.
    pub bin: usize,
    /// Bin-center time relative to the pulse center, seconds.
    pub t: f64,
    /// Pump parameter μ(t) at the bin center.
    pub mu: f64,
    /// Whether the slice was above threshold and simulated.
    pub simulated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicePlan {
    pub slices: Vec<SliceInfo>,
}

/// Output quadrature samples of one field: X/Y per (trajectory, slice, pulse).
/// Skipped slices carry zeros and are flagged in `slices`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrainRecord {
    pub field: Field,
    pub bin_width: f64,
    pub roundtrip_time: f64,
    pub pulses: usize,
    pub trajectories: usize,
    pub bins_per_period: Option<usize>,
    pub seed: u64,
    pub config_digest: u64,
    pub slices: Vec<SliceInfo>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PulseTrainRecord {
    fn offset(&self, traj: usize, slice: usize) -> usize {
        (traj * self.slices.len() + slice) * self.pulses
    }

    /// X-quadrature samples of one (trajectory, slice) series.
    pub fn x_series(&self, traj: usize, slice: usize) -> &[f64] {
        let o = self.offset(traj, slice);
        &self.x[o..o + self.pulses]
    }

    /// Y-quadrature samples of one (trajectory, slice) series.
    pub fn y_series(&self, traj: usize, slice: usize) -> &[f64] {
        let o = self.offset(traj, slice);
        &self.y[o..o + self.pulses]
    }

    pub fn validate(&self) -> Result<()> {
        let expect = self.trajectories * self.slices.len() * self.pulses;
        if self.x.len() != expect || self.y.len() != expect {
            return Err(Error::InvalidConfig {
                message: "record sample count does not match trajectories*slices*pulses".into(),
            });
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig {
                message: "record contains non-finite samples".into(),
            });
        }
        Ok(())
    }

    /// Slice-major CSV dump with a metadata header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# pulse_train_record v1\n");
        out.push_str(&format!(
            "# field={} seed={} config={:016x} roundtrip_time_s={:.16e} bin_width_s={:.16e} pulses={} trajectories={} bins_per_period={}\n",
            self.field.label(),
            self.seed,
            self.config_digest,
            self.roundtrip_time,
            self.bin_width,
            self.pulses,
            self.trajectories,
            self.bins_per_period.map(|b| b.to_string()).unwrap_or_else(|| "none".into()),
        ));
        for s in &self.slices {
            out.push_str(&format!(
                "# slice bin={} t_s={:.16e} mu={:.16e} simulated={}\n",
                s.bin, s.t, s.mu, s.simulated as u8
            ));
        }
        out.push_str("traj,slice,pulse,x,y\n");
        for traj in 0..self.trajectories {
            for slice in 0..self.slices.len() {
                let xs = self.x_series(traj, slice);
                let ys = self.y_series(traj, slice);
                for n in 0..self.pulses {
                    out.push_str(&format!(
                        "{traj},{slice},{n},{:.16e},{:.16e}\n",
                        xs[n], ys[n]
                    ));
                }
            }
        }
        out
    }

    /// Parse a dump produced by [`Self::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let perr = |m: &str| Error::Parse {
            message: m.to_string(),
        };
        let mut field = None;
        let mut seed = 0u64;
        let mut config_digest = 0u64;
        let mut roundtrip_time = 0.0;
        let mut bin_width = 0.0;
        let mut pulses = 0usize;
        let mut trajectories = 0usize;
        let mut bins_per_period = None;
        let mut slices = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix("# ") {
                if meta.starts_with("pulse_train_record") {
                    continue;
                }
                if let Some(slice_meta) = meta.strip_prefix("slice ") {
                    let mut info = SliceInfo {
                        bin: 0,
                        t: 0.0,
                        mu: 0.0,
                        simulated: false,
                    };
                    for kv in slice_meta.split_whitespace() {
                        let (k, v) = kv.split_once('=').ok_or_else(|| perr("bad slice meta"))?;
                        match k {
                            "bin" => info.bin = v.parse().map_err(|_| perr("bad bin"))?,
                            "t_s" => info.t = v.parse().map_err(|_| perr("bad t_s"))?,
                            "mu" => info.mu = v.parse().map_err(|_| perr("bad mu"))?,
                            "simulated" => info.simulated = v == "1",
                            _ => return Err(perr("unknown slice key")),
                        }
                    }
                    slices.push(info);
                } else {
                    for kv in meta.split_whitespace() {
                        let (k, v) = kv.split_once('=').ok_or_else(|| perr("bad header"))?;
                        match k {
                            "field" => {
                                field = Some(match v {
                                    "pump" => Field::Pump,
                                    "signal" => Field::Signal,
                                    _ => return Err(perr("unknown field")),
                                })
                            }
                            "seed" => seed = v.parse().map_err(|_| perr("bad seed"))?,
                            "config" => {
                                config_digest = u64::from_str_radix(v, 16)
                                    .map_err(|_| perr("bad config digest"))?
                            }
                            "roundtrip_time_s" => {
                                roundtrip_time = v.parse().map_err(|_| perr("bad T_R"))?
                            }
                            "bin_width_s" => {
                                bin_width = v.parse().map_err(|_| perr("bad bin width"))?
                            }
                            "pulses" => pulses = v.parse().map_err(|_| perr("bad pulses"))?,
                            "trajectories" => {
                                trajectories = v.parse().map_err(|_| perr("bad trajectories"))?
                            }
                            "bins_per_period" => {
                                bins_per_period = if v == "none" {
                                    None
                                } else {
                                    Some(v.parse().map_err(|_| perr("bad bins_per_period"))?)
                                }
                            }
                            _ => return Err(perr("unknown header key")),
                        }
                    }
                }
                continue;
            }
            if line.starts_with("traj,") || line.is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut next = || it.next().ok_or_else(|| perr("short row"));
            let traj: usize = next()?.parse().map_err(|_| perr("bad traj"))?;
            let slice: usize = next()?.parse().map_err(|_| perr("bad slice"))?;
            let pulse: usize = next()?.parse().map_err(|_| perr("bad pulse"))?;
            let x: f64 = next()?.parse().map_err(|_| perr("bad x"))?;
            let y: f64 = next()?.parse().map_err(|_| perr("bad y"))?;
            rows.push((traj, slice, pulse, x, y));
        }
        let field = field.ok_or_else(|| perr("missing field"))?;
        let n = trajectories * slices.len() * pulses;
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for (traj, slice, pulse, xv, yv) in rows {
            if traj >= trajectories || slice >= slices.len() || pulse >= pulses {
                return Err(perr("row index out of range"));
            }
            let o = (traj * slices.len() + slice) * pulses + pulse;
            x[o] = xv;
            y[o] = yv;
        }
        let rec = PulseTrainRecord {
            field,
            bin_width,
            roundtrip_time,
            pulses,
            trajectories,
            bins_per_period,
            seed,
            config_digest,
            slices,
            x,
            y,
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// Matched pump and signal records from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub pump: PulseTrainRecord,
    pub signal: PulseTrainRecord,
}

/// Per-(trajectory, slice) output series produced by the kernel.
#[derive(Debug, Clone, Default)]
pub(crate) struct SliceSeries {
    pub xp: Vec<f64>,
    pub yp: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Integrate one (trajectory, slice) chain and return its recorded outputs.
pub(crate) fn run_slice(
    params: &OscillatorParams,
    cfg: &SimConfig,
    info: &SliceInfo,
    traj: usize,
) -> SliceSeries {
    let t_r = params.roundtrip_time();
    let substeps = cfg.substeps(params);
    let h = t_r / substeps as f64;
    let dt = cfg.bin_width;
    let ks = params.loss_rate_signal();
    let kp = params.loss_rate_pump();
    let sigma = cfg.branch.sign();
    let m = cfg.pulses;
    let total = cfg.warmup + m;
    let stream = crate::rng::NoiseStream::new(cfg.seed, traj as u64, info.bin as u64);

    let mut out = SliceSeries {
        xp: vec![0.0; m],
        yp: vec![0.0; m],
        xs: vec![0.0; m],
        ys: vec![0.0; m],
    };

    // Trip-binned input vacuum: (Σ ξ)/(2 √(S Δt)) has variance 1/(4Δt).
    let vac_norm = 1.0 / (2.0 * (substeps as f64 * dt).sqrt());
    let inv_s = 1.0 / substeps as f64;
    let out_sig = (2.0 * ks * t_r).sqrt();

    match cfg.mode {
        SimMode::Adiabatic => {
            let kx = 2.0 * ks * (info.mu - 1.0);
            let ky = 2.0 * ks * info.mu;
            let c_pump = (kx / (2.0 * dt)).sqrt(); // pump-mediated drive
            let c_sig = (ks / (2.0 * dt)).sqrt();
            let out_pump = (2.0 * kx * t_r).sqrt();
            let sqrt_h = h.sqrt();
            let ax = 1.0 - kx * h;
            let ay = 1.0 - ky * h;
            let drive_var = h * (kx + ks) / (2.0 * dt);
            let (mut x, mut y) = match cfg.init {
                InitMode::Zero => (0.0, 0.0),
                InitMode::Stationary => {
                    let [zx, zy] = stream.init_pair(0);
                    let sx = (drive_var / (1.0 - ax * ax)).sqrt();
                    let sy = (drive_var / (1.0 - ay * ay)).sqrt();
                    (sx * zx, sy * zy)
                }
            };
            for trip in 0..total {
                let mut sum_x = 0.0;
                let mut sum_y = 0.0;
                let mut v_px = 0.0;
                let mut v_sx = 0.0;
                let mut v_py = 0.0;
                let mut v_sy = 0.0;
                for sub in 0..substeps {
                    let [zpx, zsx] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 0);
                    let [zpy, zsy] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 1);
                    x = ax * x + sqrt_h * (sigma * c_pump * zpx + c_sig * zsx);
                    y = ay * y + sqrt_h * (sigma * c_pump * zpy + c_sig * zsy);
                    sum_x += x;
                    sum_y += y;
                    v_px += zpx;
                    v_sx += zsx;
                    v_py += zpy;
                    v_sy += zsy;
                }
                if trip >= cfg.warmup {
                    let n = trip - cfg.warmup;
                    let xbar = sum_x * inv_s;
                    let ybar = sum_y * inv_s;
                    out.xs[n] = out_sig * xbar - vac_norm * v_sx;
                    out.ys[n] = out_sig * ybar - vac_norm * v_sy;
                    out.xp[n] = -sigma * out_pump * xbar + vac_norm * v_px;
                    out.yp[n] = -sigma * out_pump * ybar + vac_norm * v_py;
                }
            }
        }
        SimMode::Full => {
            let kx = 2.0 * ks * (info.mu - 1.0);
            let g = (kp * kx).sqrt(); // coupling 2g√N_s
            let c_p = (kp / (2.0 * dt)).sqrt();
            let c_s = (ks / (2.0 * dt)).sqrt();
            let out_pump = (2.0 * kp * t_r).sqrt();
            let sqrt_h = h.sqrt();
            // One-substep transition matrices for the (pump, signal) pairs.
            let a_x = [[1.0 - kp * h, -sigma * g * h], [sigma * g * h, 1.0]];
            let a_y = [
                [1.0 - kp * h, -sigma * g * h],
                [sigma * g * h, 1.0 - 2.0 * ks * h],
            ];
            let q = [h * c_p * c_p, h * c_s * c_s];
            let (mut xp, mut xs, mut yp, mut ys) = match cfg.init {
                InitMode::Zero => (0.0, 0.0, 0.0, 0.0),
                InitMode::Stationary => {
                    let lx = cholesky2(discrete_lyapunov2(&a_x, &q));
                    let ly = cholesky2(discrete_lyapunov2(&a_y, &q));
                    let [z1, z2] = stream.init_pair(0);
                    let [z3, z4] = stream.init_pair(1);
                    (
                        lx[0][0] * z1,
                        lx[1][0] * z1 + lx[1][1] * z2,
                        ly[0][0] * z3,
                        ly[1][0] * z3 + ly[1][1] * z4,
                    )
                }
            };
            for trip in 0..total {
                let mut sum_xp = 0.0;
                let mut sum_xs = 0.0;
                let mut sum_yp = 0.0;
                let mut sum_ys = 0.0;
                let mut v_px = 0.0;
                let mut v_sx = 0.0;
                let mut v_py = 0.0;
                let mut v_sy = 0.0;
                for sub in 0..substeps {
                    let [zpx, zsx] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 0);
                    let [zpy, zsy] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 1);
                    let nxp = a_x[0][0] * xp + a_x[0][1] * xs + sqrt_h * c_p * zpx;
                    let nxs = a_x[1][0] * xp + a_x[1][1] * xs + sqrt_h * c_s * zsx;
                    let nyp = a_y[0][0] * yp + a_y[0][1] * ys + sqrt_h * c_p * zpy;
                    let nys = a_y[1][0] * yp + a_y[1][1] * ys + sqrt_h * c_s * zsy;
                    xp = nxp;
                    xs = nxs;
                    yp = nyp;
                    ys = nys;
                    sum_xp += xp;
                    sum_xs += xs;
                    sum_yp += yp;
                    sum_ys += ys;
                    v_px += zpx;
                    v_sx += zsx;
                    v_py += zpy;
                    v_sy += zsy;
                }
                if trip >= cfg.warmup {
                    let n = trip - cfg.warmup;
                    out.xp[n] = out_pump * sum_xp * inv_s - vac_norm * v_px;
                    out.xs[n] = out_sig * sum_xs * inv_s - vac_norm * v_sx;
                    out.yp[n] = out_pump * sum_yp * inv_s - vac_norm * v_py;
                    out.ys[n] = out_sig * sum_ys * inv_s - vac_norm * v_sy;
                }
            }
        }
        SimMode::Vacuum => {
            let c_p = (kp / (2.0 * dt)).sqrt();
            let c_s = (ks / (2.0 * dt)).sqrt();
            let out_pump = (2.0 * kp * t_r).sqrt();
            let sqrt_h = h.sqrt();
            let ap = 1.0 - kp * h;
            let as_ = 1.0 - ks * h;
            let (mut xp, mut xs, mut yp, mut ys) = match cfg.init {
                InitMode::Zero => (0.0, 0.0, 0.0, 0.0),
                InitMode::Stationary => {
                    let sp = (h * c_p * c_p / (1.0 - ap * ap)).sqrt();
                    let ss = (h * c_s * c_s / (1.0 - as_ * as_)).sqrt();
                    let [z1, z2] = stream.init_pair(0);
                    let [z3, z4] = stream.init_pair(1);
                    (sp * z1, ss * z2, sp * z3, ss * z4)
                }
            };
            for trip in 0..total {
                let mut sum_xp = 0.0;
                let mut sum_xs = 0.0;
                let mut sum_yp = 0.0;
                let mut sum_ys = 0.0;
                let mut v_px = 0.0;
                let mut v_sx = 0.0;
                let mut v_py = 0.0;
                let mut v_sy = 0.0;
                for sub in 0..substeps {
                    let [zpx, zsx] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 0);
                    let [zpy, zsy] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 1);
                    xp = ap * xp + sqrt_h * c_p * zpx;
                    xs = as_ * xs + sqrt_h * c_s * zsx;
                    yp = ap * yp + sqrt_h * c_p * zpy;
                    ys = as_ * ys + sqrt_h * c_s * zsy;
                    sum_xp += xp;
                    sum_xs += xs;
                    sum_yp += yp;
                    sum_ys += ys;
                    v_px += zpx;
                    v_sx += zsx;
                    v_py += zpy;
                    v_sy += zsy;
                }
                if trip >= cfg.warmup {
                    let n = trip - cfg.warmup;
                    out.xp[n] = out_pump * sum_xp * inv_s - vac_norm * v_px;
                    out.xs[n] = out_sig * sum_xs * inv_s - vac_norm * v_sx;
                    out.yp[n] = out_pump * sum_yp * inv_s - vac_norm * v_py;
                    out.ys[n] = out_sig * sum_ys * inv_s - vac_norm * v_sy;
                }
            }
        }
    }
    out
}

/// Solve Σ = AΣAᵀ + diag(q) for the symmetric 2×2 stationary covariance.
fn discrete_lyapunov2(a: &[[f64; 2]; 2], q: &[f64; 2]) -> [[f64; 2]; 2] {
    let (a11, a12, a21, a22) = (a[0][0], a[0][1], a[1][0], a[1][1]);
    // Unknowns (s11, s12, s22).
    let mut m = [
        [1.0 - a11 * a11, -2.0 * a11 * a12, -a12 * a12, q[0]],
        [
            -a11 * a21,
            1.0 - (a11 * a22 + a12 * a21),
            -a12 * a22,
            0.0,
        ],
        [-a21 * a21, -2.0 * a21 * a22, 1.0 - a22 * a22, q[1]],
    ];
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / p;
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let s11 = m[0][3] / m[0][0];
    let s12 = m[1][3] / m[1][1];
    let s22 = m[2][3] / m[2][2];
    [[s11, s12], [s12, s22]]
}

/// Lower Cholesky factor of a 2×2 SPD matrix.
fn cholesky2(s: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let l11 = s[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { s[0][1] / l11 } else { 0.0 };
    let l22 = (s[1][1] - l21 * l21).max(0.0).sqrt();
    [[l11, 0.0], [l21, l22]]
}

/// Run the configured Monte Carlo and materialize pump and signal records.
///
/// Slices with μ(t) ≤ 1 are skipped (zero samples, flagged in the slice
/// metadata); trajectories are integrated in parallel and assembled in index
/// order, so the result is bit-identical for any thread count.
pub fn simulate(
    params: &OscillatorParams,
    pump: &PumpProfile,
    cfg: &SimConfig,
) -> Result<SimOutput> {
    let plan = cfg.validate(params, pump)?;
    let digest = cfg.digest(params);
    let n_slices = plan.slices.len();
    let m = cfg.pulses;

    let per_traj: Vec<Vec<SliceSeries>> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|traj| {
            plan.slices
                .iter()
                .map(|info| {
                    if info.simulated {
                        run_slice(params, cfg, info, traj)
                    } else {
                        SliceSeries {
                            xp: vec![0.0; m],
                            yp: vec![0.0; m],
                            xs: vec![0.0; m],
                            ys: vec![0.0; m],
                        }
                    }
                })
                .collect()
        })
        .collect();

    let make = |field: Field| -> PulseTrainRecord {
        let mut x = Vec::with_capacity(cfg.trajectories * n_slices * m);
        let mut y = Vec::with_capacity(cfg.trajectories * n_slices * m);
        for traj in &per_traj {
            for series in traj {
                match field {
                    Field::Pump => {
                        x.extend_from_slice(&series.xp);
                        y.extend_from_slice(&series.yp);
                    }
                    Field::Signal => {
                        x.extend_from_slice(&series.xs);
                        y.extend_from_slice(&series.ys);
                    }
                }
            }
        }
        PulseTrainRecord {
            field,
            bin_width: cfg.bin_width,
            roundtrip_time: params.roundtrip_time(),
            pulses: m,
            trajectories: cfg.trajectories,
            bins_per_period: cfg.bins_per_period,
            seed: cfg.seed,
            config_digest: digest,
            slices: plan.slices.clone(),
            x,
            y,
        }
    };
    let out = SimOutput {
        pump: make(Field::Pump),
        signal: make(Field::Signal),
    };
    out.pump.validate()?;
    out.signal.validate()?;
    Ok(out)
}

/// Sample mean and variance of the intracavity signal quadratures at the
/// recorded round trips; used to check the stationary Ornstein-Uhlenbeck
/// level against its closed form.
pub fn intracavity_signal_variance(
    params: &OscillatorParams,
    pump: &PumpProfile,
    cfg: &SimConfig,
) -> Result<(f64, f64)> {
    let plan = cfg.validate(params, pump)?;
    let info = plan
        .slices
        .iter()
        .find(|s| s.simulated)
        .ok_or_else(|| Error::InvalidConfig {
            message: "no live slice".into(),
        })?;
    if cfg.mode != SimMode::Adiabatic {
        return Err(Error::InvalidConfig {
            message: "intracavity diagnostic implemented for adiabatic mode".into(),
        });
    }
    let t_r = params.roundtrip_time();
    let substeps = cfg.substeps(params);
    let h = t_r / substeps as f64;
    let ks = params.loss_rate_signal();
    let kx = 2.0 * ks * (info.mu - 1.0);
    let ky = 2.0 * ks * info.mu;
    let c_pump = (kx / (2.0 * cfg.bin_width)).sqrt();
    let c_sig = (ks / (2.0 * cfg.bin_width)).sqrt();
    let sqrt_h = h.sqrt();
    let sigma = cfg.branch.sign();
    let drive_var = h * (kx + ks) / (2.0 * cfg.bin_width);

    let sums: Vec<(f64, f64)> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|traj| {
            let stream = crate::rng::NoiseStream::new(cfg.seed, traj as u64, info.bin as u64);
            let ax = 1.0 - kx * h;
            let ay = 1.0 - ky * h;
            let (mut x, mut y) = match cfg.init {
                InitMode::Zero => (0.0, 0.0),
                InitMode::Stationary => {
                    let [zx, zy] = stream.init_pair(0);
                    (
                        (drive_var / (1.0 - ax * ax)).sqrt() * zx,
                        (drive_var / (1.0 - ay * ay)).sqrt() * zy,
                    )
                }
            };
            let mut sx2 = 0.0;
            let mut sy2 = 0.0;
            for trip in 0..(cfg.warmup + cfg.pulses) {
                for sub in 0..substeps {
                    let [zpx, zsx] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 0);
                    let [zpy, zsy] =
                        stream.substep_pair(trip as u64, substeps as u64, sub as u64, 1);
                    x = ax * x + sqrt_h * (sigma * c_pump * zpx + c_sig * zsx);
                    y = ay * y + sqrt_h * (sigma * c_pump * zpy + c_sig * zsy);
                }
                if trip >= cfg.warmup {
                    sx2 += x * x;
                    sy2 += y * y;
                }
            }
            (sx2, sy2)
        })
        .collect();
    let n = (cfg.trajectories * cfg.pulses) as f64;
    let (tx, ty) = sums
        .iter()
        .fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
    Ok((tx / n, ty / n))
}
