//! Task implementations. Every task writes CSV/JSON files through the output
//! tracker and reports whether a measured-vs-predicted comparison passed.

use crate::config::{parse_field, RunConfig};
use crate::manifest::{OutputTracker, ValidityReport};
use anyhow::{anyhow, bail, Context};
use spopo_core::*;

pub struct TaskResult {
    /// `Some(false)` makes the process exit with the comparison-failure code.
    pub comparison_pass: Option<bool>,
    pub notes: Vec<String>,
}

impl TaskResult {
    fn ok() -> Self {
        TaskResult {
            comparison_pass: None,
            notes: Vec::new(),
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn run_task(
    task: &str,
    cfg: &RunConfig,
    seed: u64,
    out: &mut OutputTracker,
) -> anyhow::Result<TaskResult> {
    match task {
        "steady-state" => steady_state_task(cfg, out),
        "combs" => combs_task(cfg, seed, out),
        "spectrum" => spectrum_task(cfg, out),
        "simulate" => simulate_task(cfg, seed, out),
        "homodyne" => homodyne_task(cfg, seed, out),
        "fig4" => fig4_task(cfg, out),
        "validity" => validity_task(cfg, out),
        other => bail!("unknown task `{other}`"),
    }
}

/// Small-fluctuation validity check; computed for the manifest whenever the
/// configuration pins an averaging time (the validity task or the simulation
/// bin width).
pub fn validity_for_manifest(cfg: &RunConfig) -> Option<ValidityReport> {
    let params = cfg.oscillator.build().ok()?;
    let t_f = cfg
        .validity
        .as_ref()
        .map(|v| v.t_f_s)
        .or_else(|| cfg.sim.as_ref().map(|s| s.bin_width_s))?;
    let margin = validity_margin(&params, params.threshold_flux(), t_f).ok()?;
    let mu0 = cfg
        .validity
        .as_ref()
        .map(|v| v.mu0)
        .or_else(|| cfg.pump.as_ref().and_then(|p| p.build().ok()).map(|p| p.peak()));
    let (excess, verdict) = match mu0 {
        Some(m) if m > 1.0 => {
            let ratio = (m - 1.0) / margin;
            let verdict = if ratio >= 10.0 { "PASS" } else { "WARN" };
            (Some(ratio), Some(verdict.to_string()))
        }
        _ => (None, None),
    };
    Some(ValidityReport {
        margin,
        order_of_magnitude: margin_order_of_magnitude(margin),
        mu0,
        excess_over_margin: excess,
        verdict,
        averaging_time_s: t_f,
    })
}

fn steady_state_task(cfg: &RunConfig, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let task = cfg
        .steady_state
        .as_ref()
        .ok_or_else(|| anyhow!("config lacks a `steady_state` section"))?;
    let state = steady_state(&params, task.mu0, Branch::Plus)?;
    let rates = effective_rates(&params, task.mu0)?;
    let mut csv = String::from("quantity,value,unit\n");
    let rows = [
        ("threshold_flux", params.threshold_flux(), "photons_per_s"),
        ("pump_flux", state.pump_flux, "photons_per_s"),
        ("signal_flux", state.signal_flux, "photons_per_s"),
        ("kappa_x", rates.kappa_x, "per_s"),
        ("kappa_y", rates.kappa_y, "per_s"),
        (
            "mirror_transmission_signal",
            params.mirror_transmission_signal(),
            "dimensionless",
        ),
        (
            "mirror_transmission_pump",
            params.mirror_transmission_pump(),
            "dimensionless",
        ),
        (
            "adiabatic_warning",
            rates.adiabatic_warning as u8 as f64,
            "flag",
        ),
    ];
    for (name, value, unit) in rows {
        csv.push_str(&format!("{name},{},{unit}\n", fmt(value)));
    }
    out.write("steady_state.csv", &csv)?;
    Ok(TaskResult::ok())
}

fn combs_task(cfg: &RunConfig, seed: u64, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let task = cfg
        .combs
        .as_ref()
        .ok_or_else(|| anyhow!("config lacks a `combs` section"))?;
    let mu0 = task.mu0;

    let mut items: Vec<(String, CorrelationComb)> = Vec::new();
    for field in [Field::Pump, Field::Signal] {
        for quad in [Quadrature::X, Quadrature::Y] {
            let comb = quadrature_comb(field, quad, &params, mu0)?;
            items.push((format!("{}-{}", comb.pair.label(), quad.label()), comb));
        }
    }
    for quad in [Quadrature::X, Quadrature::Y] {
        let comb = cross_comb(quad, &params, mu0)?;
        items.push((format!("{}-{}", comb.pair.label(), quad.label()), comb));
    }

    let mut notes: Vec<String> = Vec::new();
    let estimates = if task.estimate {
        let pump = cfg
            .pump
            .as_ref()
            .ok_or_else(|| anyhow!("combs.estimate needs a `pump` section"))?
            .build()?;
        let sim = cfg
            .sim
            .as_ref()
            .ok_or_else(|| anyhow!("combs.estimate needs a `sim` section"))?
            .build(&params, pump.peak(), seed)?;
        let opts = EstimateOptions {
            max_lag: task.max_lag.unwrap_or(96),
            ..Default::default()
        };
        let study = run_comb_study(&params, &pump, &sim, &opts)?;
        let (rows, study_notes) = compare_study(&study, &params, mu0, sim.branch.sign())?;
        notes = study_notes;
        Some(rows)
    } else {
        None
    };

    let mut csv = String::new();
    for note in &notes {
        csv.push_str(&format!("# note: {note}\n"));
    }
    csv.push_str("pair,quadrature,has_vacuum_term,coefficient,sign,decay_rate_per_s,decay_rate_times_tr");
    if estimates.is_some() {
        csv.push_str(",est_coefficient,est_coefficient_se,est_rate_times_tr,est_rate_se,est_sign,usable_lags,warning");
    }
    csv.push('\n');
    let t_r = params.roundtrip_time();
    for (i, (label, comb)) in items.iter().enumerate() {
        csv.push_str(&format!(
            "{label},{},{},{},{},{},{}",
            comb.quadrature.label(),
            comb.has_vacuum_term as u8,
            fmt(comb.coefficient),
            comb.sign as i8,
            fmt(comb.decay_rate),
            fmt(comb.decay_rate * t_r),
        ));
        if let Some(rows) = &estimates {
            let est = &rows[i].estimate;
            csv.push_str(&format!(
                ",{},{},{},{},{},{},{}",
                fmt(est.coefficient),
                fmt(est.coefficient_se),
                fmt(est.decay_rate_tr),
                fmt(est.decay_rate_tr_se),
                est.sign as i8,
                est.usable_lags,
                est.warning.map(|w| format!("{w:?}")).unwrap_or_default(),
            ));
        }
        csv.push('\n');
    }
    out.write("combs.csv", &csv)?;
    Ok(TaskResult {
        comparison_pass: None,
        notes,
    })
}

fn spectrum_task(cfg: &RunConfig, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let task = cfg
        .spectrum
        .as_ref()
        .ok_or_else(|| anyhow!("config lacks a `spectrum` section"))?;
    let field = parse_field(&task.field)?;
    let quad = match task.quadrature.as_str() {
        "x" => Quadrature::X,
        "y" => Quadrature::Y,
        other => bail!("spectrum.quadrature: unknown `{other}`"),
    };
    let t_r = params.roundtrip_time();
    let omega_max = task
        .omega_max_rad_s
        .unwrap_or(2.5 * 2.0 * std::f64::consts::PI / t_r);
    let m_max = task.m_max.unwrap_or_else(|| default_m_max(omega_max, t_r));
    let n = task.points.max(2);
    let omega: Vec<f64> = (0..n)
        .map(|i| omega_max * i as f64 / (n - 1) as f64)
        .collect();
    let series = SpectrumSeries::analytic_above(field, quad, &omega, task.mu0, &params, m_max)?;
    out.write("spectrum.csv", &series.to_csv())?;
    Ok(TaskResult::ok())
}

fn simulate_task(cfg: &RunConfig, seed: u64, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let pump = cfg
        .pump
        .as_ref()
        .ok_or_else(|| anyhow!("simulate needs a `pump` section"))?
        .build()?;
    let sim = cfg
        .sim
        .as_ref()
        .ok_or_else(|| anyhow!("simulate needs a `sim` section"))?
        .build(&params, pump.peak(), seed)?;
    let result = simulate(&params, &pump, &sim)?;
    out.write("pump_record.csv", &result.pump.to_csv())?;
    out.write("signal_record.csv", &result.signal.to_csv())?;
    Ok(TaskResult::ok())
}

fn homodyne_task(cfg: &RunConfig, seed: u64, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let task = cfg
        .homodyne
        .as_ref()
        .ok_or_else(|| anyhow!("config lacks a `homodyne` section"))?;
    let lo = cfg
        .lo
        .as_ref()
        .ok_or_else(|| anyhow!("homodyne needs an `lo` section"))?
        .build()?;
    let pump_profile = cfg
        .pump
        .as_ref()
        .ok_or_else(|| anyhow!("homodyne needs a `pump` section"))?
        .build()?;

    // Record of the analyzed field: read a dump or simulate inline.
    let record_path = match lo.target {
        Field::Pump => task.pump_record.as_ref(),
        Field::Signal => task.signal_record.as_ref(),
    };
    let record = match record_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading record {path}"))?;
            PulseTrainRecord::from_csv(&text)?
        }
        None => {
            let sim = cfg
                .sim
                .as_ref()
                .ok_or_else(|| anyhow!("homodyne needs `sim` or a record path"))?
                .build(&params, pump_profile.peak(), seed)?;
            let result = simulate(&params, &pump_profile, &sim)?;
            match lo.target {
                Field::Pump => result.pump,
                Field::Signal => result.signal,
            }
        }
    };

    let series = synthesize_photocurrent(&record, &lo)?;
    let segment = task.segment_pulses.unwrap_or(record.pulses);
    let measured = photocurrent_spectrum(&series, segment)?;
    out.write("measured_spectrum.csv", &measured.to_csv())?;

    if !task.compare {
        return Ok(TaskResult::ok());
    }

    let t_r = params.roundtrip_time();
    let band = task.compare_band_reps * 2.0 * std::f64::consts::PI / t_r;
    let measured_band = measured.truncated(band);
    let m_max = default_m_max(band, t_r);
    let quad = measured.quadrature;
    let mu0 = pump_profile.peak();
    let predicted = match task.prediction.as_str() {
        "shot-noise" => {
            SpectrumSeries::constant(1.0, record.field, quad, &measured_band.omega, "shot noise")
        }
        "analytic" => {
            if !(mu0 > 1.0) {
                bail!("analytic homodyne prediction needs an above-threshold pump (peak mu = {mu0}); use prediction = \"shot-noise\" for calibration runs");
            }
            // Phase quadratures go through the LO-weighted average of the
            // instantaneous spectrum; the amplitude counterpart is only
            // available for a rectangular pump under a matched LO.
            let values = measured_band
                .omega
                .iter()
                .map(|&w| match quad {
                    Quadrature::Y => Ok(spectrum_general(
                        record.field,
                        w,
                        &pump_profile,
                        &lo,
                        &params,
                        m_max,
                    )?),
                    Quadrature::X => {
                        if cfg.pump.as_ref().map(|p| p.shape.as_str()) != Some("rectangular") {
                            bail!(
                                "amplitude-quadrature prediction is only available for a rectangular pump"
                            );
                        }
                        Ok(spectrum_above(
                            record.field,
                            Quadrature::X,
                            w,
                            mu0,
                            &params,
                            m_max,
                        )?)
                    }
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            SpectrumSeries {
                omega: measured_band.omega.clone(),
                values,
                stderr: Vec::new(),
                field: record.field,
                quadrature: quad,
                label: "analytic prediction".into(),
            }
        }
        other => bail!("homodyne.prediction: unknown mode `{other}`"),
    };
    out.write("predicted_spectrum.csv", &predicted.to_csv())?;

    let report = compare_spectra(&measured_band, &predicted)?;
    out.write("comparison.json", &report.to_json())?;
    let mut csv = String::from("omega_rad_s,measured,stderr,predicted,z\n");
    for i in 0..measured_band.omega.len() {
        let z = if measured_band.stderr[i] > 0.0 {
            (measured_band.values[i] - predicted.values[i]) / measured_band.stderr[i]
        } else {
            0.0
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(measured_band.omega[i]),
            fmt(measured_band.values[i]),
            fmt(measured_band.stderr[i]),
            fmt(predicted.values[i]),
            fmt(z)
        ));
    }
    out.write("comparison.csv", &csv)?;
    Ok(TaskResult {
        comparison_pass: Some(report.pass),
        notes: vec![format!(
            "comparison max |z| = {:.3} over {} points (threshold {:.2})",
            report.max_abs_z, report.n_points, report.threshold
        )],
    })
}

fn fig4_task(cfg: &RunConfig, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let task = cfg
        .fig4
        .as_ref()
        .ok_or_else(|| anyhow!("config lacks a `fig4` section"))?;
    let span = task.delay_span_s.unwrap_or(2.4 * task.tau_p_s);
    let n = task.delay_points.max(3) | 1; // odd, so the grid contains zero
    let delays: Vec<f64> = (0..n)
        .map(|i| span * (i as f64 / (n - 1) as f64 - 0.5))
        .collect();
    let rows = delay_scan(
        &params,
        &task.mu0_list,
        &delays,
        task.tau_p_s,
        task.lo_width_s,
        task.m_max,
    )?;
    let mut csv = String::from("mu0,delay_s,noise_at_zero_frequency\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt(r.mu0),
            fmt(r.delay),
            fmt(r.noise_at_zero)
        ));
    }
    out.write("fig4.csv", &csv)?;
    Ok(TaskResult::ok())
}

fn validity_task(cfg: &RunConfig, out: &mut OutputTracker) -> anyhow::Result<TaskResult> {
    let params = cfg.oscillator.build()?;
    let task = cfg
        .validity
        .as_ref()
        .ok_or_else(|| anyhow!("config lacks a `validity` section"))?;
    let margin = validity_margin(&params, params.threshold_flux(), task.t_f_s)?;
    let ratio = (task.mu0 - 1.0) / margin;
    let verdict = if ratio >= 10.0 { "PASS" } else { "WARN" };
    let json = format!(
        "{{\"margin\":{margin:.6e},\"order_of_magnitude\":{:.0e},\"mu0\":{},\"excess_over_margin\":{ratio:.3},\"verdict\":\"{verdict}\"}}",
        margin_order_of_magnitude(margin),
        task.mu0,
    );
    out.write("validity.json", &json)?;
    println!(
        "validity margin {margin:.4e} (order {:.0e}); mu0 - 1 = {} exceeds it {ratio:.0}x: {verdict}",
        margin_order_of_magnitude(margin),
        task.mu0 - 1.0
    );
    Ok(TaskResult::ok())
}
