//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).

use spopo_core::*;

const T_R: f64 = 1e-8;

fn params_ks_tr(ks_tr: f64, kp_over_ks: f64) -> OscillatorParams {
    OscillatorParams::new(T_R, ks_tr / T_R, kp_over_ks * ks_tr / T_R, 1e-4).unwrap()
}

/// splitmix64 for reproducible random parameter grids.
struct Rng(u64);
impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next() >> 11) as f64 / 9_007_199_254_740_992.0
    }
    fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }
}

#[test]
fn acceptance_01_exact_formulas() {
    let mut rng = Rng(0xACCE_0001);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t_r = rng.log_uniform(1e-9, 1e-7);
        let ks = rng.log_uniform(1e-4, 0.09) / t_r;
        let kp = rng.log_uniform(ks * t_r, 2.0) / t_r;
        let g = rng.log_uniform(1e-6, 1.0);
        let mu0 = rng.uniform(1.0, 20.0);
        let p = OscillatorParams::new(t_r, ks, kp, g).unwrap();

        let n_th = ks * ks / (4.0 * g * g);
        worst = worst.max((p.threshold_flux() / n_th - 1.0).abs());

        let s = steady_state(&p, mu0, Branch::Plus).unwrap();
        worst = worst.max((s.pump_flux / n_th - 1.0).abs());
        let n_s = 2.0 * kp / ks * (mu0 - 1.0) * n_th;
        if n_s == 0.0 {
            assert_eq!(s.signal_flux, 0.0);
        } else {
            worst = worst.max((s.signal_flux / n_s - 1.0).abs());
        }
        let sm = steady_state(&p, mu0, Branch::Minus).unwrap();
        worst = worst.max(
            ((sm.signal_phase(0.4) - s.signal_phase(0.4)) / std::f64::consts::PI - 1.0).abs(),
        );

        let r = effective_rates(&p, mu0).unwrap();
        worst = worst.max((r.kappa_x - 2.0 * ks * (mu0 - 1.0)).abs() / (2.0 * ks * mu0));
        worst = worst.max((r.kappa_y / (2.0 * ks * mu0) - 1.0).abs());
    }
    assert!(worst < 1e-12, "worst relative deviation {worst}");
    println!("ACCEPTANCE 1 PASS: exact formulas, worst relative deviation {worst:.3e} over 100 parameter sets");
}

#[test]
fn acceptance_02_pump_noise_floor() {
    // Scan the pump phase-quadrature resonance value over mu0 in [1.01, 4].
    let mut best = (0.0, f64::INFINITY);
    let mut k = 0usize;
    loop {
        let mu0 = 1.01 + 0.0025 * k as f64;
        if mu0 > 4.0 {
            break;
        }
        let v = resonance_value(Field::Pump, Quadrature::Y, mu0).unwrap();
        if v < best.1 {
            best = (mu0, v);
        }
        k += 1;
    }
    assert!(
        (best.0 - 2.0).abs() <= 0.01,
        "minimum located at {} not 2.00 +- 0.01",
        best.0
    );
    assert!(
        (best.1 - 0.5).abs() <= 1e-6,
        "minimum value {} not 0.500 +- 1e-6",
        best.1
    );
    println!(
        "ACCEPTANCE 2 PASS: pump noise floor {:.9} at mu0 = {:.4}",
        best.1, best.0
    );
}

#[test]
fn acceptance_03_threshold_squeezing_limit() {
    let mu0: f64 = 1.001;
    let v = resonance_value(Field::Signal, Quadrature::Y, mu0).unwrap();
    let expected = 1.0 - 1.0 / (mu0 * mu0);
    assert!(
        (v - expected).abs() < 1e-12,
        "resonance value {v} vs 1 - 1/mu0^2 = {expected}"
    );
    assert!((expected - 2.0e-3).abs() < 5e-6); // ~ 1.998e-3
    println!("ACCEPTANCE 3 PASS: signal-Y resonance at mu0 = 1.001 is {v:.6e} (= 1 - 1/mu0^2)");
}

#[test]
fn acceptance_04_below_above_continuity() {
    let p = params_ks_tr(0.01, 100.0);
    let m_max = 12;
    // 1e4 frequencies spanning three resonances.
    let omega_max = 3.0 * 2.0 * std::f64::consts::PI / T_R;
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let w = omega_max * i as f64 / 9_999.0;
        let below = spectrum_below(w, 1.0, &p, m_max).unwrap();
        let above = spectrum_above(Field::Signal, Quadrature::Y, w, 1.0 + f64::EPSILON, &p, m_max)
            .unwrap();
        worst = worst.max((below - above).abs());
    }
    assert!(worst < 1e-12, "worst seam {worst}");
    println!("ACCEPTANCE 4 PASS: below/above threshold seam <= {worst:.3e} over 1e4 points");
}

#[test]
fn acceptance_05_monte_carlo_combs() {
    // kappa_s T_R = 0.01, kappa_p = 100 kappa_s, mu0 = 1.5,
    // K*J = 2e4 slice-trajectories, M = 2000 pulses.
    let p = params_ks_tr(0.01, 100.0);
    let mu0 = 1.5;
    let pump = PumpProfile::rectangular(mu0, 2.5e-9).unwrap();
    let cfg = SimConfig::new(
        SimMode::Adiabatic,
        &p,
        mu0,
        1,
        2.5e-9,
        2000,
        20_000,
        0x5B0B_0005,
    );
    let opts = EstimateOptions::default();
    let study = run_comb_study(&p, &pump, &cfg, &opts).unwrap();
    let (rows, notes) = compare_study(&study, &p, mu0, cfg.branch.sign()).unwrap();

    for note in &notes {
        println!("ACCEPTANCE 5 FLAG: {note}");
    }
    let mut summary = String::new();
    for row in &rows {
        let is_cross = row.pair == FieldPair::PumpSignal;
        let tol = if is_cross { 0.10 } else { 0.05 };
        assert!(
            row.coefficient_rel_dev.abs() <= tol,
            "{} {} coefficient off by {:.2}%: est {:.4e} vs {:.4e}",
            row.pair.label(),
            row.quadrature.label(),
            100.0 * row.coefficient_rel_dev,
            row.estimate.coefficient,
            row.analytic_coefficient
        );
        assert!(
            row.rate_rel_dev.abs() <= tol,
            "{} {} decay rate off by {:.2}%",
            row.pair.label(),
            row.quadrature.label(),
            100.0 * row.rate_rel_dev
        );
        // Signs: the estimator must recover the sign the linearized model
        // actually produces. For the Y cross-comb that differs from the
        // closed-form table (flagged above); everywhere else the two agree.
        assert!(
            row.sign_matches_model,
            "{} {} sign {} disagrees with the model",
            row.pair.label(),
            row.quadrature.label(),
            row.estimate.sign
        );
        assert!(row.estimate.warning.is_none());
        summary.push_str(&format!(
            " {}-{}: c {:+.2}%, rate {:+.2}%;",
            row.pair.label(),
            row.quadrature.label(),
            100.0 * row.coefficient_rel_dev,
            100.0 * row.rate_rel_dev
        ));
    }
    println!("ACCEPTANCE 5 PASS: MC combs vs analytic;{summary}");
}

#[test]
fn acceptance_06_end_to_end_homodyne() {
    let p = params_ks_tr(0.01, 100.0);

    // Vacuum calibration: flat at 1 within the 3-sigma family threshold.
    let calib_pump = PumpProfile::rectangular(1.5, 2.5e-9).unwrap();
    let mut cfg = SimConfig::new(SimMode::Vacuum, &p, 1.5, 4, 0.625e-9, 1024, 96, 0x5B0B_0006);
    cfg.bins_per_period = Some(16);
    cfg.step = T_R / 12.0;
    let lo = LOProfile::new(
        LOShape::Rectangular {
            peak: 1e18,
            tau_lo: 2.5e-9,
        },
        0.0,
        QuadraturePhase::Y,
        Field::Signal,
    )
    .unwrap();
    let out = simulate(&p, &calib_pump, &cfg).unwrap();
    let series = synthesize_photocurrent(&out.signal, &lo).unwrap();
    let vac_spec = photocurrent_spectrum(&series, 1024).unwrap();
    let flat = SpectrumSeries::constant(1.0, Field::Signal, Quadrature::Y, &vac_spec.omega, "shot");
    let report = compare_spectra(&vac_spec, &flat).unwrap();
    assert!(
        report.pass,
        "vacuum calibration: max |z| {:.2} at {:.3e} rad/s (threshold {:.2})",
        report.max_abs_z, report.worst_omega, report.threshold
    );

    // Signal phase quadrature at mu0 = 1.5: dips at Omega = 0 and 2 pi / T_R.
    let mu0 = 1.5;
    let pump = PumpProfile::rectangular(mu0, 2.5e-9).unwrap();
    let mut cfg = SimConfig::new(
        SimMode::Adiabatic,
        &p,
        mu0,
        4,
        0.625e-9,
        2048,
        192,
        0x5B0B_1006,
    );
    cfg.bins_per_period = Some(16);
    let segment = 2048;
    let measured = run_homodyne_measurement(&p, &pump, &cfg, &[lo.clone()], segment).unwrap();
    let measured = &measured[0];
    let m_max = default_m_max(*measured.omega.last().unwrap(), T_R);
    let predicted = SpectrumSeries::analytic_above(
        Field::Signal,
        Quadrature::Y,
        &measured.omega,
        mu0,
        &p,
        m_max,
    )
    .unwrap();

    let mut lines = String::new();
    for omega_m in [0.0, 2.0 * std::f64::consts::PI / T_R] {
        let k = measured.nearest_bin(omega_m);
        let dev = measured.values[k] - predicted.values[k];
        let se = measured.stderr[k];
        assert!(
            dev.abs() <= 3.0 * se,
            "signal-Y at omega {omega_m:.3e}: measured {} vs {} ({}σ)",
            measured.values[k],
            predicted.values[k],
            dev / se
        );
        lines.push_str(&format!(
            " S({:.2e}) = {:.4} vs {:.4} ({:+.2}σ);",
            omega_m,
            measured.values[k],
            predicted.values[k],
            dev / se
        ));
    }

    // Pump phase quadrature at mu0 = 2: the fifty-percent floor.
    let mu0 = 2.0;
    let pump = PumpProfile::rectangular(mu0, 2.5e-9).unwrap();
    let mut cfg = SimConfig::new(
        SimMode::Adiabatic,
        &p,
        mu0,
        4,
        0.625e-9,
        2048,
        128,
        0x5B0B_2006,
    );
    cfg.bins_per_period = Some(16);
    let lo_pump = LOProfile::new(
        LOShape::Rectangular {
            peak: 1e18,
            tau_lo: 2.5e-9,
        },
        0.0,
        QuadraturePhase::Y,
        Field::Pump,
    )
    .unwrap();
    let measured_p = run_homodyne_measurement(&p, &pump, &cfg, &[lo_pump], segment).unwrap();
    let measured_p = &measured_p[0];
    let k0 = measured_p.nearest_bin(0.0);
    let dev = measured_p.values[k0] - 0.5;
    let se = measured_p.stderr[k0];
    assert!(
        dev.abs() <= 3.0 * se,
        "pump-Y floor at mu0=2: {} ({}σ from 0.5)",
        measured_p.values[k0],
        dev / se
    );
    println!(
        "ACCEPTANCE 6 PASS: homodyne;{lines} pump floor {:.4} ({:+.2}σ); vacuum max |z| {:.2} < {:.2}",
        measured_p.values[k0], dev / se, report.max_abs_z, report.threshold
    );
}

#[test]
fn acceptance_07_delay_scan_features() {
    let p = params_ks_tr(0.01, 100.0);

    // Analytic curve with the idealized delta probe; resonance-term evaluation.
    let tau_p = T_R / 4.0;
    let step = tau_p / 512.0;
    let delays: Vec<f64> = (-614..=614).map(|k| k as f64 * step).collect();
    let rows = delay_scan(&p, &[0.5, 2.0], &delays, tau_p, 0.0, 0).unwrap();

    let curve = |mu0: f64| -> Vec<&DelayScanRow> {
        rows.iter().filter(|r| r.mu0 == mu0).collect()
    };

    let above = curve(2.0);
    let at_zero = above.iter().find(|r| r.delay == 0.0).unwrap().noise_at_zero;
    assert!((at_zero - 0.75).abs() <= 1e-6, "center value {at_zero}");
    let neighbor = above
        .iter()
        .find(|r| (r.delay - step).abs() < 1e-18)
        .unwrap()
        .noise_at_zero;
    assert!(neighbor < at_zero, "delay 0 must be a local maximum");
    let t_star = tau_p * (0.5 * 2.0f64.ln()).sqrt();
    for side in [-1.0, 1.0] {
        let zero_row = above
            .iter()
            .filter(|r| r.delay * side > 0.0)
            .min_by(|a, b| a.noise_at_zero.total_cmp(&b.noise_at_zero))
            .unwrap();
        assert!(
            (zero_row.delay.abs() - t_star).abs() <= step + 1e-18,
            "zero at {:.4e} vs {:.4e}",
            zero_row.delay.abs(),
            t_star
        );
        assert!(zero_row.noise_at_zero >= 0.0 && zero_row.noise_at_zero < 1e-2);
    }

    let below = curve(0.5);
    let min = below
        .iter()
        .min_by(|a, b| a.noise_at_zero.total_cmp(&b.noise_at_zero))
        .unwrap();
    assert_eq!(min.delay, 0.0);
    assert!(
        (min.noise_at_zero - (1.0 - 2.0 / 2.25)).abs() <= 1e-6,
        "below-threshold minimum {}",
        min.noise_at_zero
    );

    // Simulated overlay on the above-threshold bins: narrow finite LO, the
    // measured zero-frequency noise vs delay must track the same average.
    let mu0 = 2.0;
    let tau_p = T_R / 2.0;
    let pump = PumpProfile::gaussian(mu0, tau_p).unwrap();
    let bins = 128usize;
    let dt = T_R / bins as f64;
    let mut cfg = SimConfig::new(SimMode::Adiabatic, &p, mu0, 44, dt, 1024, 192, 0x5B0B_0007);
    cfg.bins_per_period = Some(bins);
    let tau_lo = 8.0 * dt;
    let lo_at = |delay: f64| {
        LOProfile::new(
            LOShape::Rectangular {
                peak: 1e18,
                tau_lo,
            },
            delay,
            QuadraturePhase::Y,
            Field::Signal,
        )
        .unwrap()
    };
    let scan_delays: Vec<f64> = (-2..=2).map(|k| k as f64 * 8.0 * dt).collect();
    let los: Vec<LOProfile> = scan_delays.iter().map(|&d| lo_at(d)).collect();
    let measured = run_homodyne_measurement(&p, &pump, &cfg, &los, 1024).unwrap();
    let m_max = default_m_max(std::f64::consts::PI / dt, T_R);
    let mut overlay = String::new();
    for (i, spec) in measured.iter().enumerate() {
        let k0 = spec.nearest_bin(0.0);
        let predicted =
            spectrum_general(Field::Signal, 0.0, &pump, &los[i], &p, m_max).unwrap();
        let dev = spec.values[k0] - predicted;
        let se = spec.stderr[k0];
        assert!(
            dev.abs() <= 3.0 * se,
            "delay {:.3e}: measured {} vs {} ({:.2}σ)",
            scan_delays[i],
            spec.values[k0],
            predicted,
            dev / se
        );
        overlay.push_str(&format!(" {:+.2}σ", dev / se));
    }
    println!(
        "ACCEPTANCE 7 PASS: delay scan features exact; simulated overlay deviations{overlay}"
    );
}

#[test]
fn acceptance_08_validity_margin() {
    // lambda = 0.4 um, P_th = 50 W, T_F = 10 fs, kappa_p = 10 kappa_s.
    let t_r = 1e-9;
    let ks = 4e7;
    let p = OscillatorParams::from_threshold_power(t_r, ks, 10.0 * ks, 50.0, 0.4e-6).unwrap();
    let n_th = p.threshold_flux();
    let margin = validity_margin(&p, n_th, 10e-15).unwrap();
    assert!(
        (margin / 3.1e-4 - 1.0).abs() <= 0.05,
        "margin {margin} not within 5% of 3.1e-4"
    );
    assert_eq!(margin_order_of_magnitude(margin), 1e-3);
    // mu0 = 1.1 clears the bound by a wide factor.
    assert!(0.1 > 10.0 * margin);
    println!(
        "ACCEPTANCE 8 PASS: validity margin {margin:.4e}, order {:.0e}, mu0 = 1.1 clears it {:.0}x",
        margin_order_of_magnitude(margin),
        0.1 / margin
    );
}

#[test]
fn acceptance_09_property_suites() {
    let p = params_ks_tr(0.01, 100.0);

    // Spectrum bounds and resonance uncertainty products on a mu0 x omega grid.
    for i in 0..30 {
        let mu0 = 1.01 + 0.3 * i as f64;
        for k in 0..200 {
            let w = k as f64 * 5e6;
            let sy = spectrum_above(Field::Signal, Quadrature::Y, w, mu0, &p, 12).unwrap();
            let py = spectrum_above(Field::Pump, Quadrature::Y, w, mu0, &p, 12).unwrap();
            let sx = spectrum_above(Field::Signal, Quadrature::X, w, mu0, &p, 12).unwrap();
            let px = spectrum_above(Field::Pump, Quadrature::X, w, mu0, &p, 12).unwrap();
            assert!((0.0..=1.0).contains(&sy) && (0.0..=1.0).contains(&py));
            assert!(sx >= 1.0 && px >= 1.0);
        }
        for field in [Field::Pump, Field::Signal] {
            let x = resonance_value(field, Quadrature::X, mu0).unwrap();
            let y = resonance_value(field, Quadrature::Y, mu0).unwrap();
            assert!(x * y >= 1.0);
        }
    }

    // Comb locality / slice independence: matched-bin covariance between
    // different slices is consistent with zero (3-sigma family test).
    let pump = PumpProfile::rectangular(1.5, 2.5e-9).unwrap();
    let cfg = SimConfig::new(
        SimMode::Adiabatic,
        &p,
        1.5,
        2,
        1.25e-9,
        400,
        1500,
        0x5B0B_0009,
    );
    let out = simulate(&p, &pump, &cfg).unwrap();
    let mut zs = Vec::new();
    for lag in 0..4usize {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut n = 0usize;
        for traj in 0..cfg.trajectories {
            let a = out.signal.y_series(traj, 0);
            let b = out.signal.y_series(traj, 1);
            let mut acc = 0.0;
            for i in 0..a.len() - lag {
                acc += a[i] * b[i + lag];
            }
            let v = acc / (a.len() - lag) as f64;
            sum += v;
            sum_sq += v * v;
            n += 1;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        zs.push(mean / se);
    }
    let max_z = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let threshold = spopo_core::homodyne::family_threshold(zs.len());
    assert!(
        max_z <= threshold,
        "cross-slice covariance max |z| {max_z} exceeds {threshold}"
    );

    // Determinism under parallelism: bit-identical study for 1 vs 2 threads.
    let small = SimConfig::new(
        SimMode::Adiabatic,
        &p,
        1.5,
        1,
        2.5e-9,
        150,
        1000,
        0x5B0B_1009,
    );
    let opts = EstimateOptions {
        max_lag: 40,
        ..Default::default()
    };
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool2 = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .unwrap();
    let s1 = pool1.install(|| run_comb_study(&p, &pump, &small, &opts).unwrap());
    let s2 = pool2.install(|| run_comb_study(&p, &pump, &small, &opts).unwrap());
    assert_eq!(s1, s2);

    println!(
        "ACCEPTANCE 9 PASS: bounds, uncertainty products, locality (max |z| {max_z:.2} <= {threshold:.2}), determinism"
    );
}
