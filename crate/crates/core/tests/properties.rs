use std::f64::consts::{FRAC_PI_2, PI};

use optosqueeze::config::{parse_config, DEFAULT_CONFIG};
use optosqueeze::csvio::{parse_lock_sweep, parse_trace, write_lock_sweep, write_trace};
use optosqueeze::instrument::{
    cell_centered_grid, lock_to_quadrature, quadrature_to_lock, rbw_resample, SpectrumTrace,
};
use optosqueeze::model::{mech_susceptibility, spectrum_full, squeezing_cross_term};
use optosqueeze::noise::{
    absorptive_psd, apply_detection_chain, bath_occupation, mix_loss, phase_noise_psd,
    AbsorptiveNoiseModel, BathModel, DetectionChain, LaserNoiseModel,
};
use optosqueeze::oracle::{matrix_solve_spectrum, random_draw, InputCorrelationMatrix};
use optosqueeze::params::{MechanicalMode, OpticalMode, SystemParams};
use optosqueeze::scenario::{NoiseToggles, Scenario};
use optosqueeze::units::hz_to_rad;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reference() -> SystemParams {
    parse_config(DEFAULT_CONFIG).unwrap().system_params().unwrap()
}

fn draw(seed: u64) -> optosqueeze::oracle::Draw {
    random_draw(&mut ChaCha8Rng::seed_from_u64(seed), &reference(), 3.0).unwrap()
}

/// Resonantly driven, perfectly coupled, deep bad-cavity system.
fn bad_cavity(kappa_over_wm: f64, n_c: f64) -> SystemParams {
    let wm = hz_to_rad(28e6);
    let k = kappa_over_wm * wm;
    let o = OpticalMode::new(hz_to_rad(194.67e12), k, k).unwrap();
    let m = MechanicalMode::from_quality_factor(wm, 1.66e5, hz_to_rad(750e3)).unwrap();
    SystemParams::new(o, m, 0.0, n_c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn uncoupled_system_sits_at_shot_noise(seed in any::<u64>()) {
        let d = draw(seed);
        let m = d.params.mechanical;
        let bare = MechanicalMode::new(m.omega_m0, m.gamma_i, 0.0).unwrap();
        let p = d.params.with_mechanical(bare).unwrap();
        let s = spectrum_full(d.omega, d.theta, &p, d.nbar).total;
        prop_assert!((s - 1.0).abs() <= 1e-12, "{s}");
    }

    #[test]
    fn spectrum_parts_are_real_and_nonnegative(seed in any::<u64>()) {
        let d = draw(seed);
        let s = spectrum_full(d.omega, d.theta, &d.params, d.nbar);
        prop_assert!(s.total.is_finite() && s.total >= 0.0);
        prop_assert!(s.thermal >= 0.0);
    }

    #[test]
    fn matrix_solve_agrees(seed in any::<u64>()) {
        let d = draw(seed);
        let a = spectrum_full(d.omega, d.theta, &d.params, d.nbar).total;
        let b = matrix_solve_spectrum(
            d.omega, d.theta, &d.params, &InputCorrelationMatrix::vacuum_thermal(d.nbar),
        ).unwrap();
        prop_assert!(((a - b) / b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn technical_noise_is_nonnegative(seed in any::<u64>(), amp in 0.0..1e-2f64, s_ww in 0.0..1e5f64) {
        let d = draw(seed);
        let abs = AbsorptiveNoiseModel::new(amp, 1e6).unwrap();
        let laser = LaserNoiseModel::new(s_ww).unwrap();
        prop_assert!(absorptive_psd(d.omega.abs(), d.theta, &d.params, &abs).unwrap() >= 0.0);
        prop_assert!(phase_noise_psd(d.omega, d.theta, &d.params, &laser) >= 0.0);
    }

    #[test]
    fn phase_noise_vanishes_without_laser_noise(seed in any::<u64>()) {
        let d = draw(seed);
        let laser = LaserNoiseModel::new(0.0).unwrap();
        prop_assert_eq!(phase_noise_psd(d.omega, d.theta, &d.params, &laser), 0.0);
    }

    #[test]
    fn absorptive_slope_is_minus_half(seed in any::<u64>(), lo in 1e5..1e8f64) {
        let d = draw(seed);
        let m = AbsorptiveNoiseModel::new(1e-3, 1e6).unwrap();
        let w0 = hz_to_rad(lo);
        let a = absorptive_psd(w0, d.theta, &d.params, &m).unwrap();
        let b = absorptive_psd(10.0 * w0, d.theta, &d.params, &m).unwrap();
        prop_assume!(a > 0.0);
        prop_assert!(((b / a).log10() + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn loss_mixing_is_affine(s in 0.0..10.0f64, t in 0.0..10.0f64, e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64, a in -2.0..2.0f64) {
        prop_assert_eq!(mix_loss(1.0, e1), 1.0);
        let composed = mix_loss(mix_loss(s, e1), e2);
        prop_assert!((composed - mix_loss(s, e1 * e2)).abs() <= 1e-12);
        let lhs = mix_loss(a * s + (1.0 - a) * t, e1);
        let rhs = a * mix_loss(s, e1) + (1.0 - a) * mix_loss(t, e1);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn detection_chain_fixes_shot_noise(eta_k in 0.01..=1.0f64, hd in 0.1..=1.0f64) {
        let chain = DetectionChain { eta_hd: hd, ..DetectionChain::default() };
        prop_assert_eq!(apply_detection_chain(1.0, &chain, eta_k), 1.0);
    }

    #[test]
    fn occupation_times_frequency_is_constant(t in 1e-2..1e3f64, w1 in 1e5..1e10f64, w2 in 1e5..1e10f64) {
        let a = bath_occupation(w1, t).unwrap() * w1;
        let b = bath_occupation(w2, t).unwrap() * w2;
        prop_assert!(((a - b) / a).abs() <= 1e-12);
    }

    #[test]
    fn effective_temperature_is_affine(t0 in 0.1..300.0f64, c0 in 0.0..1e-2f64, n1 in 0.0..1e4f64, n2 in 0.0..1e4f64) {
        let b = BathModel::new(t0, c0).unwrap();
        let mid = b.effective_temperature(0.5 * (n1 + n2));
        let avg = 0.5 * (b.effective_temperature(n1) + b.effective_temperature(n2));
        prop_assert!((mid - avg).abs() <= 1e-12 * mid);
    }

    #[test]
    fn lock_round_trip(tl in -PI..PI, delta_over_kappa in 0.0..0.5f64) {
        let o = reference().optical;
        let d = delta_over_kappa * o.kappa;
        let q = lock_to_quadrature(tl, &o, d);
        let back = quadrature_to_lock(q.theta, &o, d);
        let diff = (back.theta_lock - tl).rem_euclid(2.0 * PI);
        prop_assert!(diff.min(2.0 * PI - diff) <= 1e-12);
    }

    #[test]
    fn rbw_resample_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, phase in 0.0..PI) {
        let f = cell_centered_grid(0.0, 10e6, 2000);
        let x: Vec<f64> = f.iter().map(|v| 1.0 + (v / 7e5 + phase).sin().powi(2)).collect();
        let y: Vec<f64> = f.iter().map(|v| 2.0 + (v / 3e6).cos()).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a.abs() * p + b.abs() * q).collect();
        let out = cell_centered_grid(1e6, 9e6, 81);
        let rx = rbw_resample(&SpectrumTrace::new(f.clone(), x).unwrap(), 3e5, &out).unwrap();
        let ry = rbw_resample(&SpectrumTrace::new(f.clone(), y).unwrap(), 3e5, &out).unwrap();
        let rxy = rbw_resample(&SpectrumTrace::new(f, xy).unwrap(), 3e5, &out).unwrap();
        for k in 0..out.len() {
            let want = a.abs() * rx.values[k] + b.abs() * ry.values[k];
            prop_assert!((rxy.values[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn trace_csv_round_trip(vals in prop::collection::vec(0.0..1e3f64, 1..40), step in 1.0..1e5f64) {
        let freqs: Vec<f64> = (0..vals.len()).map(|k| k as f64 * step).collect();
        let t = SpectrumTrace::new(freqs, vals).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        let back = parse_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (p, q) in back.values.iter().zip(&t.values) {
            prop_assert!((p - q).abs() <= 1e-8 * q.abs().max(1e-300));
        }
    }

    #[test]
    fn lock_sweep_csv_round_trip(rows in prop::collection::vec((-FRAC_PI_2..FRAC_PI_2, 0.0..1e9f64), 0..30)) {
        let mut buf = Vec::new();
        write_lock_sweep(&mut buf, &rows).unwrap();
        let back = parse_lock_sweep(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for ((a, b), (c, d)) in back.iter().zip(&rows) {
            prop_assert!((a - c).abs() <= 1e-8 * c.abs().max(1e-300));
            prop_assert!((b - d).abs() <= 1e-8 * d.abs().max(1e-300));
        }
    }

    #[test]
    fn config_survives_canonical_form(n_c in 1.0..5e3f64, delta in 0.0..0.3f64, seed in 0..=i64::MAX as u64) {
        let mut c = parse_config(DEFAULT_CONFIG).unwrap();
        c.drive.n_c = n_c;
        c.drive.delta_over_kappa = delta;
        c.synth.seed = seed;
        let back = parse_config(&c.to_canonical_string()).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn cross_term_plus_back_action_matches_full_model() {
    for (ratio, n_c) in [(122.0, 790.0), (300.0, 50.0), (1000.0, 10.0)] {
        let p = bad_cavity(ratio, n_c);
        let eps = p.measurement_ratio();
        for theta in [-1.2, -FRAC_PI_2 / 2.0, 0.3, 1.0] {
            for k in 0..=400 {
                let w = 2.0 * p.omega_m * k as f64 / 400.0;
                let chi2 = mech_susceptibility(w, &p.mechanical).norm_sqr();
                // Cavity filtering enters at O(ε (ω/κ)²); it only matters once ε is tiny.
                let filter = 4.0 * eps * chi2.sqrt() * (2.0 * w / p.optical.kappa).powi(2);
                let ba = 8.0 * eps * eps * chi2 * (1.0 - (2.0 * theta).cos());
                let s = spectrum_full(w, theta, &p, 0.0).total;
                let resid = s - 1.0 - squeezing_cross_term(w, theta, &p) - ba;
                assert!(
                    resid.abs() <= 2.0 * eps * eps * chi2.max(1.0) + filter,
                    "κ/ω_m {ratio} θ {theta} ω/ω_m {}: residual {resid:e}",
                    w / p.omega_m
                );
            }
        }
    }
}

#[test]
fn optimal_quadrature_flips_across_resonance() {
    let p = reference();
    let thetas: Vec<f64> = (0..3600).map(|k| -FRAC_PI_2 + PI * k as f64 / 3600.0).collect();
    let best = |w: f64| {
        thetas
            .iter()
            .copied()
            .min_by(|a, b| spectrum_full(w, *a, &p, 0.0).total.total_cmp(&spectrum_full(w, *b, &p, 0.0).total))
            .unwrap()
    };
    let below = best(0.95 * p.omega_m);
    let above = best(1.05 * p.omega_m);
    assert!(below * above < 0.0, "{below} {above}");
}

#[test]
fn quantum_map_has_period_pi_in_lock_angle() {
    let mut c = parse_config(DEFAULT_CONFIG).unwrap();
    c.drive.delta_over_kappa = 0.0;
    let s: Scenario = c.scenario().unwrap().with_toggles(NoiseToggles::QUANTUM_ONLY);
    for tl in [-1.3, -0.2, 0.4, 1.1] {
        for f in [20e6, 27.9e6, 28.1e6, 35e6] {
            let w = hz_to_rad(f);
            let a = s.detected(w, s.theta_for_lock(tl)).unwrap();
            let b = s.detected(w, s.theta_for_lock(tl + PI)).unwrap();
            assert!((a - b).abs() <= 1e-10, "{a} {b}");
        }
    }
}
