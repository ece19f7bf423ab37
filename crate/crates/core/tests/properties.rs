//! Property suites for the documented invariants of every module.

use proptest::prelude::*;
use wgnlink_core::channel_sim::MultiSectionModel;
use wgnlink_core::linalg::{self, CMat};
use wgnlink_core::signal_core::{generate_wgn_mimo, nmse_db, resample_mimo, GaussianFilter};
use wgnlink_core::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// `y = x + n` with `n` independent of `x` at the given SNR.
fn awgn_pair(n: usize, snr_db: f64, seed: u64) -> (ComplexSignal, ComplexSignal) {
    let x = generate_wgn(n, 30e9, 1.0, seed).unwrap();
    let w = generate_wgn(n, 30e9, 10f64.powf(-snr_db / 10.0), seed ^ 0x5555).unwrap();
    let y = x.samples().iter().zip(w.samples()).map(|(a, b)| a + b).collect();
    (x.clone(), ComplexSignal::new(y, 30e9).unwrap())
}

fn rings(x: &ComplexSignal, n: usize) -> RingConstellation {
    build_ring_constellation(n, measure_power(x).unwrap(), 64).unwrap()
}

// signal_core

#[test]
fn wgn_magnitude_is_rayleigh() {
    let p = 2.5;
    let x = generate_wgn(1 << 20, 40e9, p, 17).unwrap();
    let mut r: Vec<f64> = x.samples().iter().map(|v| v.norm()).collect();
    r.sort_by(f64::total_cmp);
    let n = r.len() as f64;
    let ks = r
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = 1.0 - (-v * v / p).exp();
            (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.005, "KS statistic {ks}");
}

#[test]
fn resampling_round_trip_keeps_the_band() {
    let x = generate_wgn_mimo(2, 300_000, 40e9, 1.0, 3).unwrap();
    let back = resample_mimo(&resample_mimo(&x, 60e9).unwrap(), 40e9).unwrap();
    let f = GaussianFilter::new(15e9, 4).unwrap();
    let nmse = nmse_db(&f.apply_mimo(&back).signal, &f.apply_mimo(&x).signal).unwrap();
    assert!(nmse < -50.0, "{nmse}");
}

#[test]
fn filtering_twice_is_the_squared_response() {
    let x = generate_wgn(8192, 60e9, 1.0, 5).unwrap();
    let f = GaussianFilter::new(15e9, 4).unwrap();
    let twice = f.apply(&f.apply(&x).signal).signal;
    let mut a = twice.samples().to_vec();
    let mut b = x.samples().to_vec();
    fft::fft(&mut a);
    fft::fft(&mut b);
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for k in 0..a.len() {
        let g = f.gain(fft::bin_frequency(k, a.len(), 60e9));
        assert!((a[k] - b[k] * g * g).norm() < 1e-10 * scale, "bin {k}");
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn wgn_power_is_within_three_sigma(log_p in -6.0f64..6.0, seed in any::<u64>()) {
        let p = 10f64.powf(log_p);
        let n = 100_000;
        let x = generate_wgn(n, 40e9, p, seed).unwrap();
        let measured = measure_power(&x).unwrap();
        prop_assert!((measured - p).abs() < 3.0 * p / (n as f64).sqrt(), "{} vs {}", measured, p);
    }
}

// channel_sim

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn synthesized_mdl_is_exact_at_every_bin(
        modes in prop::sample::select(vec![2usize, 4, 6]),
        mdl in 0.0f64..10.0,
        dgd in 0.0f64..1e-9,
        seed in any::<u64>(),
    ) {
        let h = synthesize_mimo_channel(modes, mdl, dgd, 64, 1e9, seed).unwrap();
        let s = mdl_from_channel(&h, None).unwrap();
        for v in &s.mdl_db {
            prop_assert!((v - mdl).abs() < 1e-6, "{} vs {}", v, mdl);
        }
    }

    #[test]
    fn unitary_channels_preserve_power(modes in prop::sample::select(vec![2usize, 6]), seed in any::<u64>()) {
        let x = generate_wgn_mimo(modes, 8192, 60e9, 1.0, seed).unwrap();
        let model = MultiSectionModel::random(modes, 0.0, 0.3e-9, 8, seed).unwrap();
        let y = model.apply(&x).unwrap();
        prop_assert!((y.power() / x.power() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn impairment_free_link_is_inverted_by_edc() {
    let x = generate_wgn_mimo(2, 100_000, 40e9, 1.0, 8).unwrap();
    let link = LinkConfig::dispersion_only(78.0, 2);
    let y = run_link(&x, &link, 3, 9).unwrap();
    let back = apply_edc(&y, &link.dispersion(3)).unwrap();
    let a = align_by_crosscorrelation(&x, &back, 64).unwrap();
    let (xi, yo) = a.trim(&x, &back).unwrap();
    let nmse = nmse_db(&yo, &xi).unwrap();
    assert!(nmse < -80.0, "{nmse}");
}

#[test]
fn stochastic_stages_are_reproducible() {
    let x = generate_wgn_mimo(6, 20_000, 40e9, 1.0, 4).unwrap();
    assert_eq!(x, generate_wgn_mimo(6, 20_000, 40e9, 1.0, 4).unwrap());
    let cfg = LinkConfig::three_mode_fiber();
    assert_eq!(
        run_link(&x, &cfg, 2, 5).unwrap(),
        run_link(&x, &cfg, 2, 5).unwrap()
    );
    assert_ne!(
        run_link(&x, &cfg, 2, 5).unwrap(),
        run_link(&x, &cfg, 2, 6).unwrap()
    );
    assert_eq!(add_awgn(&x, 10.0, 1).unwrap(), add_awgn(&x, 10.0, 1).unwrap());
    assert_eq!(
        apply_phase_noise(&x, 1e5, 2).unwrap(),
        apply_phase_noise(&x, 1e5, 2).unwrap()
    );
}

// dsp

proptest! {
    #![proptest_config(cases(3))]

    #[test]
    fn equalizer_converges_on_invertible_channels(mdl in 0.0f64..3.0, dgd in 0.0f64..5e-9, seed in 0u64..1000) {
        let x = generate_wgn_mimo(2, 200_000, 60e9, 1.0, seed).unwrap();
        let model = MultiSectionModel::random(2, mdl, dgd, 8, seed + 1).unwrap();
        let y = model.apply(&x).unwrap();
        let (_, state) = fde_lms_equalize(&x, &y, &PipelineConfig::default()).unwrap();
        let nmse = state.final_pass_nmse_db().unwrap();
        prop_assert!(nmse < -30.0, "{}", nmse);
    }
}

#[test]
fn converged_taps_invert_the_channel() {
    // The sampled section delays wrap at Nyquist, so only the signal band is compared.
    let rate = 60e9;
    let x = generate_wgn_mimo(2, 400_000, rate, 1.0, 21).unwrap();
    let model = MultiSectionModel::random(2, 2.0, 0.3e-9, 8, 22).unwrap();
    let y = add_awgn(&model.apply(&x).unwrap(), 30.0, 23).unwrap();
    let cfg = PipelineConfig::default();
    let (_, state) = fde_lms_equalize(&x, &y, &cfg).unwrap();
    let n = state.block_size;
    for k in 0..n {
        let f = fft::bin_frequency(k, n, rate);
        if f.abs() > cfg.filter_bw {
            continue;
        }
        let err =
            linalg::frobenius_sq(&(state.tap_matrix(k) * model.response_at(f) - linalg::identity(2))).sqrt();
        assert!(err < 1e-2, "bin {k}: {err}");
    }
}

#[test]
fn phase_recovery_leaves_no_mean_phase() {
    let x = generate_wgn_mimo(2, 200_000, 40e9, 1.0, 31).unwrap();
    let link = LinkConfig {
        lo_linewidth: 1e4,
        span_snr_db: 20.0,
        ..LinkConfig::default()
    };
    let y = run_link(&x, &link, 1, 32).unwrap();
    let out = run_pipeline(&x, &y, &link.dispersion(1), &PipelineConfig::default()).unwrap();
    for m in 0..2 {
        let mean: f64 = out
            .f_eq
            .tributary(m)
            .iter()
            .zip(out.f_in.tributary(m))
            .map(|(e, i)| (e * i.conj()).arg())
            .sum::<f64>()
            / out.f_eq.len() as f64;
        assert!(mean.abs() < 1e-3, "tributary {m}: {mean}");
    }
}

/// Per-second MI of one converged pair read at two assumed symbol rates.
#[test]
fn mi_per_second_does_not_depend_on_the_assumed_baud() {
    let x = generate_wgn_mimo(2, 400_000, 40e9, 1.0, 41).unwrap();
    let link = LinkConfig {
        span_snr_db: 15.0,
        nlin_coeff: 0.0,
        ..LinkConfig::default()
    };
    let y = run_link(&x, &link, 1, 42).unwrap();
    let out = run_pipeline(&x, &y, &link.dispersion(1), &PipelineConfig::default()).unwrap();
    let cfg = capacity::MiConfig::default();
    let at = |baud: f64| {
        capacity::estimate_mi_mimo(&out.f_in, &out.f_eq, &cfg, baud)
            .unwrap()
            .bits_per_second()
    };
    let (fast, slow) = (at(30e9), at(20e9));
    assert!(
        (fast / slow - 1.0).abs() < 0.02,
        "30 GBd: {fast:.4e} b/s, 20 GBd: {slow:.4e} b/s"
    );
}

// capacity

#[test]
fn mi_is_monotone_in_snr() {
    let x = generate_wgn(100_000, 30e9, 1.0, 51).unwrap();
    let w = generate_wgn(100_000, 30e9, 1.0, 52).unwrap();
    let r = rings(&x, 16);
    let mut last = f64::NEG_INFINITY;
    for snr_db in 0..=25 {
        let a = 10f64.powf(-snr_db as f64 / 20.0);
        let y: Vec<C64> = x
            .samples()
            .iter()
            .zip(w.samples())
            .map(|(s, n)| s + n * a)
            .collect();
        let mi = estimate_mi(&x, &ComplexSignal::new(y, 30e9).unwrap(), &r).unwrap();
        assert!(mi >= last, "{snr_db} dB: {mi} < {last}");
        last = mi;
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn mi_never_beats_shannon(snr_db in 0.0f64..25.0, seed in any::<u64>()) {
        let (x, y) = awgn_pair(1 << 20, snr_db, seed);
        let mi = estimate_mi(&x, &y, &rings(&x, 16)).unwrap();
        let cap = (1.0 + 10f64.powf(snr_db / 10.0)).log2();
        prop_assert!(mi <= cap + 0.05, "{} > {}", mi, cap);
    }

    #[test]
    fn mi_is_scale_invariant(snr_db in 0.0f64..25.0, mag in 0.01f64..100.0, phase in -3.2f64..3.2, seed in any::<u64>()) {
        let (x, y) = awgn_pair(50_000, snr_db, seed);
        let c = C64::from_polar(mag, phase);
        let xs = ComplexSignal::new(x.samples().iter().map(|v| v * c).collect(), 30e9).unwrap();
        let ys = ComplexSignal::new(y.samples().iter().map(|v| v * c).collect(), 30e9).unwrap();
        let a = estimate_mi(&x, &y, &rings(&x, 16)).unwrap();
        let b = estimate_mi(&xs, &ys, &rings(&xs, 16)).unwrap();
        prop_assert!((a - b).abs() < 0.01, "{} vs {}", a, b);
    }
}

#[test]
fn ring_count_has_diminishing_returns() {
    let (x, y) = awgn_pair(200_000, 20.0, 61);
    let mi = |n| estimate_mi(&x, &y, &rings(&x, n)).unwrap();
    let (m8, m16, m32) = (mi(8), mi(16), mi(32));
    assert!(m16 - m8 >= -0.01, "{m8} {m16}");
    assert!(m32 - m16 <= 0.05, "{m16} {m32}");
}

#[test]
fn phase_resolution_has_converged() {
    let (x, y) = awgn_pair(100_000, 20.0, 62);
    let p = measure_power(&x).unwrap();
    let at = |phases| estimate_mi(&x, &y, &build_ring_constellation(16, p, phases).unwrap()).unwrap();
    let (a, b) = (at(64), at(128));
    assert!((a - b).abs() < 0.01, "{a} {b}");
}

// estimation

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn single_section_mdl_is_recovered_exactly(modes in prop::sample::select(vec![2usize, 4, 6]), mdl in 0.0f64..12.0, seed in any::<u64>()) {
        let h = MultiSectionModel::random(modes, mdl, 0.0, 1, seed).unwrap().sample(32, 1e9).unwrap();
        let s = mdl_from_channel(&h, None).unwrap();
        prop_assert!(s.mdl_db.iter().all(|v| (v - mdl).abs() < 1e-6));
    }

    #[test]
    fn mdl_is_unitary_invariant(seed in any::<u64>(), left in any::<bool>()) {
        use rand::SeedableRng;
        let h = synthesize_mimo_channel(4, 4.0, 0.5e-9, 32, 1e9, seed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1);
        let u = linalg::haar_unitary(4, &mut rng);
        let rotated: Vec<CMat> = h
            .matrices()
            .iter()
            .map(|m| if left { &u * m } else { m * &u })
            .collect();
        let g = MimoChannel::new(rotated, 1e9).unwrap();
        let a = mdl_from_channel(&h, None).unwrap();
        let b = mdl_from_channel(&g, None).unwrap();
        for (x, y) in a.mdl_db.iter().zip(&b.mdl_db) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn impulse_response_obeys_parseval(seed in any::<u64>(), bw in 5e9f64..25e9, rect in any::<bool>()) {
        let h = synthesize_mimo_channel(2, 3.0, 0.3e-9, 256, 60e9 / 256.0, seed).unwrap();
        let w = if rect { SpectralWindow::Rectangular } else { SpectralWindow::for_filter(bw) };
        let ir = impulse_response_from_channel(&h, w);
        let time: f64 = ir.tap_power().iter().sum();
        let freq = (0..h.n_bins())
            .map(|k| linalg::frobenius_sq(h.matrix(k)) * w.gain(h.frequency(k)).powi(2))
            .sum::<f64>()
            / h.n_bins() as f64;
        prop_assert!((time / freq - 1.0).abs() < 1e-6);
    }
}

#[test]
fn estimator_and_equalizer_are_reciprocal() {
    let cfg = PipelineConfig::default();
    let x = generate_wgn_mimo(2, 300_000, 60e9, 1.0, 71).unwrap();
    let model = MultiSectionModel::random(2, 2.0, 0.2e-9, 8, 72).unwrap();
    let y = model.apply(&x).unwrap();
    let est = estimate_channel(&x, &y, None, &cfg).unwrap();
    let (_, eq) = fde_lms_equalize(&x, &y, &cfg).unwrap();
    let inverse: Vec<CMat> = (0..eq.block_size)
        .map(|k| eq.tap_matrix(k).try_inverse().expect("invertible taps"))
        .collect();
    let inverse = MimoChannel::new(inverse, est.channel.bin_spacing()).unwrap();
    let c = compare_channels(&est.channel, &inverse, Some(cfg.filter_bw)).unwrap();
    assert!(c.summary_db < -25.0, "{}", c.summary_db);
}
