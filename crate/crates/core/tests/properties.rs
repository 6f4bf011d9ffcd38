use isac_core::acm::{binarize, compute_alpha};
use isac_core::cve::{optimize_phases, CveProblem};
use isac_core::link::{ccdf, gen_interference, psk8_demodulate, psk8_modulate, InterferenceSpec, Placement};
use isac_core::signal::{
    autocorrelation, psl, synthesize_symbols, ChannelRealization, SubcarrierPlan, WaveformConfig,
};
use isac_core::solver::waterfill;
use isac_core::Complex64;
use proptest::prelude::*;

fn powers(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..5.0, 4..=max_len)
}

fn symbols() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..=32)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #[test]
    fn autocorrelation_is_hermitian(p in powers(40), k in 1usize..40) {
        let r = autocorrelation(&p, k).unwrap();
        let zero = k - 1;
        prop_assert!((r[zero].re - p.iter().sum::<f64>()).abs() < 1e-9);
        prop_assert!(r[zero].im.abs() < 1e-9);
        for lag in 1..k {
            prop_assert!((r[zero + lag] - r[zero - lag].conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn psl_db_is_scale_free(p in powers(40), c in 0.1f64..10.0) {
        let n = p.len();
        let cfg = WaveformConfig { autocorr_half_len: n, ..WaveformConfig::new(n, 1, 0, 1.0, 1.0, 0.5, 1.0) };
        let scaled: Vec<f64> = p.iter().map(|x| x * c).collect();
        let a = psl(&p, &cfg).unwrap();
        let b = psl(&scaled, &cfg).unwrap();
        prop_assert!((a.db - b.db).abs() < 1e-9);
        prop_assert!(a.db <= 1e-12);
    }

    #[test]
    fn envelope_metrics_are_scale_free(x in symbols(), c in 0.1f64..10.0) {
        prop_assume!(x.iter().any(|z| z.norm() > 1e-3));
        let a = synthesize_symbols(&x, 4).unwrap();
        let scaled: Vec<Complex64> = x.iter().map(|z| z * c).collect();
        let b = synthesize_symbols(&scaled, 4).unwrap();
        prop_assert!((a.cve().unwrap() - b.cve().unwrap()).abs() < 1e-9);
        prop_assert!((a.papr_db().unwrap() - b.papr_db().unwrap()).abs() < 1e-9);
        prop_assert!(a.papr_db().unwrap() >= -1e-12);
        prop_assert!(a.cve().unwrap() >= 0.0);
    }

    #[test]
    fn ls_objective_never_increases(
        p in prop::collection::vec(0.1f64..3.0, 16),
        comm in prop::collection::vec(0.0f64..6.3, 16),
        reserved in prop::collection::vec(0.0f64..6.3, 16),
        offset in 0usize..4,
    ) {
        let sel: Vec<bool> = (0..16).map(|i| i % 4 == offset).collect();
        let plan = SubcarrierPlan::new(sel, p).unwrap();
        let problem = CveProblem::new(plan, &comm, reserved, 4).unwrap();
        let sol = optimize_phases(&problem, 50, 0.0).unwrap();
        for w in sol.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn ccdf_is_a_survival_function(
        samples in prop::collection::vec(-10.0f64..10.0, 1..50),
        mut thresholds in prop::collection::vec(-12.0f64..12.0, 1..20),
    ) {
        thresholds.sort_by(|a, b| a.total_cmp(b));
        let c = ccdf(&samples, &thresholds);
        for w in c.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for (v, t) in c.iter().zip(&thresholds) {
            let direct = samples.iter().filter(|&&s| s > *t).count() as f64 / samples.len() as f64;
            prop_assert_eq!(*v, direct);
        }
    }

    #[test]
    fn psk_round_trip(bits in prop::collection::vec(any::<bool>(), 1..40), re in 0.1f64..3.0, im in -3.0f64..3.0) {
        let bits: Vec<bool> = bits.iter().copied().cycle().take(3 * bits.len()).collect();
        let phases = psk8_modulate(&bits).unwrap();
        let h = Complex64::new(re, im);
        let rx: Vec<Complex64> = phases.iter().map(|&p| h * Complex64::from_polar(1.0, p)).collect();
        prop_assert_eq!(psk8_demodulate(&rx, &vec![h; rx.len()]).unwrap(), bits);
    }

    #[test]
    fn binarized_selection_is_feasible(u in prop::collection::vec(0.0f64..1.0, 24), l in 0usize..3, nr in 1usize..5) {
        let cfg = WaveformConfig::new(24, nr, l, 24.0, 24.0, 0.5, 1.0);
        prop_assume!(cfg.validate().is_ok());
        let sel = binarize(&u, &[1.0; 24], &cfg).unwrap();
        prop_assert_eq!(sel.iter().filter(|&&s| s).count(), nr);
        prop_assert!(cfg.interval_ok(&sel));
    }

    #[test]
    fn alpha_vanishes_only_at_binary_fixed_points(
        prev in prop::collection::vec(any::<bool>(), 1..16),
        u in prop::collection::vec(0.0f64..1.0, 16),
    ) {
        let prev: Vec<f64> = prev.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let u = &u[..prev.len()];
        let a = compute_alpha(u, &prev);
        prop_assert!(a >= -1e-12);
        prop_assert_eq!(compute_alpha(&prev, &prev), 0.0);
    }

    #[test]
    fn waterfill_spends_budget(gains in prop::collection::vec(0.0f64..10.0, 1..20), budget in 0.01f64..50.0) {
        let p = waterfill(&gains, budget);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - budget).abs() < 1e-9 * budget.max(1.0));
    }

    #[test]
    fn interference_follows_channel_permutation(
        mags in prop::collection::hash_set(1u32..10_000, 16),
        rot in 0usize..16,
        tones in 1usize..6,
    ) {
        let mags: Vec<f64> = mags.into_iter().map(|m| m as f64 / 1000.0).collect();
        let h: Vec<Complex64> = mags.iter().map(|&m| Complex64::new(m, 0.0)).collect();
        let mut rotated = h.clone();
        rotated.rotate_left(rot);
        let spec = InterferenceSpec { isr_db: 10.0, n_tones: tones, placement: Placement::BestResponse, seed: 1 };
        let a = gen_interference(&ChannelRealization::new(h, 1.0).unwrap(), &spec, 1.0).unwrap();
        let b = gen_interference(&ChannelRealization::new(rotated, 1.0).unwrap(), &spec, 1.0).unwrap();
        let mut support_a: Vec<usize> = (0..16).filter(|&k| a[k].norm() > 0.0).collect();
        let support_b: Vec<usize> = (0..16).filter(|&k| b[k].norm() > 0.0).map(|k| (k + rot) % 16).collect();
        support_a.sort_unstable();
        let mut support_b = support_b;
        support_b.sort_unstable();
        prop_assert_eq!(support_a, support_b);
    }
}
