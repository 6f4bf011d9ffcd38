mod oracle;

use isac_core::signal::{
    self, autocorrelation, cdr, psl, synthesize, synthesize_symbols, ChannelRealization,
    SubcarrierPlan, WaveformConfig,
};
use isac_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIZES: [usize; 4] = [4, 8, 16, 128];

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(a.abs()).max(b.abs())
}

fn random_power(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * 4.0).collect()
}

fn random_symbols(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

#[test]
fn autocorrelation_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in SIZES {
        for _ in 0..100 {
            let k = rng.random_range(1..=n);
            let p = random_power(&mut rng, n);
            let fast = autocorrelation(&p, k).unwrap();
            let slow = oracle::autocorrelation(&p, k);
            let scale: f64 = p.iter().sum();
            assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-9 * scale, "n={n} k={k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn psl_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in SIZES {
        for _ in 0..100 {
            let k = rng.random_range(3..=n.max(3)).min(n).max(3);
            let cfg = WaveformConfig {
                autocorr_half_len: k,
                ..WaveformConfig::new(n, 1, 0, n as f64, n as f64, 0.5, 1.0)
            };
            let p = random_power(&mut rng, n);
            let fast = psl(&p, &cfg).unwrap();
            let slow = oracle::psl_linear(&p, k, 1);
            assert!(close(fast.linear, slow, p.iter().sum()), "n={n} k={k}");
            assert!((fast.db - oracle::psl_db(&p, k, 1)).abs() < 1e-8);
        }
    }
}

#[test]
fn cdr_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in SIZES {
        for _ in 0..100 {
            let sel: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            let p = random_power(&mut rng, n);
            let h = random_symbols(&mut rng, n);
            let noise = 0.1 + rng.random::<f64>();
            let plan = SubcarrierPlan::new(sel.clone(), p.clone()).unwrap();
            let ch = ChannelRealization::new(h.clone(), noise).unwrap();
            let fast = cdr(&plan, &ch).unwrap();
            let slow = oracle::cdr(&sel, &p, &h, noise);
            assert!(close(fast, slow, 1.0), "n={n}: {fast} vs {slow}");
        }
    }
}

#[test]
fn envelope_metrics_match_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in SIZES {
        for _ in 0..100 {
            let x = random_symbols(&mut rng, n);
            let q = if n == 128 { 2 } else { 4 };
            let wave = synthesize_symbols(&x, q).unwrap();
            let slow = oracle::synthesize(&x, q);
            let scale: f64 = x.iter().map(|v| v.norm()).sum();
            for (a, b) in wave.samples.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-9 * scale);
            }
            assert!(close(wave.cve().unwrap(), oracle::cve(&slow), 0.0));
            assert!(close(wave.papr_db().unwrap(), oracle::papr_db(&slow), 1.0));
        }
    }
}

#[test]
fn synthesized_plan_matches_naive_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    let sel: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
    let p = random_power(&mut rng, n);
    let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 6.0).collect();
    let reserved: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 6.0).collect();
    let plan = SubcarrierPlan::new(sel.clone(), p.clone()).unwrap();
    let wave = synthesize(&plan, &phases, &reserved, 4).unwrap();
    let x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(p[i].sqrt(), if sel[i] { phases[i] } else { reserved[i] }))
        .collect();
    for (a, b) in wave.samples.iter().zip(oracle::synthesize(&x, 4)) {
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn uniform_power_quarter_period_lag_vanishes() {
    // Σ_{n<4} e^{jπn/2} = 1 + j − 1 − j
    let r = autocorrelation(&[1.5; 4], 4).unwrap();
    assert!(r[3 + 2].norm() < 1e-12);
}

#[test]
fn eight_tone_profile_psl_example() {
    let p = [2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0];
    let cfg = WaveformConfig::new(8, 1, 0, 8.0, 8.0, 0.5, 1.0);
    let got = psl(&p, &cfg).unwrap();
    assert!((got.linear - oracle::psl_linear(&p, 8, 1)).abs() < 1e-12);
}

#[test]
fn parseval_with_zero_padding() {
    // Σ_m |s_m|² = N·q · Σ_n |x_n|² for the unnormalized transform
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_symbols(&mut rng, 16);
    let w = synthesize_symbols(&x, 4).unwrap();
    let time: f64 = w.samples.iter().map(|z| z.norm_sqr()).sum();
    let freq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    assert!((time / 64.0 - freq).abs() < 1e-10 * freq);
}

#[test]
fn zero_waveform_is_rejected() {
    let zero = vec![Complex64::new(0.0, 0.0); 8];
    assert!(signal::envelope_cve(&zero).is_err());
    assert!(signal::envelope_papr_db(&zero).is_err());
}
