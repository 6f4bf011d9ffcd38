mod oracle;

use isac_core::cve::{ls_iterate, optimize_phases, random_phases, CveProblem};
use isac_core::rng;
use isac_core::signal::SubcarrierPlan;
use isac_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, n: usize, nr: usize) -> CveProblem {
    let mut sel = vec![false; n];
    let stride = n / nr;
    let offset = rng.random_range(0..stride);
    for i in 0..nr {
        sel[i * stride + offset] = true;
    }
    let power: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>() * 3.0).collect();
    let plan = SubcarrierPlan::new(sel, power).unwrap();
    let comm = random_phases(n, rng);
    let reserved = random_phases(n, rng);
    CveProblem::new(plan, &comm, reserved, 4).unwrap()
}

/// One update written out with explicit DFT sums.
fn naive_step(w: &[Complex64], problem: &CveProblem) -> (f64, Vec<f64>, Vec<Complex64>) {
    let n = w.len();
    // s = Fᴴ w + v with Fᴴ the unnormalized inverse transform
    let s: Vec<Complex64> = oracle::synthesize(w, 1)
        .iter()
        .zip(oracle::synthesize(&problem.comm_symbols, 1))
        .map(|(a, b)| a + b)
        .collect();
    let beta = s.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
    let phi: Vec<f64> = s.iter().map(|z| z.arg()).collect();
    let v = oracle::synthesize(&problem.comm_symbols, 1);
    let target: Vec<Complex64> = (0..n).map(|m| Complex64::from_polar(beta, phi[m]) - v[m]).collect();
    let spectrum = oracle::dft(&target);
    let next = (0..n)
        .map(|k| {
            if problem.plan.selection[k] {
                Complex64::new(0.0, 0.0)
            } else {
                let mag = problem.plan.power[k].sqrt();
                let z = spectrum[k];
                if z.norm() > 0.0 {
                    z / z.norm() * mag
                } else {
                    Complex64::new(mag, 0.0)
                }
            }
        })
        .collect();
    (beta, phi, next)
}

#[test]
fn iterations_match_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let problem = random_problem(&mut rng, 8, 2);
    let mut state = problem.initial_state();
    let mut w = state.w.clone();
    for _ in 0..3 {
        let (beta, phi, next_w) = naive_step(&w, &problem);
        assert!((state.beta - beta).abs() < 1e-12);
        for (a, b) in state.phi.iter().zip(&phi) {
            let d = (a - b).rem_euclid(std::f64::consts::TAU);
            assert!(d.min(std::f64::consts::TAU - d) < 1e-9);
        }
        state = ls_iterate(&state, &problem).unwrap();
        for (a, b) in state.w.iter().zip(&next_w) {
            assert!((a - b).norm() < 1e-10);
        }
        w = next_w;
    }
}

#[test]
fn objective_is_envelope_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let problem = random_problem(&mut rng, 16, 4);
    let state = problem.initial_state();
    let s = oracle::synthesize(&problem.symbols(&state.w), 1);
    let mean = s.iter().map(|z| z.norm()).sum::<f64>() / 16.0;
    let spread: f64 = s.iter().map(|z| (z.norm() - mean).powi(2)).sum();
    assert!((state.objective - spread).abs() < 1e-9 * spread.max(1.0));
}

#[test]
fn descent_and_magnitudes_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for &(n, nr) in &[(16, 4), (128, 16)] {
        for _ in 0..20 {
            let problem = random_problem(&mut rng, n, nr);
            let sol = optimize_phases(&problem, 100, 1e-10).unwrap();
            for step in sol.trace.windows(2) {
                assert!(step[1] <= step[0] + 1e-9, "{} -> {}", step[0], step[1]);
            }
            for k in 0..n {
                let want = if problem.plan.selection[k] { 0.0 } else { problem.plan.power[k].sqrt() };
                assert!((sol.final_state.w[k].norm() - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn optimized_envelope_beats_random_phases() {
    let mut better = 0;
    for trial in 0..20 {
        let mut r = rng::seeded(100 + trial);
        let mut problem = random_problem(&mut ChaCha8Rng::seed_from_u64(trial), 128, 16);
        problem.initial_reserved_phases = random_phases(128, &mut r);
        let start = isac_core::cve::waveform(&problem, &problem.initial_reserved_phases).unwrap();
        let sol = optimize_phases(&problem, 200, 1e-8).unwrap();
        let end = isac_core::cve::waveform(&problem, &sol.reserved_phases).unwrap();
        if end.cve().unwrap() < start.cve().unwrap() {
            better += 1;
        }
    }
    assert_eq!(better, 20);
}
