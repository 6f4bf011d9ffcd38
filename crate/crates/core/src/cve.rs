//! Envelope flattening through the reserved subcarrier phases.
//!
//! With the communication part fixed, the time-domain symbol is
//! `s = Fᴴw + v`, where `v = Fᴴ U c` is known and `w` holds the reserved
//! subcarriers with fixed magnitudes `(1 − u_n)√p_n`. The envelope variance
//! `‖Fᴴw + v − β e^{jΦ}‖²` is reduced by alternating exact block updates:
//!
//! * `β = ‖s‖₁ / N` and `Φ = ∠s` for the current `w`;
//! * `w_n = (1 − u_n)√p_n · ∠(F(β e^{jΦ} − v))_n`.
//!
//! The iteration runs on `N` samples; envelope metrics are reported on the
//! oversampled waveform.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::fft::Fft;
use crate::rng::Rng;
use crate::signal::{self, SubcarrierPlan, TimeWaveform, ENVELOPE_OVERSAMPLING};

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CveProblem {
    pub plan: SubcarrierPlan,
    /// `√p_n e^{jΦc,n}` on communication subcarriers, zero elsewhere.
    pub comm_symbols: Vec<Complex64>,
    /// `v = Fᴴ U c` on `N` samples.
    pub known_part: Vec<Complex64>,
    /// Starting phases of the reserved subcarriers (entries at communication
    /// positions are ignored).
    pub initial_reserved_phases: Vec<f64>,
    /// Oversampling used when reporting envelope metrics.
    pub oversampling: usize,
}

impl CveProblem {
    pub fn new(
        plan: SubcarrierPlan,
        comm_phases: &[f64],
        initial_reserved_phases: Vec<f64>,
        oversampling: usize,
    ) -> Result<Self> {
        let n = plan.len();
        for (what, len) in [
            ("comm_phases", comm_phases.len()),
            ("initial_reserved_phases", initial_reserved_phases.len()),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    found: len,
                });
            }
        }
        if oversampling == 0 {
            return Err(Error::InvalidArgument("oversampling must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty plan".into()));
        }
        let comm_symbols: Vec<Complex64> = (0..n)
            .map(|i| {
                if plan.selection[i] {
                    Complex64::from_polar(plan.power[i].sqrt(), comm_phases[i])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let mut known_part = comm_symbols.clone();
        Fft::new(n).inverse(&mut known_part);
        Ok(CveProblem {
            plan,
            comm_symbols,
            known_part,
            initial_reserved_phases,
            oversampling,
        })
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    fn reserved_magnitude(&self, i: usize) -> f64 {
        if self.plan.selection[i] {
            0.0
        } else {
            self.plan.power[i].sqrt()
        }
    }

    /// Initial state built from `initial_reserved_phases`.
    pub fn initial_state(&self) -> CveIterState {
        let w: Vec<Complex64> = (0..self.len())
            .map(|i| Complex64::from_polar(self.reserved_magnitude(i), self.initial_reserved_phases[i]))
            .collect();
        CveIterState::from_w(w, self)
    }

    /// Full frequency-domain symbol vector `U c + w`.
    pub fn symbols(&self, w: &[Complex64]) -> Vec<Complex64> {
        self.comm_symbols.iter().zip(w).map(|(c, r)| c + r).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CveIterState {
    pub w: Vec<Complex64>,
    /// `‖Fᴴw + v‖₁ / N`.
    pub beta: f64,
    /// `∠(Fᴴw + v)`.
    pub phi: Vec<f64>,
    /// `‖Fᴴw + v − β e^{jΦ}‖²`, i.e. `Σ(|s_n| − β)²`.
    pub objective: f64,
}

impl CveIterState {
    fn from_w(w: Vec<Complex64>, problem: &CveProblem) -> Self {
        let n = w.len();
        let mut s = w.clone();
        Fft::new(n).inverse(&mut s);
        for (si, vi) in s.iter_mut().zip(&problem.known_part) {
            *si += vi;
        }
        let beta = s.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
        let phi = s.iter().map(|z| z.arg()).collect();
        let objective = s
            .iter()
            .map(|z| {
                let d = z.norm() - beta;
                d * d
            })
            .sum();
        CveIterState {
            w,
            beta,
            phi,
            objective,
        }
    }
}

/// `z/|z|`, or `1` when `z = 0`.
fn unit_phase(z: Complex64) -> Complex64 {
    let norm = z.norm();
    if norm > 0.0 {
        z / norm
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// One `(β, Φ, w)` update cycle. The returned state carries `β`, `Φ` and the
/// objective evaluated at the new `w`.
pub fn ls_iterate(state: &CveIterState, problem: &CveProblem) -> Result<CveIterState> {
    let n = problem.len();
    if state.w.len() != n || state.phi.len() != n {
        return Err(Error::LengthMismatch {
            what: "state",
            expected: n,
            found: state.w.len(),
        });
    }
    let mut target: Vec<Complex64> = state
        .phi
        .iter()
        .zip(&problem.known_part)
        .map(|(&phi, v)| Complex64::from_polar(state.beta, phi) - v)
        .collect();
    Fft::new(n).forward(&mut target);
    let w = (0..n)
        .map(|i| unit_phase(target[i]) * problem.reserved_magnitude(i))
        .collect();
    Ok(CveIterState::from_w(w, problem))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CveSolution {
    /// Reserved phases, zero at communication positions; empty when every
    /// subcarrier carries data.
    pub reserved_phases: Vec<f64>,
    pub final_state: CveIterState,
    /// Objective before the first update and after each update.
    pub trace: Vec<f64>,
}

/// Iterates until the objective change drops below `tol·max(1, obj)` or
/// `max_iter` updates have run.
pub fn optimize_phases(problem: &CveProblem, max_iter: usize, tol: f64) -> Result<CveSolution> {
    let mut state = problem.initial_state();
    let mut trace = vec![state.objective];
    if problem.plan.selection.iter().any(|&s| !s) {
        for _ in 0..max_iter {
            let next = ls_iterate(&state, problem)?;
            let change = (next.objective - state.objective).abs();
            let scale = state.objective.max(1.0);
            trace.push(next.objective);
            state = next;
            if change <= tol * scale {
                break;
            }
        }
    }
    let reserved_phases = if problem.plan.selection.iter().all(|&s| s) {
        Vec::new()
    } else {
        (0..problem.len())
            .map(|i| {
                if problem.plan.selection[i] {
                    0.0
                } else {
                    state.w[i].arg()
                }
            })
            .collect()
    };
    Ok(CveSolution {
        reserved_phases,
        final_state: state,
        trace,
    })
}

/// Oversampled waveform carrying the communication symbols and the given
/// reserved phases.
pub fn waveform(problem: &CveProblem, reserved_phases: &[f64]) -> Result<TimeWaveform> {
    let comm_phases: Vec<f64> = problem.comm_symbols.iter().map(|c| c.arg()).collect();
    signal::synthesize(&problem.plan, &comm_phases, reserved_phases, problem.oversampling)
}

/// Uniform phases on `[0, 2π)` for every subcarrier.
pub fn random_phases(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * TAU).collect()
}

/// Random-phase baseline: reserved phases uniform on `[0, 2π)`, synthesized
/// with the standard envelope oversampling.
pub fn random_phase_baseline(
    plan: &SubcarrierPlan,
    comm_phases: &[f64],
    seed: u64,
) -> Result<TimeWaveform> {
    let mut rng = crate::rng::seeded(seed);
    let reserved = random_phases(plan.len(), &mut rng);
    signal::synthesize(plan, comm_phases, &reserved, ENVELOPE_OVERSAMPLING)
}
