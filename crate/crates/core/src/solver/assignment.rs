//! Relaxed subcarrier assignment with a linearized binary penalty.
//!
//! For fixed powers `p`, the selection subproblem maximizes the data rate over
//! `u ∈ [0,1]^N` subject to the communication power budget, the subcarrier
//! count and the sliding-window interval constraint. The concave binary
//! penalty `uᵀ(1 − u)` is replaced by its first-order expansion around an
//! anchor `ū`, giving
//!
//! ```text
//! minimize  −Σ log2(1 + a_n u_n) + λ [uᵀ(1 − 2ū) + ūᵀū]
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

#[allow(unused_imports)]
use num_traits::Float as _;

use super::barrier::{LinearRow, LogTerm, Program, Settings};
use super::SolverReport;
use crate::error::{Error, Result};
use crate::signal::WaveformConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSubproblem {
    /// `a_n = |h_n|² p_n / σ²`: SNR of subcarrier `n` if it were selected.
    pub gains: Vec<f64>,
    /// Penalty weight `λ ≥ 0`.
    pub lambda: f64,
    /// Expansion point of the binary penalty, entries in `[0, 1]`.
    pub u_anchor: Vec<f64>,
    /// Powers used in the communication power budget.
    pub powers: Vec<f64>,
    pub config: WaveformConfig,
}

impl AssignmentSubproblem {
    fn validate(&self) -> Result<()> {
        let n = self.config.n_subcarriers;
        for (what, v) in [
            ("gains", &self.gains),
            ("u_anchor", &self.u_anchor),
            ("powers", &self.powers),
        ] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
        if self.gains.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidArgument("gains must be nonnegative".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "penalty weight must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.u_anchor.iter().any(|&u| !(-1e-9..=1.0 + 1e-9).contains(&u)) {
            return Err(Error::InvalidArgument("anchor must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Objective value at `u`, penalty constant included.
    pub fn objective(&self, u: &[f64]) -> f64 {
        let rate: f64 = self
            .gains
            .iter()
            .zip(u)
            .map(|(a, x)| (a * x).max(-1.0 + 1e-12).ln_1p())
            .sum::<f64>()
            / LN_2;
        -rate + self.lambda * penalty(u, &self.u_anchor)
    }

    pub(crate) fn program(&self) -> Program {
        let cfg = &self.config;
        let n = cfg.n_subcarriers;
        let linear = self
            .u_anchor
            .iter()
            .map(|ua| self.lambda * (1.0 - 2.0 * ua))
            .collect();
        let logs = self
            .gains
            .iter()
            .enumerate()
            .filter(|(_, a)| **a > 0.0)
            .map(|(var, &gain)| LogTerm {
                var,
                gain,
                weight: 1.0 / LN_2,
            })
            .collect();
        let mut ineq = Vec::with_capacity(3 * n);
        for i in 0..n {
            ineq.push(LinearRow {
                idx: vec![i],
                coef: vec![-1.0],
                rhs: 0.0,
            });
            ineq.push(LinearRow {
                idx: vec![i],
                coef: vec![1.0],
                rhs: 1.0,
            });
        }
        if cfg.min_gap > 0 && cfg.min_gap < n {
            for i in 0..(n - cfg.min_gap) {
                ineq.push(LinearRow {
                    idx: (i..=i + cfg.min_gap).collect(),
                    coef: vec![1.0; cfg.min_gap + 1],
                    rhs: 1.0,
                });
            }
        }
        // The budget only binds if the n_comm largest powers can exceed it.
        let mut sorted = self.powers.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let worst: f64 = sorted.iter().take(cfg.n_comm).sum();
        if worst > cfg.p_comm_max {
            let idx: Vec<usize> = (0..n).filter(|&i| self.powers[i] != 0.0).collect();
            let coef = idx.iter().map(|&i| self.powers[i]).collect();
            ineq.push(LinearRow {
                idx,
                coef,
                rhs: cfg.p_comm_max,
            });
        }
        Program {
            n,
            linear,
            logs,
            eq: vec![(vec![1.0; n], cfg.n_comm as f64)],
            ineq,
            cones: None,
        }
    }
}

/// `uᵀ(1 − 2ū) + ūᵀū`, the linearized binary penalty.
pub(crate) fn penalty(u: &[f64], anchor: &[f64]) -> f64 {
    u.iter()
        .zip(anchor)
        .map(|(x, a)| x * (1.0 - 2.0 * a) + a * a)
        .sum()
}

/// Solves the relaxed assignment problem. The solution `ū ∈ [0,1]^N` is
/// returned in `report.solution`; an infeasible constraint set yields a report
/// with status `Infeasible` and no solution.
pub fn solve_assignment(sub: &AssignmentSubproblem, tol: f64) -> Result<SolverReport> {
    solve_assignment_from(sub, tol, None)
}

/// As [`solve_assignment`], starting from `start` when it is strictly
/// feasible.
pub fn solve_assignment_from(
    sub: &AssignmentSubproblem,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<SolverReport> {
    sub.validate()?;
    sub.config.validate()?;
    let program = sub.program();
    let uniform = vec![sub.config.n_comm as f64 / sub.config.n_subcarriers as f64; program.n];
    let start = match start {
        Some(s) if program.strictly_feasible(s) => Some(s),
        _ if program.strictly_feasible(&uniform) => Some(uniform.as_slice()),
        _ => None,
    };
    let mut report = program.solve(start, Settings::with_tol(tol));
    if !report.solution.is_empty() {
        report.objective = sub.objective(&report.solution);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverStatus;

    fn config(n: usize, nr: usize, l: usize) -> WaveformConfig {
        WaveformConfig::new(n, nr, l, n as f64, n as f64, 0.5, 1.0)
    }

    #[test]
    fn equal_gains_spread_uniformly() {
        // strictly convex and symmetric: the relaxed optimum is u = Nr/N
        let cfg = config(6, 2, 0);
        let a = 3.0;
        let sub = AssignmentSubproblem {
            gains: vec![a; 6],
            lambda: 0.0,
            u_anchor: vec![0.0; 6],
            powers: vec![1.0; 6],
            config: cfg,
        };
        let r = solve_assignment(&sub, 1e-9).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        for u in &r.solution {
            assert!((u - 1.0 / 3.0).abs() < 1e-6);
        }
        let expected = -6.0 * (1.0 + a / 3.0f64).log2();
        assert!((r.objective - expected).abs() < 1e-7);
        assert!(r.objective <= -2.0 * (1.0 + a).log2());
    }

    #[test]
    fn heavy_penalty_returns_feasible_anchor() {
        let cfg = config(8, 2, 1);
        let mut anchor = vec![0.0; 8];
        anchor[1] = 1.0;
        anchor[5] = 1.0;
        let sub = AssignmentSubproblem {
            gains: vec![5.0, 0.5, 4.0, 3.0, 0.1, 0.2, 6.0, 2.0],
            lambda: 1e3,
            u_anchor: anchor.clone(),
            powers: vec![1.0; 8],
            config: cfg,
        };
        let r = solve_assignment(&sub, 1e-8).unwrap();
        for (u, a) in r.solution.iter().zip(&anchor) {
            assert!((u - a).abs() < 1e-4, "{:?}", r.solution);
        }
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let mut cfg = config(4, 2, 0);
        cfg.p_comm_max = 1.0;
        let sub = AssignmentSubproblem {
            gains: vec![1.0; 4],
            lambda: 0.0,
            u_anchor: vec![0.5; 4],
            powers: vec![3.0; 4],
            config: cfg,
        };
        let r = solve_assignment(&sub, 1e-8).unwrap();
        assert_eq!(r.status, SolverStatus::Infeasible);
        assert!(r.solution.is_empty());
    }

    #[test]
    fn rejects_non_finite_gains() {
        let sub = AssignmentSubproblem {
            gains: vec![1.0, f64::NAN, 1.0, 1.0],
            lambda: 0.0,
            u_anchor: vec![0.5; 4],
            powers: vec![1.0; 4],
            config: config(4, 2, 0),
        };
        assert!(matches!(solve_assignment(&sub, 1e-8), Err(Error::NonFinite("gains"))));
    }
}
