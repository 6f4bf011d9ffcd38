//! Power allocation for a fixed selection.
//!
//! With the selection `u` fixed, the weighted PSL/CDR problem is convex in
//! `(p, η)`:
//!
//! ```text
//! minimize  ρ η / Rmax − (1 − ρ) Σ_n log2(1 + u_n p_n |h_n|²/σ²) / Cmax
//! s.t.      Σ p_n = Ptotal,  p ≥ 0,  Σ u_n p_n ≤ Pc,
//!           |Σ_n p_n e^{jπnk/K}| ≤ η   for every sidelobe lag k.
//! ```
//!
//! For real `p` the lag `−k` is the conjugate of lag `k`, so only positive
//! lags are instantiated unless asked otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float as _;

use super::barrier::{ConeBlock, LinearRow, LogTerm, Program, Settings};
use super::SolverReport;
use crate::error::{Error, Result};
use crate::signal::{self, lag_phase, ChannelRealization, SubcarrierPlan, WaveformConfig};

/// Objective normalizers: the PSL of the uniform allocation and the data rate
/// of waterfilling `Pc` over the `Nr` strongest subcarriers (interval
/// constraint ignored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub r_max: f64,
    pub c_max: f64,
}

impl Normalizers {
    pub fn new(config: &WaveformConfig, channel: &ChannelRealization) -> Result<Self> {
        config.validate()?;
        let n = config.n_subcarriers;
        if channel.len() != n {
            return Err(Error::LengthMismatch {
                what: "channel",
                expected: n,
                found: channel.len(),
            });
        }
        let uniform = vec![config.p_total / n as f64; n];
        let r_max = signal::psl(&uniform, config)?.linear;
        let best = channel.strongest(config.n_comm);
        let snr = channel.unit_snr();
        let gains: Vec<f64> = best.iter().map(|&i| snr[i]).collect();
        let alloc = waterfill(&gains, config.p_comm_max);
        let c_max = gains
            .iter()
            .zip(&alloc)
            .map(|(g, p)| (g * p).ln_1p())
            .sum::<f64>()
            / LN_2;
        if !(r_max > 0.0) {
            return Err(Error::InvalidConfig(
                "uniform allocation has no sidelobe energy; PSL cannot be normalized".into(),
            ));
        }
        if !(c_max > 0.0) {
            return Err(Error::InvalidArgument(
                "channel has no usable subcarriers; data rate cannot be normalized".into(),
            ));
        }
        Ok(Normalizers { r_max, c_max })
    }

    /// `ρ·PSL(p)/Rmax − (1 − ρ)·CDR(u, p)/Cmax` with the exact PSL.
    pub fn weighted_objective(
        &self,
        plan: &SubcarrierPlan,
        channel: &ChannelRealization,
        config: &WaveformConfig,
    ) -> Result<f64> {
        let psl = signal::psl(&plan.power, config)?.linear;
        let rate = signal::cdr(plan, channel)?;
        Ok(config.rho * psl / self.r_max - (1.0 - config.rho) * rate / self.c_max)
    }
}

/// Waterfilling: maximizes `Σ ln(1 + g_n p_n)` subject to `Σ p_n = budget`,
/// `p ≥ 0`. Zero-gain entries receive no power unless every gain is zero, in
/// which case the budget is spread evenly.
pub fn waterfill(gains: &[f64], budget: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        let len = gains.len().max(1) as f64;
        return vec![budget / len; gains.len()];
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        let inv = 1.0 / gains[i];
        let candidate = (budget + inv_sum + inv) / (k + 1) as f64;
        if candidate <= inv {
            break;
        }
        inv_sum += inv;
        level = candidate;
        active = k + 1;
    }
    let mut p = vec![0.0; gains.len()];
    for &i in &order[..active] {
        p[i] = level - 1.0 / gains[i];
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSubproblem {
    pub selection: Vec<bool>,
    pub channel: ChannelRealization,
    pub config: WaveformConfig,
    /// Also constrain the negative lags (redundant for real powers).
    pub conjugate_lags: bool,
}

impl PowerSubproblem {
    pub fn new(selection: Vec<bool>, channel: ChannelRealization, config: WaveformConfig) -> Self {
        PowerSubproblem {
            selection,
            channel,
            config,
            conjugate_lags: false,
        }
    }

    fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.config.n_subcarriers;
        if self.selection.len() != n {
            return Err(Error::LengthMismatch {
                what: "selection",
                expected: n,
                found: self.selection.len(),
            });
        }
        if self.channel.len() != n {
            return Err(Error::LengthMismatch {
                what: "channel",
                expected: n,
                found: self.channel.len(),
            });
        }
        let count = self.selection.iter().filter(|s| **s).count();
        if count != self.config.n_comm {
            return Err(Error::InvalidArgument(alloc::format!(
                "selection has {count} subcarriers, expected {}",
                self.config.n_comm
            )));
        }
        Ok(())
    }

    fn has_budget_row(&self) -> bool {
        self.config.p_comm_max < self.config.p_total
    }

    fn has_cones(&self) -> bool {
        self.config.rho > 0.0
    }

    fn program(&self, norms: &Normalizers) -> Program {
        let cfg = &self.config;
        let n = cfg.n_subcarriers;
        let rho = cfg.rho;
        let with_eta = self.has_cones();
        let dim = n + with_eta as usize;

        let mut linear = vec![0.0; dim];
        if with_eta {
            linear[n] = rho / norms.r_max;
        }
        let rate_weight = (1.0 - rho) / (norms.c_max * LN_2);
        let snr = self.channel.unit_snr();
        let logs = if rate_weight > 0.0 {
            (0..n)
                .filter(|&i| self.selection[i] && snr[i] > 0.0)
                .map(|var| LogTerm {
                    var,
                    gain: snr[var],
                    weight: rate_weight,
                })
                .collect()
        } else {
            Vec::new()
        };

        let mut eq_row = vec![1.0; dim];
        if with_eta {
            eq_row[n] = 0.0;
        }
        let mut ineq: Vec<LinearRow> = (0..n)
            .map(|i| LinearRow {
                idx: vec![i],
                coef: vec![-1.0],
                rhs: 0.0,
            })
            .collect();
        if self.has_budget_row() {
            let idx: Vec<usize> = (0..n).filter(|&i| self.selection[i]).collect();
            ineq.push(LinearRow {
                coef: vec![1.0; idx.len()],
                idx,
                rhs: cfg.p_comm_max,
            });
        }

        let cones = with_eta.then(|| {
            let lags: Vec<usize> = cfg.sidelobe_lags().collect();
            let sides = if self.conjugate_lags { 2 } else { 1 };
            let mut rows = DMatrix::zeros(2 * lags.len() * sides, n);
            for (c, &lag) in lags.iter().enumerate() {
                for col in 0..n {
                    let phase = lag_phase(col, lag, cfg.autocorr_half_len);
                    let (s, co) = (phase.sin(), phase.cos());
                    rows[(2 * c, col)] = co;
                    rows[(2 * c + 1, col)] = s;
                    if sides == 2 {
                        let base = 2 * lags.len();
                        rows[(base + 2 * c, col)] = co;
                        rows[(base + 2 * c + 1, col)] = -s;
                    }
                }
            }
            ConeBlock { rows, epigraph: n }
        });

        Program {
            n: dim,
            linear,
            logs,
            eq: vec![(eq_row, cfg.p_total)],
            ineq,
            cones,
        }
    }

    /// Strictly feasible point: half the communication budget on selected
    /// subcarriers, the rest spread over the others, `η` above every lag.
    fn interior_start(&self) -> Vec<f64> {
        let cfg = &self.config;
        let n = cfg.n_subcarriers;
        let nr = cfg.n_comm;
        let mut p = if self.has_budget_row() {
            let comm = 0.5 * cfg.p_comm_max / nr as f64;
            let rest = (cfg.p_total - 0.5 * cfg.p_comm_max) / (n - nr) as f64;
            self.selection
                .iter()
                .map(|&s| if s { comm } else { rest })
                .collect()
        } else {
            vec![cfg.p_total / n as f64; n]
        };
        if self.has_cones() {
            let psl = signal::psl(&p, cfg).map(|v| v.linear).unwrap_or(cfg.p_total);
            p.push(1.5 * psl + 1e-3 * cfg.p_total);
        }
        p
    }
}

/// Split view of a power-subproblem solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    pub power: Vec<f64>,
    /// Epigraph variable; equals the PSL of `power` at optimality.
    pub eta: f64,
}

impl PowerSolution {
    pub fn from_report(report: &SolverReport, config: &WaveformConfig) -> Result<Self> {
        let n = config.n_subcarriers;
        if report.solution.len() < n {
            return Err(Error::Infeasible("power subproblem returned no point".into()));
        }
        let power: Vec<f64> = report.solution[..n].iter().map(|p| p.max(0.0)).collect();
        let eta = match report.solution.get(n) {
            Some(&eta) => eta,
            None => signal::psl(&power, config)?.linear,
        };
        Ok(PowerSolution { power, eta })
    }
}

/// Solves the power subproblem. The solution vector is `(p_0 … p_{N−1}, η)`;
/// when `ρ = 0` the epigraph variable is dropped from the program and `η` is
/// reported as the PSL of the returned powers.
pub fn solve_power(sub: &PowerSubproblem, tol: f64) -> Result<SolverReport> {
    let norms = Normalizers::new(&sub.config, &sub.channel)?;
    solve_power_with(sub, &norms, tol)
}

pub fn solve_power_with(
    sub: &PowerSubproblem,
    norms: &Normalizers,
    tol: f64,
) -> Result<SolverReport> {
    sub.validate()?;
    let program = sub.program(norms);
    let start = sub.interior_start();
    let mut report = program.solve(Some(&start), Settings::with_tol(tol));
    if !report.solution.is_empty() && !sub.has_cones() {
        let psl = signal::psl(&report.solution, &sub.config)?.linear;
        report.solution.push(psl);
    }
    Ok(report)
}
