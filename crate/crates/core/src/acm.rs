//! Adaptive cyclic minimization over subcarrier assignment and power.
//!
//! Each outer iteration first updates the selection with a sequence of
//! relaxed assignment problems whose binary penalty is re-linearized around
//! the previous relaxed point (the inner loop), then rounds the result to a
//! feasible binary selection and re-solves the power allocation for it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::signal::{self, interval_ok, ChannelRealization, SubcarrierPlan, WaveformConfig};
use crate::solver::assignment::{penalty, solve_assignment_from};
use crate::solver::power::solve_power_with;
use crate::solver::{
    AssignmentSubproblem, Normalizers, PowerSolution, PowerSubproblem, DEFAULT_TOL,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSelection {
    /// Evenly spread: `n = i·N/Nr`.
    Case1,
    /// Packed at the minimum spacing: `n = i·(L+1)`.
    Case2,
    /// `Case1` shifted up by two subcarriers.
    Case3,
    Custom(Vec<bool>),
}

impl InitSelection {
    pub fn name(&self) -> &'static str {
        match self {
            InitSelection::Case1 => "case1",
            InitSelection::Case2 => "case2",
            InitSelection::Case3 => "case3",
            InitSelection::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcmParams {
    pub lambda0: f64,
    pub xi1: f64,
    pub xi2: f64,
    /// Inner exit tolerance on `α`; `None` means `1e-3·Nr`.
    pub eps_u: Option<f64>,
    pub eps_c: f64,
    pub eps_a: f64,
    pub t_max: usize,
    pub m_max: usize,
    pub init_selection: InitSelection,
    /// Adapt `λ` between inner iterations; when false `λ` stays at `lambda0`.
    pub adaptive: bool,
    /// Ceiling for the adapted `λ`. Far above it the relaxed subproblem is
    /// numerically a linear program and the barrier solve loses accuracy.
    pub lambda_max: f64,
    pub solver_tol: f64,
}

impl Default for AcmParams {
    fn default() -> Self {
        AcmParams {
            lambda0: 1e-4,
            xi1: 0.9,
            xi2: 2.0,
            eps_u: None,
            eps_c: 1e-4,
            eps_a: 1e-4,
            t_max: 1000,
            m_max: 100,
            init_selection: InitSelection::Case1,
            adaptive: true,
            lambda_max: 1e6,
            solver_tol: DEFAULT_TOL,
        }
    }
}

impl AcmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.xi1 > 0.0 && self.xi1 < 1.0) {
            return bad("xi1 must lie in (0, 1)");
        }
        if !(self.xi2 > 1.0 && self.xi2.is_finite()) {
            return bad("xi2 must be greater than 1");
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return bad("lambda0 must be positive");
        }
        if !(self.lambda_max >= self.lambda0 && self.lambda_max.is_finite()) {
            return bad("lambda_max must be finite and at least lambda0");
        }
        let tolerances = [Some(self.eps_c), Some(self.eps_a), self.eps_u, Some(self.solver_tol)];
        if tolerances.iter().flatten().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad("tolerances must be positive");
        }
        if self.t_max == 0 || self.m_max == 0 {
            return bad("iteration caps must be at least 1");
        }
        Ok(())
    }

    pub fn eps_u_for(&self, config: &WaveformConfig) -> f64 {
        self.eps_u.unwrap_or(1e-3 * config.n_comm as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    /// Outer iteration index, starting at 1.
    pub t: usize,
    /// Data rate of `(u⁽ᵗ⁾, p⁽ᵗ⁾)` in bps/Hz.
    pub obj_c: f64,
    /// Linear PSL of `p⁽ᵗ⁾`.
    pub obj_a: f64,
    pub dr_c: f64,
    pub dr_a: f64,
    /// Weighted objective `ρ·PSL/Rmax − (1−ρ)·CDR/Cmax`.
    pub objective: f64,
    pub inner_iterations: usize,
    /// Whether the inner loop reached `α ≤ ε_u` before `m_max`.
    pub inner_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerRecord {
    pub t: usize,
    pub m: usize,
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AcmTrace {
    /// `(Obj_c, Obj_a, objective)` at the initial point.
    pub initial: (f64, f64, f64),
    pub outer: Vec<OuterRecord>,
    pub inner: Vec<InnerRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SapaResult {
    pub plan: SubcarrierPlan,
    pub psl_db: f64,
    pub cdr: f64,
    /// Weighted objective of the returned plan.
    pub objective: f64,
    pub trace: AcmTrace,
    /// Both outer residuals fell below tolerance.
    pub converged: bool,
}

/// Initial feasible selection for the given case.
pub fn initial_selection(case: &InitSelection, config: &WaveformConfig) -> Result<Vec<bool>> {
    config.validate()?;
    let n = config.n_subcarriers;
    let nr = config.n_comm;
    let infeasible = || Error::InitialSelectionInfeasible {
        case: case.name(),
        min_gap: config.min_gap,
    };
    let positions: Vec<usize> = match case {
        InitSelection::Case1 => (0..nr).map(|i| i * n / nr).collect(),
        InitSelection::Case2 => (0..nr).map(|i| i * (config.min_gap + 1)).collect(),
        InitSelection::Case3 => (0..nr).map(|i| i * n / nr + 2).collect(),
        InitSelection::Custom(sel) => {
            if sel.len() != n {
                return Err(Error::LengthMismatch {
                    what: "initial selection",
                    expected: n,
                    found: sel.len(),
                });
            }
            signal::indices_of(sel)
        }
    };
    if positions.len() != nr || positions.iter().any(|&i| i >= n) {
        return Err(infeasible());
    }
    let mut sel = vec![false; n];
    for &i in &positions {
        sel[i] = true;
    }
    if !interval_ok(&sel, config.min_gap) {
        return Err(infeasible());
    }
    Ok(sel)
}

/// Penalty update: keep `λ` after a sufficient decrease of `α`, otherwise
/// scale it by `ξ2`.
pub fn adapt_lambda(lambda_prev: f64, alpha_m1: f64, alpha_m2: f64, xi1: f64, xi2: f64) -> f64 {
    if alpha_m1 <= xi1 * alpha_m2 {
        lambda_prev
    } else {
        xi2 * lambda_prev
    }
}

/// `α = u_mᵀ(1 − 2u_{m−1}) + u_{m−1}ᵀu_{m−1}`.
pub fn compute_alpha(u_m: &[f64], u_m1: &[f64]) -> f64 {
    penalty(u_m, u_m1)
}

/// Rounds a relaxed selection to a binary one satisfying the count, interval
/// and communication-power constraints (the latter with `powers`).
pub fn binarize(relaxed_u: &[f64], powers: &[f64], config: &WaveformConfig) -> Result<Vec<bool>> {
    let mut sel = spaced_selection(relaxed_u, config)?;
    repair_budget(&mut sel, relaxed_u, powers, config)?;
    Ok(sel)
}

fn check_lengths(relaxed_u: &[f64], config: &WaveformConfig) -> Result<()> {
    config.validate()?;
    if relaxed_u.len() != config.n_subcarriers {
        return Err(Error::LengthMismatch {
            what: "relaxed selection",
            expected: config.n_subcarriers,
            found: relaxed_u.len(),
        });
    }
    if relaxed_u.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("relaxed selection"));
    }
    Ok(())
}

/// Greedy pick by decreasing relaxed value (ties to the lower index),
/// skipping indices within `L` of a pick. When the greedy pass strands the
/// count short, falls back to the interval-feasible subset of maximum total
/// relaxed value.
fn spaced_selection(relaxed_u: &[f64], config: &WaveformConfig) -> Result<Vec<bool>> {
    check_lengths(relaxed_u, config)?;
    let n = config.n_subcarriers;
    let l = config.min_gap;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| relaxed_u[b].total_cmp(&relaxed_u[a]).then(a.cmp(&b)));
    let mut sel = vec![false; n];
    let mut picked = 0;
    for &i in &order {
        if picked == config.n_comm {
            break;
        }
        let lo = i.saturating_sub(l);
        let hi = (i + l).min(n - 1);
        if !sel[lo..=hi].iter().any(|&s| s) {
            sel[i] = true;
            picked += 1;
        }
    }
    if picked == config.n_comm {
        return Ok(sel);
    }
    best_spaced_subset(relaxed_u, config.n_comm, l).ok_or(Error::NoFeasibleBinarization)
}

/// Dynamic program over positions: the interval-feasible `count`-subset with
/// the largest sum of `values`; ties prefer lower indices.
fn best_spaced_subset(values: &[f64], count: usize, min_gap: usize) -> Option<Vec<bool>> {
    let n = values.len();
    let step = min_gap + 1;
    // best[i][k]: best sum using indices ≥ i with k picks
    let width = count + 1;
    let mut best = vec![f64::NEG_INFINITY; (n + step + 1) * width];
    for i in (0..=n + step).rev() {
        best[i * width] = 0.0;
        if i >= n {
            continue;
        }
        for k in 1..=count {
            let skip = best[(i + 1) * width + k];
            let take = best[(i + step).min(n) * width + k - 1] + values[i];
            best[i * width + k] = if take >= skip { take } else { skip };
        }
    }
    if best[count] == f64::NEG_INFINITY {
        return None;
    }
    let mut sel = vec![false; n];
    let (mut i, mut k) = (0, count);
    while k > 0 && i < n {
        let take = best[(i + step).min(n) * width + k - 1] + values[i];
        if take >= best[(i + 1) * width + k] && take > f64::NEG_INFINITY {
            sel[i] = true;
            k -= 1;
            i += step;
        } else {
            i += 1;
        }
    }
    (k == 0).then_some(sel)
}

/// Swaps the lowest-valued picks for the lowest-power interval-compatible
/// alternatives until the communication power fits the budget.
fn repair_budget(
    sel: &mut [bool],
    relaxed_u: &[f64],
    powers: &[f64],
    config: &WaveformConfig,
) -> Result<()> {
    let n = config.n_subcarriers;
    if powers.len() != n {
        return Err(Error::LengthMismatch {
            what: "powers",
            expected: n,
            found: powers.len(),
        });
    }
    let budget = |sel: &[bool]| -> f64 {
        sel.iter().zip(powers).filter(|(s, _)| **s).map(|(_, p)| p).sum()
    };
    let l = config.min_gap;
    for _ in 0..n * config.n_comm {
        if budget(sel) <= config.p_comm_max {
            return Ok(());
        }
        let mut picks = signal::indices_of(sel);
        picks.sort_by(|&a, &b| relaxed_u[a].total_cmp(&relaxed_u[b]).then(a.cmp(&b)));
        let mut swapped = false;
        for &out in &picks {
            sel[out] = false;
            let replacement = (0..n)
                .filter(|&j| j != out && !sel[j] && powers[j] < powers[out])
                .filter(|&j| {
                    let lo = j.saturating_sub(l);
                    let hi = (j + l).min(n - 1);
                    !sel[lo..=hi].iter().any(|&s| s)
                })
                .min_by(|&a, &b| powers[a].total_cmp(&powers[b]).then(a.cmp(&b)));
            if let Some(j) = replacement {
                sel[j] = true;
                swapped = true;
                break;
            }
            sel[out] = true;
        }
        if !swapped {
            break;
        }
    }
    if budget(sel) <= config.p_comm_max {
        Ok(())
    } else {
        Err(Error::NoFeasibleBinarization)
    }
}

fn relative_change(new: f64, old: f64) -> f64 {
    if old == 0.0 {
        (new - old).abs()
    } else {
        ((new - old) / old).abs()
    }
}

#[derive(Clone)]
struct Evaluated {
    selection: Vec<bool>,
    power: Vec<f64>,
    obj_c: f64,
    obj_a: f64,
    objective: f64,
}

fn evaluate(
    selection: Vec<bool>,
    power: Vec<f64>,
    channel: &ChannelRealization,
    config: &WaveformConfig,
    norms: &Normalizers,
) -> Result<Evaluated> {
    let plan = SubcarrierPlan::new(selection, power)?;
    let obj_c = signal::cdr(&plan, channel)?;
    let obj_a = signal::psl(&plan.power, config)?.linear;
    let objective = config.rho * obj_a / norms.r_max - (1.0 - config.rho) * obj_c / norms.c_max;
    let SubcarrierPlan { selection, power } = plan;
    Ok(Evaluated {
        selection,
        power,
        obj_c,
        obj_a,
        objective,
    })
}

fn solve_power_for(
    selection: &[bool],
    channel: &ChannelRealization,
    config: &WaveformConfig,
    norms: &Normalizers,
    tol: f64,
) -> Result<Vec<f64>> {
    let sub = PowerSubproblem::new(selection.to_vec(), channel.clone(), config.clone());
    let report = solve_power_with(&sub, norms, tol)?.feasible("power")?;
    Ok(PowerSolution::from_report(&report, config)?.power)
}

fn finish(state: Evaluated, config: &WaveformConfig, trace: AcmTrace, converged: bool) -> Result<SapaResult> {
    let plan = SubcarrierPlan::new(state.selection, state.power)?;
    let psl_db = signal::psl(&plan.power, config)?.db;
    Ok(SapaResult {
        plan,
        psl_db,
        cdr: state.obj_c,
        objective: state.objective,
        trace,
        converged,
    })
}

/// Runs the alternating design loop from the configured initial selection.
pub fn run_acm(
    config: &WaveformConfig,
    channel: &ChannelRealization,
    params: &AcmParams,
) -> Result<SapaResult> {
    config.validate()?;
    params.validate()?;
    let n = config.n_subcarriers;
    if channel.len() != n {
        return Err(Error::LengthMismatch {
            what: "channel",
            expected: n,
            found: channel.len(),
        });
    }
    let norms = Normalizers::new(config, channel)?;
    let tol = params.solver_tol;
    let eps_u = params.eps_u_for(config);
    let snr = channel.unit_snr();

    let u0 = initial_selection(&params.init_selection, config)?;
    let uniform = vec![config.p_total / n as f64; n];
    let p0 = if config.n_comm as f64 * config.p_total / n as f64 <= config.p_comm_max {
        uniform
    } else {
        solve_power_for(&u0, channel, config, &norms, tol).map_err(|e| e.at_iteration(0))?
    };
    let mut current = evaluate(u0, p0, channel, config, &norms)?;
    let mut trace = AcmTrace {
        initial: (current.obj_c, current.obj_a, current.objective),
        ..AcmTrace::default()
    };
    // States after each Step 2, for cycle detection. From t = 1 on the
    // iteration map depends on the selection alone.
    let mut states: Vec<Evaluated> = Vec::new();

    for t in 1..=params.t_max {
        let ctx = |e: Error| e.at_iteration(t);
        let gains: Vec<f64> = snr.iter().zip(&current.power).map(|(g, p)| g * p).collect();
        let mut anchor: Vec<f64> = current
            .selection
            .iter()
            .map(|&s| if s { 1.0 } else { 0.0 })
            .collect();
        let mut lambda = params.lambda0;
        let mut alphas: Vec<f64> = Vec::new();
        let mut warm: Option<Vec<f64>> = None;
        let mut inner_converged = false;
        for m in 1..=params.m_max {
            if params.adaptive && alphas.len() >= 2 {
                let k = alphas.len();
                lambda = adapt_lambda(lambda, alphas[k - 1], alphas[k - 2], params.xi1, params.xi2)
                    .min(params.lambda_max);
            }
            let sub = AssignmentSubproblem {
                gains: gains.clone(),
                lambda,
                u_anchor: anchor.clone(),
                powers: current.power.clone(),
                config: config.clone(),
            };
            let report = solve_assignment_from(&sub, tol, warm.as_deref())
                .and_then(|r| r.feasible("assignment"))
                .map_err(ctx)?;
            let relaxed: Vec<f64> = report.solution.iter().map(|u| u.clamp(0.0, 1.0)).collect();
            let alpha = compute_alpha(&relaxed, &anchor);
            trace.inner.push(InnerRecord { t, m, alpha, lambda });
            alphas.push(alpha);
            warm = Some(report.solution);
            anchor = relaxed;
            if alpha <= eps_u {
                inner_converged = true;
                break;
            }
        }
        let inner_iterations = alphas.len();

        // Step 2 enforces the power budget itself, so a selection that only
        // fails the budget under the previous powers is still usable.
        let selection = match binarize(&anchor, &current.power, config) {
            Ok(sel) => sel,
            Err(Error::NoFeasibleBinarization) => spaced_selection(&anchor, config).map_err(ctx)?,
            Err(e) => return Err(ctx(e)),
        };
        let power = solve_power_for(&selection, channel, config, &norms, tol).map_err(ctx)?;
        let next = evaluate(selection, power, channel, config, &norms).map_err(ctx)?;
        let dr_c = relative_change(next.obj_c, current.obj_c);
        let dr_a = relative_change(next.obj_a, current.obj_a);
        trace.outer.push(OuterRecord {
            t,
            obj_c: next.obj_c,
            obj_a: next.obj_a,
            dr_c,
            dr_a,
            objective: next.objective,
            inner_iterations,
            inner_converged,
        });
        if dr_c <= params.eps_c && dr_a <= params.eps_a {
            return finish(next, config, trace, true);
        }
        if let Some(start) = states.iter().position(|s| s.selection == next.selection) {
            // The sequence has entered a cycle; return its best member.
            states.push(next);
            let best = (start..states.len())
                .min_by(|&a, &b| states[a].objective.total_cmp(&states[b].objective).then(a.cmp(&b)))
                .unwrap_or(states.len() - 1);
            let chosen = states.swap_remove(best);
            return finish(chosen, config, trace, false);
        }
        states.push(next.clone());
        current = next;
    }
    finish(current, config, trace, false)
}

/// High-response baseline: the `Nr` subcarriers with the largest `|h|`
/// (ties to the lower index) with powers from the power subproblem. The
/// interval constraint is not enforced.
pub fn hsapa_baseline(config: &WaveformConfig, channel: &ChannelRealization) -> Result<SapaResult> {
    config.validate()?;
    let n = config.n_subcarriers;
    if channel.len() != n {
        return Err(Error::LengthMismatch {
            what: "channel",
            expected: n,
            found: channel.len(),
        });
    }
    let norms = Normalizers::new(config, channel)?;
    let mut selection = vec![false; n];
    for i in channel.strongest(config.n_comm) {
        selection[i] = true;
    }
    let power = solve_power_for(&selection, channel, config, &norms, DEFAULT_TOL)?;
    let state = evaluate(selection, power, channel, config, &norms)?;
    let trace = AcmTrace {
        initial: (state.obj_c, state.obj_a, state.objective),
        ..AcmTrace::default()
    };
    finish(state, config, trace, true)
}
