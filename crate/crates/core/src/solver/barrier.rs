//! Dense log-barrier interior-point method.
//!
//! Solves
//!
//! ```text
//! minimize    cᵀx − Σ_j w_j ln(1 + g_j x_{i_j})
//! subject to  E x = b
//!             aᵢᵀx ≤ hᵢ
//!             ‖C_k x‖₂ ≤ x_τ            (C_k: 2 rows of a shared cone matrix)
//! ```
//!
//! by following the central path of `t·f₀(x) + φ(x)` with equality-constrained
//! Newton steps. A strictly feasible start comes from the caller or from a
//! phase-I problem that minimizes a shared slack `s` added to every
//! inequality.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float as _;

use super::{SolverReport, SolverStatus};

/// `weight · (−ln(1 + gain · x[var]))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogTerm {
    pub var: usize,
    pub gain: f64,
    pub weight: f64,
}

/// `Σ coef[i] · x[idx[i]] ≤ rhs`.
#[derive(Debug, Clone)]
pub(crate) struct LinearRow {
    pub idx: Vec<usize>,
    pub coef: Vec<f64>,
    pub rhs: f64,
}

impl LinearRow {
    fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.coef).map(|(&i, c)| c * x[i]).sum()
    }
}

/// Cones `‖rows[2k..2k+2] · x[..cols]‖ ≤ x[epigraph]`, with `epigraph ≥ cols`.
#[derive(Debug, Clone)]
pub(crate) struct ConeBlock {
    pub rows: DMatrix<f64>,
    pub epigraph: usize,
}

impl ConeBlock {
    fn count(&self) -> usize {
        self.rows.nrows() / 2
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub n: usize,
    pub linear: Vec<f64>,
    pub logs: Vec<LogTerm>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ineq: Vec<LinearRow>,
    pub cones: Option<ConeBlock>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub tol: f64,
    pub mu: f64,
    pub max_newton: usize,
}

impl Settings {
    pub fn with_tol(tol: f64) -> Self {
        Settings {
            tol,
            mu: 50.0,
            max_newton: 2000,
        }
    }
}

const NEWTON_EPS: f64 = 1e-14;
/// Cone-free programs with at least this many variables use the banded
/// Newton solve.
const STRUCTURED_MIN: usize = 24;
/// Widest row (index span) kept in the band.
const MAX_BAND: usize = 16;
const LOG_GUARD: f64 = 1e-12;
/// Phase-I optimum above this means no feasible point at all.
const INFEASIBLE_SLACK: f64 = 1e-7;

impl Program {
    pub fn degree(&self) -> usize {
        self.ineq.len() + 2 * self.cones.as_ref().map_or(0, ConeBlock::count)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(x).map(|(c, v)| c * v).sum();
        let logs: f64 = self
            .logs
            .iter()
            .map(|l| -l.weight * (l.gain * x[l.var]).max(-1.0 + LOG_GUARD).ln_1p())
            .sum();
        lin + logs
    }

    fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.linear.clone();
        for l in &self.logs {
            g[l.var] -= l.weight * l.gain / (1.0 + l.gain * x[l.var]);
        }
        g
    }

    /// Largest violation of any inequality at `x` (negative when strictly
    /// feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = self.linear_violation(x);
        if let Some(cones) = &self.cones {
            let z = cone_values(cones, x);
            let tau = x[cones.epigraph];
            for k in 0..cones.count() {
                worst = worst.max(z[2 * k].hypot(z[2 * k + 1]) - tau);
            }
        }
        worst
    }

    /// Inside every inequality by more than rounding: a start sitting on a
    /// constraint up to rounding cannot be centred.
    pub fn strictly_feasible(&self, x: &[f64]) -> bool {
        let margin = 1e-9 * (1.0 + self.ineq.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max));
        x.len() == self.n && self.max_violation(x) < -margin
    }

    fn linear_violation(&self, x: &[f64]) -> f64 {
        self.ineq
            .iter()
            .map(|row| row.dot(x) - row.rhs)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lifts the epigraph variable strictly above every cone.
    fn lift_epigraph(&self, x: &mut [f64]) {
        if let Some(cones) = &self.cones {
            let z = cone_values(cones, x);
            let top = (0..cones.count())
                .map(|k| z[2 * k].hypot(z[2 * k + 1]))
                .fold(0.0, f64::max);
            x[cones.epigraph] = 1.5 * top + 1.0;
        }
    }

    /// Runs the barrier method from `start` when it is strictly feasible, or
    /// from a phase-I point otherwise.
    pub fn solve(&self, start: Option<&[f64]>, settings: Settings) -> SolverReport {
        let mut iterations = 0;
        let x0 = match start {
            Some(x) if self.strictly_feasible(x) => x.to_vec(),
            _ => match self.phase_one(settings, &mut iterations) {
                PhaseOne::Interior(mut x) => {
                    self.lift_epigraph(&mut x);
                    x
                }
                PhaseOne::Boundary { mut x, slack } => {
                    self.lift_epigraph(&mut x);
                    // Feasible set without interior: solve a slightly relaxed
                    // copy, violating constraints by at most ~1e-7.
                    let relaxed = self.relaxed(slack + 1e-8);
                    let mut report = relaxed.central_path(x, Phase::Two, settings, iterations);
                    report.objective = self.objective(&report.solution);
                    return report;
                }
                PhaseOne::Infeasible => return SolverReport::infeasible(iterations),
            },
        };
        self.central_path(x0, Phase::Two, settings, iterations)
    }

    fn relaxed(&self, delta: f64) -> Program {
        let mut p = self.clone();
        for row in &mut p.ineq {
            row.rhs += delta;
        }
        p
    }

    fn phase_one(&self, settings: Settings, iterations: &mut usize) -> PhaseOne {
        // The epigraph variable of the cones is free, so phase I only needs the
        // linear rows; it is lifted above the cones afterwards.
        let mut x = least_norm_solution(&self.eq, self.n);
        if self.ineq.is_empty() {
            return PhaseOne::Interior(x);
        }
        let violation = self.linear_violation(&x);
        let s0 = violation.max(0.0) + 1.0;
        // Keep phase I bounded below.
        let floor = 1.0 + violation.abs();
        x.push(s0);
        let phase = Phase::One { floor };
        let loose = Settings {
            tol: 1e-7,
            ..settings
        };
        let report = self.central_path(x, phase, loose, 0);
        *iterations += report.iterations;
        let mut x = report.solution;
        let slack = x.pop().unwrap_or(f64::INFINITY);
        if slack < -1e-9 {
            PhaseOne::Interior(x)
        } else if slack <= INFEASIBLE_SLACK {
            PhaseOne::Boundary { x, slack: slack.max(0.0) }
        } else {
            PhaseOne::Infeasible
        }
    }

    fn central_path(
        &self,
        mut x: Vec<f64>,
        phase: Phase,
        settings: Settings,
        mut iterations: usize,
    ) -> SolverReport {
        let dim = x.len();
        let degree = match phase {
            Phase::One { .. } => self.ineq.len() as f64 + 1.0,
            Phase::Two => self.degree() as f64,
        };
        let mut t = 1.0;
        let mut status = SolverStatus::Optimal;
        loop {
            // centering
            let mut last_decrement = f64::INFINITY;
            loop {
                if iterations >= settings.max_newton {
                    status = SolverStatus::MaxIterations;
                    break;
                }
                let eval = match self.evaluate(&x, t, phase) {
                    Some(e) => e,
                    None => break,
                };
                iterations += 1;
                let eq_residual = self.eq_residual(&x);
                let Some((dx, _)) = self.newton_direction(&eval, &eq_residual, dim) else {
                    break;
                };
                let slope: f64 = eval.grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
                let decrement = -slope / 2.0;
                // quadratic convergence has ended: rounding noise dominates
                if decrement <= NEWTON_EPS || (decrement < 1e-8 && decrement > 0.25 * last_decrement) {
                    break;
                }
                last_decrement = decrement;
                let mut step = self.max_linear_step(&x, &dx, phase).min(1.0);
                let mut accepted = false;
                let line = Line::new(self, &x, &dx, phase);
                while step > 1e-12 {
                    if let Some(change) = line.change(step, t) {
                        if change <= 0.01 * step * slope {
                            for (a, d) in x.iter_mut().zip(&dx) {
                                *a += step * d;
                            }
                            accepted = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
                if let Phase::One { .. } = phase {
                    // Far enough inside: stop as soon as the slack is clearly negative
                    // and the point is well centred.
                    if x[dim - 1] < -0.25 && -slope / 2.0 < 1e-3 {
                        return self.report(x, t, phase, iterations, status, settings.tol);
                    }
                }
            }
            if status == SolverStatus::MaxIterations {
                break;
            }
            match phase {
                Phase::One { .. } if degree / t <= settings.tol => break,
                Phase::Two if self.kkt_residual(&x, t) <= settings.tol => break,
                // stationarity stuck at rounding level: further t cannot help
                Phase::Two if self.complementarity(t) <= 1e-3 * settings.tol => break,
                _ => {}
            }
            t *= settings.mu;
        }
        self.report(x, t, phase, iterations, status, settings.tol)
    }

    fn report(
        &self,
        x: Vec<f64>,
        t: f64,
        phase: Phase,
        iterations: usize,
        status: SolverStatus,
        tol: f64,
    ) -> SolverReport {
        let (objective, kkt_residual) = match phase {
            Phase::One { .. } => (x[x.len() - 1], f64::NAN),
            Phase::Two => (self.objective(&x), self.kkt_residual(&x, t)),
        };
        let status = if status == SolverStatus::Optimal
            && matches!(phase, Phase::Two)
            && !(kkt_residual <= tol)
        {
            SolverStatus::MaxIterations
        } else {
            status
        };
        SolverReport {
            solution: x,
            objective,
            kkt_residual,
            iterations,
            status,
        }
    }

    fn eq_residual(&self, x: &[f64]) -> Vec<f64> {
        self.eq
            .iter()
            .map(|(a, b)| a.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() - b)
            .collect()
    }

    /// KKT residual of `x` with the Newton-corrected central-path duals
    /// `λᵢ = (1 + aᵢᵀdx/sᵢ)/(t sᵢ)` and the equality multipliers of the same
    /// Newton system. Returns relative stationarity plus the largest
    /// complementarity product plus the largest dual infeasibility. These
    /// duals satisfy stationarity up to linear-algebra error, and `λᵢsᵢ`
    /// stays accurate even when `sᵢ` itself is at rounding level.
    fn kkt_residual(&self, x: &[f64], t: f64) -> f64 {
        let Some(eval) = self.evaluate(x, t, Phase::Two) else {
            return f64::INFINITY;
        };
        let Some((dx, nu)) = self.newton_direction(&eval, &self.eq_residual(x), self.n) else {
            return f64::INFINITY;
        };
        // (t∇f₀ + ∇φ) + ∇²φ·dx + Eᵀν, i.e. the Newton equation without t∇²f₀·dx
        let hdx = self.hess_apply(&eval.hess, &dx);
        let mut r: Vec<f64> = (0..self.n).map(|i| eval.grad[i] + hdx[i]).collect();
        for l in &self.logs {
            let arg = 1.0 + l.gain * x[l.var];
            r[l.var] -= t * l.weight * l.gain * l.gain / (arg * arg) * dx[l.var];
        }
        for ((row, _), v) in self.eq.iter().zip(&nu) {
            for (ri, a) in r.iter_mut().zip(row) {
                *ri += a * v;
            }
        }
        let g0 = self.objective_grad(x);
        let scale = 1.0 + g0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let stationarity = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (t * scale);

        let mut complementarity = 0.0f64;
        let mut dual_infeasibility = 0.0f64;
        for row in &self.ineq {
            let slack = row.rhs - row.dot(x);
            let ratio = 1.0 + row.dot(&dx) / slack;
            complementarity = complementarity.max(ratio.abs() / t);
            if ratio < 0.0 {
                dual_infeasibility = dual_infeasibility.max(-ratio / (t * slack));
            }
        }
        if let Some(cones) = &self.cones {
            let z = cone_values(cones, x);
            let dz = cone_values(cones, &dx);
            let (tau, dtau) = (x[cones.epigraph], dx[cones.epigraph]);
            for k in 0..cones.count() {
                let (a, b) = (z[2 * k], z[2 * k + 1]);
                let norm = a.hypot(b);
                let slack = (tau - norm) * (tau + norm);
                let inner = tau * dtau - a * dz[2 * k] - b * dz[2 * k + 1];
                let ratio = 2.0 - 2.0 * inner / slack;
                complementarity = complementarity.max(ratio.abs() / t);
                if ratio < 0.0 {
                    dual_infeasibility = dual_infeasibility.max(-ratio / (t * slack));
                }
            }
        }
        stationarity + complementarity + dual_infeasibility
    }

    /// Largest per-constraint complementarity `θᵢ/t` on the central path
    /// (`θ = 1` for a linear row, `2` for a cone).
    fn complementarity(&self, t: f64) -> f64 {
        if self.cones.is_some() {
            2.0 / t
        } else if self.ineq.is_empty() {
            0.0
        } else {
            1.0 / t
        }
    }

    fn max_linear_step(&self, x: &[f64], dx: &[f64], phase: Phase) -> f64 {
        let s_idx = self.n;
        let phase_one = matches!(phase, Phase::One { .. });
        let mut step = f64::INFINITY;
        for row in &self.ineq {
            let mut slack = row.rhs - row.dot(x);
            let mut rate = row.dot(dx);
            if phase_one {
                slack += x[s_idx];
                rate -= dx[s_idx];
            }
            if rate > 0.0 {
                step = step.min(slack / rate);
            }
        }
        if let Phase::One { floor } = phase {
            if dx[s_idx] < 0.0 {
                step = step.min((x[s_idx] + floor) / -dx[s_idx]);
            }
        }
        0.99 * step
    }

    /// Gradient and Hessian of `t·f₀ + φ` (phase II) or `t·s + φ` (phase I).
    /// `None` outside the domain.
    fn evaluate(&self, x: &[f64], t: f64, phase: Phase) -> Option<Evaluation> {
        if matches!(phase, Phase::Two) && self.cones.is_none() && self.n >= STRUCTURED_MIN {
            return self.evaluate_rows(x, t);
        }
        let dim = x.len();
        let phase_one = matches!(phase, Phase::One { .. });
        let s_idx = self.n;
        let shift = if phase_one { x[s_idx] } else { 0.0 };
        let mut grad = vec![0.0; dim];
        let mut hess = DMatrix::zeros(dim, dim);

        match phase {
            Phase::One { floor } => {
                let slack = x[s_idx] + floor;
                if slack <= 0.0 {
                    return None;
                }
                grad[s_idx] += t - 1.0 / slack;
                hess[(s_idx, s_idx)] += 1.0 / (slack * slack);
            }
            Phase::Two => {
                for (g, c) in grad.iter_mut().zip(&self.linear) {
                    *g += t * c;
                }
                for l in &self.logs {
                    let arg = 1.0 + l.gain * x[l.var];
                    if arg <= LOG_GUARD {
                        return None;
                    }
                    grad[l.var] -= t * l.weight * l.gain / arg;
                    hess[(l.var, l.var)] += t * l.weight * l.gain * l.gain / (arg * arg);
                }
            }
        }

        for row in &self.ineq {
            let slack = row.rhs - row.dot(x) + shift;
            if slack <= 0.0 {
                return None;
            }
            let inv = 1.0 / slack;
            let inv2 = inv * inv;
            for (a, &i) in row.idx.iter().enumerate() {
                grad[i] += row.coef[a] * inv;
                for (b, &j) in row.idx.iter().enumerate() {
                    hess[(i, j)] += row.coef[a] * row.coef[b] * inv2;
                }
                if phase_one {
                    hess[(i, s_idx)] -= row.coef[a] * inv2;
                    hess[(s_idx, i)] -= row.coef[a] * inv2;
                }
            }
            if phase_one {
                grad[s_idx] -= inv;
                hess[(s_idx, s_idx)] += inv2;
            }
        }

        if let (Some(cones), false) = (&self.cones, phase_one) {
            let z = cone_values(cones, x);
            let tau = x[cones.epigraph];
            let mut gaps = Vec::with_capacity(cones.count());
            for k in 0..cones.count() {
                let norm = z[2 * k].hypot(z[2 * k + 1]);
                let gap = tau - norm;
                if gap <= 0.0 {
                    return None;
                }
                gaps.push((gap, norm));
            }
            cone_derivatives(cones, &z, tau, &gaps, &mut grad, &mut hess);
        }

        Some(Evaluation {
            grad,
            hess: Hessian::Dense(hess),
        })
    }

    /// Phase-II evaluation without cones, keeping the Hessian as a diagonal
    /// plus weighted rank-one terms `wᵢ aᵢaᵢᵀ`, one per inequality row.
    fn evaluate_rows(&self, x: &[f64], t: f64) -> Option<Evaluation> {
        let mut grad: Vec<f64> = self.linear.iter().map(|c| t * c).collect();
        let mut diag = vec![0.0; self.n];
        for l in &self.logs {
            let arg = 1.0 + l.gain * x[l.var];
            if arg <= LOG_GUARD {
                return None;
            }
            grad[l.var] -= t * l.weight * l.gain / arg;
            diag[l.var] += t * l.weight * l.gain * l.gain / (arg * arg);
        }
        let mut weights = Vec::with_capacity(self.ineq.len());
        for row in &self.ineq {
            let slack = row.rhs - row.dot(x);
            if slack <= 0.0 {
                return None;
            }
            let inv = 1.0 / slack;
            for (&i, c) in row.idx.iter().zip(&row.coef) {
                grad[i] += c * inv;
            }
            weights.push(inv * inv);
        }
        Some(Evaluation {
            grad,
            hess: Hessian::Rows { diag, weights },
        })
    }

    /// `H·v` for the Hessian of `eval`.
    fn hess_apply(&self, hess: &Hessian, v: &[f64]) -> Vec<f64> {
        match hess {
            Hessian::Dense(h) => (h * DVector::from_column_slice(v)).iter().copied().collect(),
            Hessian::Rows { diag, weights } => {
                let mut out: Vec<f64> = diag.iter().zip(v).map(|(d, x)| d * x).collect();
                for (row, w) in self.ineq.iter().zip(weights) {
                    let dot = w * row.dot(v);
                    for (&i, c) in row.idx.iter().zip(&row.coef) {
                        out[i] += c * dot;
                    }
                }
                out
            }
        }
    }

    fn newton_direction(
        &self,
        eval: &Evaluation,
        eq_residual: &[f64],
        dim: usize,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        match &eval.hess {
            Hessian::Dense(h) => dense_newton(h, &eval.grad, &self.eq, eq_residual, dim),
            Hessian::Rows { diag, weights } => self
                .structured_newton(diag, weights, &eval.grad, eq_residual)
                .or_else(|| {
                    let h = self.dense_hessian(diag, weights);
                    dense_newton(&h, &eval.grad, &self.eq, eq_residual, dim)
                }),
        }
    }

    fn dense_hessian(&self, diag: &[f64], weights: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        for (row, w) in self.ineq.iter().zip(weights) {
            for (a, &i) in row.idx.iter().enumerate() {
                for (b, &j) in row.idx.iter().enumerate() {
                    h[(i, j)] += w * row.coef[a] * row.coef[b];
                }
            }
        }
        h
    }

    /// Newton step for a row-structured Hessian. Rows spanning at most
    /// `MAX_BAND` consecutive variables go into a banded Cholesky factor; wider
    /// rows and the equality constraints are eliminated through a small dense
    /// Schur complement. Returns `None` when the band is not positive definite
    /// or the solve is inaccurate, so the caller can fall back to a dense
    /// factorization.
    fn structured_newton(
        &self,
        diag: &[f64],
        weights: &[f64],
        grad: &[f64],
        eq_residual: &[f64],
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        // Jacobi scaling
        let mut hd = diag.to_vec();
        for (row, w) in self.ineq.iter().zip(weights) {
            for (&i, c) in row.idx.iter().zip(&row.coef) {
                hd[i] += w * c * c;
            }
        }
        let d: Vec<f64> = hd
            .iter()
            .map(|&v| if v > 0.0 && v.is_finite() { 1.0 / v.sqrt() } else { 1.0 })
            .collect();

        let span = |row: &LinearRow| {
            let lo = row.idx.iter().copied().min().unwrap_or(0);
            let hi = row.idx.iter().copied().max().unwrap_or(0);
            hi - lo
        };
        let mut band = 0;
        let mut wide = Vec::new();
        for (r, row) in self.ineq.iter().enumerate() {
            let s = span(row);
            if s <= MAX_BAND {
                band = band.max(s);
            } else {
                wide.push(r);
            }
        }
        let mut chol = Band::zeros(n, band);
        for i in 0..n {
            *chol.at(i, i) += diag[i] * d[i] * d[i];
        }
        for (r, row) in self.ineq.iter().enumerate() {
            if span(row) > MAX_BAND {
                continue;
            }
            let w = weights[r];
            for (a, &i) in row.idx.iter().enumerate() {
                for (b, &j) in row.idx.iter().enumerate() {
                    if j <= i {
                        *chol.at(i, j) += w * row.coef[a] * row.coef[b] * d[i] * d[j];
                    }
                }
            }
        }
        if !chol.factor() {
            return None;
        }

        // border columns: wide rows, then equalities, all in scaled coordinates
        let k = wide.len();
        let m = self.eq.len();
        let mut border: Vec<Vec<f64>> = Vec::with_capacity(k + m);
        for &r in &wide {
            let row = &self.ineq[r];
            let mut v = vec![0.0; n];
            for (&i, c) in row.idx.iter().zip(&row.coef) {
                v[i] += c * d[i];
            }
            border.push(v);
        }
        for (a, _) in &self.eq {
            border.push(a.iter().zip(&d).map(|(x, s)| x * s).collect());
        }
        let solved: Vec<Vec<f64>> = border.iter().map(|v| chol.solve(v)).collect();
        let mut schur = DMatrix::zeros(k + m, k + m);
        for p in 0..k + m {
            for q in 0..k + m {
                schur[(p, q)] = -dot(&border[p], &solved[q]);
            }
            if p < k {
                schur[(p, p)] -= 1.0 / weights[wide[p]];
            }
        }
        let lu = schur.lu();

        let rhs: Vec<f64> = grad.iter().zip(&d).map(|(g, s)| -g * s).collect();
        let rhs_eq: Vec<f64> = eq_residual.iter().map(|r| -r).collect();
        let solve = |top: &[f64], bottom: &[f64]| -> Option<(Vec<f64>, Vec<f64>)> {
            let base = chol.solve(top);
            let reduced = DVector::from_iterator(
                k + m,
                (0..k + m).map(|p| {
                    let target = if p < k { 0.0 } else { bottom[p - k] };
                    target - dot(&border[p], &base)
                }),
            );
            let z = lu.solve(&reduced)?;
            let mut y = base;
            for (p, col) in solved.iter().enumerate() {
                for (yi, c) in y.iter_mut().zip(col) {
                    *yi -= z[p] * c;
                }
            }
            Some((y, z.iter().skip(k).copied().collect()))
        };
        let (mut y, mut nu) = solve(&rhs, &rhs_eq)?;

        // one step of iterative refinement against the unscaled system
        for pass in 0..2 {
            let dx: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a * b).collect();
            let hdx = self.hess_apply(&Hessian::Rows { diag: diag.to_vec(), weights: weights.to_vec() }, &dx);
            let mut res_top: Vec<f64> = (0..n).map(|i| -grad[i] - hdx[i]).collect();
            for ((a, _), v) in self.eq.iter().zip(&nu) {
                for (r, c) in res_top.iter_mut().zip(a) {
                    *r -= c * v;
                }
            }
            let res_top: Vec<f64> = res_top.iter().zip(&d).map(|(r, s)| r * s).collect();
            let res_eq: Vec<f64> = self
                .eq
                .iter()
                .zip(eq_residual)
                .map(|((a, _), r)| -r - dot(a, &dx))
                .collect();
            let size = 1.0 + inf_norm(&rhs) + inf_norm(&y) * (2 * band + 2 + k) as f64;
            let err = inf_norm(&res_top).max(inf_norm(&res_eq));
            if err <= 1e-12 * size {
                break;
            }
            if pass == 1 {
                if err > 1e-8 * size {
                    return None;
                }
                break;
            }
            let (cy, cnu) = solve(&res_top, &res_eq)?;
            for (a, b) in y.iter_mut().zip(&cy) {
                *a += b;
            }
            for (a, b) in nu.iter_mut().zip(&cnu) {
                *a += b;
            }
        }
        let dx: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a * b).collect();
        if dx.iter().chain(&nu).all(|v| v.is_finite()) {
            Some((dx, nu))
        } else {
            None
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Lower band storage of a symmetric matrix with half-bandwidth `p`, factored
/// in place as `L Lᵀ`.
struct Band {
    n: usize,
    p: usize,
    /// Row `i` holds `L[i][i−p ..= i]`.
    data: Vec<f64>,
}

impl Band {
    fn zeros(n: usize, p: usize) -> Self {
        Band {
            n,
            p,
            data: vec![0.0; n * (p + 1)],
        }
    }

    /// Entry `(i, j)` with `i − p ≤ j ≤ i`.
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * (self.p + 1) + (self.p + j - i)]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.p + 1) + (self.p + j - i)]
    }

    fn factor(&mut self) -> bool {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.p);
            for j in lo..=i {
                let mut sum = self.get(i, j);
                for k in lo.max(j.saturating_sub(self.p))..j {
                    sum -= self.get(i, k) * self.get(j, k);
                }
                if j == i {
                    if !(sum > 1e-14) {
                        return false;
                    }
                    *self.at(i, i) = sum.sqrt();
                } else {
                    *self.at(i, j) = sum / self.get(j, j);
                }
            }
        }
        true
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.p);
            let mut sum = y[i];
            for k in lo..i {
                sum -= self.get(i, k) * y[k];
            }
            y[i] = sum / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.p).min(self.n - 1);
            let mut sum = y[i];
            for k in i + 1..=hi {
                sum -= self.get(k, i) * y[k];
            }
            y[i] = sum / self.get(i, i);
        }
        y
    }
}

fn cone_values(cones: &ConeBlock, x: &[f64]) -> DVector<f64> {
    let cols = cones.rows.ncols();
    &cones.rows * DVector::from_column_slice(&x[..cols])
}

/// Adds gradient and Hessian of `−Σ_k ln(τ² − ‖z_k‖²)`.
///
/// With `g = τ − ‖z‖`, `h = τ + ‖z‖` and `u = z/‖z‖`, the local Hessian in
/// `(τ, z)` is `a aᵀ/g² + b bᵀ/h² + (2/gh)(I − u uᵀ)` with `a = (1, −u)` and
/// `b = (1, u)`: a sum of PSD terms, which keeps it numerically PSD close to
/// the boundary of the cone.
fn cone_derivatives(
    cones: &ConeBlock,
    z: &DVector<f64>,
    tau: f64,
    gaps: &[(f64, f64)],
    grad: &mut [f64],
    hess: &mut DMatrix<f64>,
) {
    let rows = &cones.rows;
    let cols = rows.ncols();
    let count = gaps.len();
    let mut gz = DVector::zeros(2 * count);
    let mut hz_tau = DVector::zeros(2 * count);
    let mut scaled = DMatrix::zeros(2 * count, cols);
    let mut g_tau = 0.0;
    let mut h_tau = 0.0;
    for k in 0..count {
        let (g, norm) = gaps[k];
        let h = tau + norm;
        let (u0, u1) = if norm > 0.0 {
            (z[2 * k] / norm, z[2 * k + 1] / norm)
        } else {
            (1.0, 0.0)
        };
        let (ig, ih) = (1.0 / g, 1.0 / h);
        let (ig2, ih2) = (ig * ig, ih * ih);
        let perp = 2.0 * ig * ih;
        g_tau -= ig + ih;
        gz[2 * k] = u0 * (ig - ih);
        gz[2 * k + 1] = u1 * (ig - ih);
        h_tau += ig2 + ih2;
        hz_tau[2 * k] = u0 * (ih2 - ig2);
        hz_tau[2 * k + 1] = u1 * (ih2 - ig2);
        let radial = ig2 + ih2;
        let h00 = radial * u0 * u0 + perp * (1.0 - u0 * u0);
        let h01 = (radial - perp) * u0 * u1;
        let h11 = radial * u1 * u1 + perp * (1.0 - u1 * u1);
        for c in 0..cols {
            let r0 = rows[(2 * k, c)];
            let r1 = rows[(2 * k + 1, c)];
            scaled[(2 * k, c)] = h00 * r0 + h01 * r1;
            scaled[(2 * k + 1, c)] = h01 * r0 + h11 * r1;
        }
    }
    let block = rows.tr_mul(&scaled);
    let mut view = hess.view_mut((0, 0), (cols, cols));
    view += &block;
    let gx = rows.tr_mul(&gz);
    let cross = rows.tr_mul(&hz_tau);
    for c in 0..cols {
        grad[c] += gx[c];
    }
    let v = cones.epigraph;
    grad[v] += g_tau;
    for c in 0..cols {
        hess[(c, v)] += cross[c];
        hess[(v, c)] += cross[c];
    }
    hess[(v, v)] += h_tau;
}

/// Exact change of the centering objective along a Newton direction. Slack
/// differences are formed from the direction itself, so the comparison stays
/// accurate when the objective value is large.
struct Line {
    phase_one: bool,
    floor: f64,
    x_s: f64,
    d_s: f64,
    lin_slope: f64,
    rows: Vec<(f64, f64)>,
    logs: Vec<(f64, f64, f64)>,
    cones: Vec<(f64, f64, f64)>,
    tau: (f64, f64),
}

impl Line {
    fn new(p: &Program, x: &[f64], dx: &[f64], phase: Phase) -> Self {
        let (phase_one, floor) = match phase {
            Phase::One { floor } => (true, floor),
            Phase::Two => (false, 0.0),
        };
        let (x_s, d_s) = if phase_one { (x[p.n], dx[p.n]) } else { (0.0, 0.0) };
        let rows = p
            .ineq
            .iter()
            .map(|r| (r.rhs - r.dot(x) + x_s, d_s - r.dot(dx)))
            .collect();
        let (lin_slope, logs, cones, tau) = if phase_one {
            (d_s, Vec::new(), Vec::new(), (0.0, 0.0))
        } else {
            let lin = p.linear.iter().zip(dx).map(|(c, d)| c * d).sum();
            let logs = p
                .logs
                .iter()
                .map(|l| (l.weight, 1.0 + l.gain * x[l.var], l.gain * dx[l.var]))
                .collect();
            let (cones, tau) = match &p.cones {
                Some(c) => {
                    let z = cone_values(c, x);
                    let dz = cone_values(c, dx);
                    let tau = (x[c.epigraph], dx[c.epigraph]);
                    let terms = (0..c.count())
                        .map(|k| {
                            let (a, b) = (z[2 * k], z[2 * k + 1]);
                            let (da, db) = (dz[2 * k], dz[2 * k + 1]);
                            let norm = a.hypot(b);
                            let slack = (tau.0 - norm) * (tau.0 + norm);
                            (slack, 2.0 * (a * da + b * db), da * da + db * db)
                        })
                        .collect();
                    (terms, tau)
                }
                None => (Vec::new(), (0.0, 0.0)),
            };
            (lin, logs, cones, tau)
        };
        Line {
            phase_one,
            floor,
            x_s,
            d_s,
            lin_slope,
            rows,
            logs,
            cones,
            tau,
        }
    }

    /// `F(x + step·dx) − F(x)`, or `None` if the trial point leaves the domain.
    fn change(&self, step: f64, t: f64) -> Option<f64> {
        let mut delta = t * step * self.lin_slope;
        if self.phase_one {
            let s = self.x_s + self.floor;
            let rel = step * self.d_s / s;
            if rel <= -1.0 {
                return None;
            }
            delta -= rel.ln_1p();
        }
        for &(slack, rate) in &self.rows {
            let rel = step * rate / slack;
            if rel <= -1.0 {
                return None;
            }
            delta -= rel.ln_1p();
        }
        for &(w, arg, rate) in &self.logs {
            let rel = step * rate / arg;
            if arg + step * rate <= LOG_GUARD {
                return None;
            }
            delta -= t * w * rel.ln_1p();
        }
        let (tau, dtau) = self.tau;
        let tau_gain = step * (2.0 * tau * dtau + step * dtau * dtau);
        if !self.cones.is_empty() && tau + step * dtau <= 0.0 {
            return None;
        }
        for &(slack, lin, quad) in &self.cones {
            let diff = tau_gain - step * (lin + step * quad);
            let rel = diff / slack;
            if rel <= -1.0 {
                return None;
            }
            delta -= rel.ln_1p();
        }
        Some(delta)
    }
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    One { floor: f64 },
    Two,
}

enum PhaseOne {
    Interior(Vec<f64>),
    Boundary { x: Vec<f64>, slack: f64 },
    Infeasible,
}

struct Evaluation {
    grad: Vec<f64>,
    hess: Hessian,
}

enum Hessian {
    Dense(DMatrix<f64>),
    /// `diag + Σᵢ weights[i]·aᵢaᵢᵀ` over the program's inequality rows.
    Rows { diag: Vec<f64>, weights: Vec<f64> },
}

fn least_norm_solution(eq: &[(Vec<f64>, f64)], n: usize) -> Vec<f64> {
    if eq.is_empty() {
        return vec![0.0; n];
    }
    let m = eq.len();
    let e = DMatrix::from_fn(m, n, |i, j| eq[i].0[j]);
    let b = DVector::from_iterator(m, eq.iter().map(|(_, b)| *b));
    let gram = &e * e.transpose();
    match gram.lu().solve(&b) {
        Some(y) => (e.transpose() * y).iter().copied().collect(),
        None => vec![0.0; n],
    }
}

/// Solves `[H Eᵀ; E 0][dx; ν] = [−g; −r]` after Jacobi scaling of `H`.
/// Without equalities `H` is factored by Cholesky; otherwise the full KKT
/// matrix is factored by LU, which stays accurate when the equality rows lie
/// along directions of very high curvature. Equality rows act on the leading
/// variables only.
fn dense_newton(
    h: &DMatrix<f64>,
    grad: &[f64],
    eq: &[(Vec<f64>, f64)],
    eq_residual: &[f64],
    dim: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let d: Vec<f64> = (0..dim)
        .map(|i| {
            let v = h[(i, i)];
            if v > 0.0 && v.is_finite() {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let m = eq.len();
    let (dy, nu) = if m == 0 {
        let mut scaled = DMatrix::from_fn(dim, dim, |i, j| h[(i, j)] * d[i] * d[j]);
        let mut reg = 0.0;
        let chol = loop {
            if let Some(c) = scaled.clone().cholesky() {
                break c;
            }
            reg = if reg == 0.0 { 1e-12 } else { reg * 100.0 };
            if reg > 1.0 {
                return None;
            }
            for i in 0..dim {
                scaled[(i, i)] += reg;
            }
        };
        let dy = chol.solve(&DVector::from_iterator(dim, (0..dim).map(|i| -grad[i] * d[i])));
        (dy, Vec::new())
    } else {
        let size = dim + m;
        let mut kkt = DMatrix::zeros(size, size);
        for i in 0..dim {
            for j in 0..dim {
                kkt[(i, j)] = h[(i, j)] * d[i] * d[j];
            }
        }
        for (r, (row, _)) in eq.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                kkt[(dim + r, j)] = a * d[j];
                kkt[(j, dim + r)] = a * d[j];
            }
        }
        let rhs = DVector::from_iterator(
            size,
            (0..dim)
                .map(|i| -grad[i] * d[i])
                .chain(eq_residual.iter().map(|r| -r)),
        );
        let sol = kkt.lu().solve(&rhs)?;
        (sol.rows(0, dim).into_owned(), sol.rows(dim, m).iter().copied().collect())
    };
    let dx: Vec<f64> = dy.iter().zip(&d).map(|(a, b)| a * b).collect();
    if dx.iter().chain(&nu).all(|v| v.is_finite()) {
        Some((dx, nu))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(idx: &[usize], coef: &[f64], rhs: f64) -> LinearRow {
        LinearRow {
            idx: idx.to_vec(),
            coef: coef.to_vec(),
            rhs,
        }
    }

    #[test]
    fn linear_program_on_a_box() {
        // min x0 + 2 x1  s.t. x0 + x1 = 1, 0 ≤ x ≤ 1  →  (1, 0), objective 1
        let prog = Program {
            n: 2,
            linear: vec![1.0, 2.0],
            logs: vec![],
            eq: vec![(vec![1.0, 1.0], 1.0)],
            ineq: vec![
                row(&[0], &[-1.0], 0.0),
                row(&[1], &[-1.0], 0.0),
                row(&[0], &[1.0], 1.0),
                row(&[1], &[1.0], 1.0),
            ],
            cones: None,
        };
        let r = prog.solve(None, Settings::with_tol(1e-9));
        assert_eq!(r.status, SolverStatus::Optimal, "{r:?}");
        assert!((r.objective - 1.0).abs() < 1e-7, "{r:?}");
        assert!(r.kkt_residual <= 1e-9);
    }

    #[test]
    fn single_cone_distance_to_origin() {
        // min τ s.t. ‖(x0, x1)‖ ≤ τ, x0 + x1 = 2  →  τ = √2
        let mut rows = DMatrix::zeros(2, 2);
        rows[(0, 0)] = 1.0;
        rows[(1, 1)] = 1.0;
        let prog = Program {
            n: 3,
            linear: vec![0.0, 0.0, 1.0],
            logs: vec![],
            eq: vec![(vec![1.0, 1.0, 0.0], 2.0)],
            ineq: vec![],
            cones: Some(ConeBlock { rows, epigraph: 2 }),
        };
        let r = prog.solve(None, Settings::with_tol(1e-10));
        assert_eq!(r.status, SolverStatus::Optimal, "{r:?}");
        assert!((r.objective - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn infeasible_box_is_reported() {
        let prog = Program {
            n: 1,
            linear: vec![1.0],
            logs: vec![],
            eq: vec![(vec![1.0], 2.0)],
            ineq: vec![row(&[0], &[1.0], 1.0)],
            cones: None,
        };
        assert_eq!(prog.solve(None, Settings::with_tol(1e-8)).status, SolverStatus::Infeasible);
    }

    #[test]
    fn log_objective_waterfills() {
        // max ln(1+x0) + ln(1+3 x1), x0 + x1 = 2, x ≥ 0
        // water level μ: x0 = μ − 1, x1 = μ − 1/3 → μ = 5/3
        let prog = Program {
            n: 2,
            linear: vec![0.0, 0.0],
            logs: vec![
                LogTerm { var: 0, gain: 1.0, weight: 1.0 },
                LogTerm { var: 1, gain: 3.0, weight: 1.0 },
            ],
            eq: vec![(vec![1.0, 1.0], 2.0)],
            ineq: vec![row(&[0], &[-1.0], 0.0), row(&[1], &[-1.0], 0.0)],
            cones: None,
        };
        let r = prog.solve(None, Settings::with_tol(1e-10));
        assert!((r.solution[0] - 2.0 / 3.0).abs() < 1e-7, "{r:?}");
        assert!((r.solution[1] - 4.0 / 3.0).abs() < 1e-7);
    }
}
