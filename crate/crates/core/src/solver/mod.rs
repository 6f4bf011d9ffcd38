//! Convex subproblems of the alternating design loop.
//!
//! Both subproblems are small (a few hundred variables and constraints) and
//! dense, so they share one log-barrier interior-point solver
//! ([`barrier`]) that handles linear inequalities, linear equalities and
//! 2-dimensional second-order cones, with a linear-plus-logarithmic objective.

use alloc::vec::Vec;

use crate::error::{Error, Result};

mod barrier;
pub mod assignment;
pub mod power;

pub use assignment::{solve_assignment, AssignmentSubproblem};
pub use power::{solve_power, waterfill, Normalizers, PowerSolution, PowerSubproblem};

/// Default tolerance on the KKT residual.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Absolute tolerance used when checking returned points against constraints.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Primal solution; empty when the problem is infeasible.
    pub solution: Vec<f64>,
    pub objective: f64,
    /// Relative stationarity plus complementarity plus dual infeasibility at
    /// the returned point.
    pub kkt_residual: f64,
    /// Newton iterations, phase I included.
    pub iterations: usize,
    pub status: SolverStatus,
}

impl SolverReport {
    pub(crate) fn infeasible(iterations: usize) -> Self {
        SolverReport {
            solution: Vec::new(),
            objective: f64::NAN,
            kkt_residual: f64::NAN,
            iterations,
            status: SolverStatus::Infeasible,
        }
    }

    /// Turns an infeasible report into an error; other statuses pass through.
    pub fn feasible(self, what: &str) -> Result<Self> {
        match self.status {
            SolverStatus::Infeasible => Err(Error::Infeasible(alloc::format!(
                "{what} subproblem has no feasible point"
            ))),
            _ => Ok(self),
        }
    }
}
