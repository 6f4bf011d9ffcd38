//! Monte Carlo experiments behind the CLI commands.
//!
//! Trials run on a rayon pool and are collected in trial order. Each trial
//! draws everything from streams keyed by `(seed, trial)`, so results do not
//! depend on the thread count.

use isac_core::acm::{hsapa_baseline, run_acm, AcmParams, SapaResult};
use isac_core::cve::{self, CveProblem, CveSolution};
use isac_core::link::{
    ccdf, simulate_trial, span_thresholds, trial_channel, BerResult, Designer, ErrorCount,
};
use isac_core::rng::{self, Purpose};
use isac_core::signal::{ChannelRealization, TimeWaveform};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InitCase};
use crate::error::{AppError, Result};

/// Runs `f` for trials `0..trials` on `threads` workers and returns the
/// results in trial order. The first failing trial (by index) wins.
pub fn par_trials<T, F>(threads: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> isac_core::Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::ThreadPool(e.to_string()))?;
    let results: Vec<isac_core::Result<T>> =
        pool.install(|| (0..trials).into_par_iter().map(|t| f(t as u64)).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(t, r)| r.map_err(|e| AppError::Core(e.at_trial(t))))
        .collect()
}

pub fn channel(cfg: &ExperimentConfig, trial: u64) -> isac_core::Result<ChannelRealization> {
    let wf = &cfg.waveform;
    trial_channel(
        cfg.channel_kind(),
        cfg.run.seed,
        trial,
        wf.n_subcarriers,
        wf.noise_power_comm,
    )
}

pub fn design_with(
    cfg: &ExperimentConfig,
    designer: Designer,
    params: &AcmParams,
    ch: &ChannelRealization,
) -> isac_core::Result<SapaResult> {
    let wf = cfg.waveform();
    match designer {
        Designer::Proposed => run_acm(&wf, ch, params),
        Designer::Hsapa => hsapa_baseline(&wf, ch),
    }
}

/// Envelope optimization of one plan, together with the random-phase start.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub problem: CveProblem,
    pub solution: CveSolution,
    pub optimized: TimeWaveform,
    /// Waveform with the random starting phases (the RPM baseline).
    pub random: TimeWaveform,
}

pub fn flatten(cfg: &ExperimentConfig, sapa: &SapaResult, trial: u64) -> isac_core::Result<Envelope> {
    let n = sapa.plan.len();
    let comm = cve::random_phases(n, &mut rng::trial_stream(cfg.run.seed, trial, Purpose::CommPhases));
    let reserved =
        cve::random_phases(n, &mut rng::trial_stream(cfg.run.seed, trial, Purpose::ReservedPhases));
    let problem = CveProblem::new(sapa.plan.clone(), &comm, reserved, cfg.cve.oversampling)?;
    let solution = cve::optimize_phases(&problem, cfg.cve.max_iter, cfg.cve.tol)?;
    let optimized = cve::waveform(&problem, &solution.reserved_phases)?;
    let random = cve::waveform(&problem, &problem.initial_reserved_phases)?;
    Ok(Envelope {
        problem,
        solution,
        optimized,
        random,
    })
}

#[derive(Debug, Clone)]
pub struct DesignOutput {
    pub channel: ChannelRealization,
    pub sapa: SapaResult,
    pub envelope: Envelope,
}

/// Proposed design plus envelope optimization on trial 0's channel.
pub fn design(cfg: &ExperimentConfig) -> Result<DesignOutput> {
    let mut out = par_trials(1, 1, |t| {
        let channel = channel(cfg, t)?;
        let sapa = design_with(cfg, Designer::Proposed, &cfg.acm_params(), &channel)?;
        let envelope = flatten(cfg, &sapa, t)?;
        Ok(DesignOutput {
            channel,
            sapa,
            envelope,
        })
    })?;
    Ok(out.remove(0))
}

/// BER curves of both designers under common random numbers.
pub fn ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<(Designer, Vec<BerResult>)>> {
    let designers = [Designer::Proposed, Designer::Hsapa];
    let sweep = cfg.sweep();
    let link = cfg.link_params();
    let params = cfg.acm_params();
    let per_trial = par_trials(cfg.threads(), cfg.run.trials, |t| {
        let ch = channel(cfg, t)?;
        designers
            .iter()
            .map(|&d| {
                let sapa = design_with(cfg, d, &params, &ch)?;
                simulate_trial(&sapa.plan, &ch, &sweep, &link, cfg.run.seed, t)
            })
            .collect::<isac_core::Result<Vec<_>>>()
    })?;
    let points = sweep.points();
    Ok(designers
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut totals = vec![ErrorCount::default(); points.len()];
            for counts in &per_trial {
                for (tot, c) in totals.iter_mut().zip(&counts[i]) {
                    *tot += *c;
                }
            }
            let curve = points
                .iter()
                .zip(totals)
                .map(|(&(axis, _, _), c)| BerResult::new(axis, c, cfg.run.trials))
                .collect();
            (d, curve)
        })
        .collect())
}

/// Envelope metrics of one trial: proposed design with optimized phases
/// versus the same design with its random starting phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub cve: f64,
    pub papr_db: f64,
    pub rpm_cve: f64,
    pub rpm_papr_db: f64,
}

impl EnvelopeSample {
    pub fn of(env: &Envelope) -> isac_core::Result<Self> {
        Ok(EnvelopeSample {
            cve: env.optimized.cve()?,
            papr_db: env.optimized.papr_db()?,
            rpm_cve: env.random.cve()?,
            rpm_papr_db: env.random.papr_db()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcdfRow {
    pub metric: &'static str,
    pub threshold: f64,
    pub ccdf: f64,
    pub method: &'static str,
}

/// CCDF curves for `papr_db` and `cve` on thresholds spanning both methods'
/// samples.
pub fn ccdf_rows(samples: &[EnvelopeSample], count: usize) -> Vec<CcdfRow> {
    let mut rows = Vec::new();
    type Pick = fn(&EnvelopeSample) -> f64;
    let metrics: [(&str, Pick, Pick); 2] = [
        ("papr_db", |s| s.papr_db, |s| s.rpm_papr_db),
        ("cve", |s| s.cve, |s| s.rpm_cve),
    ];
    for (metric, proposed, rpm) in metrics {
        let a: Vec<f64> = samples.iter().map(proposed).collect();
        let b: Vec<f64> = samples.iter().map(rpm).collect();
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        let thresholds = span_thresholds(&all, count);
        for (method, values) in [("proposed", &a), ("rpm", &b)] {
            for (t, c) in thresholds.iter().zip(ccdf(values, &thresholds)) {
                rows.push(CcdfRow {
                    metric,
                    threshold: *t,
                    ccdf: c,
                    method,
                });
            }
        }
    }
    rows
}

pub fn envelope_samples(cfg: &ExperimentConfig) -> Result<Vec<EnvelopeSample>> {
    let params = cfg.acm_params();
    par_trials(cfg.threads(), cfg.run.trials, |t| {
        let ch = channel(cfg, t)?;
        let sapa = design_with(cfg, Designer::Proposed, &params, &ch)?;
        EnvelopeSample::of(&flatten(cfg, &sapa, t)?)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPolicy {
    Adaptive(f64),
    Fixed(f64),
}

impl LambdaPolicy {
    pub fn label(&self) -> String {
        match self {
            LambdaPolicy::Adaptive(l) => format!("adaptive_{l:e}"),
            LambdaPolicy::Fixed(l) => format!("fixed_{l:e}"),
        }
    }

    pub fn params(&self, base: &AcmParams) -> AcmParams {
        let (lambda0, adaptive) = match *self {
            LambdaPolicy::Adaptive(l) => (l, true),
            LambdaPolicy::Fixed(l) => (l, false),
        };
        AcmParams {
            lambda0,
            adaptive,
            ..base.clone()
        }
    }
}

pub fn policies(cfg: &ExperimentConfig) -> Vec<LambdaPolicy> {
    let c = &cfg.convergence;
    c.adaptive_lambda0
        .iter()
        .map(|&l| LambdaPolicy::Adaptive(l))
        .chain(c.fixed_lambda.map(LambdaPolicy::Fixed))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub policy: LambdaPolicy,
    pub trial: u64,
    pub result: SapaResult,
}

impl ConvergenceRun {
    /// Every inner loop reached `α ≤ ε_u` before `m_max`.
    pub fn inner_converged(&self) -> bool {
        self.result.trace.outer.iter().all(|o| o.inner_converged)
    }
}

/// ACM traces for every λ policy on each trial's channel.
pub fn convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRun>> {
    let base = cfg.acm_params();
    let policies = policies(cfg);
    let per_trial = par_trials(cfg.threads(), cfg.run.trials, |t| {
        let ch = channel(cfg, t)?;
        policies
            .iter()
            .map(|p| {
                let result = design_with(cfg, Designer::Proposed, &p.params(&base), &ch)?;
                Ok(ConvergenceRun {
                    policy: *p,
                    trial: t,
                    result,
                })
            })
            .collect::<isac_core::Result<Vec<_>>>()
    })?;
    // grouped by policy, then trial
    let mut runs: Vec<ConvergenceRun> = per_trial.into_iter().flatten().collect();
    runs.sort_by_key(|r| {
        let p = policies.iter().position(|q| *q == r.policy).unwrap_or(0);
        (p, r.trial)
    });
    Ok(runs)
}

/// Averages of one method over the compared trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub trials: usize,
    pub cdr: f64,
    pub psl_db: f64,
    pub objective: f64,
    pub converged: usize,
}

impl MethodSummary {
    pub fn from_results(method: &str, results: &[&SapaResult]) -> Self {
        let n = results.len().max(1) as f64;
        MethodSummary {
            method: method.to_string(),
            trials: results.len(),
            cdr: results.iter().map(|r| r.cdr).sum::<f64>() / n,
            psl_db: results.iter().map(|r| r.psl_db).sum::<f64>() / n,
            objective: results.iter().map(|r| r.objective).sum::<f64>() / n,
            converged: results.iter().filter(|r| r.converged).count(),
        }
    }
}

/// Largest relative CDR difference and largest PSL difference (dB) between
/// any two summaries.
pub fn spreads(rows: &[MethodSummary]) -> (f64, f64) {
    let mut cdr = 0.0f64;
    let mut psl = 0.0f64;
    for a in rows {
        for b in rows {
            cdr = cdr.max((a.cdr - b.cdr).abs() / a.cdr.abs().min(b.cdr.abs()));
            psl = psl.max((a.psl_db - b.psl_db).abs());
        }
    }
    (cdr, psl)
}

/// The three initial selections and the HSAPA baseline on common channels.
pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<MethodSummary>> {
    let base = cfg.acm_params();
    let per_trial = par_trials(cfg.threads(), cfg.run.trials, |t| {
        let ch = channel(cfg, t)?;
        let mut out = Vec::with_capacity(4);
        for case in InitCase::ALL {
            let params = AcmParams {
                init_selection: case.selection(),
                ..base.clone()
            };
            out.push(design_with(cfg, Designer::Proposed, &params, &ch)?);
        }
        out.push(design_with(cfg, Designer::Hsapa, &base, &ch)?);
        Ok(out)
    })?;
    let names = ["case1", "case2", "case3", "hsapa"];
    Ok(names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let col: Vec<&SapaResult> = per_trial.iter().map(|r| &r[i]).collect();
            MethodSummary::from_results(name, &col)
        })
        .collect())
}
