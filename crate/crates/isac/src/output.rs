//! Artifact files.
//!
//! Number formats: dB values use 4 decimals, probabilities (BER, CCDF) use 6,
//! powers and channel coefficients 9, waveform samples 9. Every file is
//! written to a temporary name and renamed into place; `manifest.json` is
//! written last, so a directory without a manifest is incomplete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use isac_core::link::{BerResult, Designer};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};
use crate::error::{AppError, Result};
use crate::experiments::{CcdfRow, ConvergenceRun, DesignOutput, MethodSummary};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn db(x: f64) -> String {
    format!("{x:.4}")
}

pub fn prob(x: f64) -> String {
    format!("{x:.6}")
}

fn round(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

pub fn plan_csv(d: &DesignOutput) -> String {
    let mut s = String::from("index,selected,power_watts,channel_real,channel_imag\n");
    let plan = &d.sapa.plan;
    for (i, h) in d.channel.response.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{:.9},{:.9},{:.9}",
            u8::from(plan.selection[i]),
            plan.power[i],
            h.re,
            h.im
        );
    }
    s
}

pub fn waveform_csv(d: &DesignOutput) -> String {
    let mut s = String::from("sample,real,imag,magnitude\n");
    for (i, z) in d.envelope.optimized.samples.iter().enumerate() {
        let _ = writeln!(s, "{i},{:.9},{:.9},{:.9}", z.re, z.im, z.norm());
    }
    s
}

#[derive(Debug, Serialize)]
pub struct DesignMetrics {
    pub psl_db: f64,
    pub cdr_bps_hz: f64,
    pub cve: f64,
    pub papr_db: f64,
    pub converged: bool,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub objective: f64,
    pub ls_iterations: usize,
    pub random_phase_cve: f64,
    pub random_phase_papr_db: f64,
}

pub fn metrics_json(d: &DesignOutput) -> Result<String> {
    let env = &d.envelope;
    let m = DesignMetrics {
        psl_db: round(d.sapa.psl_db, 4),
        cdr_bps_hz: round(d.sapa.cdr, 6),
        cve: round(env.optimized.cve()?, 6),
        papr_db: round(env.optimized.papr_db()?, 4),
        converged: d.sapa.converged,
        iterations: d.sapa.trace.outer.len(),
        inner_iterations: d.sapa.trace.inner.len(),
        objective: round(d.sapa.objective, 9),
        ls_iterations: env.solution.trace.len().saturating_sub(1),
        random_phase_cve: round(env.random.cve()?, 6),
        random_phase_papr_db: round(env.random.papr_db()?, 4),
    };
    Ok(to_json(&m))
}

pub fn ber_csv(curves: &[(Designer, Vec<BerResult>)]) -> String {
    let mut s = String::from("axis_db,ber,trials,bits,designer\n");
    for (d, curve) in curves {
        for r in curve {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                db(r.axis_db),
                prob(r.ber),
                r.trials,
                r.bit_count,
                d.name()
            );
        }
    }
    s
}

pub fn ccdf_csv(rows: &[CcdfRow]) -> String {
    let mut s = String::from("metric,threshold,ccdf,method\n");
    for r in rows {
        // the CVE threshold is a ratio, not a dB value; it still gets 6 decimals
        let t = if r.metric == "cve" {
            format!("{:.6}", r.threshold)
        } else {
            db(r.threshold)
        };
        let _ = writeln!(s, "{},{t},{},{}", r.metric, prob(r.ccdf), r.method);
    }
    s
}

pub fn residual_csv(runs: &[ConvergenceRun]) -> String {
    let mut s =
        String::from("policy,trial,outer_t,inner_m,alpha,lambda,obj_c,obj_a,dr_c,dr_a\n");
    for run in runs {
        let label = run.policy.label();
        let trace = &run.result.trace;
        for inner in &trace.inner {
            let Some(o) = trace.outer.iter().find(|o| o.t == inner.t) else {
                continue;
            };
            let _ = writeln!(
                s,
                "{label},{},{},{},{:.9e},{:.9e},{:.9},{:.9e},{:.9e},{:.9e}",
                run.trial, inner.t, inner.m, inner.alpha, inner.lambda, o.obj_c, o.obj_a, o.dr_c, o.dr_a
            );
        }
    }
    s
}

pub fn compare_csv(rows: &[MethodSummary]) -> String {
    let mut s = String::from("method,trials,cdr_bps_hz,psl_db,objective,converged\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.6},{},{:.9},{}",
            r.method,
            r.trials,
            r.cdr,
            db(r.psl_db),
            r.objective,
            r.converged
        );
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub outputs: Vec<OutputFile>,
    /// Axis definitions and other notes needed to read the outputs.
    pub notes: Vec<String>,
    pub timings: Timings,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

/// Single writer for one command's output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| AppError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.root.join(name), contents.as_bytes())?;
        self.written.push(OutputFile {
            file: name.to_string(),
            bytes: contents.len(),
            sha256: hex(&Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        cfg: &ExperimentConfig,
        notes: Vec<String>,
        elapsed: Duration,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            artifact_version: ARTIFACT_VERSION,
            command: command.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.run.seed,
            trials: cfg.run.trials,
            threads: cfg.threads(),
            outputs: self.written,
            notes,
            timings: Timings {
                total_seconds: elapsed.as_secs_f64(),
            },
        };
        let path = self.root.join("manifest.json");
        write_atomic(&path, to_json(&manifest).as_bytes())?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.partial"));
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(db(-22.081234), "-22.0812");
        assert_eq!(prob(0.0123456789), "0.012346");
        assert_eq!(round(1.23456, 4), 1.2346);
    }

    #[test]
    fn writes_are_atomic_and_listed() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.csv", "x\n1\n").unwrap();
        assert!(!dir.path().join(".a.csv.partial").exists());
        let cfg = ExperimentConfig::default();
        let m = out.finish("design", &cfg, vec![], Duration::from_millis(5)).unwrap();
        let text = fs::read_to_string(m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["outputs"][0]["file"], "a.csv");
        assert_eq!(v["outputs"][0]["bytes"], 4);
    }
}
