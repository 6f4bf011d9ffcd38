use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiments::{self, spreads};
use crate::output::{self, db, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Design,
    BerSweep,
    Ccdf,
    Convergence,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::BerSweep => "ber-sweep",
            Command::Ccdf => "ccdf",
            Command::Convergence => "convergence",
            Command::Compare => "compare",
        }
    }
}

/// Output of a finished command.
#[derive(Debug, Clone)]
pub struct Report {
    pub manifest: PathBuf,
    /// Short human-readable summary lines.
    pub lines: Vec<String>,
}

/// Validates `cfg`, runs the command and writes its artifacts to `out`.
/// Nothing is written when validation or the computation fails.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut files: Vec<(&str, String)> = Vec::new();
    let mut lines = Vec::new();
    let mut notes = Vec::new();
    match cmd {
        Command::Design => {
            let d = experiments::design(cfg)?;
            files.push(("plan.csv", output::plan_csv(&d)));
            files.push(("waveform.csv", output::waveform_csv(&d)));
            files.push(("metrics.json", output::metrics_json(&d)?));
            lines.push(format!(
                "psl {} dB, cdr {:.4} bps/Hz, cve {:.6}, papr {} dB, converged {}",
                db(d.sapa.psl_db),
                d.sapa.cdr,
                d.envelope.optimized.cve()?,
                db(d.envelope.optimized.papr_db()?),
                d.sapa.converged
            ));
        }
        Command::BerSweep => {
            let curves = experiments::ber_sweep(cfg)?;
            files.push(("ber_curve.csv", output::ber_csv(&curves)));
            notes.push("snr_db: noise variance = mean allocated power over selected subcarriers / 10^(snr/10)".into());
            notes.push("isr_db: total tone power / sum of p_n |h_n|^2 over selected subcarriers".into());
            notes.push("bits, tone phases and noise are common to both designers within a trial".into());
            for (d, curve) in &curves {
                let pts: Vec<String> = curve.iter().map(|r| format!("{:.1}:{:.3e}", r.axis_db, r.ber)).collect();
                lines.push(format!("{}: {}", d.name(), pts.join(" ")));
            }
        }
        Command::Ccdf => {
            let samples = experiments::envelope_samples(cfg)?;
            let rows = experiments::ccdf_rows(&samples, cfg.ccdf.thresholds);
            files.push(("ccdf.csv", output::ccdf_csv(&rows)));
            notes.push(format!("envelopes oversampled by {}", cfg.cve.oversampling));
            notes.push("rpm: same design with the uniformly random starting reserved phases".into());
            let median = |f: fn(&experiments::EnvelopeSample) -> f64| {
                let mut v: Vec<f64> = samples.iter().map(f).collect();
                v.sort_by(f64::total_cmp);
                v[v.len() / 2]
            };
            lines.push(format!(
                "median papr: proposed {} dB, rpm {} dB",
                db(median(|s| s.papr_db)),
                db(median(|s| s.rpm_papr_db))
            ));
        }
        Command::Convergence => {
            let runs = experiments::convergence(cfg)?;
            files.push(("residual_trace.csv", output::residual_csv(&runs)));
            for p in experiments::policies(cfg) {
                let mine: Vec<_> = runs.iter().filter(|r| r.policy == p).collect();
                let ok = mine.iter().filter(|r| r.inner_converged()).count();
                lines.push(format!("{}: inner loops converged in {ok}/{} runs", p.label(), mine.len()));
            }
        }
        Command::Compare => {
            let rows = experiments::compare(cfg)?;
            files.push(("compare.csv", output::compare_csv(&rows)));
            let (cdr, psl) = spreads(&rows[..3]);
            for r in &rows {
                lines.push(format!("{}: cdr {:.4}, psl {} dB", r.method, r.cdr, db(r.psl_db)));
            }
            lines.push(format!("init-case spread: cdr {:.4}%, psl {} dB", 100.0 * cdr, db(psl)));
        }
    }
    let mut dir = OutputDir::create(out)?;
    for (name, text) in &files {
        dir.write(name, text)?;
    }
    let manifest = dir.finish(cmd.name(), cfg, notes, start.elapsed())?;
    Ok(Report { manifest, lines })
}
