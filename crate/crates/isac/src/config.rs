//! Experiment configuration.
//!
//! Configs are TOML files. Every key lives in a section, and sections can be
//! written either as tables or as dotted keys (`waveform.n_subcarriers = 128`).
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use isac_core::acm::{AcmParams, InitSelection};
use isac_core::link::{ChannelKind, InterferenceSpec, LinkParams, Placement, Sweep};
use isac_core::signal::WaveformConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub n_subcarriers: usize,
    /// Defaults to `n_subcarriers`.
    pub autocorr_half_len: Option<usize>,
    pub n_comm: usize,
    pub min_gap: usize,
    pub p_total: f64,
    pub p_comm_max: f64,
    pub rho: f64,
    pub noise_power_comm: f64,
    pub mainlobe_boundary: usize,
}

impl Default for WaveformSection {
    fn default() -> Self {
        let r = WaveformConfig::reference();
        WaveformSection {
            n_subcarriers: r.n_subcarriers,
            autocorr_half_len: None,
            n_comm: r.n_comm,
            min_gap: r.min_gap,
            p_total: r.p_total,
            p_comm_max: r.p_comm_max,
            rho: r.rho,
            noise_power_comm: r.noise_power_comm,
            mainlobe_boundary: r.mainlobe_boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCase {
    Case1,
    Case2,
    Case3,
}

impl InitCase {
    pub const ALL: [InitCase; 3] = [InitCase::Case1, InitCase::Case2, InitCase::Case3];

    pub fn selection(self) -> InitSelection {
        match self {
            InitCase::Case1 => InitSelection::Case1,
            InitCase::Case2 => InitSelection::Case2,
            InitCase::Case3 => InitSelection::Case3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcmSection {
    pub lambda0: f64,
    pub xi1: f64,
    pub xi2: f64,
    /// Defaults to `1e-3·n_comm`.
    pub eps_u: Option<f64>,
    pub eps_c: f64,
    pub eps_a: f64,
    pub t_max: usize,
    pub m_max: usize,
    pub init_selection: InitCase,
    pub adaptive: bool,
    pub lambda_max: f64,
    pub solver_tol: f64,
}

impl Default for AcmSection {
    fn default() -> Self {
        let d = AcmParams::default();
        AcmSection {
            lambda0: d.lambda0,
            xi1: d.xi1,
            xi2: d.xi2,
            eps_u: d.eps_u,
            eps_c: d.eps_c,
            eps_a: d.eps_a,
            t_max: d.t_max,
            m_max: d.m_max,
            init_selection: InitCase::Case1,
            adaptive: d.adaptive,
            lambda_max: d.lambda_max,
            solver_tol: d.solver_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelChoice {
    Rayleigh,
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub kind: ChannelChoice,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            kind: ChannelChoice::StandardNormal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceSection {
    /// Interference-to-signal ratio in dB; omitted means no interference.
    pub isr_db: Option<f64>,
    /// Defaults to `n_comm`.
    pub n_tones: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    /// Fixed SNR used when sweeping ISR.
    pub snr_db: f64,
    pub symbols_per_trial: usize,
}

impl Default for LinkSection {
    fn default() -> Self {
        LinkSection {
            snr_db: 10.0,
            symbols_per_trial: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Snr,
    Isr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub points_db: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axis: SweepAxis::Snr,
            points_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CveSection {
    pub oversampling: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for CveSection {
    fn default() -> Self {
        CveSection {
            oversampling: isac_core::signal::ENVELOPE_OVERSAMPLING,
            max_iter: isac_core::cve::DEFAULT_MAX_ITER,
            tol: isac_core::cve::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcdfSection {
    /// Number of thresholds spanning the observed samples of each metric.
    pub thresholds: usize,
}

impl Default for CcdfSection {
    fn default() -> Self {
        CcdfSection { thresholds: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Starting penalties of the adaptive policies.
    pub adaptive_lambda0: Vec<f64>,
    /// Penalty of the fixed policy; omitted means no fixed policy.
    pub fixed_lambda: Option<f64>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            adaptive_lambda0: vec![1e-4, 1e-2, 1.0],
            fixed_lambda: Some(1e-4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub trials: usize,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 1,
            trials: 1,
            threads: None,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub waveform: WaveformSection,
    pub acm: AcmSection,
    pub channel: ChannelSection,
    pub interference: InterferenceSection,
    pub link: LinkSection,
    pub sweep: SweepSection,
    pub cve: CveSection,
    pub ccdf: CcdfSection,
    pub convergence: ConvergenceSection,
    pub run: RunSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Config(format!(
            "cannot read {}: {e}",
            path.display()
        )))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        if let Some(t) = o.trials {
            self.run.trials = t;
        }
        if let Some(t) = o.threads {
            self.run.threads = Some(t);
        }
        if let Some(d) = &o.out_dir {
            self.run.out_dir = Some(d.clone());
        }
    }

    pub fn waveform(&self) -> WaveformConfig {
        let w = &self.waveform;
        WaveformConfig {
            n_subcarriers: w.n_subcarriers,
            autocorr_half_len: w.autocorr_half_len.unwrap_or(w.n_subcarriers),
            n_comm: w.n_comm,
            min_gap: w.min_gap,
            p_total: w.p_total,
            p_comm_max: w.p_comm_max,
            rho: w.rho,
            noise_power_comm: w.noise_power_comm,
            mainlobe_boundary: w.mainlobe_boundary,
        }
    }

    pub fn acm_params(&self) -> AcmParams {
        let a = &self.acm;
        AcmParams {
            lambda0: a.lambda0,
            xi1: a.xi1,
            xi2: a.xi2,
            eps_u: a.eps_u,
            eps_c: a.eps_c,
            eps_a: a.eps_a,
            t_max: a.t_max,
            m_max: a.m_max,
            init_selection: a.init_selection.selection(),
            adaptive: a.adaptive,
            lambda_max: a.lambda_max,
            solver_tol: a.solver_tol,
        }
    }

    pub fn channel_kind(&self) -> ChannelKind {
        match self.channel.kind {
            ChannelChoice::Rayleigh => ChannelKind::Rayleigh,
            ChannelChoice::StandardNormal => ChannelKind::StandardNormal,
        }
    }

    pub fn isr_db(&self) -> f64 {
        self.interference.isr_db.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            symbols_per_trial: self.link.symbols_per_trial,
            n_tones: self.interference.n_tones.unwrap_or(self.waveform.n_comm),
        }
    }

    pub fn sweep(&self) -> Sweep {
        match self.sweep.axis {
            SweepAxis::Snr => Sweep::Snr {
                isr_db: self.isr_db(),
                snr_db: self.sweep.points_db.clone(),
            },
            SweepAxis::Isr => Sweep::Isr {
                snr_db: self.link.snr_db,
                isr_db: self.sweep.points_db.clone(),
            },
        }
    }

    pub fn threads(&self) -> usize {
        self.run.threads.unwrap_or(1)
    }

    /// Checks every section. Runs before any output is written.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AppError::Config(msg));
        let wf = self.waveform();
        wf.validate()?;
        self.acm_params().validate()?;
        if self.run.trials == 0 {
            return bad("run.trials must be at least 1".into());
        }
        if self.run.threads == Some(0) {
            return bad("run.threads must be at least 1".into());
        }
        if let Some(isr) = self.interference.isr_db {
            if isr.is_nan() || isr == f64::INFINITY {
                return bad("interference.isr_db must be finite".into());
            }
        }
        InterferenceSpec {
            isr_db: self.isr_db(),
            n_tones: self.link_params().n_tones,
            placement: Placement::BestResponse,
            seed: self.run.seed,
        }
        .validate(wf.n_subcarriers)?;
        if self.link.snr_db.is_nan() {
            return bad("link.snr_db must be a number".into());
        }
        if self.link.symbols_per_trial == 0 {
            return bad("link.symbols_per_trial must be at least 1".into());
        }
        if self.sweep.points_db.is_empty() || self.sweep.points_db.iter().any(|p| p.is_nan()) {
            return bad("sweep.points_db must be a nonempty list of numbers".into());
        }
        if self.cve.oversampling == 0 || self.cve.max_iter == 0 || !(self.cve.tol >= 0.0) {
            return bad("cve.oversampling and cve.max_iter must be at least 1, cve.tol nonnegative".into());
        }
        if self.ccdf.thresholds < 2 {
            return bad("ccdf.thresholds must be at least 2".into());
        }
        let c = &self.convergence;
        if c.adaptive_lambda0.is_empty() && c.fixed_lambda.is_none() {
            return bad("convergence needs at least one policy".into());
        }
        if c.adaptive_lambda0.iter().chain(&c.fixed_lambda).any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("convergence penalties must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration (after overrides), ignoring
    /// where the outputs go.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.out_dir = None;
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_tables_agree() {
        let dotted = "waveform.n_subcarriers = 64\nwaveform.n_comm = 8\nrun.seed = 3\n";
        let table = "[waveform]\nn_subcarriers = 64\nn_comm = 8\n[run]\nseed = 3\n";
        let a = ExperimentConfig::from_toml(dotted).unwrap();
        let b = ExperimentConfig::from_toml(table).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.waveform.n_subcarriers, 64);
        assert_eq!(a.waveform.p_total, 256.0);
    }

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c.waveform(), WaveformConfig::reference());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("waveform.n_subcarier = 3").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let c = ExperimentConfig::from_toml("waveform.n_comm = 0").unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let c = ExperimentConfig::from_toml("run.trials = 0").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::from_toml("sweep.points_db = []").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_change_the_hash() {
        let mut c = ExperimentConfig::default();
        let h = c.hash();
        c.apply(&Overrides {
            seed: Some(9),
            ..Overrides::default()
        });
        assert_eq!(c.run.seed, 9);
        assert_ne!(c.hash(), h);
    }
}
