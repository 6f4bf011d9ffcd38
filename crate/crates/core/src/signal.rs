//! OFDM signal model and the sensing/communication metrics.
//!
//! Conventions: the DFT matrix is `F[k,p] = e^{-j2πkp/N}` (unnormalized) and a
//! waveform is `s = Fᴴ x` with no `1/N` factor. Oversampling by `q` zero-pads
//! the spectrum to `N·q` bins before the inverse transform, so sample `m` of an
//! oversampled waveform is `Σ_n x_n e^{j2πnm/(Nq)}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::fft::Fft;

/// Oversampling factor used for envelope metrics unless a caller overrides it.
pub const ENVELOPE_OVERSAMPLING: usize = 4;

/// Scalar design parameters of one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformConfig {
    /// Number of subcarriers `N`.
    pub n_subcarriers: usize,
    /// Number of one-sided autocorrelation lags `K` (`2K − 1` lags in total).
    pub autocorr_half_len: usize,
    /// Number of communication subcarriers `Nr`.
    pub n_comm: usize,
    /// Interval parameter `L`: any `L + 1` consecutive subcarriers hold at most
    /// one communication subcarrier.
    pub min_gap: usize,
    /// Total transmit power in watts.
    pub p_total: f64,
    /// Upper bound on the power carried by communication subcarriers, watts.
    pub p_comm_max: f64,
    /// Sensing/communication trade-off weight in `[0, 1]`.
    pub rho: f64,
    /// Communication noise power in watts.
    pub noise_power_comm: f64,
    /// Mainlobe boundary `Υ`: lags with `|k| ≤ Υ` are not sidelobes.
    pub mainlobe_boundary: usize,
}

impl WaveformConfig {
    /// Configuration with `K = N` and `Υ = 1`.
    pub fn new(
        n_subcarriers: usize,
        n_comm: usize,
        min_gap: usize,
        p_total: f64,
        p_comm_max: f64,
        rho: f64,
        noise_power_comm: f64,
    ) -> Self {
        WaveformConfig {
            n_subcarriers,
            autocorr_half_len: n_subcarriers,
            n_comm,
            min_gap,
            p_total,
            p_comm_max,
            rho,
            noise_power_comm,
            mainlobe_boundary: 1,
        }
    }

    /// The 128-subcarrier reference scenario: 16 communication subcarriers at
    /// least 6 bins apart, 256 W total of which at most 64 W for communication.
    pub fn reference() -> Self {
        WaveformConfig::new(128, 16, 5, 256.0, 64.0, 0.5, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        let n = self.n_subcarriers;
        if n == 0 {
            return bad("n_subcarriers must be positive".into());
        }
        if self.n_comm == 0 || self.n_comm > n {
            return bad(format!(
                "n_comm must lie in 1..={n}, got {}",
                self.n_comm
            ));
        }
        if (self.n_comm - 1) * (self.min_gap + 1) + 1 > n {
            return bad(format!(
                "{} communication subcarriers spaced by at least {} do not fit in {n}",
                self.n_comm,
                self.min_gap + 1
            ));
        }
        if self.autocorr_half_len == 0 {
            return bad("autocorr_half_len must be positive".into());
        }
        if self.mainlobe_boundary + 1 >= self.autocorr_half_len {
            return Err(Error::EmptySidelobeRegion);
        }
        if !(self.p_total.is_finite() && self.p_comm_max.is_finite()) {
            return bad("powers must be finite".into());
        }
        if !(self.p_comm_max > 0.0 && self.p_comm_max <= self.p_total) {
            return bad(format!(
                "need 0 < p_comm_max <= p_total, got {} and {}",
                self.p_comm_max, self.p_total
            ));
        }
        if self.n_comm == n && self.p_comm_max < self.p_total {
            return bad("every subcarrier carries data but p_comm_max < p_total".into());
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !(self.noise_power_comm > 0.0 && self.noise_power_comm.is_finite()) {
            return bad("noise_power_comm must be positive".into());
        }
        Ok(())
    }

    /// Positive sidelobe lags `Υ+1 ..= K−1`. Negative lags mirror them.
    pub fn sidelobe_lags(&self) -> core::ops::RangeInclusive<usize> {
        (self.mainlobe_boundary + 1)..=(self.autocorr_half_len - 1)
    }

    /// Whether `selection` satisfies the interval constraint: every window of
    /// `L + 1` consecutive entries holds at most one selected subcarrier.
    pub fn interval_ok(&self, selection: &[bool]) -> bool {
        interval_ok(selection, self.min_gap)
    }
}

pub(crate) fn interval_ok(selection: &[bool], min_gap: usize) -> bool {
    let mut last: Option<usize> = None;
    for (i, &s) in selection.iter().enumerate() {
        if s {
            if let Some(j) = last {
                if i - j <= min_gap {
                    return false;
                }
            }
            last = Some(i);
        }
    }
    true
}

/// Subcarrier assignment and power allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierPlan {
    /// `true` where the subcarrier carries communication symbols.
    pub selection: Vec<bool>,
    /// Per-subcarrier power in watts.
    pub power: Vec<f64>,
}

impl SubcarrierPlan {
    pub fn new(selection: Vec<bool>, power: Vec<f64>) -> Result<Self> {
        if selection.len() != power.len() {
            return Err(Error::LengthMismatch {
                what: "power",
                expected: selection.len(),
                found: power.len(),
            });
        }
        check_power(&power)?;
        Ok(SubcarrierPlan { selection, power })
    }

    pub fn len(&self) -> usize {
        self.selection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selection.is_empty()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        indices_of(&self.selection)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Power carried by communication subcarriers.
    pub fn comm_power(&self) -> f64 {
        self.selection
            .iter()
            .zip(&self.power)
            .filter(|(s, _)| **s)
            .map(|(_, p)| p)
            .sum()
    }

    /// Checks every plan constraint against `config` with absolute power
    /// tolerance `tol`. Selection constraints are checked exactly.
    pub fn check(&self, config: &WaveformConfig, tol: f64) -> Result<()> {
        let n = config.n_subcarriers;
        if self.len() != n {
            return Err(Error::LengthMismatch {
                what: "plan",
                expected: n,
                found: self.len(),
            });
        }
        let violation = |msg: alloc::string::String| Err(Error::Infeasible(msg));
        if let Some((i, p)) = self.power.iter().enumerate().find(|(_, p)| **p < -tol) {
            return violation(format!("power[{i}] = {p} is negative"));
        }
        let total = self.total_power();
        if (total - config.p_total).abs() > tol {
            return violation(format!(
                "total power {total} differs from {}",
                config.p_total
            ));
        }
        let count = self.selection.iter().filter(|s| **s).count();
        if count != config.n_comm {
            return violation(format!(
                "{count} communication subcarriers, expected {}",
                config.n_comm
            ));
        }
        if self.comm_power() > config.p_comm_max + tol {
            return violation(format!(
                "communication power {} exceeds {}",
                self.comm_power(),
                config.p_comm_max
            ));
        }
        if !config.interval_ok(&self.selection) {
            return violation("interval constraint violated".into());
        }
        Ok(())
    }
}

pub(crate) fn indices_of(selection: &[bool]) -> Vec<usize> {
    selection
        .iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(i, _)| i)
        .collect()
}

fn check_power(power: &[f64]) -> Result<()> {
    for (index, &value) in power.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("power"));
        }
        if value < 0.0 {
            return Err(Error::NegativePower { index, value });
        }
    }
    Ok(())
}

/// Per-subcarrier channel frequency response and noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub response: Vec<Complex64>,
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn new(response: Vec<Complex64>, noise_power: f64) -> Result<Self> {
        if response.iter().any(|h| !(h.re.is_finite() && h.im.is_finite())) {
            return Err(Error::NonFinite("channel response"));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise power must be positive, got {noise_power}"
            )));
        }
        Ok(ChannelRealization {
            response,
            noise_power,
        })
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    /// `|h_n|² / σ²`: the SNR a unit-power symbol would see on each subcarrier.
    pub fn unit_snr(&self) -> Vec<f64> {
        self.response
            .iter()
            .map(|h| h.norm_sqr() / self.noise_power)
            .collect()
    }

    /// Indices of the `count` largest `|h_n|`, ties broken by lower index,
    /// in descending order of magnitude.
    pub fn strongest(&self, count: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.response[b]
                .norm_sqr()
                .total_cmp(&self.response[a].norm_sqr())
                .then(a.cmp(&b))
        });
        order.truncate(count);
        order
    }
}

/// Frequency-domain symbols `x = U c + (I − U) r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySymbols {
    pub values: Vec<Complex64>,
    /// Communication phases, meaningful where the plan selects the subcarrier.
    pub comm_phases: Vec<f64>,
    /// Reserved phases, meaningful where the plan does not select it.
    pub reserved_phases: Vec<f64>,
}

impl FrequencySymbols {
    pub fn new(plan: &SubcarrierPlan, comm_phases: &[f64], reserved_phases: &[f64]) -> Result<Self> {
        let n = plan.len();
        for (what, v) in [("comm_phases", comm_phases), ("reserved_phases", reserved_phases)] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        check_power(&plan.power)?;
        let values = (0..n)
            .map(|i| {
                let phase = if plan.selection[i] {
                    comm_phases[i]
                } else {
                    reserved_phases[i]
                };
                Complex64::from_polar(plan.power[i].sqrt(), phase)
            })
            .collect();
        Ok(FrequencySymbols {
            values,
            comm_phases: comm_phases.to_vec(),
            reserved_phases: reserved_phases.to_vec(),
        })
    }
}

/// Complex baseband samples of one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWaveform {
    pub samples: Vec<Complex64>,
    pub oversampling: usize,
}

impl TimeWaveform {
    pub fn envelope(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn cve(&self) -> Result<f64> {
        cve(self)
    }

    pub fn papr_db(&self) -> Result<f64> {
        papr(self)
    }
}

/// Inverse transform of `symbols` zero-padded to `N·q` bins.
pub fn synthesize_symbols(symbols: &[Complex64], oversampling: usize) -> Result<TimeWaveform> {
    if oversampling == 0 {
        return Err(Error::InvalidArgument("oversampling must be at least 1".into()));
    }
    let len = symbols.len() * oversampling;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..symbols.len()].copy_from_slice(symbols);
    Fft::new(len).inverse(&mut buf);
    Ok(TimeWaveform {
        samples: buf,
        oversampling,
    })
}

/// Synthesizes the time-domain waveform of `plan` with the given phases.
pub fn synthesize(
    plan: &SubcarrierPlan,
    comm_phases: &[f64],
    reserved_phases: &[f64],
    oversampling: usize,
) -> Result<TimeWaveform> {
    let symbols = FrequencySymbols::new(plan, comm_phases, reserved_phases)?;
    synthesize_symbols(&symbols.values, oversampling)
}

/// Autocorrelation samples `R[k] = Σ_n p_n e^{jπnk/K}` for lags
/// `k = −K+1 ..= K−1`; entry `i` holds lag `i − (K − 1)`.
pub fn autocorrelation(power: &[f64], half_len: usize) -> Result<Vec<Complex64>> {
    if half_len == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    check_power(power)?;
    let period = 2 * half_len;
    let mut buf = vec![Complex64::new(0.0, 0.0); period];
    // e^{jπnk/K} is periodic in n with period 2K
    for (n, &p) in power.iter().enumerate() {
        buf[n % period].re += p;
    }
    Fft::new(period).inverse(&mut buf);
    let mut out = Vec::with_capacity(2 * half_len - 1);
    for lag in (1..half_len).rev() {
        out.push(buf[period - lag]);
    }
    out.extend_from_slice(&buf[..half_len]);
    Ok(out)
}

/// Phase `πnk/K` of subcarrier `n` at lag `k`, reduced modulo `2π`.
pub(crate) fn lag_phase(n: usize, lag: usize, half_len: usize) -> f64 {
    let period = 2 * half_len;
    PI * ((n * lag) % period) as f64 / half_len as f64
}

/// Peak sidelobe level of a power profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psl {
    /// `max_{k∈Θ} |R[k]|` in watts.
    pub linear: f64,
    /// `20·log10(linear / R[0])`.
    pub db: f64,
}

pub fn psl(power: &[f64], config: &WaveformConfig) -> Result<Psl> {
    let k = config.autocorr_half_len;
    if config.mainlobe_boundary + 1 >= k {
        return Err(Error::EmptySidelobeRegion);
    }
    let r = autocorrelation(power, k)?;
    let zero = k - 1;
    let linear = config
        .sidelobe_lags()
        .flat_map(|lag| [r[zero + lag].norm(), r[zero - lag].norm()])
        .fold(0.0, f64::max);
    let mainlobe = r[zero].re;
    Ok(Psl {
        linear,
        db: 20.0 * (linear / mainlobe).log10(),
    })
}

/// Communication data rate `Σ_n log2(1 + u_n p_n |h_n|² / σ²)` in bps/Hz.
pub fn cdr(plan: &SubcarrierPlan, channel: &ChannelRealization) -> Result<f64> {
    if plan.len() != channel.len() {
        return Err(Error::LengthMismatch {
            what: "channel",
            expected: plan.len(),
            found: channel.len(),
        });
    }
    if !(channel.noise_power > 0.0) {
        return Err(Error::InvalidArgument("noise power must be positive".into()));
    }
    Ok(plan
        .selection
        .iter()
        .zip(&plan.power)
        .zip(&channel.response)
        .filter(|((s, _), _)| **s)
        .map(|((_, p), h)| (p * h.norm_sqr() / channel.noise_power).ln_1p())
        .sum::<f64>()
        / core::f64::consts::LN_2)
}

/// Coefficient of variation of the envelope, using per-waveform sample means:
/// `mean((|s| − mean|s|)²) / mean(|s|)²`.
pub fn cve(waveform: &TimeWaveform) -> Result<f64> {
    envelope_cve(&waveform.samples)
}

pub fn envelope_cve(samples: &[Complex64]) -> Result<f64> {
    let (mean, var) = envelope_moments(samples)?;
    Ok(var / (mean * mean))
}

/// Mean envelope and envelope variance (population form).
pub(crate) fn envelope_moments(samples: &[Complex64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty waveform".into()));
    }
    let len = samples.len() as f64;
    let mean = samples.iter().map(|z| z.norm()).sum::<f64>() / len;
    if !(mean > 0.0) {
        return Err(Error::ZeroWaveform);
    }
    let var = samples
        .iter()
        .map(|z| {
            let d = z.norm() - mean;
            d * d
        })
        .sum::<f64>()
        / len;
    Ok((mean, var))
}

/// Peak-to-average power ratio in dB.
pub fn papr(waveform: &TimeWaveform) -> Result<f64> {
    envelope_papr_db(&waveform.samples)
}

pub fn envelope_papr_db(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty waveform".into()));
    }
    let powers = samples.iter().map(|z| z.norm_sqr());
    let peak = powers.clone().fold(0.0, f64::max);
    let mean = powers.sum::<f64>() / samples.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::ZeroWaveform);
    }
    Ok(10.0 * (peak / mean).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plan(selection: &[u8], power: &[f64]) -> SubcarrierPlan {
        SubcarrierPlan::new(selection.iter().map(|&s| s == 1).collect(), power.to_vec()).unwrap()
    }

    #[test]
    fn constant_spectrum_synthesizes_to_impulse() {
        let p = 2.0;
        let pl = plan(&[0, 0, 0, 0], &[p; 4]);
        let s = synthesize(&pl, &[0.0; 4], &[0.0; 4], 1).unwrap();
        assert!((s.samples[0] - c(4.0 * p.sqrt(), 0.0)).norm() < 1e-12);
        assert!(s.samples[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn single_tone_has_constant_envelope() {
        let pl = plan(&[0, 0, 1, 0, 0], &[0.0, 0.0, 3.0, 0.0, 0.0]);
        let s = synthesize(&pl, &[0.7; 5], &[0.0; 5], 1).unwrap();
        for z in &s.samples {
            assert!((z.norm() - 3f64.sqrt()).abs() < 1e-12);
        }
        assert!(cve(&s).unwrap().abs() < 1e-20);
        assert!(papr(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn synthesize_rejects_bad_inputs() {
        let pl = plan(&[0, 1], &[1.0, 1.0]);
        assert!(matches!(
            synthesize(&pl, &[0.0], &[0.0, 0.0], 1),
            Err(Error::LengthMismatch { .. })
        ));
        let bad = SubcarrierPlan {
            selection: vec![false, true],
            power: vec![1.0, -1.0],
        };
        assert!(matches!(
            synthesize(&bad, &[0.0; 2], &[0.0; 2], 1),
            Err(Error::NegativePower { index: 1, .. })
        ));
        assert!(synthesize(&pl, &[0.0; 2], &[0.0; 2], 0).is_err());
    }

    #[test]
    fn autocorrelation_basics() {
        let p = [1.0, 2.0, 0.5, 3.0];
        let r = autocorrelation(&p, 4).unwrap();
        assert_eq!(r.len(), 7);
        assert!((r[3] - c(6.5, 0.0)).norm() < 1e-12);
        // single tone: unit-modulus phase factors
        let r = autocorrelation(&[0.0, 0.0, 5.0, 0.0], 4).unwrap();
        assert!(r.iter().all(|z| (z.norm() - 5.0).abs() < 1e-12));
        // uniform power, K = N = 4, lag 2 is a full-period geometric sum
        let r = autocorrelation(&[1.5; 4], 4).unwrap();
        assert!(r[3 + 2].norm() < 1e-12);
        assert!(autocorrelation(&p, 0).is_err());
    }

    #[test]
    fn psl_of_single_tone_is_zero_db() {
        let mut cfg = WaveformConfig::new(8, 1, 0, 4.0, 4.0, 0.5, 1.0);
        cfg.autocorr_half_len = 8;
        let mut p = [0.0; 8];
        p[3] = 4.0;
        let v = psl(&p, &cfg).unwrap();
        assert!((v.linear - 4.0).abs() < 1e-12);
        assert!(v.db.abs() < 1e-10);
    }

    #[test]
    fn psl_needs_sidelobes() {
        let mut cfg = WaveformConfig::new(4, 1, 0, 4.0, 4.0, 0.5, 1.0);
        cfg.autocorr_half_len = 2;
        assert_eq!(psl(&[1.0; 4], &cfg), Err(Error::EmptySidelobeRegion));
    }

    #[test]
    fn cdr_worked_values() {
        let ch = ChannelRealization::new(vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)], 1.0).unwrap();
        assert_eq!(cdr(&plan(&[0, 0, 0], &[1.0, 1.0, 1.0]), &ch).unwrap(), 0.0);
        assert!((cdr(&plan(&[1, 0, 0], &[1.0, 5.0, 5.0]), &ch).unwrap() - 1.0).abs() < 1e-12);
        assert!((cdr(&plan(&[0, 1, 0], &[0.0, 3.0, 5.0]), &ch).unwrap() - 2.0).abs() < 1e-12);
        assert!(ChannelRealization::new(vec![c(1.0, 0.0)], 0.0).is_err());
        let short = ChannelRealization::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        assert!(cdr(&plan(&[1, 0], &[1.0, 1.0]), &short).is_err());
    }

    #[test]
    fn envelope_metric_worked_values() {
        let w = TimeWaveform {
            samples: vec![c(1.0, 0.0), c(0.0, 3.0)],
            oversampling: 1,
        };
        assert!((cve(&w).unwrap() - 0.25).abs() < 1e-15);
        let w = TimeWaveform {
            samples: vec![c(0.0, 0.0), c(2.0, 0.0)],
            oversampling: 1,
        };
        assert!((papr(&w).unwrap() - 3.010_299_956_639_812).abs() < 1e-9);
        let zero = TimeWaveform {
            samples: vec![c(0.0, 0.0); 3],
            oversampling: 1,
        };
        assert_eq!(cve(&zero), Err(Error::ZeroWaveform));
        assert_eq!(papr(&zero), Err(Error::ZeroWaveform));
    }

    #[test]
    fn config_validation() {
        assert!(WaveformConfig::reference().validate().is_ok());
        let mut c = WaveformConfig::reference();
        c.n_comm = 0;
        assert!(c.validate().is_err());
        let mut c = WaveformConfig::reference();
        c.min_gap = 8; // 15·9 + 1 = 136 > 128
        assert!(c.validate().is_err());
        let mut c = WaveformConfig::reference();
        c.p_comm_max = 300.0;
        assert!(c.validate().is_err());
        let mut c = WaveformConfig::reference();
        c.rho = 1.5;
        assert!(c.validate().is_err());
        let mut c = WaveformConfig::reference();
        c.mainlobe_boundary = 127;
        assert_eq!(c.validate(), Err(Error::EmptySidelobeRegion));
    }

    #[test]
    fn interval_check() {
        assert!(interval_ok(&[true, false, true], 1));
        assert!(!interval_ok(&[true, true, false], 1));
        assert!(!interval_ok(&[true, false, true], 2));
        assert!(interval_ok(&[true, true], 0));
    }

    #[test]
    fn strongest_breaks_ties_by_index() {
        let ch = ChannelRealization::new(
            vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 2.0), c(0.5, 0.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(ch.strongest(2), vec![1, 2]);
        assert_eq!(ch.strongest(3), vec![1, 2, 0]);
    }
}
