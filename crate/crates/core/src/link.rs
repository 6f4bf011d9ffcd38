//! Link-level simulation: channels, multi-tone interference, Gray-coded 8-PSK
//! and Monte Carlo BER / CCDF estimation.
//!
//! Received model on a selected subcarrier `n`:
//! `y_n = h_n √p_n x_n + i_n + w_n` with `w_n ~ CN(0, σ²)`.
//!
//! * SNR is `mean_{n∈S}(p_n) / σ²`, so a subcarrier with `|h_n|² = 1` and
//!   average power sees exactly the nominal SNR.
//! * ISR is the total interference power over `Σ_{n∈S} p_n |h_n|²`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::acm::{hsapa_baseline, run_acm, AcmParams, SapaResult};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose, Rng};
use crate::signal::{ChannelRealization, SubcarrierPlan, WaveformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// `h = (a + jb)/√2` with `a, b ~ N(0, 1)`, so `E|h|² = 1`.
    Rayleigh,
    /// Real `h ~ N(0, 1)`.
    StandardNormal,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Rayleigh => "rayleigh",
            ChannelKind::StandardNormal => "standard_normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub seed: u64,
}

/// Draws `n` channel coefficients from `rng`.
pub fn draw_response(kind: ChannelKind, n: usize, rng: &mut Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| match kind {
            ChannelKind::Rayleigh => {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
            }
            ChannelKind::StandardNormal => Complex64::new(rng.sample(StandardNormal), 0.0),
        })
        .collect()
}

/// Channel realization determined by `(kind, seed, n)`.
pub fn gen_channel(model: &ChannelModel, n: usize, noise_power: f64) -> Result<ChannelRealization> {
    if n == 0 {
        return Err(Error::InvalidArgument("channel length must be at least 1".into()));
    }
    let mut rng = rng::seeded(model.seed);
    ChannelRealization::new(draw_response(model.kind, n, &mut rng), noise_power)
}

/// Channel for Monte Carlo trial `trial` under `master_seed`.
pub fn trial_channel(
    kind: ChannelKind,
    master_seed: u64,
    trial: u64,
    n: usize,
    noise_power: f64,
) -> Result<ChannelRealization> {
    let model = ChannelModel {
        kind,
        seed: rng::channel_seed(master_seed, trial),
    };
    gen_channel(&model, n, noise_power)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Tones on the subcarriers with the largest `|h|`.
    #[default]
    BestResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSpec {
    /// Interference-to-signal ratio; `-∞` disables interference.
    pub isr_db: f64,
    pub n_tones: usize,
    pub placement: Placement,
    pub seed: u64,
}

impl InterferenceSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.isr_db.is_nan() || self.isr_db == f64::INFINITY {
            return Err(Error::InvalidArgument(format!(
                "isr must be finite or -inf, got {}",
                self.isr_db
            )));
        }
        if self.n_tones > n {
            return Err(Error::InvalidArgument(format!(
                "{} interference tones exceed {n} subcarriers",
                self.n_tones
            )));
        }
        Ok(())
    }

    pub fn enabled(&self) -> bool {
        self.isr_db > f64::NEG_INFINITY && self.n_tones > 0
    }
}

/// Interference vector with phases drawn from `spec.seed`.
pub fn gen_interference(
    channel: &ChannelRealization,
    spec: &InterferenceSpec,
    signal_power_ref: f64,
) -> Result<Vec<Complex64>> {
    let mut rng = rng::seeded(spec.seed);
    gen_interference_with(channel, spec, signal_power_ref, &mut rng)
}

/// Equal-power tones with uniform random phases on the `n_tones` strongest
/// subcarriers, total power `signal_power_ref · 10^{isr/10}`.
pub fn gen_interference_with(
    channel: &ChannelRealization,
    spec: &InterferenceSpec,
    signal_power_ref: f64,
    rng: &mut Rng,
) -> Result<Vec<Complex64>> {
    let n = channel.len();
    spec.validate(n)?;
    if !(signal_power_ref >= 0.0 && signal_power_ref.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "signal power reference must be nonnegative, got {signal_power_ref}"
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if !spec.enabled() {
        return Ok(out);
    }
    let total = signal_power_ref * 10f64.powf(spec.isr_db / 10.0);
    let amplitude = (total / spec.n_tones as f64).sqrt();
    match spec.placement {
        Placement::BestResponse => {
            for i in channel.strongest(spec.n_tones) {
                out[i] = Complex64::from_polar(amplitude, rng.random::<f64>() * TAU);
            }
        }
    }
    Ok(out)
}

/// `Σ_{n∈S} p_n |h_n|²`: received communication power.
pub fn signal_power_ref(plan: &SubcarrierPlan, channel: &ChannelRealization) -> f64 {
    plan.selected_indices()
        .into_iter()
        .map(|i| plan.power[i] * channel.response[i].norm_sqr())
        .sum()
}

/// Noise variance for a nominal SNR: `mean_{n∈S}(p_n) / 10^{snr/10}`.
pub fn noise_variance(plan: &SubcarrierPlan, snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() {
        return Err(Error::NonFinite("snr_db"));
    }
    let sel = plan.selected_indices();
    if sel.is_empty() {
        return Err(Error::InvalidArgument("plan selects no subcarriers".into()));
    }
    let mean = sel.iter().map(|&i| plan.power[i]).sum::<f64>() / sel.len() as f64;
    Ok(mean / 10f64.powf(snr_db / 10.0))
}

/// `n` independent `CN(0, variance)` samples.
pub fn awgn(n: usize, variance: f64, rng: &mut Rng) -> Vec<Complex64> {
    let scale = (variance / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex64::new(a * scale, b * scale)
        })
        .collect()
}

/// Gray label of constellation point `k` (phase `2πk/8`).
pub fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

fn gray_inverse(g: usize) -> usize {
    let mut k = g;
    let mut shift = g >> 1;
    while shift != 0 {
        k ^= shift;
        shift >>= 1;
    }
    k
}

/// Maps bit triples (most significant first) to 8-PSK phases.
pub fn psk8_modulate(bits: &[bool]) -> Result<Vec<f64>> {
    if bits.len() % 3 != 0 {
        return Err(Error::LengthMismatch {
            what: "bits",
            expected: bits.len() - bits.len() % 3 + 3,
            found: bits.len(),
        });
    }
    Ok(bits
        .chunks_exact(3)
        .map(|b| {
            let label = (b[0] as usize) << 2 | (b[1] as usize) << 1 | b[2] as usize;
            TAU * gray_inverse(label) as f64 / 8.0
        })
        .collect())
}

/// Nearest constellation index for an equalized sample; ties within `1e-9`
/// go to the lower index.
pub fn psk8_decide(z: Complex64) -> usize {
    let dist: Vec<f64> = (0..8)
        .map(|k| (z - Complex64::from_polar(1.0, TAU * k as f64 / 8.0)).norm())
        .collect();
    let best = dist.iter().copied().fold(f64::INFINITY, f64::min);
    dist.iter().position(|&d| d <= best + 1e-9).unwrap_or(0)
}

/// Coherent demodulation: `received_n / reference_n` is sliced to the
/// nearest point and its Gray label emitted.
pub fn psk8_demodulate(received: &[Complex64], reference: &[Complex64]) -> Result<Vec<bool>> {
    if received.len() != reference.len() {
        return Err(Error::LengthMismatch {
            what: "reference",
            expected: received.len(),
            found: reference.len(),
        });
    }
    let mut bits = Vec::with_capacity(3 * received.len());
    for (y, r) in received.iter().zip(reference) {
        let z = if r.norm_sqr() > 0.0 { y / r } else { Complex64::new(0.0, 0.0) };
        let label = gray(psk8_decide(z));
        bits.extend([label & 4 != 0, label & 2 != 0, label & 1 != 0]);
    }
    Ok(bits)
}

/// Swept operating points.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// SNR values at a fixed ISR.
    Snr { isr_db: f64, snr_db: Vec<f64> },
    /// ISR values at a fixed SNR.
    Isr { snr_db: f64, isr_db: Vec<f64> },
}

impl Sweep {
    /// `(axis value, snr_db, isr_db)` for every point.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        match self {
            Sweep::Snr { isr_db, snr_db } => snr_db.iter().map(|&s| (s, s, *isr_db)).collect(),
            Sweep::Isr { snr_db, isr_db } => isr_db.iter().map(|&i| (i, *snr_db, i)).collect(),
        }
    }

    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::Snr { .. } => "snr_db",
            Sweep::Isr { .. } => "isr_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    /// OFDM symbols transmitted per trial.
    pub symbols_per_trial: usize,
    /// Interference tone count.
    pub n_tones: usize,
}

/// Error tally for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCount {
    pub errors: u64,
    pub bits: u64,
}

impl core::ops::AddAssign for ErrorCount {
    fn add_assign(&mut self, rhs: Self) {
        self.errors += rhs.errors;
        self.bits += rhs.bits;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerResult {
    pub axis_db: f64,
    pub ber: f64,
    pub errors: u64,
    pub bit_count: u64,
    pub trials: usize,
}

impl BerResult {
    pub fn new(axis_db: f64, count: ErrorCount, trials: usize) -> Self {
        let ber = if count.bits == 0 {
            0.0
        } else {
            count.errors as f64 / count.bits as f64
        };
        BerResult {
            axis_db,
            ber,
            errors: count.errors,
            bit_count: count.bits,
            trials,
        }
    }
}

/// Transmits `symbols_per_trial` OFDM symbols with `plan` over `channel` at
/// every sweep point.
///
/// Bits, tone phases and unit noise are drawn per subcarrier from streams
/// keyed by `(master_seed, trial)` regardless of the plan, so two designs of
/// the same trial see common random numbers.
pub fn simulate_trial(
    plan: &SubcarrierPlan,
    channel: &ChannelRealization,
    sweep: &Sweep,
    link: &LinkParams,
    master_seed: u64,
    trial: u64,
) -> Result<Vec<ErrorCount>> {
    let n = plan.len();
    if channel.len() != n {
        return Err(Error::LengthMismatch {
            what: "channel",
            expected: n,
            found: channel.len(),
        });
    }
    let sel = plan.selected_indices();
    let points = sweep.points();
    let mut counts = vec![ErrorCount::default(); points.len()];
    if sel.is_empty() {
        return Ok(counts);
    }
    let reference: Vec<Complex64> = sel
        .iter()
        .map(|&i| channel.response[i] * plan.power[i].sqrt())
        .collect();
    let sig_ref = signal_power_ref(plan, channel);
    let mut bit_rng = rng::trial_stream(master_seed, trial, Purpose::Bits);
    let mut tone_rng = rng::trial_stream(master_seed, trial, Purpose::Interference);
    let mut noise_rng = rng::trial_stream(master_seed, trial, Purpose::Noise);

    let mut scales = Vec::with_capacity(points.len());
    for &(_, snr_db, isr_db) in &points {
        let sigma = noise_variance(plan, snr_db)?.sqrt();
        let spec = InterferenceSpec {
            isr_db,
            n_tones: link.n_tones,
            placement: Placement::BestResponse,
            seed: 0,
        };
        spec.validate(n)?;
        let amp = if spec.enabled() {
            (sig_ref * 10f64.powf(isr_db / 10.0) / link.n_tones as f64).sqrt()
        } else {
            0.0
        };
        scales.push((sigma, amp));
    }
    let tones = channel.strongest(link.n_tones.min(n));

    let mut tx_bits = vec![false; 3 * sel.len()];
    let mut rx = vec![Complex64::new(0.0, 0.0); sel.len()];
    for _ in 0..link.symbols_per_trial {
        let all_bits: Vec<bool> = (0..3 * n).map(|_| bit_rng.random::<bool>()).collect();
        for (j, &i) in sel.iter().enumerate() {
            tx_bits[3 * j..3 * j + 3].copy_from_slice(&all_bits[3 * i..3 * i + 3]);
        }
        let phases = psk8_modulate(&tx_bits)?;
        let mut unit_tone = vec![Complex64::new(0.0, 0.0); n];
        for &i in &tones {
            unit_tone[i] = Complex64::from_polar(1.0, tone_rng.random::<f64>() * TAU);
        }
        let unit_noise = awgn(n, 1.0, &mut noise_rng);
        for (k, &(sigma, amp)) in scales.iter().enumerate() {
            for (j, &i) in sel.iter().enumerate() {
                rx[j] = reference[j] * Complex64::from_polar(1.0, phases[j])
                    + unit_tone[i] * amp
                    + unit_noise[i] * sigma;
            }
            let decided = psk8_demodulate(&rx, &reference)?;
            let errors = decided.iter().zip(&tx_bits).filter(|(a, b)| a != b).count();
            counts[k] += ErrorCount {
                errors: errors as u64,
                bits: tx_bits.len() as u64,
            };
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Designer {
    Proposed,
    Hsapa,
}

impl Designer {
    pub fn name(self) -> &'static str {
        match self {
            Designer::Proposed => "proposed",
            Designer::Hsapa => "hsapa",
        }
    }

    pub fn design(
        self,
        config: &WaveformConfig,
        channel: &ChannelRealization,
        params: &AcmParams,
    ) -> Result<SapaResult> {
        match self {
            Designer::Proposed => run_acm(config, channel, params),
            Designer::Hsapa => hsapa_baseline(config, channel),
        }
    }
}

/// Sequential BER sweep: per trial, draw the channel, run the designer and
/// transmit at every sweep point.
#[allow(clippy::too_many_arguments)]
pub fn run_ber_sweep(
    config: &WaveformConfig,
    params: &AcmParams,
    kind: ChannelKind,
    designer: Designer,
    sweep: &Sweep,
    link: &LinkParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<BerResult>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    config.validate()?;
    let points = sweep.points();
    let mut totals = vec![ErrorCount::default(); points.len()];
    for trial in 0..trials {
        let run = || -> Result<Vec<ErrorCount>> {
            let channel = trial_channel(
                kind,
                seed,
                trial as u64,
                config.n_subcarriers,
                config.noise_power_comm,
            )?;
            let design = designer.design(config, &channel, params)?;
            simulate_trial(&design.plan, &channel, sweep, link, seed, trial as u64)
        };
        let counts = run().map_err(|e| e.at_trial(trial))?;
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(points
        .iter()
        .zip(totals)
        .map(|(&(axis, _, _), c)| BerResult::new(axis, c, trials))
        .collect())
}

/// Fraction of `samples` strictly greater than each threshold.
pub fn ccdf(samples: &[f64], thresholds: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return vec![0.0; thresholds.len()];
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    thresholds
        .iter()
        .map(|&t| {
            let at_most = sorted.partition_point(|&s| s <= t);
            (sorted.len() - at_most) as f64 / sorted.len() as f64
        })
        .collect()
}

/// `count` evenly spaced thresholds covering `[min, max]` of the samples.
pub fn span_thresholds(samples: &[f64], count: usize) -> Vec<f64> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) || count == 0 {
        return Vec::new();
    }
    if count == 1 || hi == lo {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}
