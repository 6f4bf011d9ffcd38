//! Direct-formula reference implementations used by the integration tests.
//! Everything here is deliberately naive: plain sums, no FFTs, no shared code
//! with the library beyond its data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use isac_core::signal::{ChannelRealization, SubcarrierPlan, WaveformConfig};
use isac_core::Complex64;

/// `R[k] = Σ_n p_n e^{jπnk/K}` for `k = −K+1 ..= K−1`.
pub fn autocorrelation(power: &[f64], k_half: usize) -> Vec<Complex64> {
    let k = k_half as i64;
    (-k + 1..k)
        .map(|lag| {
            power
                .iter()
                .enumerate()
                .map(|(n, &p)| Complex64::from_polar(p, PI * n as f64 * lag as f64 / k_half as f64))
                .sum()
        })
        .collect()
}

/// Peak sidelobe magnitude over `Υ < |k| < K`.
pub fn psl_linear(power: &[f64], k_half: usize, mainlobe: usize) -> f64 {
    let r = autocorrelation(power, k_half);
    let zero = k_half as i64 - 1;
    let mut peak = 0.0f64;
    for (i, v) in r.iter().enumerate() {
        let lag = (i as i64 - zero).abs();
        if lag > mainlobe as i64 {
            peak = peak.max(v.norm());
        }
    }
    peak
}

pub fn psl_db(power: &[f64], k_half: usize, mainlobe: usize) -> f64 {
    let r0: f64 = power.iter().sum();
    20.0 * (psl_linear(power, k_half, mainlobe) / r0).log10()
}

pub fn cdr(selection: &[bool], power: &[f64], h: &[Complex64], noise: f64) -> f64 {
    let mut total = 0.0;
    for n in 0..selection.len() {
        if selection[n] {
            total += (1.0 + power[n] * h[n].norm_sqr() / noise).log2();
        }
    }
    total
}

/// `s_m = Σ_n x_n e^{j2πnm/(Nq)}`, `m = 0 .. Nq−1`.
pub fn synthesize(symbols: &[Complex64], q: usize) -> Vec<Complex64> {
    let len = symbols.len() * q;
    (0..len)
        .map(|m| {
            symbols
                .iter()
                .enumerate()
                .map(|(n, x)| x * Complex64::from_polar(1.0, 2.0 * PI * (n * m) as f64 / len as f64))
                .sum()
        })
        .collect()
}

/// `mean((|s| − mean|s|)²) / mean(|s|)²`.
pub fn cve(samples: &[Complex64]) -> f64 {
    let m = samples.len() as f64;
    let mean = samples.iter().map(|z| z.norm()).sum::<f64>() / m;
    let var = samples.iter().map(|z| (z.norm() - mean).powi(2)).sum::<f64>() / m;
    var / (mean * mean)
}

pub fn papr_db(samples: &[Complex64]) -> f64 {
    let m = samples.len() as f64;
    let peak = samples.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let mean = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
    10.0 * (peak / mean).log10()
}

/// Unnormalized DFT `X_k = Σ_m x_m e^{−j2πkm/N}`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Waterfilling by bisection on the water level.
pub fn waterfill_bisection(gains: &[f64], budget: f64) -> Vec<f64> {
    let alloc = |mu: f64| -> Vec<f64> {
        gains
            .iter()
            .map(|&g| if g > 0.0 { (mu - 1.0 / g).max(0.0) } else { 0.0 })
            .collect()
    };
    let (mut lo, mut hi) = (0.0, budget + gains.iter().filter(|&&g| g > 0.0).map(|g| 1.0 / g).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if alloc(mid).iter().sum::<f64>() > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    alloc(0.5 * (lo + hi))
}

/// Every selection of `nr` subcarriers out of `n` whose pairwise index gaps
/// exceed `gap`.
pub fn spaced_selections(n: usize, nr: usize, gap: usize) -> Vec<Vec<bool>> {
    fn rec(start: usize, left: usize, n: usize, gap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + gap + 1, left - 1, n, gap, cur, out);
            cur.pop();
        }
    }
    let mut idx = Vec::new();
    rec(0, nr, n, gap, &mut Vec::new(), &mut idx);
    idx.into_iter()
        .map(|set| {
            let mut sel = vec![false; n];
            for i in set {
                sel[i] = true;
            }
            sel
        })
        .collect()
}

/// Weighted objective `ρ·PSL/Rmax − (1−ρ)·CDR/Cmax` from the direct formulas.
pub fn weighted_objective(
    plan: &SubcarrierPlan,
    channel: &ChannelRealization,
    config: &WaveformConfig,
    r_max: f64,
    c_max: f64,
) -> f64 {
    let psl = psl_linear(&plan.power, config.autocorr_half_len, config.mainlobe_boundary);
    let rate = cdr(&plan.selection, &plan.power, &channel.response, channel.noise_power);
    config.rho * psl / r_max - (1.0 - config.rho) * rate / c_max
}

/// Complementary error function (Numerical Recipes `erfcc`, relative error
/// below 1.2e-7).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-coded 8-PSK bit error approximation at symbol SNR `snr` (linear).
pub fn psk8_ber(snr: f64) -> f64 {
    2.0 / 3.0 * q_function((2.0 * snr).sqrt() * (PI / 8.0).sin())
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
