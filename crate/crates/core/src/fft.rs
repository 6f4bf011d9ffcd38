//! Unnormalized discrete Fourier transforms of arbitrary length.
//!
//! `forward` computes `X[k] = Σ_p x[p] e^{-j2πkp/n}` and `inverse` computes
//! `x[p] = Σ_k X[k] e^{+j2πkp/n}` with no `1/n` factor, so
//! `inverse(forward(x)) = n·x`. Power-of-two lengths use an iterative radix-2
//! kernel; every other length goes through Bluestein's chirp-z algorithm on a
//! power-of-two grid.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float as _;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2(Radix2),
    Bluestein(Box<Bluestein>),
}

#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    /// `e^{-j2πk/n}` for `k < n/2`.
    twiddles: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    inner: Radix2,
    /// `e^{-jπk²/n}` for `k < n`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp laid out circularly.
    kernel: Vec<Complex64>,
}

fn unit(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| unit(-2.0 * PI * k as f64 / n as f64))
            .collect();
        Radix2 { n, twiddles }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp argument small for large k.
        let two_n = 2 * n as u128;
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = ((k as u128 * k as u128) % two_n) as f64;
                unit(-PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein {
            inner,
            chirp,
            kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = buf.len();
        let m = self.inner.n;
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (w, b) in work.iter_mut().zip(&self.kernel) {
            *w = (*w * b).conj();
        }
        // inverse via conjugation, then undo the conjugate and scale
        self.inner.forward(&mut work);
        let scale = 1.0 / m as f64;
        for k in 0..n {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

impl Fft {
    pub fn new(n: usize) -> Self {
        let kind = if n <= 1 {
            Kind::Trivial
        } else if n.is_power_of_two() {
            Kind::Radix2(Radix2::new(n))
        } else {
            Kind::Bluestein(Box::new(Bluestein::new(n)))
        };
        Fft { n, kind }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform. Panics if `buf.len() != self.len()`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "fft length mismatch");
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2(r) => r.forward(buf),
            Kind::Bluestein(b) => b.forward(buf),
        }
    }

    /// In-place unnormalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        for z in buf.iter_mut() {
            *z = z.conj();
        }
    }
}

/// Allocating forward transform.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    Fft::new(x.len()).forward(&mut buf);
    buf
}

/// Allocating unnormalized inverse transform.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    Fft::new(x.len()).inverse(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(p, &v)| v * unit(sign * 2.0 * PI * ((k * p) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn sample(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin() + 0.1, (i as f64 * 1.3).cos()))
            .collect()
    }

    #[test]
    fn matches_naive_for_mixed_lengths() {
        for n in [1, 2, 3, 5, 7, 8, 12, 16, 31, 100, 128] {
            let x = sample(n);
            let fast = dft(&x);
            let slow = naive(&x, -1.0);
            let scale: f64 = slow.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-10 * scale, "n = {n}");
            }
            let inv = idft(&x);
            let slow_inv = naive(&x, 1.0);
            for (a, b) in inv.iter().zip(&slow_inv) {
                assert!((a - b).norm() <= 1e-10 * scale, "n = {n}");
            }
        }
    }

    #[test]
    fn constant_spectrum_is_impulse() {
        let x = vec![Complex64::new(2.0, 0.0); 4];
        let s = idft(&x);
        assert!((s[0] - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        for z in &s[1..] {
            assert!(z.norm() < 1e-12);
        }
    }
}
