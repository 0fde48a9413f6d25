//! Transform primitives and elementary signal operations.
//!
//! Transform convention: the forward DFT is the usual
//! `X_k = sum_n x_n exp(-j 2 pi n k / N)`, and the inverse carries **no 1/N
//! factor**, i.e. `idft(dft(x)) = N * x`. Receivers compensate with an
//! explicit `1/N` where unit round-trip gain is needed. `dft`/`idft` are
//! direct O(N^2) summations valid for any size and serve as the reference
//! for the radix-2 `fft_pow2`/`ifft_pow2` pair.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A finite block of complex baseband samples at a fixed sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    /// Sample period in seconds.
    pub sample_period: f64,
}

/// Frequency-domain vector. Invariants (finite entries, length >= 1) are
/// enforced at file-format boundaries, not on every intermediate value.
pub type SpectrumVector = Vec<Complex64>;

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_period: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("signal must have at least one sample".into()));
        }
        if !sample_period.is_finite() || sample_period <= 0.0 {
            return Err(Error::Config(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::Config("signal contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_period,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total energy sum |x_n|^2.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Duration in seconds (`len * sample_period`).
    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.sample_period
    }

    /// Write as CSV rows `index,re,im` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,re,im")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(w, "{},{},{}", i, s.re, s.im)?;
        }
        Ok(())
    }

    /// Write in the raw binary format: magic `ADCPSIG\0`, u64 LE length,
    /// f64 LE sample period, then interleaved LE f64 (re, im) pairs.
    pub fn write_bin<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BIN_MAGIC)?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.sample_period.to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read back the binary format written by [`ComplexSignal::write_bin`].
    pub fn read_bin<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BIN_MAGIC {
            return Err(Error::Parse("bad signal magic".into()));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let len = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)?;
        let sample_period = f64::from_le_bytes(buf8);
        let mut samples = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut buf8)?;
            let re = f64::from_le_bytes(buf8);
            r.read_exact(&mut buf8)?;
            let im = f64::from_le_bytes(buf8);
            samples.push(Complex64::new(re, im));
        }
        Self::new(samples, sample_period)
    }
}

const BIN_MAGIC: &[u8; 8] = b"ADCPSIG\0";

/// Direct DFT of any size: `X_k = sum_n x_n exp(-j 2 pi n k / N)`.
pub fn dft(x: &[Complex64]) -> SpectrumVector {
    transform_direct(x, -1.0)
}

/// Direct inverse transform, paper convention (no 1/N):
/// `x_n = sum_k X_k exp(+j 2 pi k n / N)`.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    transform_direct(x, 1.0)
}

fn transform_direct(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = x.len();
    let step = sign * TAU / n as f64;
    (0..n)
        .map(|k| {
            let mut acc = Complex64::default();
            for (i, &xi) in x.iter().enumerate() {
                // reduce n*k mod N before the trig call to keep the angle small
                let (s, c) = (step * ((i * k) % n) as f64).sin_cos();
                acc += xi * Complex64::new(c, s);
            }
            acc
        })
        .collect()
}

/// Radix-2 FFT, same convention as [`dft`]. Errors unless `len` is a power
/// of two.
pub fn fft_pow2(x: &[Complex64]) -> Result<SpectrumVector> {
    fft_radix2(x, -1.0)
}

/// Radix-2 inverse FFT, same (unnormalized) convention as [`idft`].
pub fn ifft_pow2(x: &[Complex64]) -> Result<Vec<Complex64>> {
    fft_radix2(x, 1.0)
}

fn fft_radix2(x: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength { len: n });
    }
    let mut data = x.to_vec();
    // bit-reversal permutation
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * TAU / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let (s, c) = (ang * k as f64).sin_cos();
                let w = Complex64::new(c, s);
                let a = data[start + k];
                let b = data[start + k + len / 2] * w;
                data[start + k] = a + b;
                data[start + k + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(data)
}

/// Circular convolution `out_n = sum_m h_m d_{(n-m) mod N}` with `h`
/// zero-extended to the length of `d`.
pub fn circular_convolve(h: &[Complex64], d: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = d.len();
    if h.len() > n {
        return Err(Error::KernelLongerThanSignal {
            kernel_len: h.len(),
            signal_len: n,
        });
    }
    Ok((0..n)
        .map(|i| {
            let mut acc = Complex64::default();
            for (m, &hm) in h.iter().enumerate() {
                acc += hm * d[(i + n - m) % n];
            }
            acc
        })
        .collect())
}

/// Append zero bins to the tail of a spectrum, per the zero-padding layout
/// `(D, 0, ..., 0)`.
pub fn zero_pad_spectrum(d: &[Complex64], n_tilde: usize) -> Result<SpectrumVector> {
    if n_tilde < d.len() {
        return Err(Error::ShrinkSpectrum {
            len: d.len(),
            target: n_tilde,
        });
    }
    let mut out = d.to_vec();
    out.resize(n_tilde, Complex64::default());
    Ok(out)
}

/// Per-sample phasor `exp(sign * j pi n ratio)`: translates a one-sided
/// spectrum by half the `ratio` band so a symmetric lowpass applies.
pub fn half_band_shift(x: &[Complex64], ratio: f64, sign: i32) -> Vec<Complex64> {
    assert!(
        sign == 1 || sign == -1,
        "shift direction must be +1 or -1, got {sign}"
    );
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio must be in (0, 1]");
    let step = sign as f64 * std::f64::consts::PI * ratio;
    x.iter()
        .enumerate()
        .map(|(n, &xn)| {
            let (s, c) = (step * n as f64).sin_cos();
            xn * Complex64::new(c, s)
        })
        .collect()
}

/// Re-grid one period of a bandlimited periodic signal onto `out_len`
/// samples: low spectrum bins are preserved, and the scale is chosen so a
/// pure tone keeps its amplitude. This is the Sampling-Theorem oracle used
/// to compare signals across sample rates.
pub fn ideal_resample(x: &[Complex64], out_len: usize) -> Result<Vec<Complex64>> {
    let n = x.len();
    let spec = dft(x);
    if out_len < n {
        // bins at or above out_len must be numerically unoccupied
        let max_mag = spec.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let thresh = max_mag * 1e-9;
        if let Some(k) = (out_len..n).rev().find(|&k| spec[k].norm() > thresh) {
            return Err(Error::Alias {
                occupied: k + 1,
                out_len,
            });
        }
    }
    let mut bins = spec;
    bins.resize(out_len, Complex64::default());
    let scale = 1.0 / n as f64;
    Ok(idft(&bins).into_iter().map(|v| v * scale).collect())
}
