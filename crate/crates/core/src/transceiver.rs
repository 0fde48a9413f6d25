//! DFT-s-OFDM and OFDM transmit/receive chains.
//!
//! Three transmit backends produce the same waveform:
//!
//! * `Direct` — arbitrary-size IDFT on the `N`-sample grid at `T_s`.
//! * `ClockChange` — zero-pad the spectrum to a power-of-two `N_tilde`,
//!   radix-2 IFFT, and emit at the changed converter clock `Ts_tilde`.
//! * `Farrow` — same IFFT, but resampled back onto the `N`-sample grid at
//!   `T_s` with a half-band shift, a Farrow bank, and the `(-1)^m` inverse
//!   shift at the output rate.
//!
//! The receiver is genie-aided: it is handed the true dense CIR and applies
//! a one-tap equalizer per subcarrier.

use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_core::RngCore;

use crate::dsp::{self, ComplexSignal};
use crate::error::{Error, Result};
use crate::numerology::{ClockedPlan, NumerologyPlan};
use crate::resampler::{self, FarrowBank, RationalRatio};

/// Gray-mapped QAM constellations, unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Qpsk,
    Qam16,
}

impl Constellation {
    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }

    pub fn size(&self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Point for a symbol index, whose binary digits are the Gray label.
    pub fn point(&self, index: usize) -> Complex64 {
        match self {
            Constellation::Qpsk => {
                let re = if index & 0b10 == 0 { 1.0 } else { -1.0 };
                let im = if index & 0b01 == 0 { 1.0 } else { -1.0 };
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            Constellation::Qam16 => {
                let level = |bits: usize| match bits {
                    0b00 => -3.0,
                    0b01 => -1.0,
                    0b11 => 1.0,
                    _ => 3.0,
                };
                Complex64::new(level(index >> 2), level(index & 0b11)) / 10f64.sqrt()
            }
        }
    }

    /// Index of the nearest constellation point.
    pub fn slice(&self, value: Complex64) -> usize {
        (0..self.size())
            .min_by(|&a, &b| {
                (value - self.point(a))
                    .norm_sqr()
                    .total_cmp(&(value - self.point(b)).norm_sqr())
            })
            .unwrap()
    }

    /// Uniform random block of constellation points.
    pub fn random_block(&self, rng: &mut ChaCha12Rng, len: usize) -> Vec<Complex64> {
        let mask = (self.size() - 1) as u64;
        (0..len)
            .map(|_| self.point((rng.next_u64() & mask) as usize))
            .collect()
    }
}

/// Subcarrier mapping: an injective placement of `M` block outputs into the
/// `N` transform bins (a partial permutation).
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierMap {
    indices: Vec<usize>,
    pub n: usize,
}

impl SubcarrierMap {
    /// Contiguous bins starting at `offset`.
    pub fn localized(n: usize, m: usize, offset: usize) -> Result<Self> {
        if m < 1 || offset + m > n {
            return Err(Error::Config(format!(
                "localized map [{offset}, {}) does not fit in {n} bins",
                offset + m
            )));
        }
        Ok(Self {
            indices: (offset..offset + m).collect(),
            n,
        })
    }

    /// Every `stride`-th bin starting at `offset`, modulo `N`.
    pub fn distributed(n: usize, m: usize, offset: usize, stride: usize) -> Result<Self> {
        if m < 1 || stride < 1 || m > n {
            return Err(Error::Config("invalid distributed map".into()));
        }
        let indices: Vec<usize> = (0..m).map(|i| (offset + i * stride) % n).collect();
        let mut seen = vec![false; n];
        for &idx in &indices {
            if seen[idx] {
                return Err(Error::Config(format!(
                    "distributed map with stride {stride} revisits bin {idx}"
                )));
            }
            seen[idx] = true;
        }
        Ok(Self { indices, n })
    }

    pub fn block_len(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Place the block into `N` bins (zeros elsewhere).
    pub fn apply(&self, block: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(block.len(), self.indices.len());
        let mut bins = vec![Complex64::default(); self.n];
        for (&idx, &value) in self.indices.iter().zip(block) {
            bins[idx] = value;
        }
        bins
    }

    /// Gather the block back out of `N` bins (inverse of [`apply`]).
    pub fn demap(&self, bins: &[Complex64]) -> Vec<Complex64> {
        self.indices.iter().map(|&idx| bins[idx]).collect()
    }

    /// True if the two maps occupy disjoint bin sets.
    pub fn disjoint_from(&self, other: &SubcarrierMap) -> bool {
        let mut seen = vec![false; self.n.max(other.n)];
        for &idx in &self.indices {
            seen[idx] = true;
        }
        other.indices.iter().all(|&idx| !seen[idx])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    DftsOfdm,
    Ofdm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Direct,
    ClockChange,
    Farrow,
}

/// One-tap equalizer choice. Zero-forcing recovers the block exactly in the
/// noiseless case; MMSE needs the per-bin noise-to-signal variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equalizer {
    ZeroForcing,
    Mmse { noise_variance: f64 },
}

/// Complete transmit/receive configuration for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct TxConfig {
    pub waveform: Waveform,
    pub backend: Backend,
    pub plan: NumerologyPlan,
    /// Required by the `ClockChange` and `Farrow` backends.
    pub clocked: Option<ClockedPlan>,
    pub map: SubcarrierMap,
    /// Required by the `Farrow` backend.
    pub bank: Option<FarrowBank>,
    pub constellation: Constellation,
    pub equalizer: Equalizer,
}

impl TxConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.plan.data_len;
        let m = self.plan.block_len;
        if self.map.n != n || self.map.block_len() != m {
            return Err(Error::Config(format!(
                "map covers {} of {} bins but plan has M = {m}, N = {n}",
                self.map.block_len(),
                self.map.n
            )));
        }
        if self.waveform == Waveform::Ofdm && m != n {
            return Err(Error::Config(
                "OFDM mode removes the M-point transform and needs M = N".into(),
            ));
        }
        match self.backend {
            Backend::Direct => {}
            Backend::ClockChange | Backend::Farrow => {
                let clocked = self.clocked.as_ref().ok_or_else(|| {
                    Error::Config("backend needs a clocked plan".into())
                })?;
                if !clocked.fft_len.is_power_of_two() || clocked.fft_len < n {
                    return Err(Error::Config(format!(
                        "transform size {} must be a power of two >= N = {n}",
                        clocked.fft_len
                    )));
                }
                if clocked.base.data_len != n {
                    return Err(Error::Config(format!(
                        "clocked plan describes N = {}, link plan has N = {n}",
                        clocked.base.data_len
                    )));
                }
                // at unity ratio (N_tilde == N) the Farrow backend degenerates
                // to the plain FFT path and needs no bank
                if self.backend == Backend::Farrow
                    && clocked.fft_len > n
                    && self.bank.is_none()
                {
                    return Err(Error::Config("Farrow backend needs a bank".into()));
                }
            }
        }
        Ok(())
    }

    fn clocked(&self) -> &ClockedPlan {
        self.clocked.as_ref().expect("validated")
    }
}

/// Receiver by-products useful for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct RxArtifacts {
    /// The CP-stripped data window the DFT ran on.
    pub data_window: Vec<Complex64>,
    /// Equalized subcarrier values before the final M-point IDFT.
    pub equalized: Vec<Complex64>,
}

/// Link quality measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub evm_db: f64,
    pub ber: f64,
    pub rel_mse_db: Option<f64>,
    pub overhead: f64,
}

/// Modulate one block of `M` constellation symbols into a CP-prefixed
/// baseband symbol.
pub fn tx_chain(block: &[Complex64], cfg: &TxConfig) -> Result<ComplexSignal> {
    cfg.validate()?;
    let plan = &cfg.plan;
    if block.len() != plan.block_len {
        return Err(Error::Config(format!(
            "block has {} symbols, plan expects M = {}",
            block.len(),
            plan.block_len
        )));
    }
    let spread = match cfg.waveform {
        Waveform::DftsOfdm => dsp::dft(block),
        Waveform::Ofdm => block.to_vec(),
    };
    let bins = cfg.map.apply(&spread);
    let (data, cp_len, sample_period) = match cfg.backend {
        Backend::Direct => (dsp::idft(&bins), plan.cp_len, plan.sample_period),
        Backend::ClockChange => {
            let clocked = cfg.clocked();
            let padded = dsp::zero_pad_spectrum(&bins, clocked.fft_len)?;
            (
                dsp::ifft_pow2(&padded)?,
                clocked.cp_len,
                clocked.clock_period,
            )
        }
        Backend::Farrow => {
            let clocked = cfg.clocked();
            let n = plan.data_len;
            let n_tilde = clocked.fft_len;
            let data = if n_tilde == n {
                // degenerate unity ratio: the pure FFT path
                dsp::ifft_pow2(&bins)?
            } else {
                let bank = cfg.bank.as_ref().expect("validated");
                let padded = dsp::zero_pad_spectrum(&bins, n_tilde)?;
                let oversampled = dsp::ifft_pow2(&padded)?;
                let ratio = n as f64 / n_tilde as f64;
                let shifted = dsp::half_band_shift(&oversampled, ratio, -1);
                // the shifted block is anti-periodic when N is odd
                let wrap = Complex64::new(if n.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0);
                let rates = RationalRatio::for_fft_sizes(bank.p, n, n_tilde)?;
                let resampled = resampler::resample_periodic(&shifted, rates, bank, n, wrap)?;
                // inverse shift at the output rate: exp(j pi m) = (-1)^m
                dsp::half_band_shift(&resampled, 1.0, 1)
            };
            (data, plan.cp_len, plan.sample_period)
        }
    };
    let mut symbol = Vec::with_capacity(data.len() + cp_len);
    symbol.extend_from_slice(&data[data.len() - cp_len..]);
    symbol.extend_from_slice(&data);
    ComplexSignal::new(symbol, sample_period)
}

/// Demodulate one received symbol with the genie CIR `h` (dense, at the
/// symbol's own sample rate). Returns the recovered block, scaled so the
/// noiseless round trip is exact.
pub fn rx_chain(
    received: &ComplexSignal,
    cfg: &TxConfig,
    h: &ComplexSignal,
) -> Result<(Vec<Complex64>, RxArtifacts)> {
    cfg.validate()?;
    let plan = &cfg.plan;
    let n = plan.data_len;
    let (window, response): (Vec<Complex64>, Vec<Complex64>) = match cfg.backend {
        Backend::Direct | Backend::Farrow => {
            let window = strip_cp(received, plan.cp_len, n)?;
            let mut dense = h.samples.clone();
            if dense.len() > n {
                return Err(Error::Config("CIR longer than the DFT window".into()));
            }
            dense.resize(n, Complex64::default());
            (window, dsp::dft(&dense))
        }
        Backend::ClockChange => {
            // the modeled ADC brings the changed-clock window back onto the
            // N-sample grid; the channel response lives on the N_tilde grid
            let clocked = cfg.clocked();
            let window = strip_cp(received, clocked.cp_len, clocked.fft_len)?;
            let regridded = dsp::ideal_resample(&window, n)?;
            let mut dense = h.samples.clone();
            if dense.len() > clocked.fft_len {
                return Err(Error::Config("CIR longer than the FFT window".into()));
            }
            dense.resize(clocked.fft_len, Complex64::default());
            let mut response = dsp::fft_pow2(&dense)?;
            response.truncate(n);
            (regridded, response)
        }
    };
    let spectrum = dsp::dft(&window);
    let received_block = cfg.map.demap(&spectrum);
    let channel_block = cfg.map.demap(&response);
    let mut equalized = Vec::with_capacity(received_block.len());
    for (bin_pos, (y, ch)) in received_block.iter().zip(&channel_block).enumerate() {
        let value = match cfg.equalizer {
            Equalizer::ZeroForcing => {
                if ch.norm() < 1e-12 {
                    return Err(Error::ZeroChannelBin {
                        bin: cfg.map.indices()[bin_pos],
                    });
                }
                y / ch
            }
            Equalizer::Mmse { noise_variance } => {
                y * ch.conj() / (ch.norm_sqr() + noise_variance)
            }
        };
        equalized.push(value);
    }
    let m = plan.block_len;
    let block = match cfg.waveform {
        Waveform::DftsOfdm => {
            let scale = 1.0 / (n as f64 * m as f64);
            dsp::idft(&equalized).into_iter().map(|v| v * scale).collect()
        }
        Waveform::Ofdm => equalized.iter().map(|v| v / n as f64).collect(),
    };
    Ok((
        block,
        RxArtifacts {
            data_window: window,
            equalized,
        },
    ))
}

fn strip_cp(received: &ComplexSignal, cp_len: usize, data_len: usize) -> Result<Vec<Complex64>> {
    if received.len() < cp_len + data_len {
        return Err(Error::LengthMismatch {
            left: received.len(),
            right: cp_len + data_len,
        });
    }
    Ok(received.samples[cp_len..cp_len + data_len].to_vec())
}

/// Error-vector and bit-error measurements between a reference block and a
/// recovered block, plus an optional relative-MSE comparison of two
/// signals. dB values are clamped at -150.
pub fn measure(
    reference: &[Complex64],
    recovered: &[Complex64],
    signals: Option<(&[Complex64], &[Complex64])>,
    constellation: Constellation,
) -> Result<LinkMetrics> {
    if reference.len() != recovered.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: recovered.len(),
        });
    }
    let evm_db = rel_energy_db(
        reference.iter().zip(recovered).map(|(a, b)| (b - a).norm_sqr()),
        reference.iter().map(|a| a.norm_sqr()),
    );
    let mut bit_errors = 0usize;
    for (a, b) in reference.iter().zip(recovered) {
        let diff = constellation.slice(*a) ^ constellation.slice(*b);
        bit_errors += diff.count_ones() as usize;
    }
    let ber = bit_errors as f64 / (reference.len() * constellation.bits_per_symbol()) as f64;
    let rel_mse_db = match signals {
        Some((x_ref, x_test)) => {
            if x_ref.len() != x_test.len() {
                return Err(Error::LengthMismatch {
                    left: x_ref.len(),
                    right: x_test.len(),
                });
            }
            Some(rel_energy_db(
                x_ref.iter().zip(x_test).map(|(a, b)| (b - a).norm_sqr()),
                x_ref.iter().map(|a| a.norm_sqr()),
            ))
        }
        None => None,
    };
    Ok(LinkMetrics {
        evm_db,
        ber,
        rel_mse_db,
        overhead: 0.0,
    })
}

/// `10 log10(sum err / sum ref)`, clamped to [-150, 150].
pub fn rel_energy_db(
    err: impl Iterator<Item = f64>,
    reference: impl Iterator<Item = f64>,
) -> f64 {
    let e: f64 = err.sum();
    let r: f64 = reference.sum();
    if r <= 0.0 {
        return 150.0;
    }
    (10.0 * (e / r).log10()).clamp(-150.0, 150.0)
}

impl LinkMetrics {
    pub fn with_overhead(mut self, overhead: f64) -> Self {
        self.overhead = overhead;
        self
    }
}
