//! Reproducible link-level experiments: single-user adaptive-CP sweeps and
//! the two-user CP-mismatch interference experiment.
//!
//! Everything is deterministic in `(seed, trial)`: data blocks, channel
//! draws, and noise each use their own nonce, so trials can run in any
//! order (or in parallel) and still aggregate to identical results.

use num_complex::Complex64;

use crate::channel::{self, apply_channel, cir_as_signal, ChannelProfile};
use crate::dsp::ComplexSignal;
use crate::error::{Error, Result};
use crate::numerology::{plan_from_cp_duration, plan_from_delay_spread};
use crate::rng;
use crate::transceiver::{
    rel_energy_db, rx_chain, tx_chain, Backend, Constellation, Equalizer, SubcarrierMap,
    TxConfig, Waveform,
};

/// Single-user sweep over delay spreads.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// RMS delay spreads to sweep, seconds.
    pub taus: Vec<f64>,
    pub symbol_time: f64,
    pub bandwidth: f64,
    pub cp_multiple: f64,
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// QAM block length as a fraction of `N` (`M = max(1, floor(N * f))`).
    pub block_fraction: f64,
}

impl SweepConfig {
    pub fn new(taus: Vec<f64>, symbol_time: f64, bandwidth: f64, seed: u64) -> Self {
        Self {
            taus,
            symbol_time,
            bandwidth,
            cp_multiple: crate::numerology::DEFAULT_CP_MULTIPLE,
            snr_db: None,
            trials: 1,
            seed,
            block_fraction: 0.75,
        }
    }
}

/// One sweep result row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub cp_duration: f64,
    pub overhead: f64,
    pub evm_db: f64,
    pub ber: f64,
}

/// Random physical multipath profile: first tap at delay zero, the rest
/// uniform over `(0, span]`, complex Gaussian gains normalized to unit
/// total power. `span = 0` or `n_taps = 1` collapses to a single tap.
pub fn random_profile_spanning(
    span: f64,
    n_taps: usize,
    seed: u64,
    nonce: u64,
) -> ChannelProfile {
    let mut gen = rng::stream(seed, nonce);
    let n_taps = if span <= 0.0 { 1 } else { n_taps.max(1) };
    let mut taps: Vec<(f64, f64, f64)> = Vec::with_capacity(n_taps);
    let mut gains: Vec<Complex64> = Vec::with_capacity(n_taps);
    for i in 0..n_taps {
        let delay = if i == 0 {
            0.0
        } else {
            rng::uniform_open01(&mut gen) * span
        };
        taps.push((delay * 1e9, 0.0, 0.0));
        gains.push(rng::complex_gaussian(&mut gen, 1.0));
    }
    let power: f64 = gains.iter().map(|g| g.norm_sqr()).sum();
    let scale = 1.0 / power.sqrt();
    for (tap, gain) in taps.iter_mut().zip(&gains) {
        tap.1 = gain.re * scale;
        tap.2 = gain.im * scale;
    }
    taps.sort_by(|a, b| a.0.total_cmp(&b.0));
    ChannelProfile { taps, seed }
}

const ROLE_DATA: u64 = 0;
const ROLE_CHANNEL: u64 = 1;
const ROLE_NOISE: u64 = 2;

fn sweep_nonce(tau_idx: usize, trial: usize, role: u64) -> u64 {
    ((tau_idx as u64) << 40) | ((trial as u64) << 2) | role
}

/// Sweep the adaptive-CP link over delay spreads: each row plans
/// `T_c = cp_multiple * tau`, draws channels whose CIR span matches that
/// CP, and reports overhead, EVM and BER over the requested trials.
pub fn run_single_user_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.trials < 1 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(cfg.taus.len());
    for (tau_idx, &tau) in cfg.taus.iter().enumerate() {
        let plan = plan_from_delay_spread(
            cfg.symbol_time,
            cfg.bandwidth,
            tau,
            cfg.cp_multiple,
            1,
        )?;
        let m = ((plan.data_len as f64 * cfg.block_fraction) as usize).max(1);
        let plan = plan.with_block_len(m)?;
        let link = TxConfig {
            waveform: Waveform::DftsOfdm,
            backend: Backend::Direct,
            map: SubcarrierMap::localized(plan.data_len, m, 0)?,
            plan,
            clocked: None,
            bank: None,
            constellation: Constellation::Qpsk,
            equalizer: Equalizer::ZeroForcing,
        };
        let span = link.plan.cp_duration * 0.95;
        let mut err_energy = 0.0;
        let mut ref_energy = 0.0;
        let mut bit_errors = 0usize;
        let mut bits = 0usize;
        for trial in 0..cfg.trials {
            let mut data_rng = rng::stream(cfg.seed, sweep_nonce(tau_idx, trial, ROLE_DATA));
            let block = link.constellation.random_block(&mut data_rng, m);
            let profile = random_profile_spanning(
                span,
                8,
                cfg.seed,
                sweep_nonce(tau_idx, trial, ROLE_CHANNEL),
            );
            let ch = profile.quantize(link.plan.sample_period)?;
            let symbol = tx_chain(&block, &link)?;
            let received = apply_channel(
                &symbol,
                &ch,
                cfg.snr_db,
                sweep_nonce(tau_idx, trial, ROLE_NOISE),
            );
            let h = cir_as_signal(&ch, ch.cir_len(), symbol.sample_period)?;
            let (recovered, _) = rx_chain(&received, &link, &h)?;
            for (a, b) in block.iter().zip(&recovered) {
                err_energy += (b - a).norm_sqr();
                ref_energy += a.norm_sqr();
                bit_errors += (link.constellation.slice(*a) ^ link.constellation.slice(*b))
                    .count_ones() as usize;
            }
            bits += m * link.constellation.bits_per_symbol();
        }
        rows.push(SweepRow {
            tau,
            cp_duration: link.plan.cp_duration,
            overhead: link.plan.overhead(),
            evm_db: rel_energy_db(
                std::iter::once(err_energy),
                std::iter::once(ref_energy),
            ),
            ber: bit_errors as f64 / bits as f64,
        });
    }
    Ok(rows)
}

/// Two simultaneous transmissions received at user 2, on disjoint
/// subcarrier allocations, with independently chosen CP durations.
#[derive(Debug, Clone)]
pub struct TwoUserScenario {
    pub symbol_time: f64,
    pub bandwidth: f64,
    /// CP duration user 1 adopts in the mismatched run (`<= cp_user2`).
    pub cp_user1: f64,
    /// CP duration user 2 adopts (and both adopt in the common-CP run).
    pub cp_user2: f64,
    /// Per-user QAM block length.
    pub block_len: usize,
    pub map_offset_user1: usize,
    pub map_offset_user2: usize,
    /// Channel from user 1's transmitter as seen at user 2.
    pub channel_user1: ChannelProfile,
    /// Channel from user 2's transmitter as seen at user 2.
    pub channel_user2: ChannelProfile,
    /// Symbols transmitted back to back per trial; decoding starts at the
    /// second one, where boundary effects are fully active.
    pub n_symbols: usize,
    /// Extra start offset of user 1's stream in samples.
    pub start_offset_samples: usize,
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// When false, user 1 stays silent (interference-free control).
    pub user1_active: bool,
}

/// User-2 EVM under the mismatched CPs and under the common CP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoUserResult {
    pub evm_mismatched_db: f64,
    pub evm_common_db: f64,
}

impl TwoUserScenario {
    /// Default experiment: 40 us symbols at 25.6 MHz, user 1 at a 2.5 us CP
    /// against user 2 at 5 us, with user 1's channel spreading past user
    /// 1's own CP (but within user 2's).
    pub fn default_scenario(seed: u64) -> Self {
        Self {
            symbol_time: 40e-6,
            bandwidth: 25.6e6,
            cp_user1: 2.5e-6,
            cp_user2: 5.0e-6,
            block_len: 224,
            map_offset_user1: 48,
            map_offset_user2: 560,
            channel_user1: ChannelProfile {
                taps: vec![
                    (0.0, 0.62, 0.0),
                    (1500.0, 0.0, 0.45),
                    (3000.0, -0.35, 0.1),
                    (4400.0, 0.3, -0.28),
                ],
                seed,
            },
            channel_user2: ChannelProfile {
                taps: vec![
                    (0.0, 0.75, 0.0),
                    (800.0, 0.35, -0.2),
                    (2000.0, -0.15, 0.3),
                ],
                seed,
            },
            n_symbols: 6,
            start_offset_samples: 0,
            snr_db: None,
            seed,
            user1_active: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cp_user1 > self.cp_user2 {
            return Err(Error::Config(
                "mismatch case needs cp_user1 <= cp_user2".into(),
            ));
        }
        if self.n_symbols < 2 {
            return Err(Error::Config(
                "need at least two symbols to observe boundary effects".into(),
            ));
        }
        // disjoint on the common grid
        let common = plan_from_cp_duration(
            self.symbol_time,
            self.bandwidth,
            self.cp_user2,
            self.block_len,
        )?;
        let map1 = SubcarrierMap::localized(common.data_len, self.block_len, self.map_offset_user1)?;
        let map2 = SubcarrierMap::localized(common.data_len, self.block_len, self.map_offset_user2)?;
        if !map1.disjoint_from(&map2) {
            let bin = self.map_offset_user1.max(self.map_offset_user2);
            return Err(Error::OverlappingSubcarriers { bin });
        }
        // disjoint in hertz when each user modulates on its own grid
        let plan1 = plan_from_cp_duration(
            self.symbol_time,
            self.bandwidth,
            self.cp_user1,
            self.block_len,
        )?;
        let band = |offset: usize, spacing: f64| {
            (
                offset as f64 * spacing,
                (offset + self.block_len) as f64 * spacing,
            )
        };
        let (lo1, hi1) = band(self.map_offset_user1, plan1.subcarrier_spacing);
        let (lo2, hi2) = band(self.map_offset_user2, common.subcarrier_spacing);
        if hi1 > lo2 && hi2 > lo1 {
            return Err(Error::OverlappingSubcarriers {
                bin: self.map_offset_user2,
            });
        }
        Ok(())
    }
}

fn two_user_nonce(trial: usize, variant: u64, role: u64) -> u64 {
    ((trial as u64) << 4) | (variant << 2) | role
}

/// Run the scenario: once with the mismatched CPs and once with the common
/// CP, measuring user-2 EVM on the 2nd and later symbols.
pub fn run_two_user(sc: &TwoUserScenario, trials: usize) -> Result<TwoUserResult> {
    if trials < 1 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    sc.validate()?;
    let evm_mismatched_db = run_two_user_variant(sc, sc.cp_user1, 0..trials, 0)?;
    let evm_common_db = run_two_user_variant(sc, sc.cp_user2, 0..trials, 1)?;
    Ok(TwoUserResult {
        evm_mismatched_db,
        evm_common_db,
    })
}

/// Result of a single trial, using the same `(seed, trial)` streams as the
/// corresponding trial inside [`run_two_user`].
pub fn run_two_user_trial(sc: &TwoUserScenario, trial: usize) -> Result<TwoUserResult> {
    sc.validate()?;
    Ok(TwoUserResult {
        evm_mismatched_db: run_two_user_variant(sc, sc.cp_user1, trial..trial + 1, 0)?,
        evm_common_db: run_two_user_variant(sc, sc.cp_user2, trial..trial + 1, 1)?,
    })
}

fn link_config(
    sc: &TwoUserScenario,
    cp: f64,
    offset: usize,
) -> Result<TxConfig> {
    let plan = plan_from_cp_duration(sc.symbol_time, sc.bandwidth, cp, sc.block_len)?;
    Ok(TxConfig {
        waveform: Waveform::DftsOfdm,
        backend: Backend::Direct,
        map: SubcarrierMap::localized(plan.data_len, sc.block_len, offset)?,
        plan,
        clocked: None,
        bank: None,
        constellation: Constellation::Qpsk,
        equalizer: Equalizer::ZeroForcing,
    })
}

fn run_two_user_variant(
    sc: &TwoUserScenario,
    cp_user1: f64,
    trials: std::ops::Range<usize>,
    variant: u64,
) -> Result<f64> {
    let link1 = link_config(sc, cp_user1, sc.map_offset_user1)?;
    let link2 = link_config(sc, sc.cp_user2, sc.map_offset_user2)?;
    let sample_period = link2.plan.sample_period;
    let ch1 = sc.channel_user1.quantize(sample_period)?;
    let ch2 = sc.channel_user2.quantize(sample_period)?;
    let h2 = cir_as_signal(&ch2, ch2.cir_len(), sample_period)?;
    let sym_len1 = link1.plan.cp_len + link1.plan.data_len;
    let sym_len2 = link2.plan.cp_len + link2.plan.data_len;

    let mut err_energy = 0.0;
    let mut ref_energy = 0.0;
    for trial in trials {
        let mut rng1 = rng::stream(sc.seed, two_user_nonce(trial, variant, 0));
        let mut rng2 = rng::stream(sc.seed, two_user_nonce(trial, variant, 1));
        let blocks2: Vec<Vec<Complex64>> = (0..sc.n_symbols)
            .map(|_| link2.constellation.random_block(&mut rng2, sc.block_len))
            .collect();

        let mut stream1 =
            vec![Complex64::default(); sc.start_offset_samples + sc.n_symbols * sym_len1];
        if sc.user1_active {
            for s in 0..sc.n_symbols {
                let block = link1.constellation.random_block(&mut rng1, sc.block_len);
                let symbol = tx_chain(&block, &link1)?;
                let start = sc.start_offset_samples + s * sym_len1;
                stream1[start..start + sym_len1].copy_from_slice(&symbol.samples);
            }
        }
        let mut stream2 = vec![Complex64::default(); sc.n_symbols * sym_len2];
        for (s, block) in blocks2.iter().enumerate() {
            let symbol = tx_chain(block, &link2)?;
            stream2[s * sym_len2..(s + 1) * sym_len2].copy_from_slice(&symbol.samples);
        }

        let rx1 = apply_channel(
            &ComplexSignal::new(stream1, sample_period)?,
            &ch1,
            None,
            0,
        );
        let rx2 = apply_channel(
            &ComplexSignal::new(stream2, sample_period)?,
            &ch2,
            None,
            0,
        );
        let mut superposed = vec![Complex64::default(); rx1.len().max(rx2.len())];
        for (dst, &v) in superposed.iter_mut().zip(&rx1.samples) {
            *dst += v;
        }
        for (dst, &v) in superposed.iter_mut().zip(&rx2.samples) {
            *dst += v;
        }
        if let Some(snr) = sc.snr_db {
            channel::add_awgn(
                &mut superposed,
                snr,
                sc.seed,
                two_user_nonce(trial, variant, 3),
            );
        }

        // decode user 2 from the second symbol onward
        for (s, block) in blocks2.iter().enumerate().skip(1) {
            let start = s * sym_len2;
            let window = ComplexSignal::new(
                superposed[start..start + sym_len2].to_vec(),
                sample_period,
            )?;
            let (recovered, _) = rx_chain(&window, &link2, &h2)?;
            for (a, b) in block.iter().zip(&recovered) {
                err_energy += (b - a).norm_sqr();
                ref_energy += a.norm_sqr();
            }
        }
    }
    Ok(rel_energy_db(
        std::iter::once(err_energy),
        std::iter::once(ref_energy),
    ))
}

/// One verified size pair of the zero-pad/clock-change equivalence check.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRow {
    pub trial: usize,
    pub data_len: usize,
    pub fft_len: usize,
    /// Max per-sample deviation between the direct-IDFT data portion and
    /// the re-gridded clock-change data portion, relative to the largest
    /// direct sample.
    pub max_rel_err: f64,
}

/// Plan pair on an abstract unit grid (`T_s = 1 s`) for a given `(N, K)`
/// and transform size.
fn unit_grid_configs(
    data_len: usize,
    cp_len: usize,
    fft_len: usize,
    backend: Backend,
    bank: Option<crate::resampler::FarrowBank>,
) -> Result<TxConfig> {
    let symbol_time = (data_len + cp_len) as f64;
    let plan = plan_from_cp_duration(symbol_time, 1.0, cp_len as f64, data_len)?;
    let clocked = crate::numerology::plan_from_clock_rates(
        symbol_time,
        1.0,
        fft_len,
        &[data_len as f64 / fft_len as f64],
        0.0,
        crate::numerology::DEFAULT_CP_MULTIPLE,
    )?;
    Ok(TxConfig {
        waveform: Waveform::Ofdm,
        backend,
        map: SubcarrierMap::localized(plan.data_len, plan.block_len, 0)?,
        plan,
        clocked: Some(clocked),
        bank,
        constellation: Constellation::Qpsk,
        equalizer: Equalizer::ZeroForcing,
    })
}

fn strip_data_portion(symbol: &ComplexSignal, cp_len: usize) -> Vec<Complex64> {
    symbol.samples[cp_len..].to_vec()
}

/// Verify, over random `(N, N_tilde)` pairs, that the zero-padded
/// power-of-two IFFT clocked at the changed rate describes the same
/// continuous waveform as the direct N-point IDFT: the clock-change data
/// portion is brought back onto the N-grid by the ideal resampling oracle
/// and compared sample by sample.
pub fn run_clock_equivalence(
    seed: u64,
    pairs: usize,
    max_size: usize,
) -> Result<Vec<EquivalenceRow>> {
    if pairs < 1 {
        return Err(Error::Config("need at least one pair".into()));
    }
    if !max_size.is_power_of_two() || max_size < 8 {
        return Err(Error::Config(
            "max transform size must be a power of two >= 8".into(),
        ));
    }
    let max_exp = max_size.trailing_zeros() as u64;
    let mut rows = Vec::with_capacity(pairs);
    for trial in 0..pairs {
        let mut gen = rng::stream(seed, (trial as u64) | (1 << 32));
        let exp = 3 + (rng::uniform_open01(&mut gen) * (max_exp - 2) as f64) as u64;
        let fft_len = 1usize << exp.min(max_exp);
        // N from half occupancy up to (and including) the degenerate N = N_tilde
        let lo = (fft_len / 2).max(4);
        let span = (fft_len - lo + 1) as f64;
        let data_len = (lo + (rng::uniform_open01(&mut gen) * span) as usize).min(fft_len);
        let cp_len = (data_len / 8).max(1);

        let direct = unit_grid_configs(data_len, cp_len, fft_len, Backend::Direct, None)?;
        let clocked = unit_grid_configs(data_len, cp_len, fft_len, Backend::ClockChange, None)?;
        let block = Constellation::Qpsk.random_block(&mut gen, data_len);

        let d = strip_data_portion(&tx_chain(&block, &direct)?, direct.plan.cp_len);
        let clock_cp = clocked.clocked.as_ref().unwrap().cp_len;
        let dt = strip_data_portion(&tx_chain(&block, &clocked)?, clock_cp);
        let regridded = crate::dsp::ideal_resample(&dt, data_len)?;

        let scale = d.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let max_rel_err = regridded
            .iter()
            .zip(&d)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max)
            / scale;
        rows.push(EquivalenceRow {
            trial,
            data_len,
            fft_len,
            max_rel_err,
        });
    }
    Ok(rows)
}

/// Farrow-vs-direct benchmark parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FarrowBenchParams {
    pub data_len: usize,
    pub fft_len: usize,
    pub filter_len: usize,
    pub p: usize,
    pub alpha: usize,
    pub stopband_atten_db: f64,
    pub seed: u64,
}

impl Default for FarrowBenchParams {
    fn default() -> Self {
        Self {
            data_len: 1543,
            fft_len: 2048,
            filter_len: 231,
            p: 9,
            alpha: 4,
            stopband_atten_db: 80.0,
            seed: 1,
        }
    }
}

/// Farrow-vs-direct benchmark results.
#[derive(Debug, Clone, PartialEq)]
pub struct FarrowBenchResult {
    /// Relative MSE between the Farrow-path and direct-IDFT data portions
    /// over the first 100 samples, in dB.
    pub rel_mse_first100_db: f64,
    /// Same over the whole data portion.
    pub rel_mse_full_db: f64,
    pub mults_farrow_per_sample: f64,
    pub mults_direct_per_sample: u64,
    /// Real parts of the first (up to) 100 direct-IDFT samples.
    pub direct_head: Vec<f64>,
    /// Real parts of the same samples from the Farrow path.
    pub farrow_head: Vec<f64>,
}

/// Run one Farrow-approximation benchmark: modulate a random block both
/// through the direct IDFT and through the zero-pad + Farrow transmit
/// path, and compare the emitted data portions.
pub fn run_farrow_bench(params: &FarrowBenchParams) -> Result<FarrowBenchResult> {
    run_farrow_bench_with(params, None).map(|(result, _)| result)
}

/// Same as [`run_farrow_bench`] but reusing a previously designed bank
/// when one is supplied; returns the bank actually used so callers can
/// cache it.
pub fn run_farrow_bench_with(
    params: &FarrowBenchParams,
    cached_bank: Option<crate::resampler::FarrowBank>,
) -> Result<(FarrowBenchResult, Option<crate::resampler::FarrowBank>)> {
    let n = params.data_len;
    let n_tilde = params.fft_len;
    if n > n_tilde {
        return Err(Error::Config(format!(
            "data length {n} exceeds transform size {n_tilde}"
        )));
    }
    let cp_len = (n / 8).max(1);
    let bank = match cached_bank {
        Some(bank) => {
            if bank.p != params.p || bank.alpha != params.alpha {
                return Err(Error::Config(format!(
                    "cached bank has p = {}, alpha = {}; parameters ask for p = {}, alpha = {}",
                    bank.p, bank.alpha, params.p, params.alpha
                )));
            }
            Some(bank)
        }
        None if n_tilde > n => {
            let proto = crate::resampler::design_bandlimited_lowpass(
                params.filter_len,
                params.p,
                n as f64 / n_tilde as f64,
                params.stopband_atten_db,
            )?;
            Some(crate::resampler::fit_farrow(&proto, params.alpha)?)
        }
        None => None,
    };
    let direct = unit_grid_configs(n, cp_len, n_tilde, Backend::Direct, None)?;
    let farrow = unit_grid_configs(n, cp_len, n_tilde, Backend::Farrow, bank)?;
    let mut gen = rng::stream(params.seed, 0);
    let block = Constellation::Qpsk.random_block(&mut gen, n);

    let d = strip_data_portion(&tx_chain(&block, &direct)?, cp_len);
    let f = strip_data_portion(&tx_chain(&block, &farrow)?, cp_len);
    let head = n.min(100);
    let rel = |len: usize| {
        rel_energy_db(
            d[..len].iter().zip(&f[..len]).map(|(a, b)| (b - a).norm_sqr()),
            d[..len].iter().map(|v| v.norm_sqr()),
        )
    };
    let result = FarrowBenchResult {
        rel_mse_first100_db: rel(head),
        rel_mse_full_db: rel(n),
        mults_farrow_per_sample: crate::resampler::multiplications_per_sample(
            params.filter_len,
            params.p,
            params.alpha,
            n,
            n_tilde,
        ),
        mults_direct_per_sample: crate::resampler::direct_idft_cost(n),
        direct_head: d[..head].iter().map(|v| v.re).collect(),
        farrow_head: f[..head].iter().map(|v| v.re).collect(),
    };
    let bank_used = farrow.bank;
    Ok((result, bank_used))
}

#[cfg(test)]
mod tests {
    use super::*;

    const US: f64 = 1e-6;
    const NS: f64 = 1e-9;

    #[test]
    fn sweep_reproduces_overhead_arithmetic() {
        // hold T_d at 2 us by choosing T = 2 us + 6 tau per row
        for (tau, expect) in [(200.3 * NS, 0.37535), (12.1 * NS, 0.03503)] {
            let cfg = SweepConfig {
                trials: 2,
                ..SweepConfig::new(vec![tau], 2.0 * US + 6.0 * tau, 640e6, 7)
            };
            let rows = run_single_user_sweep(&cfg).unwrap();
            assert!(
                (rows[0].overhead - expect).abs() < 5e-4,
                "tau {tau}: overhead {}",
                rows[0].overhead
            );
            assert!(rows[0].evm_db <= -100.0, "noiseless EVM {}", rows[0].evm_db);
            assert_eq!(rows[0].ber, 0.0);
        }
    }

    #[test]
    fn sweep_zero_tau_noiseless_is_clean() {
        let cfg = SweepConfig::new(vec![0.0], 20.0 * US, 12.8e6, 3);
        let rows = run_single_user_sweep(&cfg).unwrap();
        assert_eq!(rows[0].overhead, 0.0);
        assert!(rows[0].evm_db <= -100.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = SweepConfig {
            trials: 3,
            snr_db: Some(18.0),
            ..SweepConfig::new(vec![50.0 * NS, 150.0 * NS], 20.0 * US, 25.6e6, 42)
        };
        let a = run_single_user_sweep(&cfg).unwrap();
        let b = run_single_user_sweep(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_rejects_zero_trials() {
        let cfg = SweepConfig {
            trials: 0,
            ..SweepConfig::new(vec![0.0], 20.0 * US, 12.8e6, 1)
        };
        assert!(matches!(
            run_single_user_sweep(&cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn two_user_mismatch_degrades_user2() {
        let sc = TwoUserScenario::default_scenario(11);
        let result = run_two_user(&sc, 2).unwrap();
        assert!(
            result.evm_common_db <= -100.0,
            "common-CP control EVM {}",
            result.evm_common_db
        );
        assert!(
            result.evm_mismatched_db >= result.evm_common_db + 30.0,
            "mismatched {} vs common {}",
            result.evm_mismatched_db,
            result.evm_common_db
        );
    }

    #[test]
    fn two_user_equal_cps_are_clean() {
        let mut sc = TwoUserScenario::default_scenario(5);
        sc.cp_user1 = sc.cp_user2;
        // keep user 1's channel within the (now equal) CP
        sc.channel_user1 = sc.channel_user2.clone();
        let result = run_two_user(&sc, 1).unwrap();
        assert!(result.evm_mismatched_db <= -100.0);
        assert!(result.evm_common_db <= -100.0);
    }

    #[test]
    fn silent_user1_leaves_user2_unaffected() {
        let mut sc = TwoUserScenario::default_scenario(9);
        sc.user1_active = false;
        let a = run_two_user(&sc, 1).unwrap();
        sc.cp_user1 = 1.25 * US;
        let b = run_two_user(&sc, 1).unwrap();
        assert!(a.evm_mismatched_db <= -100.0);
        assert!((a.evm_mismatched_db - b.evm_mismatched_db).abs() < 1e-9);
    }

    #[test]
    fn interference_grows_with_mismatch() {
        // 5-point mismatch ladder, fixed seed: user-2 error energy must not
        // decrease as user 1's CP shrinks below the common value. The ladder
        // stays in the regime where the ISI mechanism dominates; at extreme
        // mismatch the interferer's band also drifts away in frequency and
        // the leakage geometry fluctuates.
        let base = TwoUserScenario::default_scenario(17);
        let ladder_us = [5.0, 3.75, 3.125, 2.5, 1.25];
        let mut last = f64::NEG_INFINITY;
        for (i, cp1_us) in ladder_us.iter().enumerate() {
            let mut sc = base.clone();
            sc.cp_user1 = cp1_us * US;
            let result = run_two_user(&sc, 1).unwrap();
            assert!(
                result.evm_mismatched_db >= last - 1e-9,
                "rung {i}: EVM {} after {}",
                result.evm_mismatched_db,
                last
            );
            last = result.evm_mismatched_db;
        }
    }

    #[test]
    fn clock_equivalence_within_1e9() {
        let rows = run_clock_equivalence(3, 6, 1024).unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!(
                row.max_rel_err <= 1e-9,
                "N={} N_tilde={}: {:e}",
                row.data_len,
                row.fft_len,
                row.max_rel_err
            );
        }
    }

    #[test]
    fn farrow_bench_default_parameters() {
        let result = run_farrow_bench(&FarrowBenchParams::default()).unwrap();
        assert!(
            result.rel_mse_first100_db <= -40.0,
            "first-100 MSE {}",
            result.rel_mse_first100_db
        );
        assert!((result.mults_farrow_per_sample - 139.30).abs() <= 0.01);
        assert_eq!(result.mults_direct_per_sample, 1543);
        assert_eq!(result.direct_head.len(), 100);
    }

    #[test]
    fn farrow_bench_unity_ratio_is_pure_fft() {
        let params = FarrowBenchParams {
            data_len: 2048,
            ..FarrowBenchParams::default()
        };
        let result = run_farrow_bench(&params).unwrap();
        assert!(
            result.rel_mse_full_db <= -120.0,
            "unity-ratio MSE {}",
            result.rel_mse_full_db
        );
    }

    #[test]
    fn two_user_determinism_and_validation() {
        let sc = TwoUserScenario::default_scenario(23);
        let a = run_two_user(&sc, 2).unwrap();
        let b = run_two_user(&sc, 2).unwrap();
        assert_eq!(a, b);

        let mut overlap = TwoUserScenario::default_scenario(23);
        overlap.map_offset_user2 = overlap.map_offset_user1;
        assert!(matches!(
            run_two_user(&overlap, 1),
            Err(Error::OverlappingSubcarriers { .. })
        ));

        assert!(run_two_user(&sc, 0).is_err());
    }
}
