//! Cross-module chain invariants: every transmit backend must survive a
//! multipath channel that fits its CP, on both waveforms and both map
//! modes, and the receiver must undo exactly what the transmitter did.

use num_complex::Complex64;

use adaptive_cp::channel::{apply_channel, cir_as_signal, ChannelProfile};
use adaptive_cp::numerology::{plan_from_clock_rates, plan_from_cp_duration};
use adaptive_cp::resampler;
use adaptive_cp::scenario::random_profile_spanning;
use adaptive_cp::transceiver::{
    measure, rx_chain, tx_chain, Backend, Constellation, Equalizer, SubcarrierMap, TxConfig,
    Waveform,
};
use adaptive_cp::{rng, ComplexSignal};

const US: f64 = 1e-6;

struct Grid {
    symbol_time: f64,
    bandwidth: f64,
    cp: f64,
    fft_len: usize,
    block_len: usize,
}

/// N = 1536, N_tilde = 2048 with a 4 us CP.
fn big_grid() -> Grid {
    Grid {
        symbol_time: 34.0 * US,
        bandwidth: 51.2e6,
        cp: 4.0 * US,
        fft_len: 2048,
        block_len: 1152,
    }
}

fn build_config(
    grid: &Grid,
    waveform: Waveform,
    backend: Backend,
    distributed: bool,
) -> TxConfig {
    let m = match waveform {
        Waveform::Ofdm => ((grid.symbol_time - grid.cp) * grid.bandwidth).round() as usize,
        Waveform::DftsOfdm => grid.block_len,
    };
    let plan = plan_from_cp_duration(grid.symbol_time, grid.bandwidth, grid.cp, m).unwrap();
    let n = plan.data_len;
    let clock = plan.data_duration / grid.fft_len as f64;
    let clocked = plan_from_clock_rates(
        grid.symbol_time,
        plan.sample_period,
        grid.fft_len,
        &[clock],
        0.0,
        6.0,
    )
    .unwrap();
    let map = if distributed && m < n {
        let stride = n / m;
        SubcarrierMap::distributed(n, m, 0, stride).unwrap()
    } else {
        SubcarrierMap::localized(n, m, 0).unwrap()
    };
    let bank = if grid.fft_len > n {
        let proto = resampler::design_bandlimited_lowpass(
            441,
            9,
            n as f64 / grid.fft_len as f64,
            120.0,
        )
        .unwrap();
        Some(resampler::fit_farrow(&proto, 8).unwrap())
    } else {
        None
    };
    TxConfig {
        waveform,
        backend,
        map,
        plan,
        clocked: Some(clocked),
        bank,
        constellation: Constellation::Qpsk,
        equalizer: Equalizer::ZeroForcing,
    }
}

fn loopback_evm(cfg: &TxConfig, profile: &ChannelProfile, seed: u64) -> f64 {
    let mut gen = rng::stream(seed, 0);
    let block = cfg.constellation.random_block(&mut gen, cfg.plan.block_len);
    let symbol = tx_chain(&block, cfg).unwrap();
    let ch = profile.quantize(symbol.sample_period).unwrap();
    let received = apply_channel(&symbol, &ch, None, 0);
    let h = cir_as_signal(&ch, ch.cir_len(), symbol.sample_period).unwrap();
    let (recovered, _) = rx_chain(&received, cfg, &h).unwrap();
    measure(&block, &recovered, None, cfg.constellation)
        .unwrap()
        .evm_db
}

#[test]
fn multipath_loopback_every_backend_and_map() {
    let grid = big_grid();
    let profile = random_profile_spanning(grid.cp * 0.9, 6, 404, 0);
    for waveform in [Waveform::DftsOfdm, Waveform::Ofdm] {
        for backend in [Backend::Direct, Backend::ClockChange, Backend::Farrow] {
            for distributed in [false, true] {
                let cfg = build_config(&grid, waveform, backend, distributed);
                let evm = loopback_evm(&cfg, &profile, 7);
                assert!(
                    evm <= -100.0,
                    "{waveform:?}/{backend:?} distributed={distributed}: EVM {evm}"
                );
            }
        }
    }
}

#[test]
fn qam16_multipath_loopback() {
    let grid = big_grid();
    let mut cfg = build_config(&grid, Waveform::DftsOfdm, Backend::Direct, false);
    cfg.constellation = Constellation::Qam16;
    let profile = random_profile_spanning(grid.cp * 0.9, 4, 405, 1);
    let evm = loopback_evm(&cfg, &profile, 8);
    assert!(evm <= -100.0, "16-QAM EVM {evm}");
}

#[test]
fn noisy_loopback_recovers_bits_at_high_snr() {
    let grid = big_grid();
    let cfg = build_config(&grid, Waveform::DftsOfdm, Backend::Direct, false);
    let profile = random_profile_spanning(grid.cp * 0.9, 4, 406, 2);
    let mut gen = rng::stream(9, 0);
    let block = cfg.constellation.random_block(&mut gen, cfg.plan.block_len);
    let symbol = tx_chain(&block, &cfg).unwrap();
    let ch = profile.quantize(symbol.sample_period).unwrap();
    let received = apply_channel(&symbol, &ch, Some(30.0), 5);
    let h = cir_as_signal(&ch, ch.cir_len(), symbol.sample_period).unwrap();
    let (recovered, _) = rx_chain(&received, &cfg, &h).unwrap();
    let metrics = measure(&block, &recovered, None, cfg.constellation).unwrap();
    assert_eq!(metrics.ber, 0.0, "EVM was {}", metrics.evm_db);
    assert!(metrics.evm_db < -15.0);
}

#[test]
fn direct_and_clock_change_describe_the_same_waveform_1536_2048() {
    // N = 1536, N_tilde = 2048: re-gridding the changed-clock data portion
    // onto the N grid must reproduce the direct IDFT output
    let grid = big_grid();
    let direct = build_config(&grid, Waveform::DftsOfdm, Backend::Direct, false);
    let clocked = build_config(&grid, Waveform::DftsOfdm, Backend::ClockChange, false);
    assert_eq!(direct.plan.data_len, 1536);
    let mut gen = rng::stream(12, 0);
    let block = direct.constellation.random_block(&mut gen, direct.plan.block_len);

    let d_sym = tx_chain(&block, &direct).unwrap();
    let d = &d_sym.samples[direct.plan.cp_len..];
    let c_sym = tx_chain(&block, &clocked).unwrap();
    let clocked_plan = clocked.clocked.as_ref().unwrap();
    let dt = &c_sym.samples[clocked_plan.cp_len..];
    let regridded = adaptive_cp::dsp::ideal_resample(dt, 1536).unwrap();
    let err = adaptive_cp::testutil::max_rel_err(&regridded, d);
    assert!(err <= 1e-9, "max relative error {err:e}");
}

#[test]
fn clock_change_signal_carries_changed_rate() {
    let grid = big_grid();
    let cfg = build_config(&grid, Waveform::DftsOfdm, Backend::ClockChange, false);
    let clocked = cfg.clocked.clone().unwrap();
    let mut gen = rng::stream(10, 0);
    let block = cfg.constellation.random_block(&mut gen, cfg.plan.block_len);
    let symbol = tx_chain(&block, &cfg).unwrap();
    assert_eq!(symbol.len(), clocked.fft_len + clocked.cp_len);
    assert!((symbol.sample_period - clocked.clock_period).abs() < 1e-18);
    // emitted duration still matches the symbol time to within one sample
    assert!((symbol.duration() - grid.symbol_time).abs() < symbol.sample_period);
}

#[test]
fn signal_file_formats_roundtrip_through_disk() {
    let mut gen = rng::stream(11, 0);
    let samples: Vec<Complex64> = (0..257).map(|_| rng::complex_gaussian(&mut gen, 1.0)).collect();
    let signal = ComplexSignal::new(samples, 31.25e-9).unwrap();

    let dir = std::env::temp_dir().join("adaptive_cp_sig_io");
    std::fs::create_dir_all(&dir).unwrap();
    let bin_path = dir.join("sig.bin");
    let mut file = std::fs::File::create(&bin_path).unwrap();
    signal.write_bin(&mut file).unwrap();
    drop(file);
    let back = ComplexSignal::read_bin(std::fs::File::open(&bin_path).unwrap()).unwrap();
    assert_eq!(back, signal);

    let mut csv = Vec::new();
    signal.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("index,re,im\n"));
    assert_eq!(text.lines().count(), 258);
}
