//! `adcp` — command-line front end for the adaptive-CP link simulator.
//!
//! Every command writes a CSV (header row names the units) plus a
//! `.config.txt` sidecar recording the fully resolved configuration, both
//! under `--out-dir` (or `$ADCP_OUT_DIR`, or the working directory). Reruns
//! with the same configuration and seed produce byte-identical files.
//!
//! Exit codes: 0 success, 1 internal error (I/O), 2 invalid configuration.

mod units;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use adaptive_cp::channel::{preset_profile, ChannelProfile};
use adaptive_cp::numerology::{
    enumerate_fixed_grid_cp, plan_from_clock_rates, plan_from_delay_spread, NumerologyPlan,
};
use adaptive_cp::resampler::{complexity_report, FarrowBank};
use adaptive_cp::scenario::{
    run_clock_equivalence, run_farrow_bench_with, run_single_user_sweep, run_two_user,
    run_two_user_trial, FarrowBenchParams, SweepConfig, TwoUserScenario,
};
use adaptive_cp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "adcp",
    version,
    about = "Link-level simulator for DFT-s-OFDM/OFDM with delay-spread-adaptive cyclic prefix"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for CSV and sidecar files [env: ADCP_OUT_DIR, default: .]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output file stem (defaults to the command name)
    #[arg(short, long, global = true)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a symbol plan from a delay spread, the fixed grid, or a clock set
    Plan(PlanArgs),
    /// Enumerate CP durations reachable on a fixed data-portion grid
    LteGrid(LteGridArgs),
    /// Sweep the adaptive-CP link over RMS delay spreads
    Sweep(SweepArgs),
    /// Compare the Farrow transmit path against the direct IDFT
    FarrowBench(FarrowBenchArgs),
    /// Check the zero-pad + changed-clock waveform equivalence over random sizes
    Theorem1(Theorem1Args),
    /// Two-user CP-mismatch interference experiment
    Multiuser(MultiuserArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Overall symbol time, e.g. 80us
    #[arg(long = "T", value_parser = units::duration)]
    symbol_time: Option<f64>,
    /// Bandwidth, e.g. 32MHz
    #[arg(long = "B", value_parser = units::frequency)]
    bandwidth: Option<f64>,
    /// RMS delay spread, e.g. 2.6667us
    #[arg(long, value_parser = units::duration)]
    tau: Option<f64>,
    /// CP design margin (CP = mult * tau)
    #[arg(long, default_value_t = 6.0)]
    mult: f64,
    /// QAM block length M
    #[arg(long = "M", default_value_t = 1)]
    block_len: usize,
    /// Enumerate fixed-grid CP solutions instead (with --subframe and --Td)
    #[arg(long)]
    lte_grid: bool,
    /// Subframe duration for --lte-grid, e.g. 500us
    #[arg(long, value_parser = units::duration)]
    subframe: Option<f64>,
    /// Fixed data-portion duration for --lte-grid, e.g. 66.7us
    #[arg(long = "Td", value_parser = units::duration)]
    data_duration: Option<f64>,
    /// Plan backwards from a file of available clock periods (one per line)
    #[arg(long)]
    clocks: Option<PathBuf>,
    /// Base sample period for --clocks, e.g. 31.25ns
    #[arg(long = "Ts", value_parser = units::duration)]
    sample_period: Option<f64>,
    /// Transform size for --clocks (power of two)
    #[arg(long = "Ntilde")]
    fft_len: Option<usize>,
}

#[derive(Args)]
struct LteGridArgs {
    /// Subframe duration, e.g. 500us
    #[arg(long, value_parser = units::duration)]
    subframe: f64,
    /// Fixed data-portion duration, e.g. 66.7us
    #[arg(long = "Td", value_parser = units::duration)]
    data_duration: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated RMS delay spreads, e.g. 12.1ns,200.3ns
    #[arg(long, value_delimiter = ',', value_parser = units::duration, required = true)]
    taus: Vec<f64>,
    #[arg(long = "T", value_parser = units::duration)]
    symbol_time: f64,
    #[arg(long = "B", value_parser = units::frequency)]
    bandwidth: f64,
    #[arg(long, default_value_t = 6.0)]
    mult: f64,
    /// Per-sample SNR in dB (omit for noiseless)
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// QAM block length as a fraction of N
    #[arg(long, default_value_t = 0.75)]
    block_fraction: f64,
}

#[derive(Args)]
struct FarrowBenchArgs {
    #[arg(long = "N", default_value_t = 1543)]
    data_len: usize,
    #[arg(long = "Ntilde", default_value_t = 2048)]
    fft_len: usize,
    /// Prototype filter length
    #[arg(long = "L", default_value_t = 231)]
    filter_len: usize,
    /// Polyphase arm count
    #[arg(long, default_value_t = 9)]
    p: usize,
    /// Polynomial order per tap row
    #[arg(long, default_value_t = 4)]
    alpha: usize,
    /// Prototype stopband attenuation in dB
    #[arg(long, default_value_t = 80.0)]
    atten: f64,
    #[arg(long)]
    seed: u64,
    /// Write the designed bank to this file
    #[arg(long)]
    bank_out: Option<PathBuf>,
    /// Reuse a bank from this file instead of designing one
    #[arg(long)]
    bank_in: Option<PathBuf>,
}

#[derive(Args)]
struct Theorem1Args {
    /// Number of random (N, Ntilde) pairs
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    /// Largest transform size (power of two)
    #[arg(long, default_value_t = 4096)]
    max_size: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct MultiuserArgs {
    /// Scenario file (TOML); omitted fields fall back to the default scenario
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    trials: usize,
    #[arg(long)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

struct Output {
    dir: PathBuf,
    stem: String,
}

impl Output {
    fn new(cli_dir: &Option<PathBuf>, stem_override: &Option<String>, default_stem: &str) -> Self {
        let dir = cli_dir
            .clone()
            .or_else(|| std::env::var_os("ADCP_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        Self {
            dir,
            stem: stem_override.clone().unwrap_or_else(|| default_stem.to_string()),
        }
    }

    fn write_csv(&self, suffix: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(format!("{}{suffix}.csv", self.stem));
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn write_sidecar(&self, lines: &[(&str, String)]) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(format!("{}.config.txt", self.stem));
        let mut text = String::new();
        for (key, value) in lines {
            writeln!(text, "{key} = {value}").expect("string write");
        }
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Plan(args) => cmd_plan(&cli, args),
        Command::LteGrid(args) => cmd_lte_grid(&cli, args.subframe, args.data_duration),
        Command::Sweep(args) => cmd_sweep(&cli, args),
        Command::FarrowBench(args) => cmd_farrow_bench(&cli, args),
        Command::Theorem1(args) => cmd_theorem1(&cli, args),
        Command::Multiuser(args) => cmd_multiuser(&cli, args),
    }
}

const PLAN_HEADER: &str = "T_seconds,T_c_seconds,T_d_seconds,T_s_seconds,N,M,K,delta_f_hz,B_hz";

fn plan_row(plan: &NumerologyPlan) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        plan.symbol_time,
        plan.cp_duration,
        plan.data_duration,
        plan.sample_period,
        plan.data_len,
        plan.block_len,
        plan.cp_len,
        plan.subcarrier_spacing,
        plan.bandwidth
    )
}

fn require<T: Copy>(value: Option<T>, flag: &str, context: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("{flag} is required {context}")))
}

fn cmd_plan(cli: &Cli, args: &PlanArgs) -> Result<()> {
    if args.lte_grid {
        let subframe = require(args.subframe, "--subframe", "with --lte-grid")?;
        let td = require(args.data_duration, "--Td", "with --lte-grid")?;
        return cmd_lte_grid(cli, subframe, td);
    }
    let out = Output::new(&cli.out_dir, &cli.output, "plan");
    if let Some(clock_file) = &args.clocks {
        let symbol_time = require(args.symbol_time, "--T", "with --clocks")?;
        let sample_period = require(args.sample_period, "--Ts", "with --clocks")?;
        let fft_len = require(args.fft_len, "--Ntilde", "with --clocks")?;
        let tau = require(args.tau, "--tau", "with --clocks")?;
        let clocks: Vec<f64> = fs::read_to_string(clock_file)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| units::duration(l).map_err(Error::Parse))
            .collect::<Result<_>>()?;
        let plan =
            plan_from_clock_rates(symbol_time, sample_period, fft_len, &clocks, tau, args.mult)?;
        let header = format!(
            "{PLAN_HEADER},N_tilde,Ts_tilde_seconds,Fs_tilde_hz,K_tilde,B_tilde_hz,symbol_time_residual_seconds"
        );
        let row = format!(
            "{},{},{},{},{},{},{}",
            plan_row(&plan.base),
            plan.fft_len,
            plan.clock_period,
            plan.clock_rate,
            plan.cp_len,
            plan.bandwidth,
            plan.symbol_time_residual
        );
        let csv = out.write_csv("", &format!("{header}\n{row}\n"))?;
        out.write_sidecar(&[
            ("command", "plan --clocks".into()),
            ("T", symbol_time.to_string()),
            ("Ts", sample_period.to_string()),
            ("Ntilde", fft_len.to_string()),
            ("tau", tau.to_string()),
            ("mult", args.mult.to_string()),
            ("clock_periods", format!("{clocks:?}")),
        ])?;
        print!("{}", plan.to_kv());
        println!("wrote {}", csv.display());
        return Ok(());
    }
    let symbol_time = require(args.symbol_time, "--T", "for delay-spread planning")?;
    let bandwidth = require(args.bandwidth, "--B", "for delay-spread planning")?;
    let tau = require(args.tau, "--tau", "for delay-spread planning")?;
    let plan = plan_from_delay_spread(symbol_time, bandwidth, tau, args.mult, args.block_len)?;
    let csv = out.write_csv("", &format!("{PLAN_HEADER}\n{}\n", plan_row(&plan)))?;
    out.write_sidecar(&[
        ("command", "plan".into()),
        ("T", symbol_time.to_string()),
        ("B", bandwidth.to_string()),
        ("tau", tau.to_string()),
        ("mult", args.mult.to_string()),
        ("M", args.block_len.to_string()),
    ])?;
    print!("{}", plan.to_kv());
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_lte_grid(cli: &Cli, subframe: f64, data_duration: f64) -> Result<()> {
    if data_duration.is_nan() || data_duration <= 0.0 || subframe < data_duration {
        return Err(Error::Config(
            "need subframe >= Td > 0 for the fixed grid".into(),
        ));
    }
    let out = Output::new(&cli.out_dir, &cli.output, "lte-grid");
    let rows = enumerate_fixed_grid_cp(subframe, data_duration);
    let mut csv = String::from("n,T_c_seconds,overhead_ratio\n");
    for row in &rows {
        writeln!(
            csv,
            "{},{},{}",
            row.symbols_per_subframe, row.cp_duration, row.overhead
        )
        .expect("string write");
    }
    let path = out.write_csv("", &csv)?;
    out.write_sidecar(&[
        ("command", "lte-grid".into()),
        ("subframe", subframe.to_string()),
        ("Td", data_duration.to_string()),
    ])?;
    for row in rows.iter().take(4) {
        println!(
            "n = {:3}  T_c = {:.6e} s  overhead = {:.4}",
            row.symbols_per_subframe, row.cp_duration, row.overhead
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let out = Output::new(&cli.out_dir, &cli.output, "sweep");
    let cfg = SweepConfig {
        taus: args.taus.clone(),
        symbol_time: args.symbol_time,
        bandwidth: args.bandwidth,
        cp_multiple: args.mult,
        snr_db: args.snr,
        trials: args.trials,
        seed: args.seed,
        block_fraction: args.block_fraction,
    };
    let rows = run_single_user_sweep(&cfg)?;
    let mut csv = String::from("tau_seconds,T_c_seconds,overhead_ratio,evm_db,ber\n");
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.tau, row.cp_duration, row.overhead, row.evm_db, row.ber
        )
        .expect("string write");
    }
    let path = out.write_csv("", &csv)?;
    out.write_sidecar(&[
        ("command", "sweep".into()),
        ("taus", format!("{:?}", args.taus)),
        ("T", args.symbol_time.to_string()),
        ("B", args.bandwidth.to_string()),
        ("mult", args.mult.to_string()),
        ("snr_db", format!("{:?}", args.snr)),
        ("trials", args.trials.to_string()),
        ("seed", args.seed.to_string()),
        ("block_fraction", args.block_fraction.to_string()),
    ])?;
    for row in &rows {
        println!(
            "tau = {:.4e} s  T_c = {:.4e} s  overhead = {:.4}  EVM = {:8.2} dB  BER = {:.3e}",
            row.tau, row.cp_duration, row.overhead, row.evm_db, row.ber
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_farrow_bench(cli: &Cli, args: &FarrowBenchArgs) -> Result<()> {
    let out = Output::new(&cli.out_dir, &cli.output, "farrow-bench");
    let params = FarrowBenchParams {
        data_len: args.data_len,
        fft_len: args.fft_len,
        filter_len: args.filter_len,
        p: args.p,
        alpha: args.alpha,
        stopband_atten_db: args.atten,
        seed: args.seed,
    };
    let cached = match &args.bank_in {
        Some(path) => Some(FarrowBank::from_text(&fs::read_to_string(path)?)?),
        None => None,
    };
    let (result, bank) = run_farrow_bench_with(&params, cached)?;
    if let (Some(path), Some(bank)) = (&args.bank_out, &bank) {
        fs::write(path, bank.to_text())?;
    }
    let summary = format!(
        "rel_mse_first100_db,rel_mse_full_db,mults_farrow_per_sample,mults_direct_per_sample\n{},{},{},{}\n",
        result.rel_mse_first100_db,
        result.rel_mse_full_db,
        result.mults_farrow_per_sample,
        result.mults_direct_per_sample
    );
    let summary_path = out.write_csv("", &summary)?;
    let mut samples = String::from("sample_index,re_direct,re_farrow\n");
    for (i, (d, f)) in result.direct_head.iter().zip(&result.farrow_head).enumerate() {
        writeln!(samples, "{i},{d},{f}").expect("string write");
    }
    let samples_path = out.write_csv("-samples", &samples)?;
    out.write_sidecar(&[
        ("command", "farrow-bench".into()),
        ("N", args.data_len.to_string()),
        ("Ntilde", args.fft_len.to_string()),
        ("L", args.filter_len.to_string()),
        ("p", args.p.to_string()),
        ("alpha", args.alpha.to_string()),
        ("atten_db", args.atten.to_string()),
        ("seed", args.seed.to_string()),
    ])?;
    println!(
        "relative MSE vs direct IDFT: {:.2} dB (first 100 samples), {:.2} dB (full block)",
        result.rel_mse_first100_db, result.rel_mse_full_db
    );
    println!(
        "{}",
        complexity_report(args.filter_len, args.p, args.alpha, args.data_len, args.fft_len)
    );
    println!("wrote {} and {}", summary_path.display(), samples_path.display());
    Ok(())
}

fn cmd_theorem1(cli: &Cli, args: &Theorem1Args) -> Result<()> {
    let out = Output::new(&cli.out_dir, &cli.output, "theorem1");
    let rows = run_clock_equivalence(args.seed, args.pairs, args.max_size)?;
    let mut csv = String::from("trial,N,N_tilde,max_rel_err\n");
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            row.trial, row.data_len, row.fft_len, row.max_rel_err
        )
        .expect("string write");
    }
    let path = out.write_csv("", &csv)?;
    out.write_sidecar(&[
        ("command", "theorem1".into()),
        ("pairs", args.pairs.to_string()),
        ("max_size", args.max_size.to_string()),
        ("seed", args.seed.to_string()),
    ])?;
    let worst = rows.iter().map(|r| r.max_rel_err).fold(0.0f64, f64::max);
    println!(
        "max relative error over {} (N, N_tilde) pairs: {worst:.3e}",
        rows.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// TOML scenario file: any omitted field keeps the default-scenario value.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    symbol_time: Option<f64>,
    bandwidth: Option<f64>,
    cp_user1: Option<f64>,
    cp_user2: Option<f64>,
    block_len: Option<usize>,
    map_offset_user1: Option<usize>,
    map_offset_user2: Option<usize>,
    n_symbols: Option<usize>,
    start_offset_samples: Option<usize>,
    snr_db: Option<f64>,
    channel_user1: Option<ChannelSpec>,
    channel_user2: Option<ChannelSpec>,
}

/// Channel reference: a named preset or explicit `(delay_ns, re, im)` taps.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSpec {
    preset: Option<String>,
    taps: Option<Vec<(f64, f64, f64)>>,
}

impl ChannelSpec {
    fn resolve(&self, seed: u64) -> Result<ChannelProfile> {
        match (&self.preset, &self.taps) {
            (Some(name), None) => preset_profile(name)
                .ok_or_else(|| Error::Config(format!("unknown channel preset `{name}`"))),
            (None, Some(taps)) => Ok(ChannelProfile {
                taps: taps.clone(),
                seed,
            }),
            _ => Err(Error::Config(
                "channel spec needs exactly one of `preset` or `taps`".into(),
            )),
        }
    }
}

fn cmd_multiuser(cli: &Cli, args: &MultiuserArgs) -> Result<()> {
    let out = Output::new(&cli.out_dir, &cli.output, "multiuser");
    let mut scenario = TwoUserScenario::default_scenario(args.seed);
    if let Some(path) = &args.config {
        let file: ScenarioFile = toml::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("scenario file: {e}")))?;
        if let Some(v) = file.symbol_time {
            scenario.symbol_time = v;
        }
        if let Some(v) = file.bandwidth {
            scenario.bandwidth = v;
        }
        if let Some(v) = file.cp_user1 {
            scenario.cp_user1 = v;
        }
        if let Some(v) = file.cp_user2 {
            scenario.cp_user2 = v;
        }
        if let Some(v) = file.block_len {
            scenario.block_len = v;
        }
        if let Some(v) = file.map_offset_user1 {
            scenario.map_offset_user1 = v;
        }
        if let Some(v) = file.map_offset_user2 {
            scenario.map_offset_user2 = v;
        }
        if let Some(v) = file.n_symbols {
            scenario.n_symbols = v;
        }
        if let Some(v) = file.start_offset_samples {
            scenario.start_offset_samples = v;
        }
        if file.snr_db.is_some() {
            scenario.snr_db = file.snr_db;
        }
        if let Some(spec) = &file.channel_user1 {
            scenario.channel_user1 = spec.resolve(args.seed)?;
        }
        if let Some(spec) = &file.channel_user2 {
            scenario.channel_user2 = spec.resolve(args.seed)?;
        }
    }
    let mut csv = String::from("trial,evm_user2_mismatched_db,evm_user2_common_db\n");
    for trial in 0..args.trials.max(1) {
        let row = run_two_user_trial(&scenario, trial)?;
        writeln!(csv, "{trial},{},{}", row.evm_mismatched_db, row.evm_common_db)
            .expect("string write");
    }
    let aggregate = run_two_user(&scenario, args.trials)?;
    writeln!(
        csv,
        "all,{},{}",
        aggregate.evm_mismatched_db, aggregate.evm_common_db
    )
    .expect("string write");
    let path = out.write_csv("", &csv)?;
    out.write_sidecar(&[
        ("command", "multiuser".into()),
        ("T", scenario.symbol_time.to_string()),
        ("B", scenario.bandwidth.to_string()),
        ("cp_user1", scenario.cp_user1.to_string()),
        ("cp_user2", scenario.cp_user2.to_string()),
        ("block_len", scenario.block_len.to_string()),
        ("map_offset_user1", scenario.map_offset_user1.to_string()),
        ("map_offset_user2", scenario.map_offset_user2.to_string()),
        ("n_symbols", scenario.n_symbols.to_string()),
        ("start_offset_samples", scenario.start_offset_samples.to_string()),
        ("snr_db", format!("{:?}", scenario.snr_db)),
        ("trials", args.trials.to_string()),
        ("seed", args.seed.to_string()),
    ])?;
    println!(
        "user-2 EVM: {:.2} dB mismatched vs {:.2} dB common CP (margin {:.2} dB)",
        aggregate.evm_mismatched_db,
        aggregate.evm_common_db,
        aggregate.evm_mismatched_db - aggregate.evm_common_db
    );
    println!("wrote {}", path.display());
    Ok(())
}
