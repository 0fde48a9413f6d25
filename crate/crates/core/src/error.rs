//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("CP exceeds symbol time: cp_multiple*tau = {required:.6e} s >= T = {symbol_time:.6e} s")]
    CpExceedsSymbol { required: f64, symbol_time: f64 },

    #[error("QAM block too large: M = {block_len} > N = {data_len}")]
    BlockTooLarge { block_len: usize, data_len: usize },

    #[error("no feasible clock: every candidate yields T_c < {required:.6e} s or non-integral N")]
    NoFeasibleClock { required: f64 },

    #[error("empty user group")]
    EmptyGroup,

    #[error("user {user_id} requires CP {required:.6e} s beyond last bin edge {last_edge:.6e} s")]
    CpOutOfRange {
        user_id: String,
        required: f64,
        last_edge: f64,
    },

    #[error("length {len} is not a power of two")]
    NonPowerOfTwoLength { len: usize },

    #[error("convolution kernel longer than signal: {kernel_len} > {signal_len}")]
    KernelLongerThanSignal {
        kernel_len: usize,
        signal_len: usize,
    },

    #[error("cannot shrink spectrum from {len} to {target} bins")]
    ShrinkSpectrum { len: usize, target: usize },

    #[error("aliasing: input occupies {occupied} bins but output has only {out_len}")]
    Alias { occupied: usize, out_len: usize },

    #[error("power delay profile has zero total power")]
    ZeroPower,

    #[error("CIR length {len} too short for tap delay {max_delay}")]
    LengthTooShort { len: usize, max_delay: usize },

    #[error("filter spec infeasible: length {len} < {min_len} required for {atten_db} dB")]
    InfeasibleFilterSpec {
        len: usize,
        min_len: usize,
        atten_db: f64,
    },

    #[error("rank-deficient fit: {nodes} nodes cannot determine an order-{order} polynomial")]
    RankDeficientFit { nodes: usize, order: usize },

    #[error("prototype mismatch: {reason}")]
    PrototypeMismatch { reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("channel frequency response below 1e-12 on occupied bin {bin}")]
    ZeroChannelBin { bin: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("subcarrier maps overlap at bin {bin}")]
    OverlappingSubcarriers { bin: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
