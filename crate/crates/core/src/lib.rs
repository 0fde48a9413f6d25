//! Baseband link-level simulation of DFT-s-OFDM and OFDM with a cyclic
//! prefix that adapts to the channel's delay spread while the overall
//! symbol time stays constant.
//!
//! The crate covers the whole chain:
//!
//! * [`numerology`] — symbol-timing arithmetic: CP adaptation, fixed-grid
//!   enumeration, overhead accounting, clock-rate-driven planning, and
//!   multiuser common-CP scheduling.
//! * [`dsp`] — reference transforms (direct DFT/IDFT of any size, radix-2
//!   FFT), circular convolution, spectrum zero-padding, half-band phase
//!   shifts, and an ideal bandlimited resampling oracle.
//! * [`channel`] — tapped-delay-line multipath with seeded AWGN and RMS
//!   delay-spread statistics.
//! * [`resampler`] — Kaiser prototype design, polyphase and Farrow
//!   fractional resampling with an exact rational phase accumulator, and
//!   the multiplication-count cost model.
//! * [`transceiver`] — TX/RX chains with three transmit backends (direct
//!   IDFT, zero-pad + clock change, zero-pad + Farrow), genie-aided
//!   one-tap equalization, and link metrics.
//! * [`scenario`] — reproducible experiments: adaptive-CP sweeps and the
//!   two-user CP-mismatch interference study.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod numerology;
pub mod resampler;
pub mod rng;
pub mod scenario;
pub mod testutil;
pub mod transceiver;

pub use error::{Error, Result};

pub use channel::{apply_channel, cir_as_signal, rms_delay_spread, ChannelModel, ChannelProfile};
pub use dsp::{ComplexSignal, SpectrumVector};
pub use numerology::{ClockedPlan, NumerologyPlan, UserDelayProfile};
pub use resampler::{FarrowBank, PrototypeFilter, RationalRatio};
pub use transceiver::{
    measure, rx_chain, tx_chain, Backend, Constellation, Equalizer, LinkMetrics, SubcarrierMap,
    TxConfig, Waveform,
};
