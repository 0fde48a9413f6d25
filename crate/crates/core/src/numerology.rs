//! Symbol-timing arithmetic for delay-spread-adaptive cyclic prefixes.
//!
//! The central constraint: the overall symbol time `T = T_c + T_d` and the
//! DAC bandwidth `B = 1/T_s` stay constant while the CP duration `T_c`
//! adapts to the measured delay spread. The data portion then carries
//! `N = T_d / T_s` samples at subcarrier spacing `delta_f = 1/T_d`.
//!
//! Durations are seconds, frequencies hertz, counts plain integers. Sample
//! counts are integral, so `T_c` is snapped to the sample grid
//! (`T_d = N * T_s` with `N` rounded) and the CP sample count takes the
//! ceiling; the sub-sample residual is reported, never silently dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default CP design margin: six times the RMS delay spread covers 99.7%
/// of Gaussian-distributed delay lines.
pub const DEFAULT_CP_MULTIPLE: f64 = 6.0;

/// Complete timing description of one symbol configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumerologyPlan {
    /// Overall symbol time T in seconds.
    pub symbol_time: f64,
    /// CP duration T_c in seconds.
    pub cp_duration: f64,
    /// Data-portion duration T_d in seconds.
    pub data_duration: f64,
    /// DAC/ADC sample period T_s in seconds.
    pub sample_period: f64,
    /// Data-portion length N in samples.
    pub data_len: usize,
    /// QAM block length M (M <= N).
    pub block_len: usize,
    /// CP length K in samples.
    pub cp_len: usize,
    /// Subcarrier spacing delta_f in hertz.
    pub subcarrier_spacing: f64,
    /// Bandwidth B in hertz.
    pub bandwidth: f64,
}

/// Power-of-two realization of a plan: the transform runs at size `N_tilde`
/// and the converter clock changes to `Ts_tilde` so the emitted waveform is
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockedPlan {
    pub base: NumerologyPlan,
    /// Transform size N_tilde (power of two, >= N).
    pub fft_len: usize,
    /// Changed clock period Ts_tilde in seconds.
    pub clock_period: f64,
    /// Changed clock rate Fs_tilde in hertz.
    pub clock_rate: f64,
    /// CP length K_tilde in samples at the changed clock.
    pub cp_len: usize,
    /// Occupied bandwidth B_tilde in hertz.
    pub bandwidth: f64,
    /// Achieved minus target symbol time, `(N_tilde + K_tilde) * Ts_tilde - T`.
    pub symbol_time_residual: f64,
}

/// Per-user delay-spread profile used for multiuser CP scheduling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDelayProfile {
    pub user_id: String,
    /// RMS delay spread in seconds.
    pub tau: f64,
    /// CP design margin factor.
    pub cp_multiple: f64,
}

impl UserDelayProfile {
    pub fn new(user_id: impl Into<String>, tau: f64) -> Self {
        Self {
            user_id: user_id.into(),
            tau,
            cp_multiple: DEFAULT_CP_MULTIPLE,
        }
    }

    pub fn with_multiple(mut self, cp_multiple: f64) -> Self {
        self.cp_multiple = cp_multiple;
        self
    }

    /// CP duration this user needs: `cp_multiple * tau`.
    pub fn required_cp(&self) -> f64 {
        self.cp_multiple * self.tau
    }
}

/// One row of the fixed-grid enumeration: `n` symbols fill the subframe.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGridEntry {
    pub symbols_per_subframe: u64,
    pub cp_duration: f64,
    pub overhead: f64,
}

/// Users sharing one CP duration.
#[derive(Debug, Clone, PartialEq)]
pub struct CpGroup {
    pub cp_duration: f64,
    pub user_ids: Vec<String>,
}

/// Ceiling with a relative tolerance so values a rounding error below an
/// integer do not get bumped a full sample up.
fn ceil_tol(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// Build a plan directly from a requested CP duration.
///
/// `N` is rounded to the sample grid and `T_c` snapped to `T - N * T_s`, so
/// the stored fields satisfy `B = N * delta_f = 1/T_s` exactly.
pub fn plan_from_cp_duration(
    symbol_time: f64,
    bandwidth: f64,
    cp_duration: f64,
    block_len: usize,
) -> Result<NumerologyPlan> {
    if !(symbol_time.is_finite() && symbol_time > 0.0 && bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Config(format!(
            "symbol time and bandwidth must be positive (T={symbol_time}, B={bandwidth})"
        )));
    }
    if cp_duration >= symbol_time {
        return Err(Error::CpExceedsSymbol {
            required: cp_duration,
            symbol_time,
        });
    }
    if cp_duration < 0.0 {
        return Err(Error::Config(format!(
            "CP duration must be non-negative, got {cp_duration}"
        )));
    }
    let sample_period = 1.0 / bandwidth;
    let data_samples = (symbol_time - cp_duration) / sample_period;
    // snap N to the grid but never let T_c go negative
    let max_n = (symbol_time / sample_period + 1e-9).floor();
    let n = data_samples.round().min(max_n);
    if n < 1.0 {
        return Err(Error::Config(
            "data portion shorter than one sample".into(),
        ));
    }
    let data_len = n as usize;
    let data_duration = n * sample_period;
    let cp_snapped = (symbol_time - data_duration).max(0.0);
    let cp_len = ceil_tol(cp_snapped / sample_period) as usize;
    if block_len < 1 {
        return Err(Error::Config("block length M must be >= 1".into()));
    }
    if block_len > data_len {
        return Err(Error::BlockTooLarge {
            block_len,
            data_len,
        });
    }
    Ok(NumerologyPlan {
        symbol_time,
        cp_duration: cp_snapped,
        data_duration,
        sample_period,
        data_len,
        block_len,
        cp_len,
        subcarrier_spacing: 1.0 / data_duration,
        bandwidth,
    })
}

/// Adapt the CP duration to a measured RMS delay spread: `T_c` is set to
/// `cp_multiple * tau` under constant symbol time `T` and bandwidth `B`.
pub fn plan_from_delay_spread(
    symbol_time: f64,
    bandwidth: f64,
    tau: f64,
    cp_multiple: f64,
    block_len: usize,
) -> Result<NumerologyPlan> {
    if tau < 0.0 || cp_multiple.is_nan() || cp_multiple <= 0.0 {
        return Err(Error::Config(format!(
            "need tau >= 0 and cp_multiple > 0 (tau={tau}, cp_multiple={cp_multiple})"
        )));
    }
    let required = cp_multiple * tau;
    if required >= symbol_time {
        return Err(Error::CpExceedsSymbol {
            required,
            symbol_time,
        });
    }
    plan_from_cp_duration(symbol_time, bandwidth, required, block_len)
}

/// CP overhead when the data portion is fixed and the symbol stretches:
/// `(cp_multiple * tau) / (T_d + cp_multiple * tau)`.
pub fn overhead_fixed_data_portion(data_duration: f64, tau: f64, cp_multiple: f64) -> f64 {
    assert!(data_duration > 0.0, "data duration must be positive");
    assert!(tau >= 0.0, "delay spread must be non-negative");
    let cp = cp_multiple * tau;
    cp / (data_duration + cp)
}

/// Enumerate the CP durations reachable when the data-portion duration is
/// fixed and an integer number of symbols must fill the subframe:
/// `n (T_d + T_c) = T_subframe`. Sorted by ascending overhead.
pub fn enumerate_fixed_grid_cp(subframe: f64, data_duration: f64) -> Vec<FixedGridEntry> {
    assert!(
        subframe >= data_duration && data_duration > 0.0,
        "need T_subframe >= T_d > 0"
    );
    let n_max = (subframe / data_duration + 1e-9).floor() as u64;
    (1..=n_max)
        .rev()
        .map(|n| {
            let cp = (subframe / n as f64 - data_duration).max(0.0);
            FixedGridEntry {
                symbols_per_subframe: n,
                cp_duration: cp,
                overhead: cp / (cp + data_duration),
            }
        })
        .collect()
}

/// Work backwards from the discrete clock periods a frequency synthesizer
/// offers: each candidate clock implies `T_c = T - N_tilde * Ts_tilde`; the
/// feasible candidate with the smallest `T_c` (ties to the smaller clock
/// period) wins.
pub fn plan_from_clock_rates(
    symbol_time: f64,
    sample_period: f64,
    fft_len: usize,
    clock_periods: &[f64],
    tau: f64,
    cp_multiple: f64,
) -> Result<ClockedPlan> {
    if !fft_len.is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength { len: fft_len });
    }
    if clock_periods.is_empty() {
        return Err(Error::Config("clock period list is empty".into()));
    }
    let required = cp_multiple * tau;
    let mut best: Option<(f64, f64, f64)> = None; // (T_c, Ts_tilde, N rounded)
    for &clock in clock_periods {
        if clock.is_nan() || clock <= 0.0 {
            return Err(Error::Config(format!("clock period must be positive, got {clock}")));
        }
        let cp = symbol_time - fft_len as f64 * clock;
        if cp < required - 1e-15 * symbol_time || cp < 0.0 {
            continue;
        }
        let n_real = fft_len as f64 * clock / sample_period;
        let n = n_real.round();
        if (n_real - n).abs() > 0.5 + 1e-9 || n < 1.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((best_cp, best_clock, _)) => {
                cp < best_cp - 1e-12 * symbol_time
                    || ((cp - best_cp).abs() <= 1e-12 * symbol_time && clock < best_clock)
            }
        };
        if better {
            best = Some((cp, clock, n));
        }
    }
    let (cp, clock, n) = best.ok_or(Error::NoFeasibleClock { required })?;
    let data_len = n as usize;
    let base = plan_from_cp_duration(symbol_time, 1.0 / sample_period, cp, data_len)?;
    let cp_len = ceil_tol(cp / clock) as usize;
    Ok(ClockedPlan {
        base,
        fft_len,
        clock_period: clock,
        clock_rate: 1.0 / clock,
        cp_len,
        bandwidth: n / (fft_len as f64 * clock),
        symbol_time_residual: (fft_len + cp_len) as f64 * clock - symbol_time,
    })
}

/// Common CP duration for simultaneously scheduled users: the maximum of
/// the per-user requirements.
pub fn common_cp_for_group(users: &[UserDelayProfile]) -> Result<f64> {
    if users.is_empty() {
        return Err(Error::EmptyGroup);
    }
    Ok(users
        .iter()
        .map(UserDelayProfile::required_cp)
        .fold(0.0, f64::max))
}

/// Partition users into CP bins so only users of the same CP duration get
/// scheduled together. Each group adopts its bin's upper edge as `T_c`.
pub fn group_users_by_cp(
    users: &[UserDelayProfile],
    bin_edges: &[f64],
) -> Result<Vec<CpGroup>> {
    if bin_edges.is_empty() || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "bin edges must be non-empty and strictly increasing".into(),
        ));
    }
    let mut groups: Vec<Vec<String>> = vec![Vec::new(); bin_edges.len()];
    for user in users {
        let required = user.required_cp();
        let bin = bin_edges
            .iter()
            .position(|&edge| required <= edge)
            .ok_or_else(|| Error::CpOutOfRange {
                user_id: user.user_id.clone(),
                required,
                last_edge: *bin_edges.last().unwrap(),
            })?;
        groups[bin].push(user.user_id.clone());
    }
    Ok(groups
        .into_iter()
        .zip(bin_edges)
        .filter(|(members, _)| !members.is_empty())
        .map(|(user_ids, &edge)| CpGroup {
            cp_duration: edge,
            user_ids,
        })
        .collect())
}

impl NumerologyPlan {
    /// Spectral overhead `T_c / T`.
    pub fn overhead(&self) -> f64 {
        self.cp_duration / self.symbol_time
    }

    /// Replace the QAM block length, re-checking `M <= N`.
    pub fn with_block_len(mut self, block_len: usize) -> Result<Self> {
        if block_len < 1 || block_len > self.data_len {
            return Err(Error::BlockTooLarge {
                block_len,
                data_len: self.data_len,
            });
        }
        self.block_len = block_len;
        Ok(self)
    }

    /// Check the structural invariants; used when loading records.
    pub fn validate(&self) -> Result<()> {
        let t = self.cp_duration + self.data_duration;
        if (t - self.symbol_time).abs() > 1e-12 * self.symbol_time.abs().max(1e-30) {
            return Err(Error::Config("T != T_c + T_d".into()));
        }
        if !(0.0..self.symbol_time).contains(&self.cp_duration) {
            return Err(Error::Config("need 0 <= T_c < T".into()));
        }
        if self.block_len < 1 || self.block_len > self.data_len {
            return Err(Error::Config("need 1 <= M <= N".into()));
        }
        let b = self.data_len as f64 * self.subcarrier_spacing;
        let inv_ts = 1.0 / self.sample_period;
        if (b - inv_ts).abs() > 1e-9 * inv_ts || (self.bandwidth - inv_ts).abs() > 1e-9 * inv_ts {
            return Err(Error::Config("B != N * delta_f or B != 1/T_s".into()));
        }
        if self.cp_len != ceil_tol(self.cp_duration / self.sample_period) as usize {
            return Err(Error::Config("K != ceil(T_c / T_s)".into()));
        }
        if (self.data_len as f64 - self.data_duration / self.sample_period).abs() > 0.5 + 1e-9 {
            return Err(Error::Config("N != round(T_d / T_s)".into()));
        }
        Ok(())
    }

    /// Flat key-value record (canonical field names, SI base units).
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.kv_pairs() {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    fn kv_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("T", self.symbol_time.to_string()),
            ("T_c", self.cp_duration.to_string()),
            ("T_d", self.data_duration.to_string()),
            ("T_s", self.sample_period.to_string()),
            ("N", self.data_len.to_string()),
            ("M", self.block_len.to_string()),
            ("K", self.cp_len.to_string()),
            ("delta_f", self.subcarrier_spacing.to_string()),
            ("B", self.bandwidth.to_string()),
        ]
    }

    /// Parse a record produced by [`NumerologyPlan::to_kv`], validating the
    /// plan invariants.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `key = value`, got `{line}`")))?;
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<f64> {
            fields
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing field {key}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("field {key}: {e}")))
        };
        let plan = Self {
            symbol_time: get("T")?,
            cp_duration: get("T_c")?,
            data_duration: get("T_d")?,
            sample_period: get("T_s")?,
            data_len: get("N")? as usize,
            block_len: get("M")? as usize,
            cp_len: get("K")? as usize,
            subcarrier_spacing: get("delta_f")?,
            bandwidth: get("B")?,
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl ClockedPlan {
    /// Flat key-value record: base plan fields plus the clocked fields.
    pub fn to_kv(&self) -> String {
        let mut out = self.base.to_kv();
        out.push_str(&format!("N_tilde = {}\n", self.fft_len));
        out.push_str(&format!("Ts_tilde = {}\n", self.clock_period));
        out.push_str(&format!("Fs_tilde = {}\n", self.clock_rate));
        out.push_str(&format!("K_tilde = {}\n", self.cp_len));
        out.push_str(&format!("B_tilde = {}\n", self.bandwidth));
        out.push_str(&format!(
            "symbol_time_residual = {}\n",
            self.symbol_time_residual
        ));
        out
    }

    /// Parse a record produced by [`ClockedPlan::to_kv`].
    pub fn from_kv(text: &str) -> Result<Self> {
        let base = NumerologyPlan::from_kv(text)?;
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines() {
            if let Some((key, value)) = line.split_once('=') {
                fields.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        let get = |key: &str| -> Result<f64> {
            fields
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing field {key}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("field {key}: {e}")))
        };
        let plan = Self {
            fft_len: get("N_tilde")? as usize,
            clock_period: get("Ts_tilde")?,
            clock_rate: get("Fs_tilde")?,
            cp_len: get("K_tilde")? as usize,
            bandwidth: get("B_tilde")?,
            symbol_time_residual: get("symbol_time_residual")?,
            base,
        };
        if !plan.fft_len.is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength { len: plan.fft_len });
        }
        let lhs = plan.fft_len as f64 * plan.clock_period;
        let rhs = plan.base.data_len as f64 * plan.base.sample_period;
        if (lhs - rhs).abs() > 1e-9 * rhs {
            return Err(Error::Config("N_tilde * Ts_tilde != N * T_s".into()));
        }
        Ok(plan)
    }
}
