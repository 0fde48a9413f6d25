//! Flag-value parsers for durations and frequencies with SI suffixes.
//! Values are normalized to base units (seconds, hertz) at parse time.

const DURATION_SUFFIXES: &[(&str, i32)] = &[
    ("ps", -12),
    ("ns", -9),
    ("us", -6),
    ("µs", -6),
    ("ms", -3),
    ("s", 0),
];

const FREQUENCY_SUFFIXES: &[(&str, i32)] = &[("GHz", 9), ("MHz", 6), ("kHz", 3), ("Hz", 0)];

fn parse_with(suffixes: &[(&str, i32)], unit_name: &str, s: &str) -> Result<f64, String> {
    let s = s.trim();
    for (suffix, exp) in suffixes {
        if let Some(number) = s.strip_suffix(suffix) {
            let number = number.trim();
            // splice the suffix exponent into the literal so "80us" parses
            // as the correctly rounded 80e-6, not 80 * 1e-6
            let composed = if number.contains(['e', 'E']) {
                return number
                    .parse::<f64>()
                    .map(|v| v * 10f64.powi(*exp))
                    .map_err(|e| format!("bad {unit_name} `{s}`: {e}"));
            } else {
                format!("{number}e{exp}")
            };
            return composed
                .parse::<f64>()
                .map_err(|e| format!("bad {unit_name} `{s}`: {e}"));
        }
    }
    // bare numbers are base units
    s.parse::<f64>()
        .map_err(|e| format!("bad {unit_name} `{s}` (expected a number with an optional suffix): {e}"))
}

/// Parse a duration like `80us`, `31.25ns`, or `8e-5` (seconds).
pub fn duration(s: &str) -> Result<f64, String> {
    parse_with(DURATION_SUFFIXES, "duration", s)
}

/// Parse a frequency like `32MHz`, `15.625kHz`, or `3.2e7` (hertz).
pub fn frequency(s: &str) -> Result<f64, String> {
    parse_with(FREQUENCY_SUFFIXES, "frequency", s)
}
