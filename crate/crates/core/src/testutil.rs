//! Measurement helpers shared by the unit, property, and acceptance tests.
//! Not part of the stable API.
#![doc(hidden)]

use num_complex::Complex64;

use crate::dsp;
use crate::resampler::kaiser_window;

/// Max absolute difference normalized by the largest reference magnitude.
pub fn max_rel_err(actual: &[Complex64], expected: &[Complex64]) -> f64 {
    assert_eq!(actual.len(), expected.len(), "length mismatch");
    let scale = expected
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    actual
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max)
        / scale
}

/// Energy of `test - reference` relative to `reference`, in dB (clamped at
/// -150 when exact).
pub fn rel_mse_db(test: &[Complex64], reference: &[Complex64]) -> f64 {
    assert_eq!(test.len(), reference.len(), "length mismatch");
    let err: f64 = test
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let denom: f64 = reference.iter().map(|v| v.norm_sqr()).sum();
    (10.0 * (err / denom).log10()).max(-150.0)
}

pub fn assert_close(actual: Complex64, expected: Complex64, tol: f64) {
    assert!(
        (actual - expected).norm() <= tol * expected.norm().max(1.0),
        "{actual} != {expected} (tol {tol:e})"
    );
}

/// Fraction of signal energy outside the band `[-half_width, half_width]`
/// (cycles per sample), measured on a Kaiser-windowed zero-padded
/// periodogram so window leakage stays far below the quantity under test.
pub fn out_of_band_fraction(x: &[Complex64], half_width: f64) -> f64 {
    let window = kaiser_window(x.len(), 24.0);
    let mut tapered: Vec<Complex64> = x
        .iter()
        .zip(&window)
        .map(|(v, w)| v * *w)
        .collect();
    let nfft = (4 * x.len()).next_power_of_two();
    tapered.resize(nfft, Complex64::default());
    let spectrum = dsp::fft_pow2(&tapered).expect("power of two");
    let mut inside = 0.0;
    let mut total = 0.0;
    for (k, bin) in spectrum.iter().enumerate() {
        let f = k as f64 / nfft as f64;
        let f = if f < 0.5 { f } else { f - 1.0 };
        let energy = bin.norm_sqr();
        total += energy;
        if f.abs() <= half_width {
            inside += energy;
        }
    }
    (total - inside) / total
}
