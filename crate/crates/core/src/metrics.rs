//! Static and dynamic figures of merit: code-density DNL/INL, power spectrum,
//! SNDR/SFDR/ENOB, the energy-per-step FoM and the power ledger.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Output levels of the 4-bit converter.
pub const CODES: usize = 16;
/// Internal codes, i.e. all but the two open-ended end codes.
pub const INTERNAL_CODES: usize = CODES - 2;
/// Reported SNDR/SFDR when the noise or spur floor is exactly zero.
pub const DB_CAP: f64 = 200.0;
/// Power of a full-scale sine expressed in code units (amplitude 8 LSB).
pub const FULL_SCALE_SINE_POWER: f64 = 32.0;
/// Floor applied when rendering empty bins in dBFS.
pub const PSD_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("missing code {code} (a gap of at least one LSB); missing codes: {all:?}")]
    MissingCode { code: u8, all: Vec<u8> },
    #[error("code {0} outside 0..=15")]
    CodeOutOfRange(u8),
    #[error("record length {0} is not a power of two >= 4")]
    Length(usize),
    #[error("empty spectrum")]
    EmptySpectrum,
    #[error("signal bin {bin} invalid for a spectrum of {bins} bins")]
    InvalidSignalBin { bin: usize, bins: usize },
    #[error("power fractions must be non-negative and sum to 1, got sum {sum}")]
    InvalidFractions { sum: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Code-density linearity over the internal codes 1..=14.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityReport {
    /// DNL of codes 1..=14, in LSB.
    pub dnl: Vec<f64>,
    /// INL at the fifteen code transitions (lower edge of codes 1..=15), in LSB.
    /// Endpoint fit, so the first and last entries are zero.
    pub inl: Vec<f64>,
    pub max_abs_dnl: f64,
    pub max_abs_inl: f64,
}

impl LinearityReport {
    fn from_widths(widths: &[f64; INTERNAL_CODES]) -> Self {
        let mean = widths.iter().sum::<f64>() / INTERNAL_CODES as f64;
        let dnl: Vec<f64> = widths.iter().map(|w| w / mean - 1.0).collect();
        let mut inl = Vec::with_capacity(INTERNAL_CODES + 1);
        let mut acc = 0.0;
        inl.push(acc);
        for d in &dnl {
            acc += d;
            inl.push(acc);
        }
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self { max_abs_dnl: max_abs(&dnl), max_abs_inl: max_abs(&inl), dnl, inl }
    }
}

pub fn code_histogram(codes: &[u8]) -> Result<[u64; CODES], MetricsError> {
    let mut hist = [0u64; CODES];
    for &c in codes {
        *hist.get_mut(c as usize).ok_or(MetricsError::CodeOutOfRange(c))? += 1;
    }
    Ok(hist)
}

fn require_all_codes(hist: &[u64; CODES]) -> Result<(), MetricsError> {
    let missing: Vec<u8> = (0..CODES as u8).filter(|&c| hist[c as usize] == 0).collect();
    match missing.first() {
        Some(&code) => Err(MetricsError::MissingCode { code, all: missing }),
        None => Ok(()),
    }
}

/// Ramp code-density test. The ramp must overdrive both ends; end codes are
/// excluded and the ideal count is the mean of the internal codes.
pub fn dnl_inl_ramp(codes: &[u8]) -> Result<LinearityReport, MetricsError> {
    let hist = code_histogram(codes)?;
    require_all_codes(&hist)?;
    let mut widths = [0.0; INTERNAL_CODES];
    for (w, &count) in widths.iter_mut().zip(&hist[1..CODES - 1]) {
        *w = count as f64;
    }
    Ok(LinearityReport::from_widths(&widths))
}

/// Sine code-density test for a coherently sampled sine that overdrives both
/// ends.
///
/// Transition levels are recovered from the cumulative histogram through the
/// arcsine distribution, `T_k = -cos(pi * CH_k / N)`, so neither the sine's
/// amplitude nor its offset needs to be known.
pub fn dnl_inl_sine(codes: &[u8]) -> Result<LinearityReport, MetricsError> {
    let hist = code_histogram(codes)?;
    require_all_codes(&hist)?;
    let total = codes.len() as f64;
    let mut transitions = [0.0; CODES - 1];
    let mut cumulative = 0u64;
    for (k, t) in transitions.iter_mut().enumerate() {
        cumulative += hist[k];
        *t = -(PI * cumulative as f64 / total).cos();
    }
    let mut widths = [0.0; INTERNAL_CODES];
    for (k, w) in widths.iter_mut().enumerate() {
        *w = transitions[k + 1] - transitions[k];
    }
    Ok(LinearityReport::from_widths(&widths))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect(),
        }
    }

    /// Bins on each side of a tone that belong to its main lobe.
    pub fn lobe_half_width(self) -> usize {
        match self {
            Window::Rectangular => 0,
            Window::Hann => 2,
        }
    }
}

/// One-sided power spectrum in squared code units.
///
/// Normalized by the window energy, so with a rectangular window the bins
/// sum to the variance of the record.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub power: Vec<f64>,
    pub window: Window,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Per-bin power relative to a full-scale sine.
    pub fn dbfs(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(
                |&p| {
                    if p > 0.0 {
                        (10.0 * (p / FULL_SCALE_SINE_POWER).log10()).max(PSD_FLOOR_DB)
                    } else {
                        PSD_FLOOR_DB
                    }
                },
            )
            .collect()
    }

    /// Largest bin above the dc guard band.
    pub fn peak_bin(&self) -> Option<usize> {
        let start = self.window.lobe_half_width() + 1;
        (start..self.power.len()).max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]).then(b.cmp(&a)))
    }
}

/// Power spectrum of a mean-removed record whose length is a power of two.
pub fn psd(samples: &[f64], window: Window) -> Result<Spectrum, MetricsError> {
    let n = samples.len();
    if n < 4 || !n.is_power_of_two() {
        return Err(MetricsError::Length(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let w = window.coefficients(n);
    let energy: f64 = w.iter().map(|x| x * x).sum();
    let mut buf: Vec<Complex<f64>> =
        samples.iter().zip(&w).map(|(&x, &wk)| Complex::new((x - mean) * wk, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let scale = 1.0 / (n as f64 * energy);
    let power = buf[..=half]
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
            one_sided * x.norm_sqr() * scale
        })
        .collect();
    Ok(Spectrum { power, window })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicMetrics {
    pub sndr_db: f64,
    pub sfdr_db: f64,
    pub enob_bits: f64,
}

pub fn enob_from_sndr(sndr_db: f64) -> f64 {
    (sndr_db - 1.76) / 6.02
}

fn ratio_db(signal: f64, other: f64) -> f64 {
    if other <= 0.0 {
        DB_CAP
    } else {
        (10.0 * (signal / other).log10()).min(DB_CAP)
    }
}

/// SNDR against every non-dc, non-signal bin; SFDR against the largest such bin.
pub fn sndr_sfdr_enob(spectrum: &Spectrum, signal_bin: usize) -> Result<DynamicMetrics, MetricsError> {
    if spectrum.is_empty() {
        return Err(MetricsError::EmptySpectrum);
    }
    let lobe = spectrum.window.lobe_half_width();
    let bins = spectrum.len();
    if signal_bin <= lobe || signal_bin >= bins {
        return Err(MetricsError::InvalidSignalBin { bin: signal_bin, bins });
    }
    let in_signal = |k: usize| k + lobe >= signal_bin && k <= signal_bin + lobe;
    let mut signal = 0.0;
    let mut noise = 0.0;
    let mut spur = 0.0f64;
    for (k, &p) in spectrum.power.iter().enumerate().skip(lobe + 1) {
        if in_signal(k) {
            signal += p;
        } else {
            noise += p;
            spur = spur.max(p);
        }
    }
    if signal <= 0.0 {
        return Err(MetricsError::InvalidInput(format!("no power at signal bin {signal_bin}")));
    }
    let sndr_db = ratio_db(signal, noise);
    let sfdr_db = ratio_db(signal, spur);
    Ok(DynamicMetrics { sndr_db, sfdr_db, enob_bits: enob_from_sndr(sndr_db) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub psd_dbfs: Vec<f64>,
    pub signal_bin: usize,
    pub sndr_db: f64,
    pub sfdr_db: f64,
    pub enob_bits: f64,
}

/// PSD plus dynamic metrics, with the signal taken at the spectral peak.
pub fn analyze_spectrum(samples: &[f64], window: Window) -> Result<SpectrumReport, MetricsError> {
    let spectrum = psd(samples, window)?;
    let signal_bin = spectrum.peak_bin().ok_or(MetricsError::EmptySpectrum)?;
    let m = sndr_sfdr_enob(&spectrum, signal_bin)?;
    Ok(SpectrumReport {
        psd_dbfs: spectrum.dbfs(),
        signal_bin,
        sndr_db: m.sndr_db,
        sfdr_db: m.sfdr_db,
        enob_bits: m.enob_bits,
    })
}

/// Energy per effective conversion step, `power / (2^enob * fs)`, in joules.
pub fn fom(power: f64, enob: f64, fs: f64) -> f64 {
    power / (enob.exp2() * fs)
}

/// Shares of the total power drawn by each block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFractions {
    pub track_and_hold: f64,
    pub comparators: f64,
    pub clock: f64,
    pub encoder: f64,
}

impl Default for PowerFractions {
    fn default() -> Self {
        Self { track_and_hold: 0.10, comparators: 0.25, clock: 0.45, encoder: 0.20 }
    }
}

impl PowerFractions {
    pub fn as_array(&self) -> [f64; 4] {
        [self.track_and_hold, self.comparators, self.clock, self.encoder]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLedger {
    pub total: f64,
    pub th_fraction: f64,
    pub comparator_fraction: f64,
    pub clock_fraction: f64,
    pub encoder_fraction: f64,
}

impl PowerLedger {
    /// Per-block power in watts: T/H, comparators, clock, encoder.
    pub fn watts(&self) -> [f64; 4] {
        [
            self.total * self.th_fraction,
            self.total * self.comparator_fraction,
            self.total * self.clock_fraction,
            self.total * self.encoder_fraction,
        ]
    }
}

pub fn power_ledger(total: f64, fractions: PowerFractions) -> Result<PowerLedger, MetricsError> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(MetricsError::InvalidInput(format!("total power must be positive, got {total}")));
    }
    let f = fractions.as_array();
    let sum: f64 = f.iter().sum();
    if f.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(MetricsError::InvalidFractions { sum });
    }
    Ok(PowerLedger {
        total,
        th_fraction: fractions.track_and_hold,
        comparator_fraction: fractions.comparators,
        clock_fraction: fractions.clock,
        encoder_fraction: fractions.encoder,
    })
}
