//! Deterministic analog stimuli on a uniform sampling grid.
//!
//! Differential signals are carried as a single signed value (`v_p - v_n`);
//! common mode is not modeled.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default differential full scale, 500 mV peak-to-peak.
pub const DEFAULT_FULL_SCALE: f64 = 0.5;

/// Default stimulus level relative to full scale, in dBFS.
pub const DEFAULT_AMPLITUDE_DBFS: f64 = -0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
    #[error("empty request: sample count must be positive")]
    EmptyRequest,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("waveform csv: {0}")]
    Csv(String),
}

/// Uniformly sampled differential waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_period: f64,
    full_scale: f64,
}

/// Sidecar metadata for a waveform exported as CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub sample_period: f64,
    pub full_scale: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_period: f64, full_scale: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::EmptyRequest);
        }
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(SignalError::InvalidStimulus(format!("sample period must be positive, got {sample_period}")));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(SignalError::InvalidStimulus(format!("full scale must be positive, got {full_scale}")));
        }
        Ok(Self { samples, sample_period, full_scale })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.sample_period
    }

    pub fn full_scale(&self) -> f64 {
        self.full_scale
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> WaveformMeta {
        WaveformMeta { sample_period: self.sample_period, full_scale: self.full_scale }
    }

    /// Writes the samples as `index,volts` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SignalError> {
        let mut wtr = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| SignalError::Csv(e.to_string());
        wtr.write_record(["index", "volts"]).map_err(csv_err)?;
        for (i, v) in self.samples.iter().enumerate() {
            wtr.write_record([i.to_string(), v.to_string()]).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| SignalError::Csv(e.to_string()))
    }

    /// Reads an `index,volts` CSV; indices must run 0, 1, 2, ... in order.
    pub fn read_csv<R: Read>(input: R, meta: WaveformMeta) -> Result<Self, SignalError> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(|e| SignalError::Csv(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["index", "volts"] {
            return Err(SignalError::Csv(format!("expected header `index,volts`, got {headers:?}")));
        }
        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| SignalError::Csv(e.to_string()))?;
            let index: usize = record[0]
                .trim()
                .parse()
                .map_err(|_| SignalError::Csv(format!("row {row}: bad index {:?}", &record[0])))?;
            if index != row {
                return Err(SignalError::Csv(format!("row {row}: index {index} out of sequence")));
            }
            let volts: f64 = record[1]
                .trim()
                .parse()
                .map_err(|_| SignalError::Csv(format!("row {row}: bad value {:?}", &record[1])))?;
            samples.push(volts);
        }
        Self::new(samples, meta.sample_period, meta.full_scale)
    }
}

/// Converts a level in dBFS into a peak amplitude for the given full scale.
pub fn dbfs_to_amplitude(dbfs: f64, full_scale: f64) -> f64 {
    full_scale / 2.0 * 10f64.powf(dbfs / 20.0)
}

/// `amplitude * sin(2*pi*frequency*k/fs + phase)` for `k in 0..n`.
pub fn gen_sine(
    amplitude: f64,
    frequency: f64,
    fs: f64,
    n: usize,
    phase: f64,
    full_scale: f64,
) -> Result<Waveform, SignalError> {
    if n == 0 {
        return Err(SignalError::EmptyRequest);
    }
    if !(fs > 0.0) {
        return Err(SignalError::InvalidStimulus(format!("sample rate must be positive, got {fs}")));
    }
    if !(frequency > 0.0 && frequency < fs / 2.0) {
        return Err(SignalError::InvalidStimulus(format!(
            "frequency {frequency} Hz must lie strictly inside (0, fs/2 = {} Hz)",
            fs / 2.0
        )));
    }
    if amplitude.abs() > full_scale / 2.0 {
        return Err(SignalError::InvalidStimulus(format!(
            "amplitude {amplitude} V exceeds half of full scale {full_scale} V"
        )));
    }
    let w = 2.0 * PI * frequency / fs;
    let samples = (0..n).map(|k| amplitude * (w * k as f64 + phase).sin()).collect();
    Waveform::new(samples, 1.0 / fs, full_scale)
}

/// Linear sweep from `v_start` to `v_end`, both endpoints included.
///
/// The waveform's full scale is the default 500 mV unless the sweep extends
/// past it, in which case it widens to contain the sweep.
pub fn gen_ramp(v_start: f64, v_end: f64, n: usize, fs: f64) -> Result<Waveform, SignalError> {
    if n < 2 {
        return Err(SignalError::InvalidRequest(format!("ramp needs at least 2 samples, got {n}")));
    }
    if !(fs > 0.0) {
        return Err(SignalError::InvalidStimulus(format!("sample rate must be positive, got {fs}")));
    }
    let span = v_end - v_start;
    let last = (n - 1) as f64;
    let samples = (0..n).map(|i| v_start + span * (i as f64 / last)).collect();
    let full_scale = DEFAULT_FULL_SCALE.max(2.0 * v_start.abs().max(v_end.abs()));
    Waveform::new(samples, 1.0 / fs, full_scale)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Cycle count `m` used by [`coherent_frequency`].
pub fn coherent_cycles(fs: f64, n: usize, target: f64) -> Result<u64, SignalError> {
    if n == 0 {
        return Err(SignalError::EmptyRequest);
    }
    if !n.is_power_of_two() {
        return Err(SignalError::InvalidRequest(format!("record length {n} is not a power of two")));
    }
    if !(fs > 0.0 && target > 0.0 && target < fs / 2.0) {
        return Err(SignalError::InvalidRequest(format!(
            "target {target} Hz must lie strictly inside (0, fs/2 = {} Hz)",
            fs / 2.0
        )));
    }
    let n64 = n as u64;
    // odd m strictly below n/2
    if n64 / 2 <= 1 {
        return Err(SignalError::InvalidRequest(format!("no odd cycle count in (0, {}) for n = {n}", n64 / 2)));
    }
    let max_m = if (n64 / 2 - 1) % 2 == 1 { n64 / 2 - 1 } else { n64 / 2 - 2 };
    let ideal = n as f64 * target / fs;
    let floor = ideal.floor() as u64;
    let below = if floor % 2 == 1 { Some(floor) } else { floor.checked_sub(1) };
    let above = below.map_or(1, |m| m + 2);
    below
        .into_iter()
        .chain([above, max_m])
        .filter(|&m| m <= max_m && gcd(m, n64) == 1)
        .min_by(|&a, &b| {
            let da = (a as f64 - ideal).abs();
            let db = (b as f64 - ideal).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .ok_or_else(|| SignalError::InvalidRequest(format!("no coherent cycle count near {ideal}")))
}

/// Nearest frequency placing an odd number of cycles, coprime with `n`, in the record.
pub fn coherent_frequency(fs: f64, n: usize, target: f64) -> Result<f64, SignalError> {
    let m = coherent_cycles(fs, n, target)?;
    Ok(m as f64 / n as f64 * fs)
}
