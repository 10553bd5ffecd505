//! Runs scenarios and sweeps, builds reports and writes output files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use foldflash::comparator::BankRecord;
use foldflash::digital::write_codes_csv;
use foldflash::metrics::{analyze_spectrum, code_histogram, dnl_inl_ramp, dnl_inl_sine, fom, power_ledger};
use foldflash::timing::ClockSchedulePs;
use foldflash::{FoldingFlashAdc, PipelineError, Waveform, Window};

use crate::config::{key_spec, parse_value, Config, ConfigError};
use crate::scenario::{Scenario, Stimulus};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("pipeline error: {0}")]
    Pipeline(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Pipeline(_) => 3,
            RunError::Io(_) => 1,
        }
    }

    /// One-line machine-readable rendering.
    pub fn to_json_line(&self) -> String {
        let v = match self {
            RunError::Config(e) => {
                serde_json::json!({"error": "config", "path": e.path, "message": e.message})
            }
            RunError::Pipeline(m) => serde_json::json!({"error": "pipeline", "message": m}),
            RunError::Io(m) => serde_json::json!({"error": "io", "message": m}),
        };
        v.to_string()
    }
}

impl From<PipelineError> for RunError {
    fn from(e: PipelineError) -> Self {
        RunError::Pipeline(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// `report.json` only.
    Json,
    /// `report.json` plus plot-ready CSVs.
    Csv,
}

fn round_to(x: f64, step: f64) -> f64 {
    let r = (x / step).round() * step;
    // trim float noise from the multiply, and map -0 to 0
    format!("{r:.12}").parse::<f64>().unwrap_or(r) + 0.0
}

fn round_db(x: f64) -> f64 {
    round_to(x, 0.01)
}

fn round_lsb(x: f64) -> f64 {
    round_to(x, 0.001)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StimulusReport {
    pub kind: &'static str,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionReport {
    pub samples: usize,
    pub residual_bubbles: usize,
    pub code_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LinearitySection {
    Ok {
        method: &'static str,
        end_codes_excluded: bool,
        dnl_lsb: Vec<f64>,
        inl_lsb: Vec<f64>,
        max_abs_dnl_lsb: f64,
        max_abs_inl_lsb: f64,
    },
    Failed {
        method: &'static str,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSection {
    pub window: Window,
    pub signal_bin: usize,
    pub sndr_db: f64,
    pub sfdr_db: f64,
    pub enob_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FomSection {
    pub fj_per_step: f64,
    pub power_w: f64,
    pub enob_bits: f64,
    pub fs_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSection {
    pub total_w: f64,
    pub th_fraction: f64,
    pub comparator_fraction: f64,
    pub clock_fraction: f64,
    pub encoder_fraction: f64,
    pub th_w: f64,
    pub comparator_w: f64,
    pub clock_w: f64,
    pub encoder_w: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: BTreeMap<String, String>,
    pub clock_schedule: ClockSchedulePs,
    pub comparator_bank: Vec<BankRecord>,
    pub stimulus: StimulusReport,
    pub conversion: ConversionReport,
    pub linearity: Option<LinearitySection>,
    pub spectrum: Option<SpectrumSection>,
    pub fom: Option<FomSection>,
    pub power: PowerSection,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn sndr_db(&self) -> Option<f64> {
        self.spectrum.as_ref().map(|s| s.sndr_db)
    }

    pub fn enob_bits(&self) -> Option<f64> {
        self.spectrum.as_ref().map(|s| s.enob_bits)
    }

    pub fn max_abs_dnl(&self) -> Option<f64> {
        match &self.linearity {
            Some(LinearitySection::Ok { max_abs_dnl_lsb, .. }) => Some(*max_abs_dnl_lsb),
            _ => None,
        }
    }

    pub fn max_abs_inl(&self) -> Option<f64> {
        match &self.linearity {
            Some(LinearitySection::Ok { max_abs_inl_lsb, .. }) => Some(*max_abs_inl_lsb),
            _ => None,
        }
    }
}

/// Everything a run produces, held in memory until written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub waveform: Waveform,
    pub codes_csv: String,
    pub psd_csv: Option<String>,
    pub linearity_csv: Option<String>,
}

fn round_record(r: BankRecord) -> BankRecord {
    let q = |x: f64| round_to(x, 1e-6);
    BankRecord {
        w_r1_um: q(r.w_r1_um),
        w_r2_um: q(r.w_r2_um),
        v_ov_mv: q(r.v_ov_mv),
        trim_mv: q(r.trim_mv),
        offset_mv: q(r.offset_mv),
        trip_mv: q(r.trip_mv),
        noise_sigma_mv: q(r.noise_sigma_mv),
        ..r
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let waveform = scenario.waveform()?;
    let mut adc = FoldingFlashAdc::new(scenario.adc.clone())?;
    let conversion = adc.convert(&waveform)?;
    let values = conversion.values();
    let histogram = code_histogram(&values).map_err(|e| RunError::Pipeline(e.to_string()))?;

    let (stimulus, method) = match scenario.stimulus {
        Stimulus::Sine { amplitude, target_frequency, frequency, samples, .. } => (
            StimulusReport {
                kind: "sine",
                samples,
                amplitude_v: Some(amplitude),
                target_frequency_hz: Some(target_frequency),
                frequency_hz: Some(frequency),
                start_v: None,
                end_v: None,
            },
            "sine",
        ),
        Stimulus::Ramp { start, end, samples } => (
            StimulusReport {
                kind: "ramp",
                samples,
                amplitude_v: None,
                target_frequency_hz: None,
                frequency_hz: None,
                start_v: Some(start),
                end_v: Some(end),
            },
            "ramp",
        ),
    };

    let mut linearity_csv = None;
    let linearity = scenario.metrics.linearity.then(|| {
        let result = if method == "ramp" { dnl_inl_ramp(&values) } else { dnl_inl_sine(&values) };
        match result {
            Ok(r) => {
                let mut csv = String::from("code,dnl_lsb,inl_lsb\n");
                for code in 1..=15usize {
                    let dnl = r.dnl.get(code - 1).map(|d| d.to_string()).unwrap_or_default();
                    writeln!(csv, "{code},{dnl},{}", r.inl[code - 1]).expect("string write");
                }
                linearity_csv = Some(csv);
                LinearitySection::Ok {
                    method,
                    end_codes_excluded: true,
                    dnl_lsb: r.dnl.iter().copied().map(round_lsb).collect(),
                    inl_lsb: r.inl.iter().copied().map(round_lsb).collect(),
                    max_abs_dnl_lsb: round_lsb(r.max_abs_dnl),
                    max_abs_inl_lsb: round_lsb(r.max_abs_inl),
                }
            }
            Err(e) => LinearitySection::Failed { method, error: e.to_string() },
        }
    });

    let mut psd_csv = None;
    let spectrum = if scenario.metrics.spectrum {
        let s = analyze_spectrum(&conversion.values_f64(), scenario.metrics.window)
            .map_err(|e| RunError::Pipeline(e.to_string()))?;
        let n = values.len() as f64;
        let mut csv = String::from("bin,frequency_hz,power_dbfs\n");
        for (k, p) in s.psd_dbfs.iter().enumerate() {
            writeln!(csv, "{k},{},{p}", k as f64 * scenario.fs / n).expect("string write");
        }
        psd_csv = Some(csv);
        Some(SpectrumSection {
            window: scenario.metrics.window,
            signal_bin: s.signal_bin,
            sndr_db: round_db(s.sndr_db),
            sfdr_db: round_db(s.sfdr_db),
            enob_bits: round_lsb(s.enob_bits),
        })
    } else {
        None
    };

    let fom = spectrum.as_ref().map(|s| FomSection {
        fj_per_step: round_to(fom(scenario.metrics.power, s.enob_bits, scenario.fs) * 1e15, 0.01),
        power_w: scenario.metrics.power,
        enob_bits: s.enob_bits,
        fs_hz: scenario.fs,
    });

    let ledger = power_ledger(scenario.metrics.power, scenario.metrics.fractions)
        .map_err(|e| ConfigError::new("metrics.power_fractions", e.to_string()))?;
    let [th_w, comparator_w, clock_w, encoder_w] = ledger.watts();
    let power = PowerSection {
        total_w: ledger.total,
        th_fraction: ledger.th_fraction,
        comparator_fraction: ledger.comparator_fraction,
        clock_fraction: ledger.clock_fraction,
        encoder_fraction: ledger.encoder_fraction,
        th_w,
        comparator_w,
        clock_w,
        encoder_w,
    };

    let mut codes_buf = Vec::new();
    write_codes_csv(&conversion.codes, &mut codes_buf).map_err(|e| RunError::Io(e.to_string()))?;

    let report = Report {
        config: scenario.config.echo(),
        clock_schedule: scenario.adc.schedule.to_picoseconds(),
        comparator_bank: adc.bank().records().into_iter().map(round_record).collect(),
        stimulus,
        conversion: ConversionReport {
            samples: values.len(),
            residual_bubbles: conversion.residual_bubbles,
            code_histogram: histogram.to_vec(),
        },
        linearity,
        spectrum,
        fom,
        power,
    };
    Ok(RunOutput {
        report,
        waveform,
        codes_csv: String::from_utf8(codes_buf).expect("ascii csv"),
        psd_csv,
        linearity_csv,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn write_outputs(dir: &Path, out: &RunOutput, format: OutputFormat) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("report.json"), out.report.to_json().as_bytes())?;
    if format == OutputFormat::Csv {
        write_file(&dir.join("codes.csv"), out.codes_csv.as_bytes())?;
        let mut wave = Vec::new();
        out.waveform.write_csv(&mut wave).map_err(|e| RunError::Io(e.to_string()))?;
        write_file(&dir.join("waveform.csv"), &wave)?;
        let meta = serde_json::to_string_pretty(&out.waveform.meta()).expect("meta serializes") + "\n";
        write_file(&dir.join("waveform.json"), meta.as_bytes())?;
        if let Some(csv) = &out.psd_csv {
            write_file(&dir.join("psd.csv"), csv.as_bytes())?;
        }
        if let Some(csv) = &out.linearity_csv {
            write_file(&dir.join("linearity.csv"), csv.as_bytes())?;
        }
    }
    Ok(())
}

/// Parses a sweep's value list against the key it targets.
pub fn parse_sweep_values(param: &str, values: &str) -> Result<Vec<String>, ConfigError> {
    let spec = key_spec(param).ok_or_else(|| ConfigError::new(param, "unknown sweep parameter"))?;
    if !spec.kind.is_numeric() {
        return Err(ConfigError::new(param, "sweep parameter must be a numeric field"));
    }
    values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_value(spec, v).map(|_| v.to_owned()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub values: Vec<String>,
    pub runs: Vec<RunOutput>,
}

impl SweepOutput {
    /// `value,sndr_db,enob_bits,max_dnl_lsb,max_inl_lsb,fom_fj`; unavailable metrics are left empty.
    pub fn summary_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut csv = String::from("value,sndr_db,enob_bits,max_dnl_lsb,max_inl_lsb,fom_fj\n");
        for (value, run) in self.values.iter().zip(&self.runs) {
            let r = &run.report;
            writeln!(
                csv,
                "{value},{},{},{},{},{}",
                opt(r.sndr_db()),
                opt(r.enob_bits()),
                opt(r.max_abs_dnl()),
                opt(r.max_abs_inl()),
                opt(r.fom.as_ref().map(|f| f.fj_per_step)),
            )
            .expect("string write");
        }
        csv
    }
}

/// Runs `base` once per value of `param`, in parallel; results keep input order.
pub fn sweep(base: &BTreeMap<String, String>, param: &str, values: &[String]) -> Result<SweepOutput, RunError> {
    let spec = key_spec(param).ok_or_else(|| ConfigError::new(param, "unknown sweep parameter"))?;
    if !spec.kind.is_numeric() {
        return Err(ConfigError::new(param, "sweep parameter must be a numeric field").into());
    }
    let scenarios = values
        .iter()
        .map(|v| {
            let mut map = base.clone();
            map.insert(param.to_owned(), v.clone());
            Scenario::from_config(Config::from_map(&map)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let runs = scenarios.par_iter().map(run_scenario).collect::<Result<Vec<_>, _>>()?;
    Ok(SweepOutput { values: values.to_vec(), runs })
}

pub fn write_sweep(dir: &Path, out: &SweepOutput, format: OutputFormat) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (i, run) in out.runs.iter().enumerate() {
        write_outputs(&dir.join(format!("run_{i:03}")), run, format)?;
    }
    write_file(&dir.join("summary.csv"), out.summary_csv().as_bytes())
}
