//! Typed scenario assembled from a [`Config`].

use foldflash::comparator::FlashBankSpec;
use foldflash::frontend::{ClockMode, FrontendSpec, KickbackModel};
use foldflash::metrics::{PowerFractions, Window};
use foldflash::signal::{coherent_frequency, dbfs_to_amplitude, gen_ramp, gen_sine, Waveform};
use foldflash::timing::{build_schedule, ClockSchedule};
use foldflash::{AdcConfig, FLASH_COMPARATORS};

use crate::config::{Config, ConfigError, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    Sine { amplitude: f64, target_frequency: f64, frequency: f64, samples: usize, phase: f64 },
    Ramp { start: f64, end: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRequest {
    pub linearity: bool,
    pub spectrum: bool,
    pub window: Window,
    pub power: f64,
    pub fractions: PowerFractions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: Config,
    pub seed: u64,
    pub fs: f64,
    pub stimulus: Stimulus,
    pub adc: AdcConfig,
    pub metrics: MetricsRequest,
}

fn mode(text: &str) -> ClockMode {
    match text {
        "single_clock" => ClockMode::SingleClock,
        _ => ClockMode::TwoClock,
    }
}

impl Scenario {
    pub fn from_config(config: Config) -> Result<Self, ConfigError> {
        let c = &config;
        let seed = c.integer("seed");
        let fs = c.number("clock.fs");
        let schedule: ClockSchedule =
            build_schedule(fs, c.number("clock.track_duty"), c.number("clock.ck1_delay"), c.number("clock.ck2_lead"))
                .map_err(|e| ConfigError::new("clock", e.to_string()))?;

        let full_scale = c.number("frontend.full_scale");
        if !(full_scale > 0.0) {
            return Err(ConfigError::new("frontend.full_scale", "must be positive"));
        }
        let frontend = FrontendSpec {
            c_s: c.number("frontend.c_s"),
            c_par: c.number("frontend.c_par"),
            settling_tau: c.number("frontend.settling_tau"),
            kickback_amp: c.number("frontend.kickback_amp"),
            kickback_mode: mode(c.choice("frontend.kickback_mode")),
            kickback_model: match c.choice("frontend.kickback_model") {
                "random" => KickbackModel::Random,
                _ => KickbackModel::Coherent,
            },
        };
        frontend.validate().map_err(|e| ConfigError::new("frontend", e.to_string()))?;

        let mut trims = [0.0; FLASH_COMPARATORS];
        trims.copy_from_slice(c.list("comparator.trims"));
        let bank = FlashBankSpec {
            full_scale,
            v_ov: c.number("comparator.v_ov"),
            w_sum: c.number("comparator.w_sum"),
            length: c.number("comparator.length"),
            a_cc: c.number("comparator.a_cc"),
            c_ox: c.number("comparator.c_ox"),
            noise_sigma: c.number("comparator.noise_sigma"),
            clock_mode: frontend.kickback_mode,
            trims,
        };

        let samples = usize::try_from(c.integer("stimulus.samples"))
            .map_err(|_| ConfigError::new("stimulus.samples", "too large"))?;
        let stimulus = match c.choice("stimulus.kind") {
            "ramp" => Stimulus::Ramp { start: c.number("stimulus.start"), end: c.number("stimulus.end"), samples },
            _ => {
                let amplitude = match c.value("stimulus.amplitude") {
                    Value::Dbfs(db) => dbfs_to_amplitude(*db, full_scale),
                    Value::Number(v) => *v,
                    other => unreachable!("amplitude parsed as {other:?}"),
                };
                let target_frequency = c.number("stimulus.frequency");
                let frequency = if c.flag("stimulus.coherent") {
                    coherent_frequency(fs, samples, target_frequency)
                        .map_err(|e| ConfigError::new("stimulus.frequency", e.to_string()))?
                } else {
                    target_frequency
                };
                Stimulus::Sine { amplitude, target_frequency, frequency, samples, phase: c.number("stimulus.phase") }
            }
        };

        let f = c.list("metrics.power_fractions");
        let metrics = MetricsRequest {
            linearity: c.flag("metrics.linearity"),
            spectrum: c.flag("metrics.spectrum"),
            window: match c.choice("metrics.window") {
                "hann" => Window::Hann,
                _ => Window::Rectangular,
            },
            power: c.number("metrics.power"),
            fractions: PowerFractions { track_and_hold: f[0], comparators: f[1], clock: f[2], encoder: f[3] },
        };
        if metrics.spectrum && matches!(stimulus, Stimulus::Ramp { .. }) {
            return Err(ConfigError::new("metrics.spectrum", "spectrum analysis needs a sine stimulus"));
        }
        if metrics.spectrum && !samples.is_power_of_two() {
            return Err(ConfigError::new("stimulus.samples", "spectrum analysis needs a power-of-two record"));
        }

        let adc = AdcConfig { full_scale, schedule, frontend, bank, seed };
        let scenario = Self { config, seed, fs, stimulus, adc, metrics };
        scenario.waveform()?;
        Ok(scenario)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_config(Config::from_text(text)?)
    }

    pub fn waveform(&self) -> Result<Waveform, ConfigError> {
        let full_scale = self.adc.full_scale;
        match self.stimulus {
            Stimulus::Sine { amplitude, frequency, samples, phase, .. } => {
                gen_sine(amplitude, frequency, self.fs, samples, phase, full_scale)
            }
            Stimulus::Ramp { start, end, samples } => gen_ramp(start, end, samples, self.fs),
        }
        .map_err(|e| ConfigError::new("stimulus", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_coherent_sine() {
        let s = Scenario::from_text("").unwrap();
        match s.stimulus {
            Stimulus::Sine { frequency, samples, amplitude, .. } => {
                assert_eq!(samples, 4096);
                assert_eq!(frequency, 409.0 / 4096.0 * 1e9);
                assert!((amplitude - 0.25 * 10f64.powf(-0.025)).abs() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn invalid_sub_specs_report_sections() {
        let e = Scenario::from_text("clock.ck1_delay = 300ps\nclock.ck2_lead = 300ps").unwrap_err();
        assert_eq!(e.path, "clock");
        let e = Scenario::from_text("stimulus.frequency = 500MHz").unwrap_err();
        assert_eq!(e.path, "stimulus.frequency");
        let e = Scenario::from_text("stimulus.kind = ramp").unwrap_err();
        assert_eq!(e.path, "metrics.spectrum");
        let e = Scenario::from_text("stimulus.amplitude = 300mV").unwrap_err();
        assert_eq!(e.path, "stimulus");
        let e = Scenario::from_text("frontend.c_s = 0F").unwrap_err();
        assert_eq!(e.path, "frontend");
    }
}
