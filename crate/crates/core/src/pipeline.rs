//! End-to-end conversion: track-and-hold, fold, charge share, kick-back,
//! flash bank, bubble correction and code assembly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::comparator::{build_flash_bank, ComparatorError, FlashBank, FlashBankSpec};
use crate::digital::{assemble_code, bubble_correct, therm_to_count, AdcCode, DigitalError, ThermometerWord};
use crate::frontend::{charge_share, fold, inject_kickback, track_and_hold, FrontendError, FrontendSpec};
use crate::signal::Waveform;
use crate::timing::{build_schedule, ClockSchedule, TimingError};
use crate::{comparator::FLASH_COMPARATORS, signal::DEFAULT_FULL_SCALE};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Comparator(#[from] ComparatorError),
    #[error(transparent)]
    Digital(#[from] DigitalError),
}

/// Everything needed to build a converter instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcConfig {
    /// Input-referred differential full scale.
    pub full_scale: f64,
    pub schedule: ClockSchedule,
    pub frontend: FrontendSpec,
    /// Shared comparator parameters. Its `full_scale` is ignored: trip points
    /// are placed on the charge-shared node, i.e. at `full_scale * c_s / (c_s + c_par)`.
    pub bank: FlashBankSpec,
    pub seed: u64,
}

impl AdcConfig {
    /// Ideal converter at `fs`: instant settling, no parasitic, no kick-back,
    /// no comparator noise, no trims.
    pub fn ideal(fs: f64) -> Result<Self, PipelineError> {
        Ok(Self {
            full_scale: DEFAULT_FULL_SCALE,
            schedule: build_schedule(
                fs,
                crate::timing::DEFAULT_TRACK_DUTY,
                crate::timing::DEFAULT_CK1_DELAY,
                crate::timing::DEFAULT_CK2_LEAD,
            )?,
            frontend: FrontendSpec { c_par: 0.0, ..FrontendSpec::default() },
            bank: FlashBankSpec::default(),
            seed: 0,
        })
    }

    /// Bank spec with its full scale referred to the comparator input node.
    pub fn node_bank_spec(&self) -> FlashBankSpec {
        FlashBankSpec {
            full_scale: self.full_scale * self.frontend.share_gain(),
            clock_mode: self.frontend.kickback_mode,
            ..self.bank
        }
    }
}

/// Result of converting one record.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub codes: Vec<AdcCode>,
    /// Conversions whose corrected thermometer word still held a bubble; those
    /// were decoded by counting ones.
    pub residual_bubbles: usize,
}

impl Conversion {
    pub fn values(&self) -> Vec<u8> {
        self.codes.iter().map(|c| c.value).collect()
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.codes.iter().map(|c| f64::from(c.value)).collect()
    }
}

/// Behavioral 4-bit folding-flash converter.
#[derive(Debug, Clone)]
pub struct FoldingFlashAdc {
    config: AdcConfig,
    bank: FlashBank,
    noise_rng: ChaCha8Rng,
    kickback_rng: ChaCha8Rng,
}

impl FoldingFlashAdc {
    pub fn new(config: AdcConfig) -> Result<Self, PipelineError> {
        config.frontend.validate()?;
        let bank = build_flash_bank(&config.node_bank_spec())?;
        Ok(Self::assemble(config, bank))
    }

    /// Uses a prebuilt bank as is, e.g. one with a deliberately moved trip point.
    pub fn with_bank(config: AdcConfig, bank: FlashBank) -> Result<Self, PipelineError> {
        config.frontend.validate()?;
        Ok(Self::assemble(config, bank))
    }

    fn assemble(config: AdcConfig, bank: FlashBank) -> Self {
        let noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut kickback_rng = ChaCha8Rng::seed_from_u64(config.seed);
        kickback_rng.set_stream(1);
        Self { config, bank, noise_rng, kickback_rng }
    }

    pub fn config(&self) -> &AdcConfig {
        &self.config
    }

    pub fn bank(&self) -> &FlashBank {
        &self.bank
    }

    /// Converts one held (post track-and-hold) differential value.
    pub fn convert_held(&mut self, held: f64) -> (AdcCode, bool) {
        let folded = fold(held);
        let node = charge_share(folded.folded_value, &self.config.frontend);
        let kicked = inject_kickback(node, FLASH_COMPARATORS, &self.config.frontend, &mut self.kickback_rng);
        let raw = ThermometerWord::new(self.bank.sample(kicked.compared, &mut self.noise_rng));
        let corrected = bubble_correct(&raw);
        let (count, residual) = match therm_to_count(&corrected) {
            Ok(count) => (count, false),
            Err(_) => (corrected.ones(), true),
        };
        let code = assemble_code(folded.sign_bit, count).expect("count bounded by bank size");
        (code, residual)
    }

    pub fn convert(&mut self, input: &Waveform) -> Result<Conversion, PipelineError> {
        let held = track_and_hold(input, &self.config.schedule, &self.config.frontend)?;
        let mut residual_bubbles = 0;
        let codes = held
            .into_iter()
            .map(|v| {
                let (code, residual) = self.convert_held(v);
                residual_bubbles += usize::from(residual);
                code
            })
            .collect();
        Ok(Conversion { codes, residual_bubbles })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::oracle_quantize;
    use crate::frontend::ClockMode;
    use crate::signal::{gen_ramp, gen_sine};

    #[test]
    fn ideal_ramp_matches_oracle() {
        let mut adc = FoldingFlashAdc::new(AdcConfig::ideal(1e9).unwrap()).unwrap();
        let w = gen_ramp(-0.27, 0.27, 20_001, 1e9).unwrap();
        let conv = adc.convert(&w).unwrap();
        for (v, c) in w.samples().iter().zip(&conv.codes) {
            assert_eq!(c.value, oracle_quantize(*v, 0.5), "v = {v}");
        }
        assert_eq!(conv.residual_bubbles, 0);
    }

    #[test]
    fn parasitic_is_absorbed_by_node_referred_trips() {
        let mut cfg = AdcConfig::ideal(1e9).unwrap();
        cfg.frontend.c_par = 50e-15;
        let mut adc = FoldingFlashAdc::new(cfg).unwrap();
        let w = gen_ramp(-0.27, 0.27, 4_097, 1e9).unwrap();
        let conv = adc.convert(&w).unwrap();
        let mismatches =
            w.samples().iter().zip(&conv.codes).filter(|(v, c)| c.value != oracle_quantize(**v, 0.5)).count();
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn codes_straddle_zero() {
        let mut adc = FoldingFlashAdc::new(AdcConfig::ideal(1e9).unwrap()).unwrap();
        assert_eq!(adc.convert_held(-1e-9).0.value, 7);
        assert_eq!(adc.convert_held(0.0).0.value, 7);
        assert_eq!(adc.convert_held(1e-9).0.value, 8);
        assert_eq!(adc.convert_held(0.3).0.value, 15);
        assert_eq!(adc.convert_held(-0.3).0.value, 0);
    }

    #[test]
    fn two_clock_kickback_is_invisible() {
        let w = gen_sine(0.236, 409.0 / 4096.0 * 1e9, 1e9, 4096, 0.0, 0.5).unwrap();
        let clean = FoldingFlashAdc::new(AdcConfig::ideal(1e9).unwrap()).unwrap().convert(&w).unwrap();
        let mut cfg = AdcConfig::ideal(1e9).unwrap();
        cfg.frontend.kickback_amp = 20e-3;
        cfg.frontend.kickback_mode = ClockMode::TwoClock;
        let kicked = FoldingFlashAdc::new(cfg.clone()).unwrap().convert(&w).unwrap();
        assert_eq!(clean, kicked);
        cfg.frontend.kickback_mode = ClockMode::SingleClock;
        let single = FoldingFlashAdc::new(cfg).unwrap().convert(&w).unwrap();
        assert_ne!(clean, single);
    }

    #[test]
    fn noisy_conversion_is_seed_deterministic() {
        let w = gen_sine(0.236, 409.0 / 4096.0 * 1e9, 1e9, 4096, 0.0, 0.5).unwrap();
        let mut cfg = AdcConfig::ideal(1e9).unwrap();
        cfg.bank.noise_sigma = 10e-3;
        cfg.seed = 42;
        let a = FoldingFlashAdc::new(cfg.clone()).unwrap().convert(&w).unwrap();
        let b = FoldingFlashAdc::new(cfg.clone()).unwrap().convert(&w).unwrap();
        assert_eq!(a, b);
        cfg.seed = 43;
        let c = FoldingFlashAdc::new(cfg).unwrap().convert(&w).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_bank_is_reported() {
        let mut cfg = AdcConfig::ideal(1e9).unwrap();
        cfg.bank.v_ov = 0.2;
        assert!(matches!(
            FoldingFlashAdc::new(cfg),
            Err(PipelineError::Comparator(ComparatorError::BankInfeasible { .. }))
        ));
    }
}
