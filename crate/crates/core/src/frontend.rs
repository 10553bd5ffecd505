//! Behavioral analog front end: track-and-hold with first-order settling,
//! charge sharing onto the flash input parasitic, the sign-chopper fold and
//! kick-back injection at the flash input node.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Waveform;
use crate::timing::ClockSchedule;

pub const DEFAULT_C_S: f64 = 500e-15;
pub const DEFAULT_C_PAR: f64 = 50e-15;

#[derive(Debug, Error, PartialEq)]
pub enum FrontendError {
    #[error("invalid frontend spec: {0}")]
    InvalidSpec(String),
    #[error("schedule period {schedule:e} s does not match waveform sample period {waveform:e} s")]
    PeriodMismatch { schedule: f64, waveform: f64 },
}

/// Clocking of the flash comparators, which decides when kick-back lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Sampling and decision share one edge; kick-back corrupts the value being decided.
    SingleClock,
    /// CK1 samples, CK2 decides; kick-back arrives after the sampling instant.
    TwoClock,
}

/// Shape of the kick-back disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickbackModel {
    /// Fixed magnitude, signed like the sampled value (worst case).
    Coherent,
    /// Fixed magnitude, random sign drawn from the seeded generator.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendSpec {
    pub c_s: f64,
    pub c_par: f64,
    pub settling_tau: f64,
    pub kickback_amp: f64,
    pub kickback_mode: ClockMode,
    pub kickback_model: KickbackModel,
}

impl Default for FrontendSpec {
    fn default() -> Self {
        Self {
            c_s: DEFAULT_C_S,
            c_par: DEFAULT_C_PAR,
            settling_tau: 0.0,
            kickback_amp: 0.0,
            kickback_mode: ClockMode::TwoClock,
            kickback_model: KickbackModel::Coherent,
        }
    }
}

impl FrontendSpec {
    pub fn validate(&self) -> Result<(), FrontendError> {
        let bad = |m: &str| Err(FrontendError::InvalidSpec(m.to_owned()));
        if !(self.c_s > 0.0 && self.c_s.is_finite()) {
            return bad("c_s must be positive");
        }
        if !(self.c_par >= 0.0 && self.c_par.is_finite()) {
            return bad("c_par must be non-negative");
        }
        if !(self.settling_tau >= 0.0 && self.settling_tau.is_finite()) {
            return bad("settling_tau must be non-negative");
        }
        if !(self.kickback_amp >= 0.0 && self.kickback_amp.is_finite()) {
            return bad("kickback_amp must be non-negative");
        }
        Ok(())
    }

    /// Charge-sharing attenuation `c_s / (c_s + c_par)`.
    pub fn share_gain(&self) -> f64 {
        self.c_s / (self.c_s + self.c_par)
    }

    /// Fraction of the previous held value left after one track phase.
    pub fn settling_residue(&self, track_time: f64) -> f64 {
        if self.settling_tau == 0.0 {
            0.0
        } else {
            (-track_time / self.settling_tau).exp()
        }
    }
}

/// Output of the 1-bit folding stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedSample {
    /// MSB: 1 when the differential input is strictly positive.
    pub sign_bit: u8,
    pub folded_value: f64,
}

/// Held values at each hold instant, with first-order settling toward the input.
///
/// The hold capacitor starts discharged.
pub fn track_and_hold(w: &Waveform, sched: &ClockSchedule, spec: &FrontendSpec) -> Result<Vec<f64>, FrontendError> {
    spec.validate()?;
    let rel = (sched.period - w.sample_period()).abs() / w.sample_period();
    if rel > 1e-9 {
        return Err(FrontendError::PeriodMismatch { schedule: sched.period, waveform: w.sample_period() });
    }
    let residue = spec.settling_residue(sched.track_time());
    let mut held = 0.0;
    Ok(w.samples()
        .iter()
        .map(|&v| {
            held = if residue == 0.0 { v } else { v * (1.0 - residue) + held * residue };
            held
        })
        .collect())
}

pub fn charge_share(held: f64, spec: &FrontendSpec) -> f64 {
    held * spec.share_gain()
}

pub fn fold(v_diff: f64) -> FoldedSample {
    FoldedSample { sign_bit: u8::from(v_diff > 0.0), folded_value: v_diff.abs() }
}

/// What the flash comparators see for one conversion, and what the input
/// node shows right after the decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickbackOutcome {
    pub compared: f64,
    pub post_decision: f64,
}

/// Applies the kick-back disturbance of `decision_count` firing comparators.
///
/// The total amplitude is applied once per conversion regardless of how many
/// comparators fire; zero firing comparators inject nothing. `rng` is only
/// consulted by [`KickbackModel::Random`].
pub fn inject_kickback<R: Rng + ?Sized>(
    sampled: f64,
    decision_count: usize,
    spec: &FrontendSpec,
    rng: &mut R,
) -> KickbackOutcome {
    if spec.kickback_amp == 0.0 || decision_count == 0 {
        return KickbackOutcome { compared: sampled, post_decision: sampled };
    }
    let sign = match spec.kickback_model {
        KickbackModel::Coherent => {
            if sampled > 0.0 {
                1.0
            } else if sampled < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        KickbackModel::Random => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    };
    let disturbed = sampled + sign * spec.kickback_amp;
    match spec.kickback_mode {
        ClockMode::SingleClock => KickbackOutcome { compared: disturbed, post_decision: disturbed },
        ClockMode::TwoClock => KickbackOutcome { compared: sampled, post_decision: disturbed },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_ramp, Waveform};
    use crate::timing::build_schedule;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sched() -> ClockSchedule {
        build_schedule(1e9, 0.5, 100e-12, 100e-12).unwrap()
    }

    #[test]
    fn ideal_track_and_hold_is_identity() {
        let w = gen_ramp(-0.2, 0.3, 17, 1e9).unwrap();
        let held = track_and_hold(&w, &sched(), &FrontendSpec::default()).unwrap();
        assert_eq!(held, w.samples());
    }

    #[test]
    fn one_percent_settling_residue() {
        let s = sched();
        let spec = FrontendSpec { settling_tau: s.track_time() / 100f64.ln(), ..Default::default() };
        let w = Waveform::new(vec![1.0, 1.0], 1e-9, 2.0).unwrap();
        let held = track_and_hold(&w, &s, &spec).unwrap();
        assert_abs_diff_eq!(held[0], 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 - held[1], 1e-4, epsilon = 1e-12);
    }

    #[test]
    fn constant_input_holds_constant() {
        let s = sched();
        let spec = FrontendSpec { settling_tau: 1e-12, ..Default::default() };
        let w = Waveform::new(vec![0.1; 10], 1e-9, 0.5).unwrap();
        let held = track_and_hold(&w, &s, &spec).unwrap();
        for v in held {
            assert_abs_diff_eq!(v, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn mismatched_period_rejected() {
        let w = Waveform::new(vec![0.0; 4], 2e-9, 0.5).unwrap();
        assert!(matches!(
            track_and_hold(&w, &sched(), &FrontendSpec::default()),
            Err(FrontendError::PeriodMismatch { .. })
        ));
    }

    #[test]
    fn charge_share_examples() {
        let unity = FrontendSpec { c_par: 0.0, ..Default::default() };
        assert_eq!(charge_share(0.2, &unity), 0.2);
        let spec = FrontendSpec { c_s: 500e-15, c_par: 50e-15, ..Default::default() };
        assert_abs_diff_eq!(charge_share(0.2, &spec), 0.181818, epsilon = 1e-6);
        assert_eq!(charge_share(0.0, &spec), 0.0);
    }

    #[test]
    fn fold_examples() {
        assert_eq!(fold(0.1), FoldedSample { sign_bit: 1, folded_value: 0.1 });
        assert_eq!(fold(-0.1), FoldedSample { sign_bit: 0, folded_value: 0.1 });
        assert_eq!(fold(0.0), FoldedSample { sign_bit: 0, folded_value: 0.0 });
    }

    #[test]
    fn kickback_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let off = FrontendSpec::default();
        assert_eq!(inject_kickback(0.1, 7, &off, &mut rng).compared, 0.1);

        let single = FrontendSpec { kickback_amp: 20e-3, kickback_mode: ClockMode::SingleClock, ..Default::default() };
        assert_abs_diff_eq!(inject_kickback(0.1, 7, &single, &mut rng).compared, 0.12, epsilon = 1e-15);

        let two = FrontendSpec { kickback_amp: 3e-3, kickback_mode: ClockMode::TwoClock, ..Default::default() };
        let out = inject_kickback(0.1, 7, &two, &mut rng);
        assert_eq!(out.compared, 0.1);
        assert_abs_diff_eq!(out.post_decision, 0.103, epsilon = 1e-15);
        assert_eq!(inject_kickback(0.1, 0, &single, &mut rng).compared, 0.1);
    }

    #[test]
    fn random_kickback_is_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = FrontendSpec {
            kickback_amp: 1e-3,
            kickback_mode: ClockMode::SingleClock,
            kickback_model: KickbackModel::Random,
            ..Default::default()
        };
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| inject_kickback(0.1, 7, &spec, &mut rng).compared - 0.1).sum::<f64>() / n as f64;
        assert!(mean.abs() < 5e-5, "mean {mean}");
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = FrontendSpec { c_s: 0.0, ..Default::default() };
        assert!(spec.validate().is_err());
        let spec = FrontendSpec { kickback_amp: -1e-3, ..Default::default() };
        assert!(spec.validate().is_err());
    }

    proptest! {
        #[test]
        fn fold_magnitude_is_even(v in -1.0f64..1.0) {
            prop_assert_eq!(fold(v).folded_value, fold(-v).folded_value);
        }

        #[test]
        fn charge_share_is_bounded(v in -1.0f64..1.0, c_s in 1e-15f64..1e-12, c_par in 0.0f64..1e-12) {
            let spec = FrontendSpec { c_s, c_par, ..Default::default() };
            prop_assert!(charge_share(v, &spec).abs() <= v.abs());
        }

        #[test]
        fn two_clock_never_changes_compared_value(v in 0.0f64..0.3, amp in 0.0f64..0.05) {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let spec = FrontendSpec { kickback_amp: amp, kickback_mode: ClockMode::TwoClock, ..Default::default() };
            prop_assert_eq!(inject_kickback(v, 7, &spec, &mut rng).compared, v);
        }
    }
}
