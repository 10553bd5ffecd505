//! Per-conversion clock events: track/hold, input sampling (CK1) and
//! latch decision (CK2). Edges are ideal.

use serde::Serialize;
use thiserror::Error;

/// Default CK1 delay after the hold edge and CK2 lead before the next track edge.
pub const DEFAULT_CK1_DELAY: f64 = 100e-12;
pub const DEFAULT_CK2_LEAD: f64 = 100e-12;
pub const DEFAULT_TRACK_DUTY: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("schedule infeasible: {0}")]
    Infeasible(String),
    #[error("invalid delay chain: stage {index} has non-positive delay {delay}")]
    NonPositiveDelay { index: usize, delay: f64 },
}

/// Event offsets within one conversion period, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSchedule {
    pub period: f64,
    pub track_start: f64,
    pub hold_start: f64,
    pub ck1_time: f64,
    pub ck2_time: f64,
}

/// Schedule in integer picoseconds, as echoed into run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClockSchedulePs {
    pub period_ps: i64,
    pub track_start_ps: i64,
    pub hold_start_ps: i64,
    pub ck1_ps: i64,
    pub ck2_ps: i64,
}

impl ClockSchedule {
    /// Length of the track phase.
    pub fn track_time(&self) -> f64 {
        self.hold_start - self.track_start
    }

    pub fn ck1_delay(&self) -> f64 {
        self.ck1_time - self.hold_start
    }

    pub fn ck2_lead(&self) -> f64 {
        self.track_start + self.period - self.ck2_time
    }

    pub fn to_picoseconds(&self) -> ClockSchedulePs {
        let ps = |t: f64| (t * 1e12).round() as i64;
        ClockSchedulePs {
            period_ps: ps(self.period),
            track_start_ps: ps(self.track_start),
            hold_start_ps: ps(self.hold_start),
            ck1_ps: ps(self.ck1_time),
            ck2_ps: ps(self.ck2_time),
        }
    }
}

pub fn build_schedule(fs: f64, track_duty: f64, ck1_delay: f64, ck2_lead: f64) -> Result<ClockSchedule, TimingError> {
    let infeasible = |msg: String| Err(TimingError::Infeasible(msg));
    if !(fs > 0.0 && fs.is_finite()) {
        return infeasible(format!("sample rate must be positive, got {fs}"));
    }
    if !(track_duty > 0.0 && track_duty < 1.0) {
        return infeasible(format!("0 < track_duty < 1 violated (track_duty = {track_duty})"));
    }
    if !(ck1_delay >= 0.0 && ck2_lead >= 0.0) {
        return infeasible(format!("delays must be non-negative (ck1_delay = {ck1_delay}, ck2_lead = {ck2_lead})"));
    }
    let period = 1.0 / fs;
    let track_start = 0.0;
    let hold_start = track_duty * period;
    let ck1_time = hold_start + ck1_delay;
    let ck2_time = period - ck2_lead;
    if !(hold_start < ck1_time) {
        return infeasible(format!("hold_start < ck1_time violated ({hold_start:e} >= {ck1_time:e})"));
    }
    if !(ck1_time < ck2_time) {
        return infeasible(format!(
            "ck1_delay + ck2_lead < (1 - track_duty)/fs violated ({:e} >= {:e})",
            ck1_delay + ck2_lead,
            period - hold_start
        ));
    }
    if !(ck2_time < track_start + period) {
        return infeasible(format!("ck2_time < period violated ({ck2_time:e} >= {period:e})"));
    }
    Ok(ClockSchedule { period, track_start, hold_start, ck1_time, ck2_time })
}

/// Edge times produced by a chain of delay stages (cumulative sums).
pub fn delay_chain(stage_delays: &[f64]) -> Result<Vec<f64>, TimingError> {
    let mut t = 0.0;
    stage_delays
        .iter()
        .enumerate()
        .map(|(index, &delay)| {
            if !(delay > 0.0) {
                return Err(TimingError::NonPositiveDelay { index, delay });
            }
            t += delay;
            Ok(t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn nominal_schedule() {
        let s = build_schedule(1e9, 0.5, 100e-12, 100e-12).unwrap();
        assert_relative_eq!(s.period, 1e-9);
        assert_relative_eq!(s.hold_start, 0.5e-9);
        assert_relative_eq!(s.ck1_time, 0.6e-9);
        assert_relative_eq!(s.ck2_time, 0.9e-9);
        assert_eq!(
            s.to_picoseconds(),
            ClockSchedulePs { period_ps: 1000, track_start_ps: 0, hold_start_ps: 500, ck1_ps: 600, ck2_ps: 900 }
        );
        assert_relative_eq!(s.ck1_delay(), 100e-12, max_relative = 1e-9);
        assert_relative_eq!(s.ck2_lead(), 100e-12, max_relative = 1e-9);
    }

    #[test]
    fn zero_delays_rejected() {
        let err = build_schedule(1e9, 0.5, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("hold_start < ck1_time"), "{err}");
        let err = build_schedule(1e9, 0.5, 100e-12, 0.0).unwrap_err();
        assert!(err.to_string().contains("ck2_time < period"), "{err}");
    }

    #[test]
    fn overlapping_clocks_rejected() {
        let err = build_schedule(1e9, 0.5, 300e-12, 300e-12).unwrap_err();
        assert!(err.to_string().contains("ck1_delay + ck2_lead"), "{err}");
    }

    #[test]
    fn bad_duty_rejected() {
        assert!(build_schedule(1e9, 0.0, 1e-12, 1e-12).is_err());
        assert!(build_schedule(1e9, 1.0, 1e-12, 1e-12).is_err());
    }

    #[test]
    fn delay_chain_examples() {
        assert_eq!(delay_chain(&[]).unwrap(), Vec::<f64>::new());
        let e = delay_chain(&[50e-12, 50e-12]).unwrap();
        assert_relative_eq!(e[0], 50e-12);
        assert_relative_eq!(e[1], 100e-12);
        let e = delay_chain(&[100e-12; 4]).unwrap();
        for (k, t) in e.iter().enumerate() {
            assert_relative_eq!(*t, (k + 1) as f64 * 100e-12, max_relative = 1e-12);
        }
        assert_eq!(delay_chain(&[1e-12, 0.0]), Err(TimingError::NonPositiveDelay { index: 1, delay: 0.0 }));
    }

    proptest! {
        #[test]
        fn schedule_scales_with_rate(k in 0.1f64..10.0, duty in 0.2f64..0.8) {
            let base = build_schedule(1e9, duty, 20e-12, 20e-12).unwrap();
            let scaled = build_schedule(1e9 * k, duty, 20e-12 / k, 20e-12 / k).unwrap();
            for (a, b) in [
                (base.period, scaled.period),
                (base.hold_start, scaled.hold_start),
                (base.ck1_time, scaled.ck1_time),
                (base.ck2_time, scaled.ck2_time),
            ] {
                prop_assert!((a / k - b).abs() <= 1e-12 * a / k);
            }
        }

        #[test]
        fn delay_chain_strictly_increasing(d in proptest::collection::vec(1e-15f64..1e-9, 0..20)) {
            let e = delay_chain(&d).unwrap();
            prop_assert!(e.windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn feasible_schedules_are_ordered(duty in 0.05f64..0.95, a in 1e-13f64..1e-9, b in 1e-13f64..1e-9) {
            if let Ok(s) = build_schedule(1e9, duty, a, b) {
                prop_assert!(s.track_start < s.hold_start);
                prop_assert!(s.hold_start < s.ck1_time);
                prop_assert!(s.ck1_time < s.ck2_time);
                prop_assert!(s.ck2_time < s.track_start + s.period);
            }
        }
    }
}
