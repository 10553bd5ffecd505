//! Unbalanced double-tail comparator with a built-in reference.
//!
//! The trip point is set by mismatching the widths of the two reset
//! transistors. With the input pair and latch devices matched, only the reset
//! devices load the intermediate nodes differently:
//!
//! ```text
//! C_diff = [Cgs1 + Cgd1 (1 + Acc)] - [Cgs2 + Cgd2 (1 + Acc)]
//! C_sum  = [Cgs1 + Cgd1 (1 + Acc)] + [Cgs2 + Cgd2 (1 + Acc)]
//! V_off  = (V_ov / 2) * C_diff / C_sum
//! ```
//!
//! and with triode-region `Cgs = Cgd = Cox W L` at a shared gate length this
//! collapses to `V_off = (V_ov / 2) (W1 - W2) / (W1 + W2)`. Both routes are
//! implemented so they can be checked against each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::frontend::ClockMode;

/// Number of comparators in the 3-bit flash.
pub const FLASH_COMPARATORS: usize = 7;

pub const DEFAULT_V_OV: f64 = 0.45;
pub const DEFAULT_W_SUM: f64 = 2e-6;
pub const DEFAULT_LENGTH: f64 = 60e-9;
pub const DEFAULT_A_CC: f64 = 10.0;
/// 10 fF/um^2.
pub const DEFAULT_C_OX: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ComparatorError {
    #[error("invalid comparator spec: {0}")]
    InvalidSpec(String),
    #[error(
        "unreachable offset: {target:e} V is outside the open range (-{limit:e}, {limit:e}) V set by v_ov = {v_ov:e} V"
    )]
    UnreachableOffset { target: f64, limit: f64, v_ov: f64 },
    #[error("flash bank infeasible: top trip {top_trip:e} V needs v_ov > {min_v_ov:e} V, got {v_ov:e} V")]
    BankInfeasible { top_trip: f64, min_v_ov: f64, v_ov: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparatorSpec {
    pub w_r1: f64,
    pub w_r2: f64,
    /// Gate length shared by both reset devices.
    pub length: f64,
    /// Overdrive of the input pair.
    pub v_ov: f64,
    /// Gain of the cross-coupled inverters.
    pub a_cc: f64,
    /// Oxide capacitance per unit area.
    pub c_ox: f64,
    /// Additive offset correction (bulk trim).
    pub trim: f64,
    /// Input-referred noise, standard deviation.
    pub noise_sigma: f64,
    pub clock_mode: ClockMode,
}

impl Default for ComparatorSpec {
    fn default() -> Self {
        Self {
            w_r1: DEFAULT_W_SUM / 2.0,
            w_r2: DEFAULT_W_SUM / 2.0,
            length: DEFAULT_LENGTH,
            v_ov: DEFAULT_V_OV,
            a_cc: DEFAULT_A_CC,
            c_ox: DEFAULT_C_OX,
            trim: 0.0,
            noise_sigma: 0.0,
            clock_mode: ClockMode::TwoClock,
        }
    }
}

impl ComparatorSpec {
    pub fn validate(&self) -> Result<(), ComparatorError> {
        let positive = [
            ("w_r1", self.w_r1),
            ("w_r2", self.w_r2),
            ("length", self.length),
            ("c_ox", self.c_ox),
            ("v_ov", self.v_ov),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ComparatorError::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.a_cc >= 0.0 && self.a_cc.is_finite()) {
            return Err(ComparatorError::InvalidSpec(format!("a_cc must be non-negative, got {}", self.a_cc)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(ComparatorError::InvalidSpec(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !self.trim.is_finite() {
            return Err(ComparatorError::InvalidSpec("trim must be finite".into()));
        }
        Ok(())
    }

    /// Decision threshold including trim.
    pub fn trip_point(&self) -> f64 {
        offset_from_widths(self) + self.trim
    }

    /// Behavioral decision: 1 iff `v_in + noise > trip`. Noise is drawn only
    /// when `noise_sigma > 0`.
    pub fn decide<R: Rng + ?Sized>(&self, v_in: f64, rng: &mut R) -> bool {
        let noise = if self.noise_sigma > 0.0 { self.noise_sigma * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
        v_in + noise > self.trip_point()
    }
}

/// Parasitic capacitances of the reset pair and the resulting imbalance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceBreakdown {
    pub c_gs_r1: f64,
    pub c_gd_r1: f64,
    pub c_gs_r2: f64,
    pub c_gd_r2: f64,
    pub c_diff: f64,
    pub c_sum: f64,
}

/// Triode-region gate capacitances, `Cgs = Cgd = Cox W L`.
pub fn triode_caps(w: f64, l: f64, c_ox: f64) -> (f64, f64) {
    let c = c_ox * w * l;
    (c, c)
}

pub fn cap_breakdown(spec: &ComparatorSpec) -> CapacitanceBreakdown {
    let (c_gs_r1, c_gd_r1) = triode_caps(spec.w_r1, spec.length, spec.c_ox);
    let (c_gs_r2, c_gd_r2) = triode_caps(spec.w_r2, spec.length, spec.c_ox);
    let miller = 1.0 + spec.a_cc;
    let load_1 = c_gs_r1 + c_gd_r1 * miller;
    let load_2 = c_gs_r2 + c_gd_r2 * miller;
    CapacitanceBreakdown { c_gs_r1, c_gd_r1, c_gs_r2, c_gd_r2, c_diff: load_1 - load_2, c_sum: load_1 + load_2 }
}

/// Trip-point shift from a load imbalance: `(v_ov / 2) * c_diff / c_sum`.
pub fn offset_general(v_ov: f64, c_diff: f64, c_sum: f64) -> f64 {
    v_ov / 2.0 * (c_diff / c_sum)
}

/// Trip-point shift from reset-device widths at a shared gate length.
pub fn offset_from_widths(spec: &ComparatorSpec) -> f64 {
    spec.v_ov / 2.0 * (spec.w_r1 - spec.w_r2) / (spec.w_r1 + spec.w_r2)
}

/// Splits `w_sum` between the reset devices so the comparator trips at `target`.
pub fn widths_for_offset(target: f64, v_ov: f64, w_sum: f64) -> Result<(f64, f64), ComparatorError> {
    if !(v_ov > 0.0) {
        return Err(ComparatorError::InvalidSpec(format!("v_ov must be positive, got {v_ov}")));
    }
    if !(w_sum > 0.0) {
        return Err(ComparatorError::InvalidSpec(format!("w_sum must be positive, got {w_sum}")));
    }
    let limit = v_ov / 2.0;
    if !(target.abs() < limit) {
        return Err(ComparatorError::UnreachableOffset { target, limit, v_ov });
    }
    let ratio = target / limit;
    Ok((w_sum * (1.0 + ratio) / 2.0, w_sum * (1.0 - ratio) / 2.0))
}

/// One decision with noise drawn from a generator seeded with `rng_seed`.
pub fn compare(v_in: f64, spec: &ComparatorSpec, rng_seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    spec.decide(v_in, &mut rng)
}

/// Shared parameters of the seven flash comparators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlashBankSpec {
    /// Differential full scale referred to the node the comparators see.
    pub full_scale: f64,
    pub v_ov: f64,
    pub w_sum: f64,
    pub length: f64,
    pub a_cc: f64,
    pub c_ox: f64,
    pub noise_sigma: f64,
    pub clock_mode: ClockMode,
    pub trims: [f64; FLASH_COMPARATORS],
}

impl Default for FlashBankSpec {
    fn default() -> Self {
        Self {
            full_scale: crate::signal::DEFAULT_FULL_SCALE,
            v_ov: DEFAULT_V_OV,
            w_sum: DEFAULT_W_SUM,
            length: DEFAULT_LENGTH,
            a_cc: DEFAULT_A_CC,
            c_ox: DEFAULT_C_OX,
            noise_sigma: 0.0,
            clock_mode: ClockMode::TwoClock,
            trims: [0.0; FLASH_COMPARATORS],
        }
    }
}

impl FlashBankSpec {
    /// LSB of the folded 3-bit scale, `(full_scale / 2) / 8`.
    pub fn lsb(&self) -> f64 {
        self.full_scale / 16.0
    }

    /// Nominal trip of comparator `k` (0-based): `(k + 1) * lsb`.
    pub fn nominal_trip(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.lsb()
    }

    /// Smallest overdrive that can realize every nominal trip.
    pub fn min_v_ov(&self) -> f64 {
        2.0 * self.nominal_trip(FLASH_COMPARATORS - 1)
    }
}

/// Seven comparators whose built-in references split the folded range into
/// eight equal bins.
#[derive(Debug, Clone, PartialEq)]
pub struct FlashBank {
    comparators: [ComparatorSpec; FLASH_COMPARATORS],
}

impl FlashBank {
    pub fn from_comparators(comparators: [ComparatorSpec; FLASH_COMPARATORS]) -> Result<Self, ComparatorError> {
        for c in &comparators {
            c.validate()?;
        }
        Ok(Self { comparators })
    }

    pub fn comparators(&self) -> &[ComparatorSpec; FLASH_COMPARATORS] {
        &self.comparators
    }

    pub fn comparators_mut(&mut self) -> &mut [ComparatorSpec; FLASH_COMPARATORS] {
        &mut self.comparators
    }

    pub fn trip_points(&self) -> [f64; FLASH_COMPARATORS] {
        self.comparators.map(|c| c.trip_point())
    }

    /// Raw thermometer bits for one compared value.
    pub fn sample<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> [bool; FLASH_COMPARATORS] {
        let mut bits = [false; FLASH_COMPARATORS];
        for (bit, c) in bits.iter_mut().zip(&self.comparators) {
            *bit = c.decide(v, rng);
        }
        bits
    }

    /// Per-comparator record for reports: widths in micrometers, voltages in millivolts.
    pub fn records(&self) -> Vec<BankRecord> {
        self.comparators
            .iter()
            .enumerate()
            .map(|(index, c)| BankRecord {
                index,
                w_r1_um: c.w_r1 * 1e6,
                w_r2_um: c.w_r2 * 1e6,
                v_ov_mv: c.v_ov * 1e3,
                trim_mv: c.trim * 1e3,
                offset_mv: offset_from_widths(c) * 1e3,
                trip_mv: c.trip_point() * 1e3,
                noise_sigma_mv: c.noise_sigma * 1e3,
                clock_mode: c.clock_mode,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BankRecord {
    pub index: usize,
    pub w_r1_um: f64,
    pub w_r2_um: f64,
    pub v_ov_mv: f64,
    pub trim_mv: f64,
    pub offset_mv: f64,
    pub trip_mv: f64,
    pub noise_sigma_mv: f64,
    pub clock_mode: ClockMode,
}

pub fn build_flash_bank(spec: &FlashBankSpec) -> Result<FlashBank, ComparatorError> {
    if !(spec.full_scale > 0.0 && spec.full_scale.is_finite()) {
        return Err(ComparatorError::InvalidSpec(format!("full scale must be positive, got {}", spec.full_scale)));
    }
    let top_trip = spec.nominal_trip(FLASH_COMPARATORS - 1);
    if !(top_trip < spec.v_ov / 2.0) {
        return Err(ComparatorError::BankInfeasible { top_trip, min_v_ov: spec.min_v_ov(), v_ov: spec.v_ov });
    }
    let mut comparators = [ComparatorSpec::default(); FLASH_COMPARATORS];
    for (k, c) in comparators.iter_mut().enumerate() {
        let (w_r1, w_r2) = widths_for_offset(spec.nominal_trip(k), spec.v_ov, spec.w_sum)?;
        *c = ComparatorSpec {
            w_r1,
            w_r2,
            length: spec.length,
            v_ov: spec.v_ov,
            a_cc: spec.a_cc,
            c_ox: spec.c_ox,
            trim: spec.trims[k],
            noise_sigma: spec.noise_sigma,
            clock_mode: spec.clock_mode,
        };
    }
    FlashBank::from_comparators(comparators)
}
