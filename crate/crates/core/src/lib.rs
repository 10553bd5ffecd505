//! Behavioral model of a 4-bit, 1 GS/s folding-flash ADC.
//!
//! A track-and-hold feeds a 1-bit sign-chopper folding stage; the folded
//! magnitude is charge-shared onto the input of a 3-bit flash built from
//! seven unbalanced double-tail comparators whose references come from
//! reset-transistor width mismatch. The thermometer output is bubble
//! corrected and assembled with the fold MSB into a 4-bit binary/gray code.
//!
//! The [`metrics`] module characterizes the resulting code streams.

// NaN must fail validation, so checks are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comparator;
pub mod digital;
pub mod frontend;
pub mod metrics;
pub mod pipeline;
pub mod signal;
pub mod timing;

pub use comparator::{build_flash_bank, ComparatorError, ComparatorSpec, FlashBank, FlashBankSpec, FLASH_COMPARATORS};
pub use digital::{AdcCode, DigitalError, ThermometerWord};
pub use frontend::{ClockMode, FoldedSample, FrontendError, FrontendSpec, KickbackModel};
pub use metrics::{LinearityReport, MetricsError, PowerFractions, PowerLedger, SpectrumReport, Window};
pub use pipeline::{AdcConfig, Conversion, FoldingFlashAdc, PipelineError};
pub use signal::{SignalError, Waveform};
pub use timing::{ClockSchedule, TimingError};
