//! Getting data back out of optical traces, and measuring how much leaks.

mod classify;
mod leakage;
mod serial;
mod threshold;

use thiserror::Error;

use crate::emanation::EmanationError;

pub use classify::{
    classify_trace, classify_trace_with, recover_serial, ClassificationReport, RecoveryOptions,
};
pub use leakage::{
    bit_error_rate, check_stretch_monotonic, leakage_mutual_information, StretchPoint, StretchSweep,
};
pub use serial::{estimate_baud, uart_decode, DecodeResult, STANDARD_BAUD_RATES};
pub use threshold::{threshold_detect, FLAT_RANGE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("no signal: trace is flat or empty")]
    NoSignal,
    #[error("baud estimation failed: {0}")]
    BaudEstimation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Emanation(#[from] EmanationError),
}
