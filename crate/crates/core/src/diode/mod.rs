//! One-way optical link built from the emanation, MAC and recovery pieces.

mod circuit;
mod link;
mod oneway;

use thiserror::Error;

use crate::emanation::EmanationError;
use crate::recovery::RecoveryError;

pub use circuit::{
    contention_check, photodiode_receive, ContentionReport, ReceivedLine, ReceiverCircuit,
};
pub use link::{diode_send, diode_send_captured, DiodeLink, DiodeTransfer, LinkReport};
pub use oneway::{
    assert_unidirectional, interface_audit, AuditEntry, FloodProgram, NoOpProgram, ReadAllProgram,
    ReceivePort, ReceiveSideProgram, Topology, UnidirectionalityEvidence, WriteBackProgram,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiodeError {
    #[error("invalid link configuration: {0}")]
    Config(String),
    #[error("receive side has no path back to the emitter")]
    NoReturnPath,
    #[error(transparent)]
    Emanation(#[from] EmanationError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}
