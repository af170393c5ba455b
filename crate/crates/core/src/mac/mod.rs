//! Clean-room Ethernet MAC model over a 4-bit MII.

mod crc;
mod frame;
mod mii;
mod pipeline;
mod signature;

use thiserror::Error;

pub use crc::{crc32, crc32_fcs, Crc32, CRC32_RESIDUE};
pub use frame::{
    build_frame, EthernetFrame, MacAddr, FCS_LEN, HEADER_LEN, MAX_FRAME, MAX_PAYLOAD, MIN_FRAME,
    MIN_PAYLOAD,
};
pub use mii::{
    abort_transmission, mii_marshal, MiiNibbleStream, MII_CLOCK_PERIOD, PREAMBLE_LEN, SFD_OCTET,
};
pub use pipeline::{
    cut_through_peek, pipeline_step, receive, validate_frame, Field, FieldValue, FrameVerdict,
    Phase, PipelineState, RejectReason, Slot, SlotTag, PIPELINE_SLOTS,
};
pub use signature::{sign_frame, verify_frame, SignatureHook, TestSigner};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MacError {
    #[error("payload of {0} octets exceeds the 1500-octet maximum")]
    OversizePayload(usize),
    #[error("nibble value {0:#x} does not fit in 4 bits")]
    InvalidNibble(u8),
    #[error("pipeline already finished this frame")]
    TerminalState,
    #[error("abort point {abort_at} outside the frame body of a {len}-nibble stream")]
    AbortOutOfRange { abort_at: usize, len: usize },
    #[error("signature invalid")]
    SignatureInvalid,
    #[error("malformed input: {0}")]
    Malformed(String),
}
