//! One-way enforcement.
//!
//! Receive-side code only ever holds a [`ReceivePort`]. The emitter is built
//! from link parameters alone and takes frames plus whatever the topology's
//! back channel carries. On a [`Topology::OneWay`] link the back channel does
//! not exist, so nothing written on the receive side can reach the emitter.
//! [`Topology::WiredBack`] is a deliberately broken test double that feeds
//! receive-side writes into the next emitted frame.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::emanation::NoiseModel;
use crate::mac::{EthernetFrame, FrameVerdict};

use super::link::{run_link, DiodeLink};
use super::DiodeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    #[default]
    OneWay,
    /// Negative control: receive-side writes leak into the emitter.
    WiredBack,
}

/// The only handle receive-side code gets.
#[derive(Debug, Clone)]
pub struct ReceivePort {
    buffers: Vec<Vec<u8>>,
    verdicts: Vec<FrameVerdict>,
    back_channel: Option<Vec<u8>>,
    refused_writes: usize,
}

impl ReceivePort {
    pub(crate) fn new(topology: Topology) -> Self {
        Self {
            buffers: Vec::new(),
            verdicts: Vec::new(),
            back_channel: match topology {
                Topology::OneWay => None,
                Topology::WiredBack => Some(Vec::new()),
            },
            refused_writes: 0,
        }
    }

    pub(crate) fn deliver(&mut self, octets: Vec<u8>, verdict: FrameVerdict) {
        self.buffers.push(octets);
        self.verdicts.push(verdict);
    }

    pub(crate) fn take_back_channel(&mut self) -> Vec<u8> {
        self.back_channel
            .as_mut()
            .map(std::mem::take)
            .unwrap_or_default()
    }

    /// Decoded octets of every frame received so far, plus injected buffers.
    pub fn buffers(&self) -> &[Vec<u8>] {
        &self.buffers
    }

    pub fn verdicts(&self) -> &[FrameVerdict] {
        &self.verdicts
    }

    /// Pushes arbitrary octets into the receive buffers.
    pub fn inject(&mut self, octets: &[u8]) {
        self.buffers.push(octets.to_vec());
        if let Some(back) = &mut self.back_channel {
            back.extend_from_slice(octets);
        }
    }

    /// Tries to send octets back toward the emitter.
    pub fn write_back(&mut self, octets: &[u8]) -> Result<(), DiodeError> {
        match &mut self.back_channel {
            Some(back) => {
                back.extend_from_slice(octets);
                Ok(())
            }
            None => {
                self.refused_writes += 1;
                Err(DiodeError::NoReturnPath)
            }
        }
    }

    pub fn refused_writes(&self) -> usize {
        self.refused_writes
    }
}

/// Receive-side behaviour, run after every frame is delivered.
pub trait ReceiveSideProgram {
    fn name(&self) -> &str;

    fn on_frame(&mut self, port: &mut ReceivePort);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoOpProgram;

impl ReceiveSideProgram for NoOpProgram {
    fn name(&self) -> &str {
        "noop"
    }

    fn on_frame(&mut self, _port: &mut ReceivePort) {}
}

/// Fills the receive buffers with random octets after every frame.
#[derive(Debug, Clone)]
pub struct FloodProgram {
    rng: ChaCha8Rng,
    octets_per_frame: usize,
}

impl FloodProgram {
    pub fn new(seed: u64, octets_per_frame: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            octets_per_frame,
        }
    }
}

impl ReceiveSideProgram for FloodProgram {
    fn name(&self) -> &str {
        "flood"
    }

    fn on_frame(&mut self, port: &mut ReceivePort) {
        let mut junk = vec![0u8; self.octets_per_frame];
        self.rng.fill_bytes(&mut junk);
        port.inject(&junk);
    }
}

/// Reads everything visible on the port.
#[derive(Debug, Clone, Default)]
pub struct ReadAllProgram {
    pub octets_seen: usize,
    pub accepted_seen: usize,
}

impl ReceiveSideProgram for ReadAllProgram {
    fn name(&self) -> &str {
        "read_all"
    }

    fn on_frame(&mut self, port: &mut ReceivePort) {
        self.octets_seen = port.buffers().iter().map(Vec::len).sum();
        self.accepted_seen = port.verdicts().iter().filter(|v| v.is_accept()).count();
    }
}

/// Echoes the latest buffer back through the receive interface.
#[derive(Debug, Clone, Default)]
pub struct WriteBackProgram {
    pub refused: usize,
}

impl ReceiveSideProgram for WriteBackProgram {
    fn name(&self) -> &str {
        "write_back"
    }

    fn on_frame(&mut self, port: &mut ReceivePort) {
        let Some(last) = port.buffers().last().cloned() else {
            return;
        };
        if port.write_back(&last).is_err() {
            self.refused += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub operation: String,
    pub reaches_emitter: bool,
}

/// Receive-side operations and whether their effects can reach the emitter.
pub fn interface_audit(topology: Topology) -> Vec<AuditEntry> {
    let wired = topology == Topology::WiredBack;
    [
        ("ReceivePort::buffers", false),
        ("ReceivePort::verdicts", false),
        ("ReceivePort::refused_writes", false),
        ("ReceivePort::inject", wired),
        ("ReceivePort::write_back", wired),
    ]
    .into_iter()
    .map(|(op, reaches)| AuditEntry {
        operation: op.to_string(),
        reaches_emitter: reaches,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnidirectionalityEvidence {
    pub program: String,
    pub baseline_digest: String,
    pub adversarial_digest: String,
    pub digests_match: bool,
    pub audit: Vec<AuditEntry>,
    pub audit_clean: bool,
    pub passed: bool,
}

/// Paired-run check: once with an idle receive side, once with `program`.
///
/// Passes iff both runs emit bit-identical light and no receive-side
/// operation reaches the emitter.
pub fn assert_unidirectional(
    frames: &[EthernetFrame],
    link: &DiodeLink,
    noise: &NoiseModel,
    program: &mut dyn ReceiveSideProgram,
    topology: Topology,
) -> Result<UnidirectionalityEvidence, DiodeError> {
    let baseline = run_link(frames, link, noise, &mut NoOpProgram, topology, false)?;
    let adversarial = run_link(frames, link, noise, program, topology, false)?;
    let audit = interface_audit(topology);
    let audit_clean = audit.iter().all(|e| !e.reaches_emitter);
    let digests_match =
        baseline.report.emitter_trace_digest == adversarial.report.emitter_trace_digest;
    Ok(UnidirectionalityEvidence {
        program: program.name().to_string(),
        baseline_digest: baseline.report.emitter_trace_digest,
        adversarial_digest: adversarial.report.emitter_trace_digest,
        digests_match,
        audit,
        audit_clean,
        passed: digests_match && audit_clean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::{build_frame, MacAddr};

    fn frames() -> Vec<EthernetFrame> {
        (0..4u8)
            .map(|i| {
                build_frame(
                    MacAddr([2, 0, 0, 0, 0, i]),
                    MacAddr([2, 1, 1, 1, 1, 1]),
                    0x88B5,
                    &[i; 20],
                )
                .unwrap()
            })
            .collect()
    }

    fn check(
        program: &mut dyn ReceiveSideProgram,
        topology: Topology,
    ) -> UnidirectionalityEvidence {
        assert_unidirectional(
            &frames(),
            &DiodeLink::default(),
            &NoiseModel::gaussian(0.01, 3),
            program,
            topology,
        )
        .unwrap()
    }

    #[test]
    fn one_way_link_survives_every_program() {
        assert!(check(&mut NoOpProgram, Topology::OneWay).passed);
        assert!(check(&mut FloodProgram::new(1, 256), Topology::OneWay).passed);
        assert!(check(&mut ReadAllProgram::default(), Topology::OneWay).passed);
        let mut wb = WriteBackProgram::default();
        assert!(check(&mut wb, Topology::OneWay).passed);
        assert_eq!(wb.refused, 4);
    }

    #[test]
    fn wired_back_double_fails() {
        let ev = check(&mut FloodProgram::new(1, 256), Topology::WiredBack);
        assert!(!ev.digests_match);
        assert!(!ev.passed);
        let ev = check(&mut ReadAllProgram::default(), Topology::WiredBack);
        assert!(ev.digests_match);
        assert!(!ev.audit_clean);
        assert!(!ev.passed);
    }

    #[test]
    fn port_refuses_writes_without_back_channel() {
        let mut port = ReceivePort::new(Topology::OneWay);
        assert_eq!(port.write_back(b"x"), Err(DiodeError::NoReturnPath));
        port.inject(b"junk");
        assert_eq!(port.take_back_channel(), Vec::<u8>::new());
        assert_eq!(port.refused_writes(), 1);
    }
}
