use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::emanation::{
    add_noise, led_transduce, uart_encode, LedModel, NoiseModel, OpticalTrace, SerialConfig,
};
use crate::mac::{mii_marshal, validate_frame, EthernetFrame, FrameVerdict, MiiNibbleStream};
use crate::recovery::uart_decode;

use super::circuit::{photodiode_receive, ReceiverCircuit};
use super::oneway::{NoOpProgram, ReceivePort, ReceiveSideProgram, Topology};
use super::DiodeError;

/// Emitter, optical channel and receiver of a one-way link.
///
/// The emitter LED is lit while the serial line is at mark, so an idle link
/// is bright and a dead channel reads as a line stuck at space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiodeLink {
    pub tx_led: LedModel,
    /// Fraction of emitted irradiance reaching the photodiode.
    pub channel_attenuation: f64,
    pub rx: ReceiverCircuit,
    pub sample_rate: f64,
    pub serial_cfg: SerialConfig,
}

impl Default for DiodeLink {
    fn default() -> Self {
        let serial_cfg = SerialConfig::new_8n1(115_200);
        Self {
            tx_led: LedModel::default(),
            channel_attenuation: 0.8,
            rx: ReceiverCircuit::default(),
            sample_rate: 16.0 * f64::from(serial_cfg.baud),
            serial_cfg,
        }
    }
}

impl DiodeLink {
    pub fn validate(&self) -> Result<(), DiodeError> {
        self.tx_led.validate()?;
        self.serial_cfg.validate()?;
        self.rx.validate()?;
        if !(0.0..=1.0).contains(&self.channel_attenuation) {
            return Err(DiodeError::Config(format!(
                "channel attenuation {} outside [0, 1]",
                self.channel_attenuation
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(DiodeError::Config(format!(
                "sample rate {} must be positive",
                self.sample_rate
            )));
        }
        Ok(())
    }

    fn emitter(&self) -> Emitter {
        Emitter {
            led: self.tx_led,
            serial: self.serial_cfg,
            sample_rate: self.sample_rate,
        }
    }

    fn receiver(&self) -> Receiver {
        Receiver {
            circuit: self.rx,
            serial: self.serial_cfg,
        }
    }
}

/// Transmit half of a link. Built from link parameters only; nothing on the
/// receive side can reach it.
#[derive(Debug, Clone, Copy)]
struct Emitter {
    led: LedModel,
    serial: SerialConfig,
    sample_rate: f64,
}

impl Emitter {
    fn emit(&self, octets: &[u8]) -> Result<OpticalTrace, DiodeError> {
        let line = uart_encode(octets, &self.serial)?;
        Ok(led_transduce(&line, &self.led, self.sample_rate)?)
    }
}

#[derive(Debug, Clone, Copy)]
struct Receiver {
    circuit: ReceiverCircuit,
    serial: SerialConfig,
}

impl Receiver {
    fn receive(&self, trace: &OpticalTrace) -> Result<(Vec<u8>, FrameVerdict), DiodeError> {
        let line = photodiode_receive(trace, &self.circuit).light();
        let octets = uart_decode(&line, &self.serial)?.octets;
        let verdict = validate_frame(&MiiNibbleStream::from_octets(&octets));
        Ok((octets, verdict))
    }
}

fn channel(
    trace: &OpticalTrace,
    attenuation: f64,
    noise: &NoiseModel,
) -> Result<OpticalTrace, DiodeError> {
    Ok(add_noise(&trace.scaled(attenuation)?, noise)?)
}

fn absorb(hasher: &mut Sha256, trace: &OpticalTrace) {
    hasher.update(trace.sample_rate().to_le_bytes());
    hasher.update((trace.len() as u64).to_le_bytes());
    for s in trace.samples() {
        hasher.update(s.to_le_bytes());
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub frames_sent: usize,
    pub frames_accepted: usize,
    pub frames_rejected: usize,
    pub reject_reasons: BTreeMap<String, usize>,
    /// SHA-256 over every emitted trace, before the channel, as lowercase hex.
    pub emitter_trace_digest: String,
}

/// Everything a link run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DiodeTransfer {
    pub report: LinkReport,
    pub accepted: Vec<EthernetFrame>,
    /// Per-frame emitted and received traces, when captured.
    pub captures: Vec<(OpticalTrace, OpticalTrace)>,
}

/// Sends frames across the link; frame `i` sees noise stream `i`.
pub fn diode_send(
    frames: &[EthernetFrame],
    link: &DiodeLink,
    noise: &NoiseModel,
) -> Result<DiodeTransfer, DiodeError> {
    run_link(
        frames,
        link,
        noise,
        &mut NoOpProgram,
        Topology::OneWay,
        false,
    )
}

/// As [`diode_send`], also keeping every emitted and received trace.
pub fn diode_send_captured(
    frames: &[EthernetFrame],
    link: &DiodeLink,
    noise: &NoiseModel,
) -> Result<DiodeTransfer, DiodeError> {
    run_link(
        frames,
        link,
        noise,
        &mut NoOpProgram,
        Topology::OneWay,
        true,
    )
}

pub(crate) fn run_link(
    frames: &[EthernetFrame],
    link: &DiodeLink,
    noise: &NoiseModel,
    program: &mut dyn ReceiveSideProgram,
    topology: Topology,
    capture: bool,
) -> Result<DiodeTransfer, DiodeError> {
    link.validate()?;
    let emitter = link.emitter();
    let receiver = link.receiver();
    let mut port = ReceivePort::new(topology);
    let mut hasher = Sha256::new();
    let mut report = LinkReport {
        frames_sent: frames.len(),
        frames_accepted: 0,
        frames_rejected: 0,
        reject_reasons: BTreeMap::new(),
        emitter_trace_digest: String::new(),
    };
    let mut accepted = Vec::new();
    let mut captures = Vec::new();

    for (i, frame) in frames.iter().enumerate() {
        let mut octets = mii_marshal(frame).to_octets();
        // Only the wired-back double has anything here.
        octets.extend(port.take_back_channel());
        let emitted = emitter.emit(&octets)?;
        absorb(&mut hasher, &emitted);

        let received = channel(
            &emitted,
            link.channel_attenuation,
            &noise.for_stream(i as u64),
        )?;
        let (rx_octets, verdict) = receiver.receive(&received)?;
        match &verdict {
            FrameVerdict::Accept(f) => {
                report.frames_accepted += 1;
                accepted.push(f.clone());
            }
            FrameVerdict::Reject(reason) => {
                report.frames_rejected += 1;
                *report.reject_reasons.entry(reason.to_string()).or_default() += 1;
            }
        }
        if capture {
            captures.push((emitted, received));
        }
        port.deliver(rx_octets, verdict);
        program.on_frame(&mut port);
    }
    report.emitter_trace_digest = hex(&hasher.finalize());
    Ok(DiodeTransfer {
        report,
        accepted,
        captures,
    })
}
