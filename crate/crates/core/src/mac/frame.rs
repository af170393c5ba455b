use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::crc::crc32_fcs;
use super::MacError;

pub const HEADER_LEN: usize = 14;
pub const FCS_LEN: usize = 4;
pub const MIN_PAYLOAD: usize = 46;
pub const MAX_PAYLOAD: usize = 1500;
pub const MIN_FRAME: usize = HEADER_LEN + MIN_PAYLOAD + FCS_LEN;
pub const MAX_FRAME: usize = HEADER_LEN + MAX_PAYLOAD + FCS_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MacAddr(pub [u8; 6]);

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl FromStr for MacAddr {
    type Err = MacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MacError::Malformed(format!("bad MAC address {s:?}"));
        let parts: Vec<&str> = s.split([':', '-']).collect();
        if parts.len() != 6 {
            return Err(bad());
        }
        let mut out = [0u8; 6];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = u8::from_str_radix(p, 16).map_err(|_| bad())?;
        }
        Ok(MacAddr(out))
    }
}

/// An 802.3 frame from destination address to FCS.
///
/// `payload` is the client data as supplied; on the wire it is zero-padded to
/// [`MIN_PAYLOAD`] octets. Frames recovered from the wire cannot tell padding
/// from data, so their payload is the whole data field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EthernetFrame {
    dst: MacAddr,
    src: MacAddr,
    ethertype: u16,
    payload: Vec<u8>,
    fcs: [u8; 4],
    fcs_corrupted: bool,
}

/// Assembles a frame, padding short payloads and appending the FCS.
pub fn build_frame(
    dst: MacAddr,
    src: MacAddr,
    ethertype: u16,
    payload: &[u8],
) -> Result<EthernetFrame, MacError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(MacError::OversizePayload(payload.len()));
    }
    let mut frame = EthernetFrame {
        dst,
        src,
        ethertype,
        payload: payload.to_vec(),
        fcs: [0; 4],
        fcs_corrupted: false,
    };
    frame.fcs = crc32_fcs(&frame.covered_octets());
    Ok(frame)
}

impl EthernetFrame {
    /// Parses destination-to-FCS octets as seen on the wire.
    pub fn from_wire(octets: &[u8]) -> Result<Self, MacError> {
        if octets.len() < HEADER_LEN + FCS_LEN {
            return Err(MacError::Malformed(format!(
                "{} octets is too short for a frame",
                octets.len()
            )));
        }
        let body = &octets[..octets.len() - FCS_LEN];
        let mut fcs = [0u8; 4];
        fcs.copy_from_slice(&octets[octets.len() - FCS_LEN..]);
        let mut dst = [0u8; 6];
        let mut src = [0u8; 6];
        dst.copy_from_slice(&octets[0..6]);
        src.copy_from_slice(&octets[6..12]);
        Ok(Self {
            dst: MacAddr(dst),
            src: MacAddr(src),
            ethertype: u16::from_be_bytes([octets[12], octets[13]]),
            payload: body[HEADER_LEN..].to_vec(),
            fcs,
            fcs_corrupted: crc32_fcs(body) != fcs,
        })
    }

    pub fn dst(&self) -> MacAddr {
        self.dst
    }

    pub fn src(&self) -> MacAddr {
        self.src
    }

    pub fn ethertype(&self) -> u16 {
        self.ethertype
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn fcs(&self) -> [u8; 4] {
        self.fcs
    }

    pub fn fcs_corrupted(&self) -> bool {
        self.fcs_corrupted
    }

    pub fn pad_len(&self) -> usize {
        MIN_PAYLOAD.saturating_sub(self.payload.len())
    }

    /// Serialized length, destination through FCS.
    pub fn len(&self) -> usize {
        HEADER_LEN + self.payload.len() + self.pad_len() + FCS_LEN
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Octets protected by the FCS: header, payload and padding.
    pub fn covered_octets(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.dst.0);
        out.extend_from_slice(&self.src.0);
        out.extend_from_slice(&self.ethertype.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out.resize(out.len() + self.pad_len(), 0);
        out
    }

    /// Destination through FCS.
    pub fn octets(&self) -> Vec<u8> {
        let mut out = self.covered_octets();
        out.extend_from_slice(&self.fcs);
        out
    }

    /// The same frame with its FCS complemented so every receiver drops it.
    pub fn with_corrupted_fcs(&self) -> Self {
        Self {
            fcs: self.fcs.map(|b| !b),
            fcs_corrupted: true,
            ..self.clone()
        }
    }
}
