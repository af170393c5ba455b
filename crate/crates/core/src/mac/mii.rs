use serde::{Deserialize, Serialize};

use super::crc::crc32_fcs;
use super::frame::{EthernetFrame, FCS_LEN};
use super::MacError;

/// 25 MHz MII receive/transmit clock.
pub const MII_CLOCK_PERIOD: f64 = 40e-9;

pub const PREAMBLE_OCTET: u8 = 0x55;
pub const SFD_OCTET: u8 = 0xD5;
pub const PREAMBLE_LEN: usize = 7;

/// Nibbles carried on one direction of an MII, one per clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiiNibbleStream {
    nibbles: Vec<u8>,
    clock_period: f64,
}

impl MiiNibbleStream {
    pub fn new(nibbles: Vec<u8>) -> Result<Self, MacError> {
        if let Some(&n) = nibbles.iter().find(|&&n| n > 0xF) {
            return Err(MacError::InvalidNibble(n));
        }
        Ok(Self {
            nibbles,
            clock_period: MII_CLOCK_PERIOD,
        })
    }

    /// Splits octets into nibbles, low nibble first.
    pub fn from_octets(octets: &[u8]) -> Self {
        Self {
            nibbles: octets.iter().flat_map(|&o| [o & 0xF, o >> 4]).collect(),
            clock_period: MII_CLOCK_PERIOD,
        }
    }

    pub fn nibbles(&self) -> &[u8] {
        &self.nibbles
    }

    pub fn clock_period(&self) -> f64 {
        self.clock_period
    }

    pub fn len(&self) -> usize {
        self.nibbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nibbles.is_empty()
    }

    /// Reassembles octets from nibble pairs. A trailing odd nibble is dropped.
    pub fn to_octets(&self) -> Vec<u8> {
        self.nibbles
            .chunks_exact(2)
            .map(|p| p[0] | p[1] << 4)
            .collect()
    }

    /// Index of the nibble completing the start frame delimiter (a 0xD after
    /// at least one 0x5), if any.
    pub fn sfd_index(&self) -> Option<usize> {
        self.nibbles
            .windows(2)
            .position(|w| w == [0x5, 0xD])
            .map(|i| i + 1)
    }
}

/// Serializes a frame for the MII: seven preamble octets, the SFD, then the
/// frame, each octet low nibble first.
pub fn mii_marshal(frame: &EthernetFrame) -> MiiNibbleStream {
    let mut octets = vec![PREAMBLE_OCTET; PREAMBLE_LEN];
    octets.push(SFD_OCTET);
    octets.extend(frame.octets());
    MiiNibbleStream::from_octets(&octets)
}

/// Cancels a frame already on the wire.
///
/// Nibbles up to `abort_at` have gone out unchanged; transmission then runs to
/// its normal length, but the last eight nibbles carry the complement of the
/// correct FCS so any compliant receiver discards the frame. `abort_at` must lie
/// after the SFD and no later than the first FCS nibble.
pub fn abort_transmission(
    stream: &MiiNibbleStream,
    abort_at: usize,
) -> Result<MiiNibbleStream, MacError> {
    let len = stream.len();
    let sfd = stream
        .sfd_index()
        .ok_or(MacError::AbortOutOfRange { abort_at, len })?;
    if abort_at <= sfd || abort_at + 2 * FCS_LEN > len {
        return Err(MacError::AbortOutOfRange { abort_at, len });
    }
    let frame_nibbles = &stream.nibbles()[sfd + 1..];
    if !frame_nibbles.len().is_multiple_of(2) || frame_nibbles.len() < 2 * FCS_LEN {
        return Err(MacError::Malformed(
            "frame body is not a whole number of octets".into(),
        ));
    }
    let frame_octets = MiiNibbleStream {
        nibbles: frame_nibbles.to_vec(),
        clock_period: stream.clock_period,
    }
    .to_octets();
    let covered = &frame_octets[..frame_octets.len() - FCS_LEN];
    let poisoned = crc32_fcs(covered).map(|b| !b);

    let mut nibbles = stream.nibbles()[..len - 2 * FCS_LEN].to_vec();
    nibbles.extend(MiiNibbleStream::from_octets(&poisoned).nibbles());
    Ok(MiiNibbleStream {
        nibbles,
        clock_period: stream.clock_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::frame::{build_frame, MacAddr};

    fn frame(len: usize) -> EthernetFrame {
        build_frame(
            MacAddr([1, 2, 3, 4, 5, 6]),
            MacAddr([6, 5, 4, 3, 2, 1]),
            0x0800,
            &vec![0xA5; len],
        )
        .unwrap()
    }

    #[test]
    fn minimum_frame_is_144_nibbles() {
        let s = mii_marshal(&frame(46));
        assert_eq!(s.len(), 2 * (8 + 64));
        assert_eq!(&s.nibbles()[..2], &[0x5, 0x5]);
        assert_eq!(&s.nibbles()[14..16], &[0x5, 0xD]);
        assert_eq!(s.sfd_index(), Some(15));
        assert_eq!(s.clock_period(), 40e-9);
    }

    #[test]
    fn rejects_wide_nibbles() {
        assert_eq!(
            MiiNibbleStream::new(vec![0x5, 0x10]),
            Err(MacError::InvalidNibble(0x10))
        );
    }

    #[test]
    fn abort_keeps_length_and_prefix() {
        let s = mii_marshal(&frame(100));
        let a = abort_transmission(&s, 60).unwrap();
        assert_eq!(a.len(), s.len());
        assert_eq!(&a.nibbles()[..s.len() - 8], &s.nibbles()[..s.len() - 8]);
        assert_ne!(&a.nibbles()[s.len() - 8..], &s.nibbles()[s.len() - 8..]);
    }

    #[test]
    fn abort_range_checked() {
        let s = mii_marshal(&frame(46));
        assert!(abort_transmission(&s, 15).is_err());
        assert!(abort_transmission(&s, 16).is_ok());
        assert!(abort_transmission(&s, s.len() - 8).is_ok());
        assert!(abort_transmission(&s, s.len() - 7).is_err());
        assert!(abort_transmission(&MiiNibbleStream::new(vec![]).unwrap(), 0).is_err());
    }
}
