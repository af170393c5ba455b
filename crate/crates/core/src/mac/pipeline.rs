//! Receive side of the MAC as a deep pipeline clocked one MII nibble at a
//! time.
//!
//! Every clock demarshals exactly one nibble into its own slot, tagged with
//! the field it belongs to. Header fields become readable the clock their
//! last nibble lands, which is what lets a cut-through consumer act on the
//! destination address long before the FCS has arrived.

use serde::{Deserialize, Serialize};

use super::crc::Crc32;
use super::frame::{EthernetFrame, MacAddr, FCS_LEN, HEADER_LEN, MAX_FRAME, MIN_FRAME};
use super::mii::MiiNibbleStream;
use super::MacError;

/// Number of slots kept in the pipeline window.
pub const PIPELINE_SLOTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Dst,
    Src,
    Ethertype,
    Length,
    Payload,
    FcsOk,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Dst,
        Field::Src,
        Field::Ethertype,
        Field::Length,
        Field::Payload,
        Field::FcsOk,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Dst => "dst",
            Field::Src => "src",
            Field::Ethertype => "ethertype",
            Field::Length => "length",
            Field::Payload => "payload",
            Field::FcsOk => "fcs_ok",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldValue {
    Dst(MacAddr),
    Src(MacAddr),
    Ethertype(u16),
    Length(usize),
    Payload(Vec<u8>),
    FcsOk(bool),
}

/// What a slot's nibble was demarshalled as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SlotTag {
    #[default]
    Empty,
    Preamble,
    Sfd,
    Dst,
    Src,
    Ethertype,
    /// Payload, padding or FCS; which one is only known once the frame ends.
    Data,
    Fcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Slot {
    pub tag: SlotTag,
    pub nibble: u8,
    /// False for nibbles that broke the preamble.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Preamble,
    Header,
    Data,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NoSfd,
    Runt,
    Oversize,
    FcsMismatch,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RejectReason::NoSfd => "no_sfd",
            RejectReason::Runt => "runt",
            RejectReason::Oversize => "oversize",
            RejectReason::FcsMismatch => "fcs_mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameVerdict {
    Accept(EthernetFrame),
    Reject(RejectReason),
}

impl FrameVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, FrameVerdict::Accept(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    slots: Vec<Slot>,
    cursor: u64,
    phase: Phase,
    preamble_run: usize,
    preamble_violations: usize,
    sfd_clock: Option<u64>,
    pending_low: Option<u8>,
    octets: Vec<u8>,
    crc: Crc32,
    valid_since: [Option<u64>; 6],
    fcs_ok: Option<bool>,
}

impl Default for PipelineState {
    fn default() -> Self {
        Self::new()
    }
}

impl PipelineState {
    pub fn new() -> Self {
        Self {
            slots: vec![Slot::default(); PIPELINE_SLOTS],
            cursor: 0,
            phase: Phase::Preamble,
            preamble_run: 0,
            preamble_violations: 0,
            sfd_clock: None,
            pending_low: None,
            octets: Vec::new(),
            crc: Crc32::new(),
            valid_since: [None; 6],
            fcs_ok: None,
        }
    }

    /// Clocks consumed so far.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn preamble_violations(&self) -> usize {
        self.preamble_violations
    }

    /// Clock at which the SFD completed.
    pub fn sfd_clock(&self) -> Option<u64> {
        self.sfd_clock
    }

    /// Clock at which `field` became readable, if it has.
    pub fn valid_since(&self, field: Field) -> Option<u64> {
        self.valid_since[field.index()]
    }

    pub fn fields_valid(&self) -> Vec<Field> {
        Field::ALL
            .into_iter()
            .filter(|f| self.valid_since(*f).is_some())
            .collect()
    }

    /// Slot written on clock `clock` (1-based), while it is still in the window.
    pub fn slot(&self, clock: u64) -> Option<&Slot> {
        if clock == 0 || clock > self.cursor || self.cursor - clock >= PIPELINE_SLOTS as u64 {
            return None;
        }
        Some(&self.slots[((clock - 1) % PIPELINE_SLOTS as u64) as usize])
    }

    /// Octets demarshalled after the SFD.
    pub fn octets(&self) -> &[u8] {
        &self.octets
    }

    /// Clocks in one nibble. Each call fills exactly one slot and advances the
    /// cursor by one.
    pub fn step(&mut self, nibble: u8) -> Result<(), MacError> {
        if nibble > 0xF {
            return Err(MacError::InvalidNibble(nibble));
        }
        if self.phase == Phase::Finished {
            return Err(MacError::TerminalState);
        }
        self.cursor += 1;
        let (tag, valid) = match self.phase {
            Phase::Preamble => self.step_preamble(nibble),
            Phase::Header | Phase::Data => (self.step_frame(nibble), true),
            Phase::Finished => unreachable!(),
        };
        let at = ((self.cursor - 1) % PIPELINE_SLOTS as u64) as usize;
        self.slots[at] = Slot { tag, nibble, valid };
        Ok(())
    }

    fn step_preamble(&mut self, nibble: u8) -> (SlotTag, bool) {
        match nibble {
            0x5 => {
                self.preamble_run += 1;
                (SlotTag::Preamble, true)
            }
            0xD if self.preamble_run > 0 => {
                self.phase = Phase::Header;
                self.sfd_clock = Some(self.cursor);
                (SlotTag::Sfd, true)
            }
            _ => {
                self.preamble_run = 0;
                self.preamble_violations += 1;
                (SlotTag::Preamble, false)
            }
        }
    }

    fn step_frame(&mut self, nibble: u8) -> SlotTag {
        let index = self.octets.len();
        let tag = match index {
            0..6 => SlotTag::Dst,
            6..12 => SlotTag::Src,
            12..HEADER_LEN => SlotTag::Ethertype,
            _ => SlotTag::Data,
        };
        let Some(low) = self.pending_low.take() else {
            self.pending_low = Some(nibble);
            return tag;
        };
        let octet = low | nibble << 4;
        self.octets.push(octet);
        self.crc.update_byte(octet);
        match self.octets.len() {
            6 => self.mark(Field::Dst),
            12 => self.mark(Field::Src),
            HEADER_LEN => {
                self.mark(Field::Ethertype);
                self.phase = Phase::Data;
            }
            _ => {}
        }
        tag
    }

    fn mark(&mut self, field: Field) {
        let slot = &mut self.valid_since[field.index()];
        if slot.is_none() {
            *slot = Some(self.cursor);
        }
    }

    /// End of carrier: resolves length, payload and FCS, and returns the
    /// receive verdict. The state is terminal afterwards.
    pub fn finish(&mut self) -> FrameVerdict {
        let was = self.phase;
        self.phase = Phase::Finished;
        if was == Phase::Preamble {
            return FrameVerdict::Reject(RejectReason::NoSfd);
        }
        // A dangling nibble is a dribble nibble; it is not part of any octet.
        self.pending_low = None;
        let len = self.octets.len();
        self.mark(Field::Length);
        if len >= HEADER_LEN + FCS_LEN {
            self.mark(Field::Payload);
            let ok = self.crc.residue_ok();
            self.fcs_ok = Some(ok);
            self.mark(Field::FcsOk);
            self.retag_fcs_slots();
        }
        if len < MIN_FRAME {
            return FrameVerdict::Reject(RejectReason::Runt);
        }
        if len > MAX_FRAME {
            return FrameVerdict::Reject(RejectReason::Oversize);
        }
        if self.fcs_ok != Some(true) {
            return FrameVerdict::Reject(RejectReason::FcsMismatch);
        }
        match EthernetFrame::from_wire(&self.octets) {
            Ok(frame) => FrameVerdict::Accept(frame),
            Err(_) => FrameVerdict::Reject(RejectReason::Runt),
        }
    }

    fn retag_fcs_slots(&mut self) {
        let data_slots: Vec<u64> = (1..=self.cursor)
            .rev()
            .filter(|&c| self.slot(c).is_some_and(|s| s.tag == SlotTag::Data))
            .take(2 * FCS_LEN)
            .collect();
        for clock in data_slots {
            self.slots[((clock - 1) % PIPELINE_SLOTS as u64) as usize].tag = SlotTag::Fcs;
        }
    }

    fn field_value(&self, field: Field) -> Option<FieldValue> {
        self.valid_since(field)?;
        let mac = |range: std::ops::Range<usize>| {
            let mut a = [0u8; 6];
            a.copy_from_slice(&self.octets[range]);
            MacAddr(a)
        };
        Some(match field {
            Field::Dst => FieldValue::Dst(mac(0..6)),
            Field::Src => FieldValue::Src(mac(6..12)),
            Field::Ethertype => {
                FieldValue::Ethertype(u16::from_be_bytes([self.octets[12], self.octets[13]]))
            }
            Field::Length => FieldValue::Length(self.octets.len()),
            Field::Payload => {
                FieldValue::Payload(self.octets[HEADER_LEN..self.octets.len() - FCS_LEN].to_vec())
            }
            Field::FcsOk => FieldValue::FcsOk(self.fcs_ok?),
        })
    }
}

/// Functional form of [`PipelineState::step`].
pub fn pipeline_step(mut state: PipelineState, nibble: u8) -> Result<PipelineState, MacError> {
    state.step(nibble)?;
    Ok(state)
}

/// Fields readable right now, with their values.
pub fn cut_through_peek(state: &PipelineState) -> Vec<(Field, FieldValue)> {
    Field::ALL
        .into_iter()
        .filter_map(|f| state.field_value(f).map(|v| (f, v)))
        .collect()
}

/// Clocks a whole stream through a fresh pipeline.
pub fn receive(stream: &MiiNibbleStream) -> (PipelineState, FrameVerdict) {
    let mut state = PipelineState::new();
    for &n in stream.nibbles() {
        // Stream nibbles are range-checked on construction and the state is
        // not finished until the loop ends.
        state.step(n).expect("nibble stream invariant");
    }
    let verdict = state.finish();
    (state, verdict)
}

/// Receives a stream and decides whether a compliant MAC would accept it.
pub fn validate_frame(stream: &MiiNibbleStream) -> FrameVerdict {
    receive(stream).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::{abort_transmission, build_frame, mii_marshal};

    fn stream(payload: usize) -> (EthernetFrame, MiiNibbleStream) {
        let f = build_frame(
            MacAddr([0xAA; 6]),
            MacAddr([0xBB; 6]),
            0x0800,
            &vec![0x3C; payload],
        )
        .unwrap();
        let s = mii_marshal(&f);
        (f, s)
    }

    fn run(nibbles: &[u8]) -> PipelineState {
        let mut st = PipelineState::new();
        for &n in nibbles {
            st.step(n).unwrap();
        }
        st
    }

    #[test]
    fn sfd_on_sixteenth_nibble() {
        let (_, s) = stream(46);
        let st = run(&s.nibbles()[..15]);
        assert_eq!(st.phase(), Phase::Preamble);
        let st = run(&s.nibbles()[..16]);
        assert_eq!(st.phase(), Phase::Header);
        assert_eq!(st.sfd_clock(), Some(16));
    }

    #[test]
    fn endless_preamble() {
        let st = run(&[0x5; 500]);
        assert_eq!(st.phase(), Phase::Preamble);
        assert!(st.fields_valid().is_empty());
        assert_eq!(st.cursor(), 500);
    }

    #[test]
    fn whole_frame_validates() {
        let (f, s) = stream(200);
        let (st, verdict) = receive(&s);
        assert_eq!(st.fields_valid(), Field::ALL.to_vec());
        assert!(cut_through_peek(&st).contains(&(Field::FcsOk, FieldValue::FcsOk(true))));
        match verdict {
            FrameVerdict::Accept(got) => assert_eq!(got, f),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn peek_progression() {
        let (f, s) = stream(46);
        assert!(cut_through_peek(&PipelineState::new()).is_empty());
        let st = run(&s.nibbles()[..16 + 11]);
        assert!(cut_through_peek(&st).is_empty());
        let st = run(&s.nibbles()[..16 + 12]);
        assert_eq!(
            cut_through_peek(&st),
            vec![(Field::Dst, FieldValue::Dst(f.dst()))]
        );
        let st = run(&s.nibbles()[..16 + 28]);
        let fields: Vec<Field> = cut_through_peek(&st).into_iter().map(|(f, _)| f).collect();
        assert_eq!(fields, vec![Field::Dst, Field::Src, Field::Ethertype]);
    }

    #[test]
    fn cursor_advances_one_per_step() {
        let (_, s) = stream(60);
        let mut st = PipelineState::new();
        for (i, &n) in s.nibbles().iter().enumerate() {
            st = pipeline_step(st, n).unwrap();
            assert_eq!(st.cursor(), i as u64 + 1);
            assert_eq!(st.slot(st.cursor()).unwrap().nibble, n);
        }
    }

    #[test]
    fn invalid_nibble_and_terminal_state() {
        let mut st = PipelineState::new();
        assert_eq!(st.step(16), Err(MacError::InvalidNibble(16)));
        assert_eq!(st.cursor(), 0);
        st.finish();
        assert_eq!(st.step(5), Err(MacError::TerminalState));
    }

    #[test]
    fn preamble_violation_resyncs() {
        let (f, s) = stream(46);
        let mut nibbles = vec![0x5, 0x5, 0x3, 0xD];
        nibbles.extend_from_slice(s.nibbles());
        let (st, verdict) = receive(&MiiNibbleStream::new(nibbles).unwrap());
        assert_eq!(st.preamble_violations(), 2);
        assert_eq!(verdict, FrameVerdict::Accept(f));
    }

    #[test]
    fn reject_reasons() {
        assert_eq!(
            validate_frame(&MiiNibbleStream::new(vec![]).unwrap()),
            FrameVerdict::Reject(RejectReason::NoSfd)
        );
        let (_, s) = stream(46);
        let short = MiiNibbleStream::new(s.nibbles()[..s.len() - 2].to_vec()).unwrap();
        assert_eq!(
            validate_frame(&short),
            FrameVerdict::Reject(RejectReason::Runt)
        );
        let aborted = abort_transmission(&s, 50).unwrap();
        assert_eq!(
            validate_frame(&aborted),
            FrameVerdict::Reject(RejectReason::FcsMismatch)
        );

        let mut octets = vec![0x55; 7];
        octets.push(0xD5);
        let body: Vec<u8> = (0..1520).map(|i| i as u8).collect();
        octets.extend_from_slice(&body);
        octets.extend_from_slice(&crate::mac::crc32_fcs(&body));
        assert_eq!(
            validate_frame(&MiiNibbleStream::from_octets(&octets)),
            FrameVerdict::Reject(RejectReason::Oversize)
        );
    }

    #[test]
    fn fcs_slots_retagged() {
        let (_, s) = stream(46);
        let (st, _) = receive(&s);
        let tags: Vec<SlotTag> = (1..=st.cursor()).map(|c| st.slot(c).unwrap().tag).collect();
        assert_eq!(tags.iter().filter(|&&t| t == SlotTag::Fcs).count(), 8);
        assert_eq!(&tags[tags.len() - 8..], &[SlotTag::Fcs; 8]);
        assert_eq!(tags[15], SlotTag::Sfd);
        assert_eq!(tags[16], SlotTag::Dst);
    }
}
