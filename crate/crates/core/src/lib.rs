//! Desk-scale toolkit for compromising optical emanations from LED indicators.
//!
//! * [`emanation`] synthesizes photodetector traces for Class I/II/III devices
//!   and models the pulse-stretching countermeasure.
//! * [`recovery`] turns traces back into logic levels and serial data, and
//!   scores how much a trace leaks.
//! * [`mac`] is a nibble-clocked Ethernet MAC receive pipeline with cut-through
//!   field access, FCS-corruption abort and a frame signature hook.
//! * [`diode`] chains the pieces into a one-way optical link.
//! * [`format`] reads and writes the plain-text trace, event and frame files.

pub mod diode;
pub mod emanation;
pub mod format;
pub mod mac;
pub mod recovery;
