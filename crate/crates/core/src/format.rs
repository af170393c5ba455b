//! Plain-text file formats.
//!
//! * optrace: `# optrace v1 sample_rate_hz=<f> origin_s=<f>`, then one sample
//!   per line.
//! * optevents: `# optevents v1 initial=<0|1> duration_s=<f>`, then one edge
//!   time per line.
//! * frame hex dump: lowercase hex octets separated by spaces, one frame per
//!   line.
//! * nibble string: one hex digit per nibble, no separators.
//!
//! Floats are written in shortest round-trip form, so write → read → write is
//! byte-stable.

use std::collections::HashMap;

use thiserror::Error;

use crate::emanation::{LogicEventStream, OpticalTrace};
use crate::mac::{EthernetFrame, MiiNibbleStream};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Content(String),
}

fn parse_header<'a>(
    line: Option<&'a str>,
    magic: &str,
) -> Result<HashMap<&'a str, &'a str>, FormatError> {
    let line = line.ok_or_else(|| FormatError::Header("file is empty".into()))?;
    let rest = line
        .strip_prefix("# ")
        .and_then(|l| l.strip_prefix(magic))
        .and_then(|l| l.strip_prefix(" v1"))
        .ok_or_else(|| FormatError::Header(format!("expected `# {magic} v1 ...`, got {line:?}")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| FormatError::Header(format!("{kv:?} is not key=value")))
        })
        .collect()
}

fn header_f64(h: &HashMap<&str, &str>, key: &str) -> Result<f64, FormatError> {
    let v = h
        .get(key)
        .ok_or_else(|| FormatError::Header(format!("missing {key}")))?;
    v.parse()
        .map_err(|_| FormatError::Header(format!("{key}={v} is not a number")))
}

fn body_values(text: &str) -> impl Iterator<Item = Result<f64, FormatError>> + '_ {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| FormatError::Line {
                line: i + 1,
                msg: format!("{l:?} is not a number"),
            })
        })
}

pub fn write_optrace(trace: &OpticalTrace) -> String {
    let mut out = format!(
        "# optrace v1 sample_rate_hz={} origin_s={}\n",
        trace.sample_rate(),
        trace.origin_time()
    );
    for s in trace.samples() {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

pub fn read_optrace(text: &str) -> Result<OpticalTrace, FormatError> {
    let h = parse_header(text.lines().next(), "optrace")?;
    let fs = header_f64(&h, "sample_rate_hz")?;
    let origin = header_f64(&h, "origin_s")?;
    let samples = body_values(text).collect::<Result<Vec<_>, _>>()?;
    OpticalTrace::new(fs, samples, origin).map_err(|e| FormatError::Content(e.to_string()))
}

pub fn write_optevents(events: &LogicEventStream) -> String {
    let mut out = format!(
        "# optevents v1 initial={} duration_s={}\n",
        u8::from(events.initial_level()),
        events.duration()
    );
    for t in events.edges() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

pub fn read_optevents(text: &str) -> Result<LogicEventStream, FormatError> {
    let h = parse_header(text.lines().next(), "optevents")?;
    let initial = match h.get("initial").copied() {
        Some("0") => false,
        Some("1") => true,
        other => {
            return Err(FormatError::Header(format!(
                "initial must be 0 or 1, got {other:?}"
            )))
        }
    };
    let duration = header_f64(&h, "duration_s")?;
    let edges = body_values(text).collect::<Result<Vec<_>, _>>()?;
    LogicEventStream::new(initial, edges, duration).map_err(|e| FormatError::Content(e.to_string()))
}

pub fn hex_line(octets: &[u8]) -> String {
    octets
        .iter()
        .map(|o| format!("{o:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_hex_line(line: &str) -> Result<Vec<u8>, FormatError> {
    line.split_whitespace()
        .map(|tok| {
            if tok.len() != 2 {
                return Err(FormatError::Content(format!(
                    "{tok:?} is not a two-digit hex octet"
                )));
            }
            u8::from_str_radix(tok, 16)
                .map_err(|_| FormatError::Content(format!("{tok:?} is not hex")))
        })
        .collect()
}

pub fn write_frame_dump(frames: &[EthernetFrame]) -> String {
    frames
        .iter()
        .map(|f| hex_line(&f.octets()) + "\n")
        .collect()
}

/// Parses a hex dump into raw frame octets, one entry per non-blank line.
pub fn read_frame_dump(text: &str) -> Result<Vec<Vec<u8>>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_hex_line(l).map_err(|e| FormatError::Line {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn write_nibbles(stream: &MiiNibbleStream) -> String {
    stream
        .nibbles()
        .iter()
        .map(|n| char::from_digit(u32::from(*n), 16).expect("nibble < 16"))
        .collect()
}

pub fn read_nibbles(text: &str) -> Result<MiiNibbleStream, FormatError> {
    let nibbles = text
        .trim()
        .chars()
        .map(|c| {
            c.to_digit(16)
                .map(|d| d as u8)
                .ok_or_else(|| FormatError::Content(format!("{c:?} is not a hex digit")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    MiiNibbleStream::new(nibbles).map_err(|e| FormatError::Content(e.to_string()))
}
