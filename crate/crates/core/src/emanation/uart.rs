use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EmanationError, LogicEventStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    None,
    Even,
    Odd,
}

impl Parity {
    /// Parity bit for `value`, or `None` when parity is disabled.
    pub fn bit(self, value: u8) -> Option<bool> {
        let odd_ones = value.count_ones() % 2 == 1;
        match self {
            Parity::None => None,
            Parity::Even => Some(odd_ones),
            Parity::Odd => Some(!odd_ones),
        }
    }

    fn letter(self) -> char {
        match self {
            Parity::None => 'N',
            Parity::Even => 'E',
            Parity::Odd => 'O',
        }
    }
}

/// Asynchronous serial line settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SerialConfig {
    pub baud: u32,
    pub data_bits: u8,
    pub parity: Parity,
    pub stop_bits: u8,
}

impl Default for SerialConfig {
    fn default() -> Self {
        Self::new_8n1(9600)
    }
}

impl SerialConfig {
    pub const fn new_8n1(baud: u32) -> Self {
        Self {
            baud,
            data_bits: 8,
            parity: Parity::None,
            stop_bits: 1,
        }
    }

    pub fn validate(&self) -> Result<(), EmanationError> {
        if self.baud == 0 {
            return Err(EmanationError::Config("baud rate must be positive".into()));
        }
        if !(7..=8).contains(&self.data_bits) {
            return Err(EmanationError::Config(format!(
                "{} data bits unsupported (7 or 8)",
                self.data_bits
            )));
        }
        if !(1..=2).contains(&self.stop_bits) {
            return Err(EmanationError::Config(format!(
                "{} stop bits unsupported (1 or 2)",
                self.stop_bits
            )));
        }
        Ok(())
    }

    pub fn bit_time(&self) -> f64 {
        1.0 / f64::from(self.baud)
    }

    /// Bit cells per character: start, data, parity, stop.
    pub fn frame_bits(&self) -> usize {
        1 + usize::from(self.data_bits)
            + usize::from(self.parity != Parity::None)
            + usize::from(self.stop_bits)
    }

    /// Line levels for one character, start bit first.
    pub fn character_bits(&self, value: u8) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.frame_bits());
        bits.push(false);
        bits.extend((0..self.data_bits).map(|i| value >> i & 1 == 1));
        let data = if self.data_bits < 8 {
            value & ((1 << self.data_bits) - 1)
        } else {
            value
        };
        bits.extend(self.parity.bit(data));
        bits.extend(std::iter::repeat_n(true, usize::from(self.stop_bits)));
        bits
    }
}

impl fmt::Display for SerialConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}{}{}",
            self.baud,
            self.data_bits,
            self.parity.letter(),
            self.stop_bits
        )
    }
}

impl FromStr for SerialConfig {
    type Err = EmanationError;

    /// Parses `9600-8N1` style strings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            EmanationError::Config(format!(
                "cannot parse serial config {s:?} (expected e.g. 9600-8N1)"
            ))
        };
        let (baud, frame) = s.split_once('-').ok_or_else(bad)?;
        let frame: Vec<char> = frame.chars().collect();
        if frame.len() != 3 {
            return Err(bad());
        }
        let parity = match frame[1].to_ascii_uppercase() {
            'N' => Parity::None,
            'E' => Parity::Even,
            'O' => Parity::Odd,
            _ => return Err(bad()),
        };
        let cfg = SerialConfig {
            baud: baud.parse().map_err(|_| bad())?,
            data_bits: frame[0].to_digit(10).ok_or_else(bad)? as u8,
            parity,
            stop_bits: frame[2].to_digit(10).ok_or_else(bad)? as u8,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Encodes octets as an idle-high asynchronous serial line.
///
/// Characters are sent back to back starting at `t = 0`, LSB first. The
/// stream ends after one further idle bit time.
pub fn uart_encode(data: &[u8], cfg: &SerialConfig) -> Result<LogicEventStream, EmanationError> {
    cfg.validate()?;
    let baud = f64::from(cfg.baud);
    let total_cells = data.len() * cfg.frame_bits() + 1;

    let mut edges = Vec::new();
    let mut level = true;
    let mut cell = 0usize;
    for &octet in data {
        for bit in cfg.character_bits(octet) {
            if bit != level {
                edges.push(cell as f64 / baud);
                level = bit;
            }
            cell += 1;
        }
    }
    LogicEventStream::new(true, edges, total_cells as f64 / baud)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_payload_is_idle_line() {
        let cfg = SerialConfig::new_8n1(9600);
        let s = uart_encode(&[], &cfg).unwrap();
        assert!(s.initial_level());
        assert!(s.edges().is_empty());
        assert!((s.duration() - 1.0 / 9600.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_octet_toggles_every_cell() {
        // 0x55 LSB first: start 0, 1 0 1 0 1 0 1 0, stop 1.
        let cfg = SerialConfig::new_8n1(9600);
        let s = uart_encode(&[0x55], &cfg).unwrap();
        let expected: Vec<f64> = (0..10).map(|k| k as f64 / 9600.0).collect();
        assert_eq!(s.edges().len(), 10);
        for (got, want) in s.edges().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((s.edges()[1] - 104.166e-6).abs() < 1e-9);
    }

    #[test]
    fn all_ones_octet_has_two_edges() {
        let cfg = SerialConfig::new_8n1(9600);
        let s = uart_encode(&[0xFF], &cfg).unwrap();
        assert_eq!(s.edges().len(), 2);
        assert_eq!(s.edges()[0], 0.0);
        assert!((s.edges()[1] - 1.0 / 9600.0).abs() < 1e-15);
        assert!(!s.level_at(0.0));
    }

    #[test]
    fn parity_and_stop_bits() {
        let cfg = SerialConfig {
            baud: 1200,
            data_bits: 7,
            parity: Parity::Even,
            stop_bits: 2,
        };
        assert_eq!(cfg.frame_bits(), 11);
        // 0x03 has two ones in the low seven bits: even parity bit is 0.
        let bits = cfg.character_bits(0x03);
        assert_eq!(
            bits,
            vec![false, true, true, false, false, false, false, false, false, true, true]
        );
        let odd = SerialConfig {
            parity: Parity::Odd,
            ..cfg
        };
        assert!(odd.character_bits(0x03)[8]);
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            SerialConfig {
                baud: 0,
                ..SerialConfig::default()
            },
            SerialConfig {
                data_bits: 9,
                ..SerialConfig::default()
            },
            SerialConfig {
                stop_bits: 3,
                ..SerialConfig::default()
            },
        ] {
            assert!(matches!(
                uart_encode(&[1], &cfg),
                Err(EmanationError::Config(_))
            ));
        }
    }

    #[test]
    fn display_parse_round_trip() {
        let cfg: SerialConfig = "19200-7O2".parse().unwrap();
        assert_eq!(
            cfg,
            SerialConfig {
                baud: 19200,
                data_bits: 7,
                parity: Parity::Odd,
                stop_bits: 2
            }
        );
        assert_eq!(cfg.to_string(), "19200-7O2");
        assert!("9600-9N1".parse::<SerialConfig>().is_err());
        assert!("fast".parse::<SerialConfig>().is_err());
    }
}
