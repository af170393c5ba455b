use serde::{Deserialize, Serialize};

use crate::emanation::{LogicEventStream, SerialConfig};

use super::RecoveryError;

/// Common asynchronous serial rates, slowest first.
pub const STANDARD_BAUD_RATES: [u32; 11] = [
    300, 600, 1200, 2400, 4800, 9600, 14400, 19200, 38400, 57600, 115_200,
];

/// A candidate rate is accepted when inter-edge intervals sit, on average,
/// within this fraction of a bit of a whole number of bits.
const BAUD_FIT_TOLERANCE: f64 = 0.1;

/// Longest same-level run inside one character, in bits. Longer intervals
/// include idle time and say nothing about the bit clock.
const MAX_RUN_BITS: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub octets: Vec<u8>,
    pub framing_errors: usize,
    pub parity_errors: usize,
    /// Start bits acted upon, whether or not the character was kept.
    pub attempted_frames: usize,
    pub baud_used: u32,
}

/// Picks the slowest candidate whose bit clock explains the edge spacing.
///
/// For each candidate, every inter-edge interval is expressed in bit times
/// and compared with the nearest whole number of bits (at least one). Rates
/// whose mean deviation stays under a tenth of a bit are acceptable; the
/// slowest acceptable one wins, since integer multiples of the true rate fit
/// equally well. If none is acceptable the best-fitting candidate is returned.
pub fn estimate_baud(events: &LogicEventStream, candidates: &[u32]) -> Result<u32, RecoveryError> {
    let edges = events.edges();
    if edges.len() < 4 {
        return Err(RecoveryError::BaudEstimation(format!(
            "{} edges, need at least 4",
            edges.len()
        )));
    }
    let mut candidates: Vec<u32> = candidates.iter().copied().filter(|&b| b > 0).collect();
    if candidates.is_empty() {
        return Err(RecoveryError::BaudEstimation("no candidate rates".into()));
    }
    candidates.sort_unstable();
    candidates.dedup();

    let intervals: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let fit = |baud: u32| -> Option<f64> {
        let bit = 1.0 / f64::from(baud);
        let deviations: Vec<f64> = intervals
            .iter()
            .map(|&dt| dt / bit)
            .filter(|&bits| bits.round() <= MAX_RUN_BITS)
            .map(|bits| (bits - bits.round().max(1.0)).abs())
            .collect();
        // Most of the evidence must be usable at this rate.
        if deviations.len() * 2 < intervals.len() {
            return None;
        }
        Some(deviations.iter().sum::<f64>() / deviations.len() as f64)
    };

    let scored: Vec<(u32, f64)> = candidates
        .iter()
        .filter_map(|&b| fit(b).map(|f| (b, f)))
        .collect();
    if let Some(&(baud, _)) = scored.iter().find(|(_, f)| *f <= BAUD_FIT_TOLERANCE) {
        return Ok(baud);
    }
    scored
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(b, _)| b)
        .ok_or_else(|| {
            RecoveryError::BaudEstimation("no candidate rate fits the edge spacing".into())
        })
}

/// Software UART receiver.
///
/// Waits for a mark-to-space transition, confirms the start bit at its
/// centre, then samples each following bit at mid-cell. A character whose
/// stop bit reads space is counted as a framing error and dropped; the
/// receiver then waits for the next mark-to-space edge after that stop bit.
/// Characters with bad parity are kept and counted. A character cut off by the
/// end of the stream counts as a framing error.
pub fn uart_decode(
    events: &LogicEventStream,
    cfg: &SerialConfig,
) -> Result<DecodeResult, RecoveryError> {
    cfg.validate()?;
    let bit = cfg.bit_time();
    let data_bits = usize::from(cfg.data_bits);
    let frame_bits = cfg.frame_bits();
    let mut result = DecodeResult {
        octets: Vec::new(),
        framing_errors: 0,
        parity_errors: 0,
        attempted_frames: 0,
        baud_used: cfg.baud,
    };

    let edges = events.edges();
    // Earliest time at which a new start edge may be accepted.
    let mut armed_from = f64::NEG_INFINITY;
    for (i, &start) in edges.iter().enumerate() {
        if start < armed_from || events.level_after_edge(i) {
            continue;
        }
        let centre = |cell: usize| start + (cell as f64 + 0.5) * bit;
        if events.level_at(centre(0)) {
            // Glitch shorter than half a bit.
            armed_from = start;
            continue;
        }
        result.attempted_frames += 1;
        let last_centre = centre(frame_bits - 1);
        if last_centre > events.duration() {
            result.framing_errors += 1;
            break;
        }

        let mut value = 0u8;
        for k in 0..data_bits {
            if events.level_at(centre(1 + k)) {
                value |= 1 << k;
            }
        }
        let mut cell = 1 + data_bits;
        let parity_ok = match cfg.parity.bit(value) {
            Some(expected) => {
                let got = events.level_at(centre(cell));
                cell += 1;
                got == expected
            }
            None => true,
        };
        let stop_ok = (cell..frame_bits).all(|c| events.level_at(centre(c)));
        armed_from = last_centre;
        if !stop_ok {
            result.framing_errors += 1;
            continue;
        }
        if !parity_ok {
            result.parity_errors += 1;
        }
        result.octets.push(value);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emanation::{uart_encode, Parity};

    #[test]
    fn decodes_encoded_text() {
        let cfg = SerialConfig::new_8n1(9600);
        let r = uart_decode(&uart_encode(b"SECRET", &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(r.octets, b"SECRET");
        assert_eq!((r.framing_errors, r.parity_errors), (0, 0));
        assert_eq!(r.attempted_frames, 6);
        assert_eq!(r.baud_used, 9600);
    }

    #[test]
    fn idle_line_yields_nothing() {
        let cfg = SerialConfig::new_8n1(9600);
        let r = uart_decode(&LogicEventStream::constant(true, 0.1), &cfg).unwrap();
        assert!(r.octets.is_empty());
        assert_eq!(r.framing_errors + r.parity_errors + r.attempted_frames, 0);
    }

    #[test]
    fn double_rate_decoder_hits_framing_error() {
        let line = uart_encode(&[0x00], &SerialConfig::new_8n1(9600)).unwrap();
        let r = uart_decode(&line, &SerialConfig::new_8n1(19200)).unwrap();
        assert!(r.framing_errors >= 1);
        assert!(r.octets.len() + r.framing_errors <= r.attempted_frames);
    }

    #[test]
    fn parity_errors_counted() {
        let even = SerialConfig {
            parity: Parity::Even,
            ..SerialConfig::new_8n1(2400)
        };
        let odd = SerialConfig {
            parity: Parity::Odd,
            ..even
        };
        let line = uart_encode(&[0x01, 0x03], &even).unwrap();
        let r = uart_decode(&line, &odd).unwrap();
        assert_eq!(r.octets, vec![0x01, 0x03]);
        assert_eq!(r.parity_errors, 2);
        assert_eq!(r.framing_errors, 0);
    }

    #[test]
    fn seven_bit_two_stop() {
        let cfg = SerialConfig {
            baud: 4800,
            data_bits: 7,
            parity: Parity::Odd,
            stop_bits: 2,
        };
        let data: Vec<u8> = (0..128).collect();
        let r = uart_decode(&uart_encode(&data, &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(r.octets, data);
        assert_eq!(r.parity_errors, 0);
    }

    #[test]
    fn estimates_standard_rates() {
        let data = b"estimate me please";
        for baud in [9600, 19200, 300, 115_200] {
            let line = uart_encode(data, &SerialConfig::new_8n1(baud)).unwrap();
            assert_eq!(estimate_baud(&line, &STANDARD_BAUD_RATES).unwrap(), baud);
        }
    }

    #[test]
    fn too_few_edges_for_estimation() {
        let line = LogicEventStream::new(true, vec![0.0, 0.001], 0.01).unwrap();
        assert!(matches!(
            estimate_baud(&line, &STANDARD_BAUD_RATES),
            Err(RecoveryError::BaudEstimation(_))
        ));
    }
}
