use crate::emanation::{LogicEventStream, OpticalTrace};

use super::RecoveryError;

/// Traces whose peak-to-peak range is below this carry no usable signal.
pub const FLAT_RANGE: f64 = 1e-9;

/// Slices a trace into a logic stream (high = bright).
///
/// The decision level is the midpoint of the observed range. With
/// `hysteresis_fraction = h` the detector switches high above
/// `mid + h * range / 2` and low below `mid - h * range / 2`. Edge times are
/// the instants of the first sample in the new state, measured from the start
/// of the trace.
pub fn threshold_detect(
    trace: &OpticalTrace,
    hysteresis_fraction: f64,
) -> Result<LogicEventStream, RecoveryError> {
    if !(0.0..0.5).contains(&hysteresis_fraction) {
        return Err(RecoveryError::Config(format!(
            "hysteresis fraction {hysteresis_fraction} outside [0, 0.5)"
        )));
    }
    let (lo, hi) = trace.min_max().ok_or(RecoveryError::NoSignal)?;
    let range = hi - lo;
    if range < FLAT_RANGE {
        return Err(RecoveryError::NoSignal);
    }
    let mid = lo + range / 2.0;
    let upper = mid + hysteresis_fraction * range / 2.0;
    let lower = mid - hysteresis_fraction * range / 2.0;

    let fs = trace.sample_rate();
    let samples = trace.samples();
    let initial = samples[0] >= mid;
    let mut state = initial;
    let mut edges = Vec::new();
    for (i, &s) in samples.iter().enumerate().skip(1) {
        let next = if state { s > lower } else { s >= upper };
        if next != state {
            edges.push(i as f64 / fs);
            state = next;
        }
    }
    Ok(LogicEventStream::new(initial, edges, trace.span())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emanation::{add_noise, NoiseModel};

    fn square_wave(freq: f64, fs: f64, periods: usize) -> (OpticalTrace, Vec<f64>) {
        let n = (periods as f64 * fs / freq) as usize;
        let half = fs / freq / 2.0;
        let samples = (0..n)
            .map(|i| {
                if ((i as f64 / half) as usize).is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let truth = (1..2 * periods).map(|k| k as f64 / (2.0 * freq)).collect();
        (OpticalTrace::new(fs, samples, 0.0).unwrap(), truth)
    }

    #[test]
    fn clean_square_wave_edges_within_one_sample() {
        let (trace, truth) = square_wave(1e3, 1e6, 5);
        let events = threshold_detect(&trace, 0.1).unwrap();
        assert!(events.initial_level());
        assert_eq!(events.edges().len(), truth.len());
        for (got, want) in events.edges().iter().zip(&truth) {
            assert!((got - want).abs() <= 1e-6 + 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_trace_has_no_signal() {
        let trace = OpticalTrace::new(1e3, vec![0.7; 100], 0.0).unwrap();
        assert!(matches!(
            threshold_detect(&trace, 0.1),
            Err(RecoveryError::NoSignal)
        ));
        let empty = OpticalTrace::new(1e3, vec![], 0.0).unwrap();
        assert!(matches!(
            threshold_detect(&empty, 0.1),
            Err(RecoveryError::NoSignal)
        ));
    }

    #[test]
    fn hysteresis_rejects_noise_chatter() {
        let (trace, truth) = square_wave(1e3, 1e6, 5);
        let noisy = add_noise(&trace, &NoiseModel::gaussian(0.05, 11)).unwrap();
        let events = threshold_detect(&noisy, 0.2).unwrap();
        assert_eq!(events.edges().len(), truth.len());
    }

    #[test]
    fn bad_hysteresis_rejected() {
        let (trace, _) = square_wave(1e3, 1e5, 1);
        assert!(threshold_detect(&trace, 0.5).is_err());
        assert!(threshold_detect(&trace, -0.1).is_err());
    }
}
