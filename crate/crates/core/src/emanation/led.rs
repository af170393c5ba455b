use serde::{Deserialize, Serialize};

use super::{EmanationError, LogicEventStream, OpticalTrace};

/// First-order optical response of an indicator LED.
///
/// `rise_time` and `fall_time` are the exponential time constants used when
/// the drive turns the LED on and off respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedModel {
    pub rise_time: f64,
    pub fall_time: f64,
    pub on_level: f64,
    pub off_level: f64,
}

impl Default for LedModel {
    /// A garden-variety indicator: 20 ns time constants, full-scale swing.
    fn default() -> Self {
        Self {
            rise_time: 20e-9,
            fall_time: 20e-9,
            on_level: 1.0,
            off_level: 0.0,
        }
    }
}

impl LedModel {
    pub fn validate(&self) -> Result<(), EmanationError> {
        if !(self.rise_time > 0.0 && self.fall_time > 0.0)
            || !self.rise_time.is_finite()
            || !self.fall_time.is_finite()
        {
            return Err(EmanationError::Config(
                "LED rise and fall times must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.on_level) || !(0.0..self.on_level).contains(&self.off_level)
        {
            return Err(EmanationError::Config(format!(
                "LED levels must satisfy 0 <= off ({}) < on ({}) <= 1",
                self.off_level, self.on_level
            )));
        }
        Ok(())
    }

    fn target(&self, lit: bool) -> f64 {
        if lit {
            self.on_level
        } else {
            self.off_level
        }
    }

    fn relax(&self, y: f64, lit: bool, dt: f64) -> f64 {
        let tau = if lit { self.rise_time } else { self.fall_time };
        let target = self.target(lit);
        (target + (y - target) * (-dt / tau).exp()).clamp(self.off_level, self.on_level)
    }
}

/// Which serial line level lights the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LedPolarity {
    /// Lit while the line is at space (logic 0), dark when idle.
    #[default]
    LitOnSpace,
    /// Lit while the line is at mark (logic 1), including idle.
    LitOnMark,
}

impl LedPolarity {
    /// Converts a serial line into the LED drive signal (high = lit).
    pub fn drive(self, line: &LogicEventStream) -> LogicEventStream {
        match self {
            LedPolarity::LitOnSpace => line.inverted(),
            LedPolarity::LitOnMark => line.clone(),
        }
    }

    /// Inverse of [`LedPolarity::drive`].
    pub fn undrive(self, drive: &LogicEventStream) -> LogicEventStream {
        self.drive(drive)
    }
}

/// Renders an LED drive signal (high = lit) as sampled irradiance.
///
/// The LED starts in the steady state of the initial level. Between edges the
/// output relaxes exponentially toward the on or off level, evaluated in closed
/// form at each sample instant, so sub-sample pulses still contribute their
/// partial charge.
pub fn led_transduce(
    line: &LogicEventStream,
    led: &LedModel,
    sample_rate: f64,
) -> Result<OpticalTrace, EmanationError> {
    led.validate()?;
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(EmanationError::Config(format!(
            "sample rate {sample_rate} must be positive"
        )));
    }
    if let Some(shortest) = line.shortest_pulse() {
        if sample_rate * shortest < 4.0 {
            log::warn!(
                "sample rate {sample_rate} Hz is below 4 samples per shortest pulse ({shortest:e} s); output will be coarse"
            );
        }
    }

    let n = (line.duration() * sample_rate).ceil() as usize;
    let edges = line.edges();
    let mut samples = Vec::with_capacity(n);
    let mut lit = line.initial_level();
    let mut y = led.target(lit);
    let mut t_state = 0.0;
    let mut next_edge = 0;
    for i in 0..n {
        let t = i as f64 / sample_rate;
        while next_edge < edges.len() && edges[next_edge] <= t {
            let te = edges[next_edge];
            y = led.relax(y, lit, te - t_state);
            t_state = te;
            lit = !lit;
            next_edge += 1;
        }
        y = led.relax(y, lit, t - t_state);
        t_state = t;
        samples.push(y);
    }
    OpticalTrace::new(sample_rate, samples, 0.0)
}

/// Models the PHY countermeasure that holds an LED on for a minimum time.
///
/// Every complete high interval shorter than `min_on` is lengthened to exactly
/// `min_on`; intervals that then overlap or touch are merged. A high interval
/// still open at the end of the stream is left alone. If a stretched pulse runs
/// past the end, the stream is lengthened so the original idle tail follows it.
/// `min_on <= 0` disables stretching.
pub fn apply_pulse_stretch(line: &LogicEventStream, min_on: f64) -> LogicEventStream {
    if min_on.is_nan() || min_on <= 0.0 {
        return line.clone();
    }
    let duration = line.duration();
    let mut intervals = line.high_intervals();
    let open_tail = line.final_level();
    let last_closed = if open_tail {
        intervals.len().saturating_sub(1)
    } else {
        intervals.len()
    };
    let mut latest_end = 0.0f64;
    for (a, b) in intervals.iter_mut().take(last_closed) {
        let min_end = *a + min_on;
        if *b < min_end {
            *b = min_end;
        }
        latest_end = latest_end.max(*b);
    }
    let new_duration = if !open_tail && latest_end > duration {
        latest_end + line.trailing_gap()
    } else {
        duration
    };
    LogicEventStream::from_high_intervals(line.initial_level(), &intervals, new_duration)
}

/// Reduces a line to "was there any transition in the last `window` seconds".
///
/// The output is high on `[e, e + window]` for every input edge `e`. When there
/// is any activity the stream is lengthened by `window` so the envelope can
/// fall back before the end.
pub fn activity_envelope(
    line: &LogicEventStream,
    window: f64,
) -> Result<LogicEventStream, EmanationError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(EmanationError::Config(format!(
            "activity window {window} must be positive"
        )));
    }
    if line.edges().is_empty() {
        return Ok(LogicEventStream::constant(false, line.duration()));
    }
    let intervals: Vec<(f64, f64)> = line.edges().iter().map(|&e| (e, e + window)).collect();
    Ok(LogicEventStream::from_high_intervals(
        false,
        &intervals,
        line.duration() + window,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emanation::{uart_encode, SerialConfig};

    #[test]
    fn constant_high_settles_at_on_level() {
        let line = LogicEventStream::constant(true, 1e-3);
        let trace = led_transduce(&line, &LedModel::default(), 1e6).unwrap();
        assert_eq!(trace.samples().len(), 1000);
        assert!(trace.samples().iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn nanosecond_pulse_through_slow_led_barely_registers() {
        let line = LogicEventStream::new(false, vec![1e-6, 1e-6 + 10e-9], 1e-3).unwrap();
        let led = LedModel {
            rise_time: 100e-6,
            fall_time: 100e-6,
            ..LedModel::default()
        };
        let trace = led_transduce(&line, &led, 1e9 / 10.0).unwrap();
        let peak = trace.samples().iter().copied().fold(0.0, f64::max);
        // Closed form: 1 - exp(-10 ns / 100 us).
        let bound = 1.0 - (-10e-9f64 / 100e-6).exp();
        assert!(peak <= bound + 1e-15);
        assert!(peak < 0.01);
    }

    #[test]
    fn rise_follows_exponential() {
        let line = LogicEventStream::new(false, vec![0.0], 1e-3).unwrap();
        let led = LedModel {
            rise_time: 100e-6,
            ..LedModel::default()
        };
        let trace = led_transduce(&line, &led, 1e6).unwrap();
        for (i, &s) in trace.samples().iter().enumerate().step_by(37) {
            let t = i as f64 * 1e-6;
            assert!((s - (1.0 - (-t / 100e-6).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn output_stays_between_levels() {
        let cfg = SerialConfig::new_8n1(115_200);
        let line = uart_encode(b"bounded", &cfg).unwrap();
        let led = LedModel {
            rise_time: 3e-6,
            fall_time: 1e-6,
            on_level: 0.8,
            off_level: 0.1,
        };
        let trace = led_transduce(&line, &led, 2e6).unwrap();
        assert!(trace.samples().iter().all(|&s| (0.1..=0.8).contains(&s)));
    }

    #[test]
    fn stretch_disabled_is_identity() {
        let line = uart_encode(b"xyz", &SerialConfig::default()).unwrap();
        assert_eq!(apply_pulse_stretch(&line, 0.0), line);
    }

    #[test]
    fn single_short_pulse_becomes_min_on() {
        let line = LogicEventStream::new(false, vec![1e-3, 1e-3 + 1e-6], 2e-3).unwrap();
        let s = apply_pulse_stretch(&line, 50e-3);
        assert_eq!(s.high_intervals().len(), 1);
        let (a, b) = s.high_intervals()[0];
        assert_eq!(a, 1e-3);
        assert!((b - a - 50e-3).abs() < 1e-15);
        assert!(!s.final_level());
    }

    #[test]
    fn nearby_pulses_merge() {
        let line =
            LogicEventStream::new(false, vec![0.0, 1e-6, 10e-3, 10e-3 + 1e-6], 20e-3).unwrap();
        let s = apply_pulse_stretch(&line, 50e-3);
        let iv = s.high_intervals();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].1 - iv[0].0 - 60e-3).abs() < 1e-12);
    }

    #[test]
    fn open_interval_at_end_untouched() {
        let line = LogicEventStream::new(false, vec![1e-3], 1.5e-3).unwrap();
        assert_eq!(apply_pulse_stretch(&line, 1.0), line);
    }

    #[test]
    fn envelope_of_idle_line_is_off() {
        let env = activity_envelope(&LogicEventStream::constant(true, 1.0), 10e-3).unwrap();
        assert!(env.edges().is_empty());
        assert!(!env.initial_level());
    }

    #[test]
    fn envelope_covers_octet_plus_window() {
        let cfg = SerialConfig::new_8n1(9600);
        let line = uart_encode(&[0x55], &cfg).unwrap();
        let env = activity_envelope(&line, 10e-3).unwrap();
        let iv = env.high_intervals();
        assert_eq!(iv.len(), 1);
        let octet = 10.0 / 9600.0;
        let len = iv[0].1 - iv[0].0;
        assert!(
            (len - (octet + 10e-3)).abs() <= 1.0 / 9600.0 + 1e-12,
            "len {len}"
        );
    }

    #[test]
    fn envelope_separates_distant_bursts() {
        let cfg = SerialConfig::new_8n1(9600);
        let first = uart_encode(&[0x41], &cfg).unwrap();
        let mut edges = first.edges().to_vec();
        edges.extend(first.edges().iter().map(|e| e + 1.0));
        let line = LogicEventStream::new(true, edges, 1.0 + first.duration()).unwrap();
        let env = activity_envelope(&line, 10e-3).unwrap();
        assert_eq!(env.high_intervals().len(), 2);
    }

    #[test]
    fn envelope_rejects_bad_window() {
        assert!(activity_envelope(&LogicEventStream::constant(true, 1.0), 0.0).is_err());
    }
}
