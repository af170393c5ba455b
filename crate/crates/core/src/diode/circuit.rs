use serde::{Deserialize, Serialize};

use crate::emanation::{LogicEventStream, OpticalTrace};

use super::DiodeError;

/// Reverse-biased photodiode pulling down a resistor-fed logic input.
///
/// The photodiode sits between the input node and ground, a pull-up ties the
/// node to the supply, and a small series resistor sits between the node and
/// the input pin in case the pin is ever driven as an output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverCircuit {
    pub pullup_ohms: f64,
    pub series_ohms: f64,
    pub supply_volts: f64,
    /// Fraction of the supply at which the input reads high.
    pub logic_threshold_fraction: f64,
    /// Photocurrent at full (unit) irradiance, in amperes.
    pub photocurrent_on: f64,
    /// Largest current the receiving pin may source without damage.
    pub driver_limit_amps: f64,
}

impl Default for ReceiverCircuit {
    fn default() -> Self {
        Self {
            pullup_ohms: 10e3,
            series_ohms: 100.0,
            supply_volts: 3.3,
            logic_threshold_fraction: 0.5,
            photocurrent_on: 0.5e-3,
            driver_limit_amps: 25e-3,
        }
    }
}

impl ReceiverCircuit {
    pub fn validate(&self) -> Result<(), DiodeError> {
        let positive = [
            ("pullup_ohms", self.pullup_ohms),
            ("series_ohms", self.series_ohms),
            ("supply_volts", self.supply_volts),
            ("driver_limit_amps", self.driver_limit_amps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DiodeError::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.logic_threshold_fraction > 0.0 && self.logic_threshold_fraction < 1.0) {
            return Err(DiodeError::Config(format!(
                "logic threshold fraction {} outside (0, 1)",
                self.logic_threshold_fraction
            )));
        }
        if !(self.photocurrent_on >= 0.0 && self.photocurrent_on.is_finite()) {
            return Err(DiodeError::Config(format!(
                "photocurrent {} must be non-negative",
                self.photocurrent_on
            )));
        }
        Ok(())
    }

    /// Steady-state node voltage for a given irradiance.
    pub fn node_voltage(&self, irradiance: f64) -> f64 {
        (self.supply_volts - irradiance * self.photocurrent_on * self.pullup_ohms).max(0.0)
    }

    pub fn threshold_volts(&self) -> f64 {
        self.logic_threshold_fraction * self.supply_volts
    }

    pub fn logic_level(&self, irradiance: f64) -> bool {
        self.node_voltage(irradiance) >= self.threshold_volts()
    }
}

/// Output of the receiver: the logic level seen at the input pin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceivedLine {
    pub node: LogicEventStream,
    /// Light pulls the node low, so a lit emitter reads as logic 0.
    pub light_is_low: bool,
}

impl ReceivedLine {
    /// The node stream re-inverted so that high means light.
    pub fn light(&self) -> LogicEventStream {
        if self.light_is_low {
            self.node.inverted()
        } else {
            self.node.clone()
        }
    }
}

/// Runs a trace through the receiver circuit.
///
/// Edge times are measured from the start of the trace, at the first sample
/// in the new state.
pub fn photodiode_receive(trace: &OpticalTrace, rx: &ReceiverCircuit) -> ReceivedLine {
    let fs = trace.sample_rate();
    let mut levels = trace.samples().iter().map(|&x| rx.logic_level(x));
    let Some(initial) = levels.next() else {
        return ReceivedLine {
            node: LogicEventStream::constant(true, 0.0),
            light_is_low: true,
        };
    };
    let mut state = initial;
    let mut edges = Vec::new();
    for (i, level) in levels.enumerate() {
        if level != state {
            edges.push((i + 1) as f64 / fs);
            state = level;
        }
    }
    let node = LogicEventStream::new(initial, edges, trace.span())
        .expect("sample instants are increasing and within the span");
    ReceivedLine {
        node,
        light_is_low: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentionReport {
    pub current_amps: f64,
    pub safe: bool,
}

/// Worst-case current out of the receiving pin if it is mistakenly driven as
/// an output.
///
/// Driven HIGH into an illuminated photodiode, the diode is taken as a short
/// to ground and only the series resistor limits the current. Driven HIGH in
/// the dark, the pull-up is taken as the return path, in series with the
/// series resistor. Driven LOW, the pin sources nothing.
pub fn contention_check(
    rx: &ReceiverCircuit,
    driver_high: bool,
    illuminated: bool,
) -> ContentionReport {
    let current_amps = match (driver_high, illuminated) {
        (false, _) => 0.0,
        (true, true) => rx.supply_volts / rx.series_ohms,
        (true, false) => rx.supply_volts / (rx.series_ohms + rx.pullup_ohms),
    };
    let bound = rx.supply_volts / rx.series_ohms;
    ContentionReport {
        current_amps,
        safe: current_amps <= bound && current_amps <= rx.driver_limit_amps,
    }
}
