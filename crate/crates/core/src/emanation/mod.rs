//! Synthetic photodetector traces for LED indicators.
//!
//! Devices are grouped by what their indicator follows:
//!
//! | Class | Follows           | Risk   |
//! |-------|-------------------|--------|
//! | I     | device state      | low    |
//! | II    | activity level    | medium |
//! | III   | data content      | high   |
//!
//! A Class III indicator is wired straight to a serial data line, so the light
//! carries every bit. A Class II indicator only reports that traffic happened
//! recently. A Class I indicator ignores traffic altogether.

mod led;
mod line;
mod trace;
mod uart;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use led::{activity_envelope, apply_pulse_stretch, led_transduce, LedModel, LedPolarity};
pub use line::LogicEventStream;
pub use trace::{add_noise, NoiseModel, OpticalTrace};
pub use uart::{uart_encode, Parity, SerialConfig};

/// Default Class II activity window. Blinks shorter than a few tens of
/// milliseconds fuse for a human observer.
pub const DEFAULT_ACTIVITY_WINDOW: f64 = 10e-3;

/// Default quiet time recorded after the last drive transition.
pub const DEFAULT_CAPTURE_TAIL: f64 = 20e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmanationError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid event stream: {0}")]
    InvalidStream(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("class {0} synthesis needs a non-empty payload")]
    EmptyPayload(EmanationClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmanationClass {
    /// Correlated with device state.
    ClassI,
    /// Correlated with activity level.
    ClassII,
    /// Correlated with data content.
    ClassIII,
}

impl EmanationClass {
    pub const ALL: [EmanationClass; 3] = [
        EmanationClass::ClassI,
        EmanationClass::ClassII,
        EmanationClass::ClassIII,
    ];

    /// 1 for low risk up to 3 for high risk.
    pub fn risk_rank(self) -> u8 {
        match self {
            EmanationClass::ClassI => 1,
            EmanationClass::ClassII => 2,
            EmanationClass::ClassIII => 3,
        }
    }

    pub fn roman(self) -> &'static str {
        match self {
            EmanationClass::ClassI => "I",
            EmanationClass::ClassII => "II",
            EmanationClass::ClassIII => "III",
        }
    }
}

impl std::fmt::Display for EmanationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.roman())
    }
}

impl std::str::FromStr for EmanationClass {
    type Err = EmanationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s
            .trim()
            .trim_start_matches("Class")
            .trim_start_matches("class")
        {
            "I" | "1" => Ok(EmanationClass::ClassI),
            "II" | "2" => Ok(EmanationClass::ClassII),
            "III" | "3" => Ok(EmanationClass::ClassIII),
            other => Err(EmanationError::Config(format!(
                "unknown emanation class {other:?}"
            ))),
        }
    }
}

/// On/off schedule of a state indicator. Each toggle flips the LED.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSchedule {
    pub initially_on: bool,
    pub toggles: Vec<f64>,
}

impl StateSchedule {
    pub fn steady(on: bool) -> Self {
        Self {
            initially_on: on,
            toggles: Vec::new(),
        }
    }
}

impl Default for StateSchedule {
    fn default() -> Self {
        Self::steady(true)
    }
}

/// How the indicator is wired to the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Serial line the indicator taps. Required for Class III; Class I and II
    /// fall back to 9600-8N1 to time the payload.
    pub serial: Option<SerialConfig>,
    pub polarity: LedPolarity,
    /// Class II: how long the indicator stays lit after a transition.
    pub activity_window: f64,
    /// Class I: when the indicator is on.
    pub state: StateSchedule,
    /// Minimum LED on-time enforced by the driver; zero disables stretching.
    pub stretch_min_on: f64,
    /// Idle observation appended after the drive signal settles.
    pub capture_tail: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            serial: Some(SerialConfig::default()),
            polarity: LedPolarity::default(),
            activity_window: DEFAULT_ACTIVITY_WINDOW,
            state: StateSchedule::default(),
            stretch_min_on: 0.0,
            capture_tail: DEFAULT_CAPTURE_TAIL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub class: EmanationClass,
    pub led: LedModel,
    pub drive: DriveConfig,
}

impl DeviceProfile {
    pub fn new(class: EmanationClass) -> Self {
        Self {
            class,
            led: LedModel::default(),
            drive: DriveConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EmanationError> {
        self.led.validate()?;
        match (self.class, &self.drive.serial) {
            (EmanationClass::ClassIII, None) => {
                return Err(EmanationError::Config(
                    "class III profile needs a serial configuration".into(),
                ))
            }
            (_, Some(cfg)) => cfg.validate()?,
            _ => {}
        }
        if [self.drive.capture_tail, self.drive.stretch_min_on]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(EmanationError::Config(
                "capture tail and stretch must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// The LED drive signal (high = lit) this device produces for `data`,
    /// before optics and noise.
    pub fn drive_signal(&self, data: &[u8]) -> Result<LogicEventStream, EmanationError> {
        self.validate()?;
        let serial = self.drive.serial.unwrap_or_default();
        let drive = match self.class {
            EmanationClass::ClassIII => {
                if data.is_empty() {
                    return Err(EmanationError::EmptyPayload(self.class));
                }
                self.drive.polarity.drive(&uart_encode(data, &serial)?)
            }
            EmanationClass::ClassII => {
                if data.is_empty() {
                    return Err(EmanationError::EmptyPayload(self.class));
                }
                activity_envelope(&uart_encode(data, &serial)?, self.drive.activity_window)?
            }
            EmanationClass::ClassI => {
                let span = uart_encode(data, &serial)?.duration();
                let toggles: Vec<f64> = self
                    .drive
                    .state
                    .toggles
                    .iter()
                    .copied()
                    .filter(|t| (0.0..=span).contains(t))
                    .collect();
                LogicEventStream::new(self.drive.state.initially_on, toggles, span)?
            }
        };
        let drive = apply_pulse_stretch(&drive, self.drive.stretch_min_on);
        Ok(drive.extended_to(drive.duration() + self.drive.capture_tail))
    }
}

/// Produces the photodetector trace a device would emit while handling `data`.
///
/// Class III lights the LED with the serial line itself, Class II with its
/// activity envelope, Class I with the state schedule. Noise is added last.
pub fn synthesize_class(
    profile: &DeviceProfile,
    data: &[u8],
    noise: &NoiseModel,
    sample_rate: f64,
) -> Result<OpticalTrace, EmanationError> {
    let drive = profile.drive_signal(data)?;
    let clean = led_transduce(&drive, &profile.led, sample_rate)?;
    add_noise(&clean, noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_i_on_is_constant() {
        let profile = DeviceProfile::new(EmanationClass::ClassI);
        let trace = synthesize_class(&profile, b"anything", &NoiseModel::none(), 1e6).unwrap();
        assert!(trace.samples().iter().all(|&s| s == profile.led.on_level));
    }

    #[test]
    fn class_iii_without_serial_is_config_error() {
        let mut profile = DeviceProfile::new(EmanationClass::ClassIII);
        profile.drive.serial = None;
        assert!(matches!(
            synthesize_class(&profile, b"x", &NoiseModel::none(), 1e6),
            Err(EmanationError::Config(_))
        ));
    }

    #[test]
    fn empty_payload_rejected_for_traffic_classes() {
        for class in [EmanationClass::ClassII, EmanationClass::ClassIII] {
            let profile = DeviceProfile::new(class);
            assert_eq!(
                synthesize_class(&profile, b"", &NoiseModel::none(), 1e6),
                Err(EmanationError::EmptyPayload(class))
            );
        }
    }

    #[test]
    fn class_parse() {
        assert_eq!(
            "III".parse::<EmanationClass>().unwrap(),
            EmanationClass::ClassIII
        );
        assert_eq!(
            "ClassII".parse::<EmanationClass>().unwrap(),
            EmanationClass::ClassII
        );
        assert!("IV".parse::<EmanationClass>().is_err());
    }

    #[test]
    fn class_iii_drive_follows_polarity() {
        let mut profile = DeviceProfile::new(EmanationClass::ClassIII);
        let lit_on_space = profile.drive_signal(&[0x00]).unwrap();
        assert!(!lit_on_space.initial_level());
        profile.drive.polarity = LedPolarity::LitOnMark;
        let lit_on_mark = profile.drive_signal(&[0x00]).unwrap();
        assert!(lit_on_mark.initial_level());
        assert_eq!(lit_on_space.edges(), lit_on_mark.edges());
    }
}
