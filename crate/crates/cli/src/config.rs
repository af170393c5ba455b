//! Flat `key=value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use optempest::emanation::{EmanationClass, SerialConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaudSetting {
    Fixed(u32),
    Auto,
}

impl fmt::Display for BaudSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaudSetting::Fixed(b) => write!(f, "{b}"),
            BaudSetting::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for BaudSetting {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BaudSetting::Auto);
        }
        let b: u32 = s
            .parse()
            .map_err(|_| anyhow!("baud {s:?} is neither an integer nor `auto`"))?;
        if b == 0 {
            bail!("baud must be positive");
        }
        Ok(BaudSetting::Fixed(b))
    }
}

/// Every parameter an experiment reads. Written next to each run's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub class: EmanationClass,
    /// Payload for `synth` and reference traffic for `classify`.
    pub data: String,
    pub baud: BaudSetting,
    /// Character format such as `8N1`.
    pub char_format: String,
    /// `None` picks the larger of 1 MHz and 16 samples per bit.
    pub sample_rate: Option<f64>,
    pub sigma: f64,
    pub stretch_us: Vec<f64>,
    pub frames: usize,
    pub attenuation: f64,
    /// Random payload length for `sweep-stretch`.
    pub payload_octets: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("."),
            class: EmanationClass::ClassIII,
            data: "SECRET".into(),
            baud: BaudSetting::Fixed(9600),
            char_format: "8N1".into(),
            sample_rate: None,
            sigma: 0.0,
            stretch_us: Vec::new(),
            frames: 10,
            attenuation: 0.8,
            payload_octets: 64,
        }
    }
}

impl ExperimentConfig {
    pub fn serial(&self, baud: u32) -> Result<SerialConfig> {
        format!("{baud}-{}", self.char_format)
            .parse()
            .map_err(|e| anyhow!("{e}"))
    }

    pub fn fixed_baud(&self) -> Result<u32> {
        match self.baud {
            BaudSetting::Fixed(b) => Ok(b),
            BaudSetting::Auto => bail!("`--baud auto` is only meaningful for recover"),
        }
    }

    pub fn sample_rate_for(&self, baud: u32) -> f64 {
        self.sample_rate
            .unwrap_or_else(|| (16.0 * f64::from(baud)).max(1e6))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| {
            v.parse::<f64>()
                .with_context(|| format!("{key}={v} is not a number"))
        };
        match key {
            "seed" => {
                self.seed = value
                    .parse()
                    .with_context(|| format!("seed={value} is not a u64"))?
            }
            "out" => self.out = PathBuf::from(value),
            "class" => self.class = value.parse().map_err(|e| anyhow!("{e}"))?,
            "data" => self.data = value.to_string(),
            "baud" => self.baud = value.parse()?,
            "char_format" => self.char_format = value.to_string(),
            "sample_rate_hz" => {
                self.sample_rate = if value == "auto" {
                    None
                } else {
                    Some(num(value)?)
                };
            }
            "sigma" => self.sigma = num(value)?,
            "stretch_us" => self.stretch_us = parse_list(value)?,
            "frames" => {
                self.frames = value
                    .parse()
                    .with_context(|| format!("frames={value} is not a count"))?
            }
            "attenuation" => self.attenuation = num(value)?,
            "payload_octets" => {
                self.payload_octets = value
                    .parse()
                    .with_context(|| format!("payload_octets={value} is not a count"))?
            }
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    /// Applies a config file on top of the current values.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
            self.set(k.trim(), v.trim())
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.merge_text(text)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let stretch = self
            .stretch_us
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let sample_rate = self
            .sample_rate
            .map_or_else(|| "auto".to_string(), |f| f.to_string());
        [
            format!("seed={}", self.seed),
            format!("out={}", self.out.display()),
            format!("class={}", self.class.roman()),
            format!("data={}", self.data),
            format!("baud={}", self.baud),
            format!("char_format={}", self.char_format),
            format!("sample_rate_hz={sample_rate}"),
            format!("sigma={}", self.sigma),
            format!("stretch_us={stretch}"),
            format!("frames={}", self.frames),
            format!("attenuation={}", self.attenuation),
            format!("payload_octets={}", self.payload_octets),
        ]
        .iter()
        .map(|l| format!("{l}\n"))
        .collect()
    }
}

/// Comma-separated floats; blank yields an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("{t:?} is not a number"))
        })
        .collect()
}
