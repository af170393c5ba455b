use serde::{Deserialize, Serialize};

use crate::emanation::{
    synthesize_class, uart_encode, DeviceProfile, EmanationClass, LedModel, LogicEventStream,
    NoiseModel, OpticalTrace, SerialConfig,
};

use super::{recover_serial, RecoveryError, RecoveryOptions};

/// Fraction of wrong bits over `8 * max(len)` positions. Octets missing from
/// the shorter sequence count as eight wrong bits each.
pub fn bit_error_rate(sent: &[u8], recovered: &[u8]) -> f64 {
    let n = sent.len().max(recovered.len());
    if n == 0 {
        return 0.0;
    }
    let wrong: u32 = (0..n)
        .map(|i| match (sent.get(i), recovered.get(i)) {
            (Some(a), Some(b)) => (a ^ b).count_ones(),
            _ => 8,
        })
        .sum();
    f64::from(wrong) / (8 * n) as f64
}

/// Plug-in estimate of the mutual information, in bits per sample, between
/// the trace amplitude and the level of `data_line` at each sample instant.
///
/// Only samples whose timestamps fall inside `[0, data_line.duration()]` are
/// used. Amplitudes are split into `bins` equal-width bins over their observed
/// range. No bias correction is applied. Because the line is binary the
/// result lies in `[0, 1]`.
pub fn leakage_mutual_information(
    trace: &OpticalTrace,
    data_line: &LogicEventStream,
    bins: usize,
) -> Result<f64, RecoveryError> {
    if bins < 2 {
        return Err(RecoveryError::Config(format!(
            "{bins} bins; need at least 2"
        )));
    }
    let pairs: Vec<(f64, bool)> = (0..trace.len())
        .filter_map(|i| {
            let t = trace.time_of(i);
            (0.0..=data_line.duration())
                .contains(&t)
                .then(|| (trace.samples()[i], data_line.level_at(t)))
        })
        .collect();
    if pairs.is_empty() {
        return Err(RecoveryError::Domain(
            "trace and data line do not overlap in time".into(),
        ));
    }

    let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut joint = vec![[0usize; 2]; bins];
    for &(x, level) in &pairs {
        let bin = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        joint[bin][usize::from(level)] += 1;
    }

    let total = pairs.len() as f64;
    let level_counts = joint
        .iter()
        .fold([0usize; 2], |acc, row| [acc[0] + row[0], acc[1] + row[1]]);
    let mut mi = 0.0;
    for row in &joint {
        let row_total = (row[0] + row[1]) as f64;
        for level in 0..2 {
            let count = row[level] as f64;
            if count > 0.0 {
                mi += count / total
                    * (count * total / (row_total * level_counts[level] as f64)).log2();
            }
        }
    }
    Ok(mi.clamp(0.0, 1.0))
}

/// One point of a pulse-stretch sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchPoint {
    pub min_on: f64,
    pub ber: f64,
    pub mutual_information: f64,
}

/// Inputs for a pulse-stretch sweep over one Class III device.
#[derive(Debug, Clone, PartialEq)]
pub struct StretchSweep {
    pub serial: SerialConfig,
    pub led: LedModel,
    pub sample_rate: f64,
    pub noise: NoiseModel,
    pub mi_bins: usize,
    pub options: RecoveryOptions,
}

impl StretchSweep {
    pub fn new(serial: SerialConfig, sample_rate: f64) -> Self {
        Self {
            serial,
            led: LedModel::default(),
            sample_rate,
            noise: NoiseModel::none(),
            mi_bins: 16,
            options: RecoveryOptions::default(),
        }
    }

    /// Synthesizes the stretched trace for each `min_on`, recovers it and
    /// measures bit error rate and leakage against the true serial line.
    pub fn run(&self, data: &[u8], min_on: &[f64]) -> Result<Vec<StretchPoint>, RecoveryError> {
        if min_on.is_empty() {
            return Err(RecoveryError::Config(
                "stretch sweep needs at least one min_on value".into(),
            ));
        }
        let line = uart_encode(data, &self.serial)?;
        let mut profile = DeviceProfile::new(EmanationClass::ClassIII);
        profile.led = self.led;
        profile.drive.serial = Some(self.serial);
        min_on
            .iter()
            .map(|&stretch| {
                profile.drive.stretch_min_on = stretch;
                let trace = synthesize_class(&profile, data, &self.noise, self.sample_rate)?;
                let recovered = match recover_serial(&trace, &self.serial, &self.options) {
                    Ok(r) => r.octets,
                    Err(RecoveryError::NoSignal) => Vec::new(),
                    Err(e) => return Err(e),
                };
                Ok(StretchPoint {
                    min_on: stretch,
                    ber: bit_error_rate(data, &recovered),
                    mutual_information: leakage_mutual_information(&trace, &line, self.mi_bins)?,
                })
            })
            .collect()
    }
}

/// Checks that, ordered by `min_on`, bit error rate never falls and leakage
/// never rises. `slack` absorbs estimator jitter in the leakage figure.
pub fn check_stretch_monotonic(points: &[StretchPoint], slack: f64) -> Result<(), String> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.min_on.total_cmp(&b.min_on));
    for w in sorted.windows(2) {
        if w[1].ber < w[0].ber {
            return Err(format!(
                "BER fell from {} to {} between min_on {} and {}",
                w[0].ber, w[1].ber, w[0].min_on, w[1].min_on
            ));
        }
        if w[1].mutual_information > w[0].mutual_information + slack {
            return Err(format!(
                "leakage rose from {} to {} bits between min_on {} and {}",
                w[0].mutual_information, w[1].mutual_information, w[0].min_on, w[1].min_on
            ));
        }
    }
    Ok(())
}
