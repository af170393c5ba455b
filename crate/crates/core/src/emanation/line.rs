use serde::{Deserialize, Serialize};

use super::EmanationError;

/// A binary line described by its starting level and the instants at which
/// it toggles.
///
/// Timestamps are seconds from the start of the stream, strictly increasing,
/// and lie in `[0, duration]`. An edge at `t` means the new level holds from
/// `t` onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicEventStream {
    initial_level: bool,
    edges: Vec<f64>,
    duration: f64,
}

impl LogicEventStream {
    pub fn new(
        initial_level: bool,
        edges: Vec<f64>,
        duration: f64,
    ) -> Result<Self, EmanationError> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(EmanationError::InvalidStream(format!(
                "duration {duration} is not a non-negative finite time"
            )));
        }
        for (i, &t) in edges.iter().enumerate() {
            if !t.is_finite() || t < 0.0 || t > duration {
                return Err(EmanationError::InvalidStream(format!(
                    "edge {i} at {t} s lies outside [0, {duration}]"
                )));
            }
            if i > 0 && t <= edges[i - 1] {
                return Err(EmanationError::InvalidStream(format!(
                    "edge {i} at {t} s is not after its predecessor"
                )));
            }
        }
        Ok(Self {
            initial_level,
            edges,
            duration,
        })
    }

    /// A line that never changes.
    pub fn constant(level: bool, duration: f64) -> Self {
        Self {
            initial_level: level,
            edges: Vec::new(),
            duration: duration.max(0.0),
        }
    }

    /// Builds a stream that is high exactly on the given intervals.
    ///
    /// Intervals must be sorted by start; overlapping or touching intervals are
    /// merged, empty ones dropped, and everything is clipped to `[0, duration]`.
    /// `initial_level` is the level just before `t = 0`; an edge at zero is
    /// emitted when the first interval disagrees with it.
    pub(crate) fn from_high_intervals(
        initial_level: bool,
        intervals: &[(f64, f64)],
        duration: f64,
    ) -> Self {
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals {
            let (a, b) = (a.max(0.0), b.min(duration));
            if b <= a {
                continue;
            }
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let mut edges = Vec::with_capacity(merged.len() * 2 + 1);
        let high_at_zero = merged.first().is_some_and(|&(a, _)| a == 0.0);
        if initial_level != high_at_zero {
            edges.push(0.0);
        }
        for (a, b) in merged {
            if a > 0.0 {
                edges.push(a);
            }
            if b < duration {
                edges.push(b);
            }
        }
        Self {
            initial_level,
            edges,
            duration,
        }
    }

    pub fn initial_level(&self) -> bool {
        self.initial_level
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Level held after the last edge.
    pub fn final_level(&self) -> bool {
        self.initial_level ^ (self.edges.len() % 2 == 1)
    }

    /// Level held after edge `index`.
    pub fn level_after_edge(&self, index: usize) -> bool {
        self.initial_level ^ index.is_multiple_of(2)
    }

    /// Level at time `t`. Times before zero read the initial level and times
    /// past the end read the final level.
    pub fn level_at(&self, t: f64) -> bool {
        let toggles = self.edges.partition_point(|&e| e <= t);
        self.initial_level ^ (toggles % 2 == 1)
    }

    /// Intervals on which the line is high, as `(start, end)` pairs.
    pub fn high_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.edges.len() / 2 + 1);
        let mut start = if self.initial_level { Some(0.0) } else { None };
        for (i, &t) in self.edges.iter().enumerate() {
            if self.level_after_edge(i) {
                start = Some(t);
            } else if let Some(s) = start.take() {
                if t > s {
                    out.push((s, t));
                }
            }
        }
        if let Some(s) = start {
            out.push((s, self.duration));
        }
        out
    }

    /// Shortest time between consecutive edges, if there are at least two.
    pub fn shortest_pulse(&self) -> Option<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    /// The same line with every level flipped.
    pub fn inverted(&self) -> Self {
        Self {
            initial_level: !self.initial_level,
            edges: self.edges.clone(),
            duration: self.duration,
        }
    }

    /// The same line observed for a longer time; the final level persists.
    pub fn extended_to(&self, duration: f64) -> Self {
        Self {
            initial_level: self.initial_level,
            edges: self.edges.clone(),
            duration: self.duration.max(duration),
        }
    }

    /// Idle time after the last edge.
    pub(crate) fn trailing_gap(&self) -> f64 {
        self.duration - self.edges.last().copied().unwrap_or(0.0)
    }
}
