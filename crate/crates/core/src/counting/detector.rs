use std::path::{Path, PathBuf};

use crate::constants::{
    GATED_EFFICIENCY, GATE_WIDTH_NS, NFAD_DARK_RATE_HZ, NFAD_EFFICIENCY, TRUE_PEAK_OFFSET_NS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    FreeRunning,
    Gated,
}

/// Relative detection efficiency vs time offset inside the gate.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyProfile {
    offset_ns: Vec<f64>,
    multiplier: Vec<f64>,
}

impl EfficiencyProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("efficiency_profile", "no points"));
        }
        let mut offset_ns = Vec::with_capacity(points.len());
        let mut multiplier = Vec::with_capacity(points.len());
        for (o, m) in points {
            if !(o.is_finite() && m.is_finite() && m >= 0.0) {
                return Err(Error::invalid(
                    "efficiency_profile",
                    format!("bad point ({o}, {m})"),
                ));
            }
            if offset_ns.last().is_some_and(|&p| o <= p) {
                return Err(Error::invalid(
                    "efficiency_profile",
                    "offsets must be strictly increasing",
                ));
            }
            offset_ns.push(o);
            multiplier.push(m);
        }
        Ok(Self {
            offset_ns,
            multiplier,
        })
    }

    /// Reads an `offset_ns,multiplier` CSV with `#` comments.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let data_err = |line: usize, message: String| Error::Data {
            path: PathBuf::from(path),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| data_err(0, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["offset_ns", "multiplier"] {
            return Err(data_err(1, "expected header `offset_ns,multiplier`".into()));
        }
        let mut points = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                data_err(e.position().map_or(0, |p| p.line() as usize), e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let parse = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| data_err(line, format!("not a number: `{}`", &rec[i])))
            };
            points.push((parse(0)?, parse(1)?));
        }
        Self::new(points)
    }

    /// Linear interpolation, held constant beyond the end points.
    pub fn at(&self, offset_ns: f64) -> f64 {
        let x = &self.offset_ns;
        let y = &self.multiplier;
        if offset_ns <= x[0] {
            return y[0];
        }
        let k = x.partition_point(|&v| v <= offset_ns);
        if k == x.len() {
            return y[k - 1];
        }
        y[k - 1] + (y[k] - y[k - 1]) * (offset_ns - x[k - 1]) / (x[k] - x[k - 1])
    }

    pub fn max(&self) -> f64 {
        self.multiplier.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    pub efficiency: f64,
    /// Free-running dark count rate, 1/s.
    pub dark_rate_hz: f64,
    /// Gated: probability of a dark count somewhere in one full gate.
    pub dark_prob_per_gate: f64,
    pub dead_time_ns: f64,
    pub gate_width_ns: f64,
    /// Arrival offset of same-pulse photons relative to the gate trigger.
    pub electronic_delay_ns: f64,
    /// Gated only; `None` is a flat gate.
    pub profile: Option<EfficiencyProfile>,
}

/// Gated dark probability per gate used when none is configured.
pub const DEFAULT_GATED_DARK_PROB: f64 = 9.431e-3;
/// Free-running detector dead time used when none is configured, ns.
pub const DEFAULT_NFAD_DEAD_TIME_NS: f64 = 10_000.0;

impl DetectorModel {
    pub fn nfad() -> Self {
        Self {
            kind: DetectorKind::FreeRunning,
            efficiency: NFAD_EFFICIENCY,
            dark_rate_hz: NFAD_DARK_RATE_HZ,
            dark_prob_per_gate: 0.0,
            dead_time_ns: DEFAULT_NFAD_DEAD_TIME_NS,
            gate_width_ns: 0.0,
            electronic_delay_ns: 0.0,
            profile: None,
        }
    }

    pub fn gated() -> Self {
        Self {
            kind: DetectorKind::Gated,
            efficiency: GATED_EFFICIENCY,
            dark_rate_hz: 0.0,
            dark_prob_per_gate: DEFAULT_GATED_DARK_PROB,
            dead_time_ns: 0.0,
            gate_width_ns: GATE_WIDTH_NS,
            electronic_delay_ns: TRUE_PEAK_OFFSET_NS,
            profile: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(
                "efficiency",
                format!("must be in [0, 1], got {}", self.efficiency),
            ));
        }
        if !(self.dead_time_ns >= 0.0 && self.dead_time_ns.is_finite()) {
            return Err(Error::invalid(
                "dead_time",
                format!("must be >= 0, got {}", self.dead_time_ns),
            ));
        }
        if !self.electronic_delay_ns.is_finite() {
            return Err(Error::invalid("electronic_delay", "must be finite"));
        }
        match self.kind {
            DetectorKind::FreeRunning => {
                if !(self.dark_rate_hz >= 0.0 && self.dark_rate_hz.is_finite()) {
                    return Err(Error::invalid(
                        "dark_rate",
                        format!("must be >= 0, got {}", self.dark_rate_hz),
                    ));
                }
            }
            DetectorKind::Gated => {
                if !(self.gate_width_ns > 0.0 && self.gate_width_ns.is_finite()) {
                    return Err(Error::invalid(
                        "gate_width",
                        format!("must be > 0, got {}", self.gate_width_ns),
                    ));
                }
                if !(0.0..1.0).contains(&self.dark_prob_per_gate) {
                    return Err(Error::invalid(
                        "dark_prob_per_gate",
                        format!("must be in [0, 1), got {}", self.dark_prob_per_gate),
                    ));
                }
                if let Some(p) = &self.profile {
                    if p.max() * self.efficiency > 1.0 {
                        return Err(Error::invalid(
                            "efficiency_profile",
                            "efficiency times multiplier exceeds 1",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Gate dark counts as a Poisson rate, 1/ns.
    pub fn gate_dark_rate_per_ns(&self) -> f64 {
        -(1.0 - self.dark_prob_per_gate).ln() / self.gate_width_ns
    }

    /// Efficiency multiplier at an offset inside the gate.
    pub fn multiplier(&self, offset_ns: f64) -> f64 {
        self.profile.as_ref().map_or(1.0, |p| p.at(offset_ns))
    }
}
