use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::constants::photon_energy_j;
use crate::error::{Error, Result};
use crate::fwm::{FilterChannel, PumpConfig, Pumps};

const BUILTIN_SHAPE: &str = include_str!("../../data/raman_shape_v1.csv");
const BUILTIN_NAME: &str = "builtin:raman_shape_v1.csv";

/// Tabulated Raman noise multiplier vs channel detuning `channel - pump` (nm).
#[derive(Debug, Clone, PartialEq)]
pub struct RamanShape {
    detuning_nm: Vec<f64>,
    multiplier: Vec<f64>,
    pub source: String,
}

impl RamanShape {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SHAPE, Path::new(BUILTIN_NAME)).expect("shipped Raman table parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses `detuning_nm,multiplier` CSV text; `#` lines are comments.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let data_err = |line: usize, message: String| Error::Data {
            path: PathBuf::from(origin),
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
        let names: Vec<&str> = headers.iter().collect();
        if names != ["detuning_nm", "multiplier"] {
            return Err(data_err(
                headers.position().map_or(0, |p| p.line() as usize),
                format!(
                    "expected header `detuning_nm,multiplier`, got `{}`",
                    names.join(",")
                ),
            ));
        }
        let mut detuning_nm = Vec::new();
        let mut multiplier = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                data_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| data_err(line, format!("not a number: `{}`", &rec[i])))
            };
            let (d, m) = (field(0)?, field(1)?);
            if m < 0.0 {
                return Err(data_err(line, format!("negative multiplier {m}")));
            }
            if let Some(&prev) = detuning_nm.last() {
                if d <= prev {
                    return Err(data_err(
                        line,
                        "detuning must be strictly increasing".into(),
                    ));
                }
            }
            detuning_nm.push(d);
            multiplier.push(m);
        }
        if detuning_nm.len() < 2 {
            return Err(data_err(0, "need at least two rows".into()));
        }
        Ok(Self {
            detuning_nm,
            multiplier,
            source: origin.display().to_string(),
        })
    }

    pub fn range_nm(&self) -> (f64, f64) {
        (self.detuning_nm[0], *self.detuning_nm.last().unwrap())
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.detuning_nm
            .iter()
            .copied()
            .zip(self.multiplier.iter().copied())
    }

    /// Linear interpolation; no extrapolation beyond the table.
    pub fn multiplier(&self, detuning_nm: f64) -> Result<f64> {
        let (lo, hi) = self.range_nm();
        if !(detuning_nm >= lo && detuning_nm <= hi) {
            return Err(Error::invalid(
                "channel_detuning",
                format!("{detuning_nm:.3} nm outside Raman table range [{lo}, {hi}] nm"),
            ));
        }
        let k = self.detuning_nm.partition_point(|&d| d <= detuning_nm);
        if k == self.detuning_nm.len() {
            return Ok(*self.multiplier.last().unwrap());
        }
        let (x0, x1) = (self.detuning_nm[k - 1], self.detuning_nm[k]);
        let (y0, y1) = (self.multiplier[k - 1], self.multiplier[k]);
        Ok(y0 + (y1 - y0) * (detuning_nm - x0) / (x1 - x0))
    }

    /// Detunings of interior table points lower than both neighbours.
    pub fn local_minima(&self) -> Vec<f64> {
        let m = &self.multiplier;
        (1..m.len() - 1)
            .filter(|&k| m[k] < m[k - 1] && m[k] < m[k + 1])
            .map(|k| self.detuning_nm[k])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Raman photons per pulse per nm of channel bandwidth at the shape peak
    /// and the reference pump power.
    pub raman_rate_per_pulse_per_nm: f64,
    pub reference_power_w: f64,
    pub shape: Arc<RamanShape>,
    pub raman_enabled: bool,
    pub leakage_enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            raman_rate_per_pulse_per_nm: 0.0,
            reference_power_w: 1e-6,
            shape: Arc::new(RamanShape::builtin()),
            raman_enabled: true,
            leakage_enabled: true,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.raman_rate_per_pulse_per_nm >= 0.0
            && self.raman_rate_per_pulse_per_nm.is_finite())
        {
            return Err(Error::invalid("raman_rate", "must be finite and >= 0"));
        }
        if !(self.reference_power_w > 0.0 && self.reference_power_w.is_finite()) {
            return Err(Error::invalid("raman_reference_power", "must be > 0"));
        }
        Ok(())
    }

    /// Checks a channel against the table range for every pump (only when Raman is on).
    pub fn check_channel(&self, pumps: &Pumps, channel: &FilterChannel) -> Result<()> {
        if self.raman_enabled {
            for p in pumps.iter() {
                self.shape.multiplier(channel.center_nm - p.wavelength_nm)?;
            }
        }
        Ok(())
    }
}

/// Raman photons per pulse generated into `channel` by one pump.
pub fn raman_noise_mean(
    noise: &NoiseModel,
    pump: &PumpConfig,
    channel: &FilterChannel,
) -> Result<f64> {
    if !noise.raman_enabled {
        return Ok(0.0);
    }
    let shape = noise
        .shape
        .multiplier(channel.center_nm - pump.wavelength_nm)?;
    Ok(noise.raman_rate_per_pulse_per_nm
        * (pump.average_power_w / noise.reference_power_w)
        * shape
        * channel.bandwidth_nm)
}

/// Raman photons per pulse summed over all pumps.
pub fn raman_noise_mean_multi(
    noise: &NoiseModel,
    pumps: &Pumps,
    channel: &FilterChannel,
) -> Result<f64> {
    pumps
        .iter()
        .map(|p| raman_noise_mean(noise, p, channel))
        .sum()
}

/// Pump photons per pulse that get past the channel's isolation.
pub fn pump_leakage_mean(pump: &PumpConfig, channel: &FilterChannel) -> f64 {
    if channel.pump_isolation_db.is_infinite() {
        return 0.0;
    }
    let photons = pump.average_power_w / photon_energy_j(pump.wavelength_nm) / pump.rep_rate_hz;
    photons * 10f64.powf(-channel.pump_isolation_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_minima_at_forty_nm() {
        let s = RamanShape::builtin();
        assert_eq!(s.local_minima(), vec![-40.0, 40.0]);
        assert!(s.points().all(|(_, m)| (0.0..=1.0).contains(&m)));
    }

    #[test]
    fn interpolation_and_range() {
        let s = RamanShape::parse("detuning_nm,multiplier\n-1,0\n1,1\n", Path::new("t")).unwrap();
        assert_eq!(s.multiplier(0.0).unwrap(), 0.5);
        assert_eq!(s.multiplier(1.0).unwrap(), 1.0);
        assert_eq!(s.multiplier(-1.0).unwrap(), 0.0);
        assert!(s.multiplier(1.5).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = RamanShape::parse("# c\ndetuning_nm,multiplier\n1,0.5\n0,x\n", Path::new("t"))
            .unwrap_err();
        match e {
            Error::Data { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
        assert!(RamanShape::parse("a,b\n1,2\n", Path::new("t")).is_err());
        assert!(RamanShape::parse("detuning_nm,multiplier\n1,1\n1,1\n", Path::new("t")).is_err());
    }

    #[test]
    fn zero_power_zero_noise() {
        let noise = NoiseModel {
            raman_rate_per_pulse_per_nm: 0.03,
            ..Default::default()
        };
        let p = PumpConfig::default().with_power(0.0);
        let ch = FilterChannel::new(1550.12, 118.0);
        assert_eq!(raman_noise_mean(&noise, &p, &ch).unwrap(), 0.0);
        assert_eq!(pump_leakage_mean(&p, &ch), 0.0);
    }

    #[test]
    fn raman_linear_in_power() {
        let noise = NoiseModel {
            raman_rate_per_pulse_per_nm: 0.03,
            ..Default::default()
        };
        let ch = FilterChannel::new(1550.12, 118.0);
        let p = PumpConfig::default();
        let a = raman_noise_mean(&noise, &p, &ch).unwrap();
        let b = raman_noise_mean(&noise, &p.with_power(2.0 * p.average_power_w), &ch).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn leakage_at_operating_point() {
        let p = PumpConfig::default();
        let ch = FilterChannel::new(1550.12, 118.0);
        let n = pump_leakage_mean(&p, &ch);
        assert!((n - 5.22e-7).abs() < 0.01e-7, "{n}");
        let inf = FilterChannel::new(1550.12, f64::INFINITY);
        assert_eq!(pump_leakage_mean(&p, &inf), 0.0);
        let d = pump_leakage_mean(&p.with_power(2.0 * p.average_power_w), &ch);
        assert!((d / n - 2.0).abs() < 1e-12);
    }
}
