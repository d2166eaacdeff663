use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// What a measurement series records as a function of coupled pump power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    /// Accidental-subtracted pair probability per pulse, referred to the
    /// inside of the wire.
    PairProbability,
    Car,
}

impl FromStr for SeriesKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pair_probability" | "pairs" => Ok(Self::PairProbability),
            "car" => Ok(Self::Car),
            other => Err(format!(
                "unknown series kind `{other}` (pair_probability, car)"
            )),
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PairProbability => "pair_probability",
            Self::Car => "car",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPoint {
    pub power_w: f64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    pub kind: SeriesKind,
    pub points: Vec<MeasurementPoint>,
    pub source: String,
}

impl MeasurementSeries {
    pub fn new(kind: SeriesKind, points: Vec<MeasurementPoint>) -> Result<Self> {
        for (k, p) in points.iter().enumerate() {
            check_point(p).map_err(|m| Error::Fit(format!("point {k}: {m}")))?;
            if k > 0 && p.power_w <= points[k - 1].power_w {
                return Err(Error::Fit(format!(
                    "point {k}: powers must be strictly increasing"
                )));
            }
        }
        Ok(Self {
            kind,
            points,
            source: "memory".into(),
        })
    }

    pub fn load(path: &Path, kind: SeriesKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, kind, path)
    }

    /// Parses `power_w,value,sigma` CSV text; `#` lines are comments.
    pub fn parse(text: &str, kind: SeriesKind, origin: &Path) -> Result<Self> {
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
        if names != ["power_w", "value", "sigma"] {
            return Err(data_err(
                headers.position().map_or(0, |p| p.line() as usize),
                format!(
                    "expected header `power_w,value,sigma`, got `{}`",
                    names.join(",")
                ),
            ));
        }
        let mut points: Vec<MeasurementPoint> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                data_err(e.position().map_or(0, |p| p.line() as usize), e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| data_err(line, format!("not a number: `{}`", &rec[i])))
            };
            let p = MeasurementPoint {
                power_w: field(0)?,
                value: field(1)?,
                sigma: field(2)?,
            };
            check_point(&p).map_err(|m| data_err(line, m))?;
            if let Some(prev) = points.last() {
                if p.power_w <= prev.power_w {
                    return Err(data_err(line, "powers must be strictly increasing".into()));
                }
            }
            points.push(p);
        }
        if points.is_empty() {
            return Err(data_err(0, "no data rows".into()));
        }
        Ok(Self {
            kind,
            points,
            source: origin.display().to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_sigmas_scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for p in &mut s.points {
            p.sigma *= factor;
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("power_w,value,sigma\n");
        for p in &self.points {
            out.push_str(&format!("{:e},{:e},{:e}\n", p.power_w, p.value, p.sigma));
        }
        out
    }
}

fn check_point(p: &MeasurementPoint) -> std::result::Result<(), String> {
    if !(p.power_w.is_finite() && p.power_w > 0.0) {
        return Err(format!("power must be > 0, got {}", p.power_w));
    }
    if !p.value.is_finite() {
        return Err("value must be finite".into());
    }
    if !(p.sigma.is_finite() && p.sigma > 0.0) {
        return Err(format!("sigma must be > 0, got {}", p.sigma));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reject() {
        let ok = "# note\npower_w,value,sigma\n1e-6,1.5,0.2\n3.2e-6,2.13,0.07\n";
        let s = MeasurementSeries::parse(ok, SeriesKind::Car, Path::new("t.csv")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points[1].sigma, 0.07);
        let bad_order = "power_w,value,sigma\n2e-6,1,0.1\n1e-6,1,0.1\n";
        let err =
            MeasurementSeries::parse(bad_order, SeriesKind::Car, Path::new("t.csv")).unwrap_err();
        assert!(matches!(err, Error::Data { line: 3, .. }), "{err}");
        let zero_sigma = "power_w,value,sigma\n1e-6,1,0\n";
        assert!(MeasurementSeries::parse(zero_sigma, SeriesKind::Car, Path::new("t.csv")).is_err());
        let round =
            MeasurementSeries::parse(&s.to_csv(), SeriesKind::Car, Path::new("t.csv")).unwrap();
        assert_eq!(round.points, s.points);
    }

    #[test]
    fn kind_names() {
        for k in [SeriesKind::Car, SeriesKind::PairProbability] {
            assert_eq!(k.to_string().parse::<SeriesKind>().unwrap(), k);
        }
    }
}
