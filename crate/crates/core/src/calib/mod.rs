//! Calibration of the in-wire pulse length (and optionally detector dead
//! time and Raman rate) against measured pair-probability and CAR series,
//! plus the gaussian fit of pump-delay scans.

mod delay;
mod fit;
mod series;

pub use delay::{fit_delay_scan, DelayPoint, GaussianFit};
pub use fit::{
    fit, golden_section, FitOptions, FitParam, FitProblem, FitResult, FittedParam, FreeParam,
};
pub use series::{MeasurementPoint, MeasurementSeries, SeriesKind};
