use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::apparatus::{AnalysisWindow, Apparatus};
use crate::calib::{MeasurementSeries, SeriesKind};
use crate::error::{Error, Result};
use crate::fwm::{PairSource, Pumps};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitParam {
    /// In-wire pump pulse length (FWHM, ps), applied to every pump.
    PulseLength,
    /// Signal detector dead time, ns.
    DeadTime,
    /// Raman reference rate, photons per pulse per nm at the reference power.
    RamanRate,
}

impl FitParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PulseLength => "tau_ps",
            Self::DeadTime => "dead_time_ns",
            Self::RamanRate => "raman_rate",
        }
    }

    pub fn get(&self, a: &Apparatus) -> f64 {
        match self {
            Self::PulseLength => a.pumps.tau_eff_s() * 1e12,
            Self::DeadTime => a.signal_detector.dead_time_ns,
            Self::RamanRate => a.noise.raman_rate_per_pulse_per_nm,
        }
    }

    pub fn set(&self, a: &mut Apparatus, value: f64) {
        match self {
            Self::PulseLength => match &mut a.pumps {
                Pumps::Degenerate(p) => p.pulse_fwhm_ps = value,
                Pumps::Dual(p, q) => {
                    p.pulse_fwhm_ps = value;
                    q.pulse_fwhm_ps = value;
                }
            },
            Self::DeadTime => a.signal_detector.dead_time_ns = value,
            Self::RamanRate => a.noise.raman_rate_per_pulse_per_nm = value,
        }
    }
}

impl std::str::FromStr for FitParam {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "tau" | "tau_ps" | "pulse_length" => Ok(Self::PulseLength),
            "dead_time" | "dead_time_ns" => Ok(Self::DeadTime),
            "raman" | "raman_rate" => Ok(Self::RamanRate),
            other => Err(format!(
                "unknown fit parameter `{other}` (tau_ps, dead_time_ns, raman_rate)"
            )),
        }
    }
}

/// A free parameter and its search interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParam {
    pub param: FitParam,
    pub lo: f64,
    pub hi: f64,
}

impl FreeParam {
    pub fn new(param: FitParam, lo: f64, hi: f64) -> Self {
        Self { param, lo, hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Grid points per free parameter (log-spaced).
    pub grid_points: usize,
    /// Convergence of the refinement, in log-parameter units.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_points: 17,
            tolerance: 1e-7,
            max_sweeps: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedParam {
    pub param: FitParam,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub tau_eff_ps: f64,
    pub dead_time_ns: Option<f64>,
    pub raman_rate: Option<f64>,
    pub chi_squared: f64,
    pub params: Vec<FittedParam>,
    /// Curvature covariance `2 H^-1` in natural units; NaN if the Hessian
    /// is not positive definite.
    pub covariance: Vec<Vec<f64>>,
    pub series_chi_squared: Vec<(SeriesKind, f64)>,
    pub n_points: usize,
}

impl FitResult {
    pub fn param(&self, p: FitParam) -> Option<&FittedParam> {
        self.params.iter().find(|f| f.param == p)
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["chi_squared".to_string(), "n_points".into()];
        for p in &self.params {
            cols.push(p.param.name().into());
            cols.push(format!("{}_stderr", p.param.name()));
        }
        for (k, _) in &self.series_chi_squared {
            cols.push(format!("chi_squared_{k}"));
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            format!("{:.10e}", self.chi_squared),
            self.n_points.to_string(),
        ];
        for p in &self.params {
            cols.push(format!("{:.10e}", p.value));
            cols.push(format!("{:.10e}", p.stderr));
        }
        for (_, c) in &self.series_chi_squared {
            cols.push(format!("{c:.10e}"));
        }
        cols.join(",")
    }
}

impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tau_eff_ps = {:.6}", self.tau_eff_ps)?;
        for p in &self.params {
            writeln!(
                f,
                "{} = {:.6e} +/- {:.3e}",
                p.param.name(),
                p.value,
                p.stderr
            )?;
        }
        writeln!(f, "chi_squared = {:.6e}", self.chi_squared)?;
        writeln!(f, "n_points = {}", self.n_points)?;
        for (k, c) in &self.series_chi_squared {
            writeln!(f, "chi_squared_{k} = {c:.6e}")?;
        }
        Ok(())
    }
}

/// Measured series against the closed-form detection model, with a set of
/// free apparatus parameters.
pub struct FitProblem<'a> {
    base: Apparatus,
    source: PairSource,
    series: &'a [MeasurementSeries],
    free: Vec<FreeParam>,
    pub window: AnalysisWindow,
}

impl<'a> FitProblem<'a> {
    pub fn new(
        base: &Apparatus,
        series: &'a [MeasurementSeries],
        free: &[FreeParam],
    ) -> Result<Self> {
        base.validate()?;
        let n: usize = series.iter().map(MeasurementSeries::len).sum();
        if n < 4 {
            return Err(Error::Fit(format!("need at least 4 data points, got {n}")));
        }
        if free.is_empty() || free.len() > 3 {
            return Err(Error::Fit("fit 1 to 3 free parameters".into()));
        }
        for (k, p) in free.iter().enumerate() {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo > 0.0 && p.hi > p.lo) {
                return Err(Error::Fit(format!(
                    "{}: bounds must be finite with 0 < lo < hi, got [{}, {}]",
                    p.param.name(),
                    p.lo,
                    p.hi
                )));
            }
            if free[..k].iter().any(|q| q.param == p.param) {
                return Err(Error::Fit(format!("{} listed twice", p.param.name())));
            }
        }
        Ok(Self {
            source: base.pair_source()?,
            base: base.clone(),
            series,
            free: free.to_vec(),
            window: AnalysisWindow {
                true_offset_ns: base.idler_detector.electronic_delay_ns,
                ..AnalysisWindow::default()
            },
        })
    }

    pub fn apparatus_with(&self, values: &[f64]) -> Apparatus {
        let mut a = self.base.clone();
        for (p, &v) in self.free.iter().zip(values) {
            p.param.set(&mut a, v);
        }
        a
    }

    /// Model value for a series kind at coupled average power `power_w`.
    pub fn predict(&self, kind: SeriesKind, power_w: f64, values: &[f64]) -> Result<f64> {
        predict(
            &self.apparatus_with(values),
            &self.source,
            &self.window,
            kind,
            power_w,
        )
    }

    pub fn series_chi_squared(&self, values: &[f64]) -> Vec<f64> {
        let a = self.apparatus_with(values);
        self.series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .map(
                        |p| match predict(&a, &self.source, &self.window, s.kind, p.power_w) {
                            Ok(m) => ((m - p.value) / p.sigma).powi(2),
                            Err(_) => f64::INFINITY,
                        },
                    )
                    .sum()
            })
            .collect()
    }

    pub fn chi_squared(&self, values: &[f64]) -> f64 {
        let c: f64 = self.series_chi_squared(values).iter().sum();
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    }

    fn chi_log(&self, x: &[f64]) -> f64 {
        let v: Vec<f64> = x.iter().map(|u| u.exp()).collect();
        self.chi_squared(&v)
    }

    /// Log-spaced grid scan followed by cyclic golden-section refinement.
    pub fn fit(&self, opts: &FitOptions) -> Result<FitResult> {
        let d = self.free.len();
        let n = opts.grid_points.max(3);
        let lo: Vec<f64> = self.free.iter().map(|p| p.lo.ln()).collect();
        let hi: Vec<f64> = self.free.iter().map(|p| p.hi.ln()).collect();
        let step: Vec<f64> = (0..d).map(|k| (hi[k] - lo[k]) / (n - 1) as f64).collect();
        let node = |idx: usize| -> Vec<usize> {
            let mut r = idx;
            (0..d)
                .map(|_| {
                    let i = r % n;
                    r /= n;
                    i
                })
                .collect()
        };
        let total = n.pow(d as u32);
        let values: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let x: Vec<f64> = node(idx)
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| lo[k] + i as f64 * step[k])
                    .collect();
                self.chi_log(&x)
            })
            .collect();
        let (best, &best_chi) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        if !best_chi.is_finite() {
            return Err(Error::Fit("model undefined at every grid point".into()));
        }
        let best_idx = node(best);
        for (k, &i) in best_idx.iter().enumerate() {
            if i == 0 || i == n - 1 {
                return Err(self.boundary_error(k, i == 0));
            }
        }

        let mut x: Vec<f64> = best_idx
            .iter()
            .enumerate()
            .map(|(k, &i)| lo[k] + i as f64 * step[k])
            .collect();
        let mut fx = best_chi;
        let mut converged = false;
        for _ in 0..opts.max_sweeps {
            let mut moved = 0.0f64;
            for k in 0..d {
                let a = (x[k] - step[k]).max(lo[k]);
                let b = (x[k] + step[k]).min(hi[k]);
                let mut probe = x.clone();
                let (xk, fk) = golden_section(
                    |u| {
                        probe[k] = u;
                        self.chi_log(&probe)
                    },
                    a,
                    b,
                    0.1 * opts.tolerance,
                );
                if fk < fx {
                    moved = moved.max((xk - x[k]).abs());
                    x[k] = xk;
                    fx = fk;
                }
            }
            if moved < opts.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "coordinate refinement".into(),
                iterations: opts.max_sweeps,
            });
        }
        for k in 0..d {
            let edge = 10.0 * opts.tolerance;
            if x[k] - lo[k] < edge || hi[k] - x[k] < edge {
                return Err(self.boundary_error(k, x[k] - lo[k] < edge));
            }
        }

        let v: Vec<f64> = x.iter().map(|u| u.exp()).collect();
        let covariance = self.curvature_covariance(&v);
        let params: Vec<FittedParam> = self
            .free
            .iter()
            .enumerate()
            .map(|(k, p)| FittedParam {
                param: p.param,
                value: v[k],
                stderr: covariance[k][k].sqrt(),
            })
            .collect();
        let fitted = self.apparatus_with(&v);
        let find = |p: FitParam| params.iter().find(|f| f.param == p).map(|f| f.value);
        Ok(FitResult {
            tau_eff_ps: FitParam::PulseLength.get(&fitted),
            dead_time_ns: find(FitParam::DeadTime),
            raman_rate: find(FitParam::RamanRate),
            chi_squared: fx,
            params,
            covariance,
            series_chi_squared: self
                .series
                .iter()
                .map(|s| s.kind)
                .zip(self.series_chi_squared(&v))
                .collect(),
            n_points: self.series.iter().map(MeasurementSeries::len).sum(),
        })
    }

    fn boundary_error(&self, k: usize, lower: bool) -> Error {
        let p = &self.free[k];
        Error::Fit(format!(
            "no interior minimum: {} at {} bound {}",
            p.param.name(),
            if lower { "lower" } else { "upper" },
            if lower { p.lo } else { p.hi }
        ))
    }

    fn curvature_covariance(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let d = v.len();
        let h: Vec<f64> = v.iter().map(|x| 1e-3 * x).collect();
        let f = |dx: &[(usize, f64)]| {
            let mut p = v.to_vec();
            for &(k, s) in dx {
                p[k] += s;
            }
            self.chi_squared(&p)
        };
        let f0 = f(&[]);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            hess[(i, i)] = (f(&[(i, h[i])]) - 2.0 * f0 + f(&[(i, -h[i])])) / (h[i] * h[i]);
            for j in 0..i {
                let c = (f(&[(i, h[i]), (j, h[j])])
                    - f(&[(i, h[i]), (j, -h[j])])
                    - f(&[(i, -h[i]), (j, h[j])])
                    + f(&[(i, -h[i]), (j, -h[j])]))
                    / (4.0 * h[i] * h[j]);
                hess[(i, j)] = c;
                hess[(j, i)] = c;
            }
        }
        match hess.clone().cholesky() {
            Some(ch) => {
                let cov = ch.inverse() * 2.0;
                (0..d)
                    .map(|i| (0..d).map(|j| cov[(i, j)]).collect())
                    .collect()
            }
            None => vec![vec![f64::NAN; d]; d],
        }
    }
}

fn predict(
    a: &Apparatus,
    source: &PairSource,
    window: &AnalysisWindow,
    kind: SeriesKind,
    power_w: f64,
) -> Result<f64> {
    let pumps = a.pumps_at_power(power_w);
    let rates = a.rates_with(source, &pumps)?;
    let counts = a.analytic(&rates, window)?;
    match kind {
        SeriesKind::Car => counts.car(),
        SeriesKind::PairProbability => Ok(counts.net_per_pulse() / a.pair_efficiency(&rates)),
    }
}

/// Minimizes a unimodal `f` on `[a, b]`; returns `(x, f(x))`, the best point seen.
pub fn golden_section(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// [`FitProblem::fit`] with default options.
pub fn fit(
    base: &Apparatus,
    series: &[MeasurementSeries],
    free: &[FreeParam],
) -> Result<FitResult> {
    FitProblem::new(base, series, free)?.fit(&FitOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_problems() {
        let a = Apparatus::default();
        let pts = |n: usize| {
            (1..=n)
                .map(|k| crate::calib::MeasurementPoint {
                    power_w: k as f64 * 1e-6,
                    value: 2.0,
                    sigma: 0.1,
                })
                .collect::<Vec<_>>()
        };
        let few = [MeasurementSeries::new(SeriesKind::Car, pts(3)).unwrap()];
        let tau = FreeParam::new(FitParam::PulseLength, 10.0, 40.0);
        assert!(FitProblem::new(&a, &few, &[tau]).is_err());
        let ok = [MeasurementSeries::new(SeriesKind::Car, pts(4)).unwrap()];
        assert!(FitProblem::new(
            &a,
            &ok,
            &[FreeParam::new(FitParam::PulseLength, 10.0, f64::INFINITY)]
        )
        .is_err());
        assert!(FitProblem::new(&a, &ok, &[tau, tau]).is_err());
    }

    #[test]
    fn param_set_get() {
        let mut a = Apparatus::default();
        for (p, v) in [
            (FitParam::PulseLength, 17.0),
            (FitParam::DeadTime, 500.0),
            (FitParam::RamanRate, 0.01),
        ] {
            p.set(&mut a, v);
            assert!((p.get(&a) - v).abs() < 1e-12 * v);
        }
    }
}
