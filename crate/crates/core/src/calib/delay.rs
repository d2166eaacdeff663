//! Gaussian-plus-background fit of coincidences against pump delay.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPoint {
    pub delay_ps: f64,
    pub value: f64,
    pub sigma: f64,
}

/// `amplitude * exp(-(t - center)^2 / (2 width^2)) + background`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center_ps: f64,
    /// RMS width, ps.
    pub width_ps: f64,
    pub background: f64,
    /// Standard errors of (amplitude, center, width, background).
    pub stderr: [f64; 4],
    pub chi_squared: f64,
    pub iterations: usize,
}

impl GaussianFit {
    pub fn fwhm_ps(&self) -> f64 {
        self.width_ps * (8.0 * std::f64::consts::LN_2).sqrt()
    }

    pub fn eval(&self, delay_ps: f64) -> f64 {
        self.amplitude * self.profile(delay_ps) + self.background
    }

    /// Peak-normalized gaussian part, the relative pair rate at `delay_ps`.
    pub fn profile(&self, delay_ps: f64) -> f64 {
        let u = (delay_ps - self.center_ps) / self.width_ps;
        (-0.5 * u * u).exp()
    }
}

fn model(p: &Vector4<f64>, t: f64) -> (f64, Vector4<f64>) {
    let (a, c, w, b) = (p[0], p[1], p[2], p[3]);
    let u = (t - c) / w;
    let g = (-0.5 * u * u).exp();
    (
        a * g + b,
        Vector4::new(g, a * g * u / w, a * g * u * u / w, 1.0),
    )
}

fn chi2(points: &[DelayPoint], p: &Vector4<f64>) -> f64 {
    points
        .iter()
        .map(|q| ((model(p, q.delay_ps).0 - q.value) / q.sigma).powi(2))
        .sum()
}

fn initial_guess(points: &[DelayPoint]) -> Vector4<f64> {
    let mut sorted: Vec<f64> = points.iter().map(|p| p.value).collect();
    sorted.sort_by(f64::total_cmp);
    let quarter = (sorted.len() / 4).max(1);
    let b = sorted[..quarter].iter().sum::<f64>() / quarter as f64;
    let peak = points
        .iter()
        .max_by(|x, y| x.value.total_cmp(&y.value))
        .unwrap();
    let a = peak.value - b;
    let (mut s0, mut s2) = (0.0, 0.0);
    for p in points {
        let y = (p.value - b).max(0.0);
        s0 += y;
        s2 += y * (p.delay_ps - peak.delay_ps).powi(2);
    }
    let span = points.last().unwrap().delay_ps - points[0].delay_ps;
    let w = if s0 > 0.0 { (s2 / s0).sqrt() } else { 0.0 };
    let w = if w > 0.0 { w } else { 0.1 * span.abs() };
    Vector4::new(a, peak.delay_ps, w, b)
}

/// Weighted Levenberg-Marquardt fit. Errors on fewer than 5 points,
/// non-positive sigmas, flat data, or a singular normal matrix.
pub fn fit_delay_scan(points: &[DelayPoint]) -> Result<GaussianFit> {
    if points.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 delay points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| {
        !(p.sigma > 0.0 && p.sigma.is_finite() && p.value.is_finite() && p.delay_ps.is_finite())
    }) {
        return Err(Error::Fit(
            "delay points need finite values and sigmas > 0".into(),
        ));
    }
    let mut points = points.to_vec();
    points.sort_by(|a, b| a.delay_ps.total_cmp(&b.delay_ps));
    let (min, max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.value), hi.max(p.value))
        });
    if max - min <= 1e-12 * max.abs().max(min.abs()) {
        return Err(Error::Fit("degenerate delay scan: data are flat".into()));
    }

    let normal = |p: &Vector4<f64>| {
        let mut h = Matrix4::<f64>::zeros();
        let mut g = Vector4::<f64>::zeros();
        for q in &points {
            let (m, j) = model(p, q.delay_ps);
            let w = 1.0 / (q.sigma * q.sigma);
            h += j * j.transpose() * w;
            g += j * ((q.value - m) * w);
        }
        (h, g)
    };

    let mut p = initial_guess(&points);
    let mut f = chi2(&points, &p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 1..=1000 {
        iterations = it;
        let (h, g) = normal(&p);
        let mut damped = h;
        for k in 0..4 {
            damped[(k, k)] *= 1.0 + lambda;
        }
        let Some(step) = damped.lu().solve(&g) else {
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
            continue;
        };
        let trial = p + step;
        let ft = chi2(&points, &trial);
        if ft <= f && trial[2] != 0.0 {
            let small = (0..4).all(|k| step[k].abs() <= 1e-13 * (p[k].abs() + 1e-300));
            p = trial;
            f = ft;
            lambda = (lambda * 0.1).max(1e-15);
            if small || f == 0.0 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
        }
    }
    p[2] = p[2].abs();
    let (h, _) = normal(&p);
    let cov = h
        .try_inverse()
        .ok_or_else(|| Error::Fit("degenerate delay scan: singular normal matrix".into()))?;
    if p[0] == 0.0 || !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Fit("degenerate delay scan: no peak".into()));
    }
    Ok(GaussianFit {
        amplitude: p[0],
        center_ps: p[1],
        width_ps: p[2],
        background: p[3],
        stderr: [0, 1, 2, 3].map(|k| cov[(k, k)].max(0.0).sqrt()),
        chi_squared: f,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(a: f64, c: f64, w: f64, b: f64) -> Vec<DelayPoint> {
        (-20..=20)
            .map(|k| {
                let t = k as f64 * 3.0;
                DelayPoint {
                    delay_ps: t,
                    value: a * (-0.5 * ((t - c) / w).powi(2)).exp() + b,
                    sigma: 1.0,
                }
            })
            .collect()
    }

    #[test]
    fn noiseless_recovery() {
        let r = fit_delay_scan(&synth(120.0, 4.5, 14.0, 30.0)).unwrap();
        for (got, want) in [
            (r.amplitude, 120.0),
            (r.center_ps, 4.5),
            (r.width_ps, 14.0),
            (r.background, 30.0),
        ] {
            assert!(
                (got - want).abs() < 1e-9 * want.abs().max(1.0),
                "{got} vs {want}"
            );
        }
    }

    #[test]
    fn flat_and_short_rejected() {
        assert!(fit_delay_scan(&synth(0.0, 0.0, 10.0, 5.0)).is_err());
        assert!(fit_delay_scan(&synth(1.0, 0.0, 10.0, 5.0)[..4]).is_err());
    }
}
