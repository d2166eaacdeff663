use rayon::prelude::*;

use crate::constants::{frequency_hz, wavelength_nm};
use crate::error::{Error, Result};
use crate::fwm::{FwmModel, Pumps};
use crate::optics::{solve_propagation, WaveguideGeometry};

/// Idler wavelength fixed by energy conservation, nm.
pub fn idler_wavelength(pump1_nm: f64, pump2_nm: f64, signal_nm: f64) -> Result<f64> {
    let inv = 1.0 / pump1_nm + 1.0 / pump2_nm - 1.0 / signal_nm;
    if !(inv > 0.0) || !inv.is_finite() {
        return Err(Error::invalid(
            "signal_wavelength",
            format!("idler wavelength nonpositive for signal {signal_nm} nm"),
        ));
    }
    Ok(1.0 / inv)
}

/// Linear phase mismatch `beta_s + beta_i - beta_p1 - beta_p2`, rad/m.
pub fn phase_mismatch(
    geometry: &WaveguideGeometry,
    pump1_nm: f64,
    pump2_nm: f64,
    signal_nm: f64,
) -> Result<f64> {
    let idler_nm = idler_wavelength(pump1_nm, pump2_nm, signal_nm)?;
    let b = |l: f64| solve_propagation(geometry, l).map(|m| m.beta);
    let pumps = if pump1_nm == pump2_nm {
        2.0 * b(pump1_nm)?
    } else {
        b(pump1_nm)? + b(pump2_nm)?
    };
    Ok(b(signal_nm)? + b(idler_nm)? - pumps)
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// One point of a seeded (stimulated) FWM scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeededIdler {
    pub seed_nm: f64,
    pub idler_nm: f64,
    pub delta_beta: f64,
    /// Total mismatch including the nonlinear phase, rad/m.
    pub kappa: f64,
    /// `sinc^2(kappa L / 2)`; 1 at perfect phasematching.
    pub efficiency: f64,
    pub idler_power_w: f64,
    /// `gamma (P1 + P2) L_eff` exceeded the low-gain limit.
    pub high_gain_warning: bool,
}

/// Low-gain-limit threshold on `gamma (P1 + P2) L_eff`.
pub const LOW_GAIN_LIMIT: f64 = 0.1;

/// Idler generated by CW pumps (average powers taken as CW powers) and a CW seed.
pub fn seeded_idler_power(
    model: &FwmModel,
    pumps: &Pumps,
    seed_nm: f64,
    seed_power_w: f64,
) -> Result<SeededIdler> {
    pumps.validate()?;
    let (l1, l2) = pumps.wavelengths_nm();
    let (p1, p2) = pumps.average_powers_w();
    let gamma = model.gamma(pumps)?;
    let g = &model.geometry;
    let idler_nm = idler_wavelength(l1, l2, seed_nm)?;
    let delta_beta = phase_mismatch(g, l1, l2, seed_nm)?;
    let kappa = delta_beta + gamma * (p1 + p2);
    let efficiency = sinc(0.5 * kappa * g.length_m).powi(2);
    let l_eff = g.effective_length_m();
    let idler_power_w = gamma
        * gamma
        * p1
        * p2
        * l_eff
        * l_eff
        * efficiency
        * seed_power_w
        * (-g.alpha() * g.length_m).exp();
    if let Some(w) = gain_warning(gamma, p1 + p2, l_eff) {
        eprintln!("warning: {w}");
    }
    Ok(SeededIdler {
        seed_nm,
        idler_nm,
        delta_beta,
        kappa,
        efficiency,
        idler_power_w,
        high_gain_warning: gamma * (p1 + p2) * l_eff > LOW_GAIN_LIMIT,
    })
}

fn gain_warning(gamma: f64, total_power: f64, l_eff: f64) -> Option<String> {
    let g = gamma * total_power * l_eff;
    (g > LOW_GAIN_LIMIT).then(|| format!("gamma P L_eff = {g:.3} outside the low-gain regime"))
}

/// Seeded scan with a peak-normalized column.
#[derive(Debug, Clone, PartialEq)]
pub struct FwmSpectrum {
    pub points: Vec<SeededIdler>,
    /// Idler power divided by the scan maximum.
    pub normalized: Vec<f64>,
}

impl FwmSpectrum {
    pub fn seed_wavelengths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.seed_nm).collect()
    }

    /// Width (nm of seed wavelength) of the contiguous region around the
    /// maximum where the normalized response is at least one half.
    pub fn main_lobe_width_nm(&self) -> f64 {
        half_max_width(&self.seed_wavelengths(), &self.normalized)
    }
}

/// Width of the contiguous above-half-maximum region containing the peak,
/// with linear interpolation of the crossings. Scan edges bound the region.
pub fn half_max_width(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return 0.0;
    }
    let (imax, ymax) =
        y.iter().copied().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let half = 0.5 * ymax;
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let mut lo = x[imax];
    let mut i = imax;
    while i > 0 {
        if y[i - 1] < half {
            lo = cross(i - 1, i);
            break;
        }
        i -= 1;
        lo = x[i];
    }
    let mut hi = x[imax];
    let mut j = imax;
    while j + 1 < x.len() {
        if y[j + 1] < half {
            hi = cross(j, j + 1);
            break;
        }
        j += 1;
        hi = x[j];
    }
    (hi - lo).abs()
}

pub fn seeded_scan(
    model: &FwmModel,
    pumps: &Pumps,
    seeds_nm: &[f64],
    seed_power_w: f64,
) -> Result<FwmSpectrum> {
    let points = seeds_nm
        .par_iter()
        .map(|&s| seeded_idler_power(model, pumps, s, seed_power_w))
        .collect::<Result<Vec<_>>>()?;
    let max = points.iter().map(|p| p.idler_power_w).fold(0.0, f64::max);
    let normalized = points
        .iter()
        .map(|p| {
            if max > 0.0 {
                p.idler_power_w / max
            } else {
                0.0
            }
        })
        .collect();
    Ok(FwmSpectrum { points, normalized })
}

/// Signal wavelength at a frequency detuning from the pair-spectrum center.
pub fn signal_at_detuning(pumps: &Pumps, detuning_hz: f64) -> f64 {
    wavelength_nm(pumps.center_frequency_hz() + detuning_hz)
}

/// Frequency detuning of a signal wavelength from the pair-spectrum center.
pub fn detuning_of(pumps: &Pumps, signal_nm: f64) -> f64 {
    frequency_hz(signal_nm) - pumps.center_frequency_hz()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{DEGENERATE_PUMP_NM, IDLER_CHANNEL_NM, SIGNAL_CHANNEL_NM};

    #[test]
    fn degenerate_point_has_zero_mismatch() {
        let g = WaveguideGeometry::default();
        let p = DEGENERATE_PUMP_NM;
        assert_eq!(phase_mismatch(&g, p, p, p).unwrap(), 0.0);
    }

    #[test]
    fn idler_channel_from_energy_conservation() {
        let li =
            idler_wavelength(DEGENERATE_PUMP_NM, DEGENERATE_PUMP_NM, SIGNAL_CHANNEL_NM).unwrap();
        assert!((li - IDLER_CHANNEL_NM).abs() < 0.01, "idler {li}");
    }

    #[test]
    fn exchange_symmetry() {
        let g = WaveguideGeometry::default();
        let p = DEGENERATE_PUMP_NM;
        let s = SIGNAL_CHANNEL_NM;
        let i = idler_wavelength(p, p, s).unwrap();
        let a = phase_mismatch(&g, p, p, s).unwrap();
        let b = phase_mismatch(&g, p, p, i).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-6));
    }

    #[test]
    fn nonpositive_idler_rejected() {
        // 1/1550 + 1/1550 - 1/700 < 0
        assert!(idler_wavelength(1550.0, 1550.0, 700.0).is_err());
    }

    #[test]
    fn half_max_width_of_triangle() {
        let x: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| (1.0 - (v - 10.0).abs() / 10.0).max(0.0))
            .collect();
        assert!((half_max_width(&x, &y) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sinc_bounds() {
        assert_eq!(sinc(0.0), 1.0);
        for i in 1..100 {
            assert!(sinc(i as f64 * 0.1).abs() < 1.0);
        }
    }
}
