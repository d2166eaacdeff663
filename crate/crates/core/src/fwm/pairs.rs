use crate::constants::frequency_hz;
use crate::error::{Error, Result};
use crate::fwm::phasematch::sinc;
use crate::fwm::{FilterChannel, FwmModel, Polarization, Pumps};
use crate::optics::solve_propagation;

/// Mean pair number per pulse above which the perturbative model is flagged.
pub const BREAKDOWN_MU: f64 = 0.5;

/// Simpson intervals across the signal passband.
pub const DEFAULT_BAND_INTERVALS: usize = 32;

pub fn polarization_factor(a: Polarization, b: Polarization) -> f64 {
    if a == b {
        1.0
    } else {
        4.0 / 9.0
    }
}

/// Temporal overlap of two gaussian pulses (FWHM in ps) separated by `delay_ps`.
pub fn pump_overlap_factor(delay_ps: f64, tau1_ps: f64, tau2_ps: f64) -> f64 {
    let k = 1.0 / (8.0 * std::f64::consts::LN_2);
    let var = k * (tau1_ps * tau1_ps + tau2_ps * tau2_ps);
    (-delay_ps * delay_ps / (2.0 * var)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMean {
    /// Mean pairs per pulse inside the wire.
    pub mu: f64,
    pub gamma: f64,
    pub peak_powers_w: (f64, f64),
    /// Mode count times band-averaged phasematching.
    pub phi: f64,
    pub polarization: f64,
    pub overlap: f64,
    /// `mu` above [`BREAKDOWN_MU`].
    pub breakdown: bool,
}

#[derive(Debug, Clone, Copy)]
struct BandNode {
    weight_hz: f64,
    delta_beta: f64,
}

/// Pair source for fixed pump wavelengths and filters; the phasematching over
/// the signal band is solved once and reused for any powers, durations and delays.
#[derive(Debug, Clone)]
pub struct PairSource {
    pump_wavelengths_nm: (f64, f64),
    gamma: f64,
    length_m: f64,
    l_eff: f64,
    prefactor: f64,
    nodes: Vec<BandNode>,
}

impl PairSource {
    pub fn new(
        model: &FwmModel,
        pumps: &Pumps,
        signal: &FilterChannel,
        idler: &FilterChannel,
    ) -> Result<Self> {
        Self::with_intervals(model, pumps, signal, idler, DEFAULT_BAND_INTERVALS)
    }

    pub fn with_intervals(
        model: &FwmModel,
        pumps: &Pumps,
        signal: &FilterChannel,
        idler: &FilterChannel,
        intervals: usize,
    ) -> Result<Self> {
        if intervals < 2 || intervals % 2 != 0 {
            return Err(Error::invalid("band_intervals", "must be even and >= 2"));
        }
        pumps.validate()?;
        signal.validate()?;
        idler.validate()?;
        let g = &model.geometry;
        let (l1, l2) = pumps.wavelengths_nm();
        let nu_sum = frequency_hz(l1) + frequency_hz(l2);
        let beta =
            |nu: f64| solve_propagation(g, crate::constants::wavelength_nm(nu)).map(|m| m.beta);
        let beta_pumps = if l1 == l2 {
            2.0 * beta(frequency_hz(l1))?
        } else {
            beta(frequency_hz(l1))? + beta(frequency_hz(l2))?
        };
        let (lo, hi) = signal.band_hz();
        let h = (hi - lo) / intervals as f64;
        let mut nodes = Vec::new();
        for k in 0..=intervals {
            let nu_s = lo + k as f64 * h;
            let nu_i = nu_sum - nu_s;
            // Energy-conserving idler outside the idler passband contributes nothing.
            if !idler.contains_hz(nu_i) {
                continue;
            }
            let w = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let delta_beta = beta(nu_s)? + beta(nu_i)? - beta_pumps;
            nodes.push(BandNode {
                weight_hz: w * h / 3.0,
                delta_beta,
            });
        }
        Ok(Self {
            pump_wavelengths_nm: (l1, l2),
            gamma: model.gamma(pumps)?,
            length_m: g.length_m,
            l_eff: g.effective_length_m(),
            prefactor: model.mode_prefactor,
            nodes,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Mode count times band-integrated `sinc^2(delta_beta L / 2)`. The
    /// nonlinear phase is left out so that `mu` is exactly quadratic in power.
    pub fn phi(&self, tau_s: f64) -> f64 {
        tau_s
            * self
                .nodes
                .iter()
                .map(|n| n.weight_hz * sinc(0.5 * n.delta_beta * self.length_m).powi(2))
                .sum::<f64>()
    }

    pub fn mean(&self, pumps: &Pumps) -> Result<PairMean> {
        pumps.validate()?;
        if pumps.wavelengths_nm() != self.pump_wavelengths_nm {
            return Err(Error::invalid(
                "pump_wavelength",
                "pump wavelengths differ from those the pair source was built for",
            ));
        }
        let (p1, p2) = pumps.peak_powers_w();
        let tau = pumps.tau_eff_s();
        let phi = self.phi(tau);
        let (polarization, overlap) = match pumps {
            Pumps::Degenerate(_) => (1.0, 1.0),
            Pumps::Dual(a, b) => (
                polarization_factor(a.polarization, b.polarization),
                pump_overlap_factor(b.delay_ps - a.delay_ps, a.pulse_fwhm_ps, b.pulse_fwhm_ps),
            ),
        };
        let gl = self.gamma * self.l_eff;
        let mu = self.prefactor * gl * gl * p1 * p2 * phi * polarization * overlap;
        Ok(PairMean {
            mu,
            gamma: self.gamma,
            peak_powers_w: (p1, p2),
            phi,
            polarization,
            overlap,
            breakdown: mu > BREAKDOWN_MU,
        })
    }
}

/// Mean number of pairs per pulse generated into the filter pair.
pub fn pair_mean_per_pulse(
    model: &FwmModel,
    pumps: &Pumps,
    signal: &FilterChannel,
    idler: &FilterChannel,
) -> Result<PairMean> {
    PairSource::new(model, pumps, signal, idler)?.mean(pumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{IDLER_CHANNEL_NM, NOISE_ONLY_IDLER_NM, SIGNAL_CHANNEL_NM};
    use crate::fwm::PumpConfig;

    fn channels(idler_nm: f64) -> (FilterChannel, FilterChannel) {
        (
            FilterChannel::new(SIGNAL_CHANNEL_NM, 118.0),
            FilterChannel::new(idler_nm, 122.0),
        )
    }

    #[test]
    fn operating_point_order_of_magnitude() {
        let (s, i) = channels(IDLER_CHANNEL_NM);
        let pumps = Pumps::Degenerate(PumpConfig::default());
        let m = pair_mean_per_pulse(&FwmModel::default(), &pumps, &s, &i).unwrap();
        assert!(m.mu > 1e-3 && m.mu < 3e-3, "mu = {}", m.mu);
        assert!(!m.breakdown);
    }

    #[test]
    fn power_doubling_quadruples() {
        let (s, i) = channels(IDLER_CHANNEL_NM);
        let pumps = Pumps::Degenerate(PumpConfig::default());
        let src = PairSource::new(&FwmModel::default(), &pumps, &s, &i).unwrap();
        let a = src.mean(&pumps).unwrap().mu;
        let b = src.mean(&pumps.scaled(2.0)).unwrap().mu;
        assert!((b / a - 4.0).abs() < 1e-12, "{}", b / a);
    }

    #[test]
    fn zero_power_zero_pairs() {
        let (s, i) = channels(IDLER_CHANNEL_NM);
        let a = PumpConfig {
            wavelength_nm: 1551.72,
            ..Default::default()
        };
        let b = PumpConfig {
            wavelength_nm: 1561.42,
            average_power_w: 0.0,
            ..Default::default()
        };
        let pumps = Pumps::Dual(a, b);
        let s = FilterChannel {
            center_nm: 1554.13,
            ..s
        };
        let i = FilterChannel {
            center_nm: 1558.98,
            ..i
        };
        let m = pair_mean_per_pulse(&FwmModel::default(), &pumps, &s, &i).unwrap();
        assert_eq!(m.mu, 0.0);
    }

    #[test]
    fn non_conserving_idler_channel_has_no_pairs() {
        let (s, i) = channels(NOISE_ONLY_IDLER_NM);
        let pumps = Pumps::Degenerate(PumpConfig::default());
        let m = pair_mean_per_pulse(&FwmModel::default(), &pumps, &s, &i).unwrap();
        assert_eq!(m.mu, 0.0);
    }

    #[test]
    fn mu_inverse_in_pulse_length() {
        let (s, i) = channels(IDLER_CHANNEL_NM);
        let p = PumpConfig::default();
        let src = PairSource::new(&FwmModel::default(), &Pumps::Degenerate(p), &s, &i).unwrap();
        let a = src.mean(&Pumps::Degenerate(p)).unwrap().mu;
        let q = PumpConfig {
            pulse_fwhm_ps: 50.0,
            ..p
        };
        let b = src.mean(&Pumps::Degenerate(q)).unwrap().mu;
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn polarization_factors() {
        use Polarization::*;
        assert_eq!(polarization_factor(Co, Co), 1.0);
        assert_eq!(polarization_factor(Cross, Cross), 1.0);
        assert_eq!(polarization_factor(Co, Cross), 4.0 / 9.0);
        assert_eq!(
            polarization_factor(Cross, Co),
            polarization_factor(Co, Cross)
        );
    }

    #[test]
    fn overlap_limits() {
        assert_eq!(pump_overlap_factor(0.0, 25.0, 25.0), 1.0);
        assert_eq!(pump_overlap_factor(1e6, 25.0, 25.0), 0.0);
        let t = (25.0f64.powi(2) + 10.0f64.powi(2)).sqrt();
        assert!((pump_overlap_factor(0.5 * t, 25.0, 10.0) - 0.5).abs() < 1e-12);
    }
}
