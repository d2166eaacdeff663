//! The full experiment: pair source, filters, noise and detectors, reduced
//! to per-pulse channel rates.

use crate::constants::{
    db_to_transmission, IDLER_CHANNEL_NM, IDLER_ISOLATION_DB, SIGNAL_CHANNEL_NM,
    SIGNAL_ISOLATION_DB,
};
use crate::counting::{
    analytic_counts, AnalyticCounts, BirthModel, ChannelRates, DetectorModel, PairStatistics,
};
use crate::error::Result;
use crate::fwm::{
    pump_leakage_mean, raman_noise_mean_multi, FilterChannel, FwmModel, NoiseModel, PairSource,
    PumpConfig, Pumps,
};

/// Raman photons per pulse per nm at the shape peak for 1 uW of pump,
/// calibrated with the gated dark probability so that CAR(0.49 uW) = 1.5
/// and CAR(3.2 uW) = 2.13.
pub const DEFAULT_RAMAN_RATE: f64 = 2.799e-2;

/// Assumed insertion loss of each filter chain, dB.
pub const DEFAULT_FILTER_LOSS_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    pub model: FwmModel,
    pub pumps: Pumps,
    pub signal: FilterChannel,
    pub idler: FilterChannel,
    pub noise: NoiseModel,
    pub signal_detector: DetectorModel,
    pub idler_detector: DetectorModel,
    pub statistics: PairStatistics,
    pub birth: BirthModel,
}

impl Default for Apparatus {
    fn default() -> Self {
        let filter = |center, iso| FilterChannel {
            insertion_loss_db: DEFAULT_FILTER_LOSS_DB,
            ..FilterChannel::new(center, iso)
        };
        Self {
            model: FwmModel::default(),
            pumps: Pumps::Degenerate(PumpConfig::default()),
            signal: filter(SIGNAL_CHANNEL_NM, SIGNAL_ISOLATION_DB),
            idler: filter(IDLER_CHANNEL_NM, IDLER_ISOLATION_DB),
            noise: NoiseModel {
                raman_rate_per_pulse_per_nm: DEFAULT_RAMAN_RATE,
                ..NoiseModel::default()
            },
            signal_detector: DetectorModel::nfad(),
            idler_detector: DetectorModel::gated(),
            statistics: PairStatistics::Thermal,
            birth: BirthModel::HalfLength,
        }
    }
}

impl Apparatus {
    pub fn validate(&self) -> Result<()> {
        self.model.geometry.validate()?;
        self.pumps.validate()?;
        self.signal.validate()?;
        self.idler.validate()?;
        self.noise.validate()?;
        self.noise.check_channel(&self.pumps, &self.signal)?;
        self.noise.check_channel(&self.pumps, &self.idler)?;
        self.signal_detector.validate()?;
        self.idler_detector.validate()?;
        Ok(())
    }

    pub fn detectors(&self) -> (&DetectorModel, &DetectorModel) {
        (&self.signal_detector, &self.idler_detector)
    }

    /// Wire-to-detector transmission through `filter`.
    pub fn path_transmission(&self, filter: &FilterChannel) -> f64 {
        let g = &self.model.geometry;
        db_to_transmission(g.output_coupling_loss_db)
            * filter.transmission()
            * self.birth.waist_transmission(g.alpha() * g.length_m)
    }

    pub fn pair_source(&self) -> Result<PairSource> {
        PairSource::new(&self.model, &self.pumps, &self.signal, &self.idler)
    }

    /// Channel rates for `pumps`, reusing a pair source built for their wavelengths.
    pub fn rates_with(&self, source: &PairSource, pumps: &Pumps) -> Result<ChannelRates> {
        let mu = source.mean(pumps)?.mu;
        let leak = |ch: &FilterChannel| -> f64 {
            if self.noise.leakage_enabled {
                pumps.iter().map(|p| pump_leakage_mean(p, ch)).sum()
            } else {
                0.0
            }
        };
        Ok(ChannelRates {
            mu_pair: mu,
            raman_s: raman_noise_mean_multi(&self.noise, pumps, &self.signal)?,
            raman_i: raman_noise_mean_multi(&self.noise, pumps, &self.idler)?,
            leakage_s: leak(&self.signal),
            leakage_i: leak(&self.idler),
            eta_s: self.path_transmission(&self.signal),
            eta_i: self.path_transmission(&self.idler),
            rep_rate_hz: pumps.rep_rate_hz(),
            statistics: self.statistics,
        })
    }

    pub fn rates(&self) -> Result<ChannelRates> {
        self.rates_with(&self.pair_source()?, &self.pumps)
    }

    /// Closed-form counts with the given analysis windows.
    pub fn analytic(
        &self,
        rates: &ChannelRates,
        window: &AnalysisWindow,
    ) -> Result<AnalyticCounts> {
        analytic_counts(
            rates,
            self.detectors(),
            window.window_ns,
            window.true_offset_ns,
            window.accidental_offset_ns,
        )
    }

    /// Product of both channels' path and detector efficiencies.
    pub fn pair_efficiency(&self, rates: &ChannelRates) -> f64 {
        rates.eta_s * self.signal_detector.efficiency * rates.eta_i * self.idler_detector.efficiency
    }

    /// Pumps with every average power scaled to `total_w` (split as configured).
    pub fn pumps_at_power(&self, total_w: f64) -> Pumps {
        let now = self.pumps.total_average_power_w();
        if now > 0.0 {
            self.pumps.scaled(total_w / now)
        } else {
            match self.pumps {
                Pumps::Degenerate(p) => Pumps::Degenerate(p.with_power(total_w)),
                Pumps::Dual(a, b) => {
                    Pumps::Dual(a.with_power(0.5 * total_w), b.with_power(0.5 * total_w))
                }
            }
        }
    }
}

/// Coincidence-window placement for CAR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisWindow {
    pub window_ns: f64,
    pub true_offset_ns: f64,
    pub accidental_offset_ns: f64,
}

impl Default for AnalysisWindow {
    fn default() -> Self {
        Self {
            window_ns: crate::constants::COINCIDENCE_WINDOW_NS,
            true_offset_ns: crate::constants::TRUE_PEAK_OFFSET_NS,
            accidental_offset_ns: crate::constants::ACCIDENTAL_OFFSET_NS,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        Apparatus::default().validate().unwrap();
    }

    #[test]
    fn path_transmission_budget() {
        let a = Apparatus::default();
        // 4.694 dB output coupling + 3 dB filter + 0.306 dB half waist = 8 dB
        let t = a.path_transmission(&a.signal);
        assert!((t - 10f64.powf(-0.8)).abs() < 1e-3, "{t}");
    }

    #[test]
    fn rates_scale_with_power() {
        let a = Apparatus::default();
        let src = a.pair_source().unwrap();
        let r1 = a.rates_with(&src, &a.pumps).unwrap();
        let r2 = a.rates_with(&src, &a.pumps.scaled(2.0)).unwrap();
        assert!((r2.mu_pair / r1.mu_pair - 4.0).abs() < 1e-12);
        assert!((r2.raman_s / r1.raman_s - 2.0).abs() < 1e-12);
        assert!((r2.leakage_i / r1.leakage_i - 2.0).abs() < 1e-12);
        assert_eq!(r1.eta_s, r2.eta_s);
    }

    #[test]
    fn calibration_targets_hold() {
        let a = Apparatus::default();
        let src = a.pair_source().unwrap();
        let w = AnalysisWindow::default();
        let at = |p: f64| {
            let r = a.rates_with(&src, &a.pumps_at_power(p)).unwrap();
            (a.analytic(&r, &w).unwrap(), r)
        };
        let car = |p: f64| at(p).0.car().unwrap();
        assert!((car(3.2e-6) - 2.13).abs() < 2e-3, "{}", car(3.2e-6));
        assert!((car(0.49e-6) - 1.5).abs() < 2e-3, "{}", car(0.49e-6));
        // Frozen: back-propagated brightness at 30 uW, pairs/s/nm/mW.
        let (c, r) = at(30e-6);
        let b = c.net_per_pulse() / a.pair_efficiency(&r) * r.rep_rate_hz
            / a.signal.bandwidth_nm
            / 0.03;
        assert!((b / 1.381e8 - 1.0).abs() < 2e-3, "{b:e}");
    }
}
