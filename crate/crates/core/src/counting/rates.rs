use crate::constants::rep_period_ns;
use crate::error::{Error, Result};

/// Photon-number statistics of the pairs in one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStatistics {
    /// Bose-Einstein, a single spectral-temporal mode.
    Thermal,
    Poisson,
}

impl PairStatistics {
    /// Probability generating function `E[z^n]` of the pair number with mean `mu`.
    pub fn pgf(self, mu: f64, z: f64) -> f64 {
        match self {
            PairStatistics::Thermal => 1.0 / (1.0 + mu * (1.0 - z)),
            PairStatistics::Poisson => (-mu * (1.0 - z)).exp(),
        }
    }
}

impl std::str::FromStr for PairStatistics {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thermal" => Ok(PairStatistics::Thermal),
            "poisson" => Ok(PairStatistics::Poisson),
            other => Err(format!("expected `thermal` or `poisson`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for PairStatistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PairStatistics::Thermal => "thermal",
            PairStatistics::Poisson => "poisson",
        })
    }
}

/// Where along the wire photons are born, for the waist-loss share they see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BirthModel {
    /// Every photon sees half the waist loss.
    HalfLength,
    /// Average of the transmission over a uniform birth position.
    Uniform,
}

impl BirthModel {
    /// Transmission from birth to the wire end for waist loss `alpha L` (nepers).
    pub fn waist_transmission(self, alpha_l: f64) -> f64 {
        match self {
            BirthModel::HalfLength => (-0.5 * alpha_l).exp(),
            BirthModel::Uniform if alpha_l == 0.0 => 1.0,
            BirthModel::Uniform => -(-alpha_l).exp_m1() / alpha_l,
        }
    }
}

impl std::str::FromStr for BirthModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "half" | "half_length" => Ok(BirthModel::HalfLength),
            "uniform" => Ok(BirthModel::Uniform),
            other => Err(format!(
                "expected `half_length` or `uniform`, got `{other}`"
            )),
        }
    }
}

impl std::fmt::Display for BirthModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BirthModel::HalfLength => "half_length",
            BirthModel::Uniform => "uniform",
        })
    }
}

/// Per-pulse photon budget of the two detection channels.
///
/// Raman photons are generated in the wire and see the path transmission;
/// leakage photons are counted at the detector input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub mu_pair: f64,
    pub raman_s: f64,
    pub raman_i: f64,
    pub leakage_s: f64,
    pub leakage_i: f64,
    /// Wire-to-detector transmission of the signal path.
    pub eta_s: f64,
    pub eta_i: f64,
    pub rep_rate_hz: f64,
    pub statistics: PairStatistics,
}

impl Default for ChannelRates {
    fn default() -> Self {
        Self {
            mu_pair: 0.0,
            raman_s: 0.0,
            raman_i: 0.0,
            leakage_s: 0.0,
            leakage_i: 0.0,
            eta_s: 1.0,
            eta_i: 1.0,
            rep_rate_hz: crate::constants::REP_RATE_HZ,
            statistics: PairStatistics::Thermal,
        }
    }
}

impl ChannelRates {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("mu_pair", self.mu_pair),
            ("raman_s", self.raman_s),
            ("raman_i", self.raman_i),
            ("leakage_s", self.leakage_s),
            ("leakage_i", self.leakage_i),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("eta_s", self.eta_s), ("eta_i", self.eta_i)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must be in [0, 1], got {v}")));
            }
        }
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(Error::invalid("rep_rate", "must be > 0"));
        }
        Ok(())
    }

    /// Errors when the pair number leaves the low-gain regime.
    pub fn check_validity(&self) -> Result<()> {
        if self.mu_pair >= crate::fwm::BREAKDOWN_MU {
            return Err(Error::ModelValidity(format!(
                "mean pair number {:.3} per pulse >= {}",
                self.mu_pair,
                crate::fwm::BREAKDOWN_MU
            )));
        }
        Ok(())
    }

    pub fn period_ns(&self) -> f64 {
        rep_period_ns(self.rep_rate_hz)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu_pair = mu;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgf_normalized() {
        for s in [PairStatistics::Thermal, PairStatistics::Poisson] {
            assert_eq!(s.pgf(0.3, 1.0), 1.0);
            assert_eq!(s.pgf(0.0, 0.2), 1.0);
        }
        assert!((PairStatistics::Thermal.pgf(0.1, 0.0) - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn birth_models_close_at_nominal_loss() {
        // 5.1 dB/m over 0.12 m
        let al = 5.1 * 0.12 * std::f64::consts::LN_10 / 10.0;
        let h = BirthModel::HalfLength.waist_transmission(al);
        let u = BirthModel::Uniform.waist_transmission(al);
        assert!(u > h && (u / h - 1.0) < 0.01);
        assert_eq!(BirthModel::Uniform.waist_transmission(0.0), 1.0);
    }

    #[test]
    fn validation() {
        let r = ChannelRates {
            eta_s: 1.2,
            ..Default::default()
        };
        assert!(r.validate().is_err());
        let r = ChannelRates {
            raman_i: -1.0,
            ..Default::default()
        };
        assert!(r.validate().is_err());
        assert!(ChannelRates::default()
            .with_mu(0.6)
            .check_validity()
            .is_err());
    }
}
