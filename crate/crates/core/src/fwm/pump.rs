use crate::constants::{
    db_to_transmission, frequency_hz, DEGENERATE_PUMP_NM, FILTER_BANDWIDTH_NM, FITTED_PULSE_PS,
    REP_RATE_HZ, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};

/// Pump polarization relative to the reference (first) pump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Co,
    Cross,
}

impl std::str::FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "co" => Ok(Polarization::Co),
            "cross" => Ok(Polarization::Cross),
            other => Err(format!("expected `co` or `cross`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarization::Co => "co",
            Polarization::Cross => "cross",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    /// Average power inside the microwire (after input coupling), W.
    pub average_power_w: f64,
    /// Effective in-wire pulse duration, ps.
    pub pulse_fwhm_ps: f64,
    pub rep_rate_hz: f64,
    pub polarization: Polarization,
    /// Arrival delay relative to the reference pump, ps.
    pub delay_ps: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: DEGENERATE_PUMP_NM,
            average_power_w: 3.2e-6,
            pulse_fwhm_ps: FITTED_PULSE_PS,
            rep_rate_hz: REP_RATE_HZ,
            polarization: Polarization::Co,
            delay_ps: 0.0,
        }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::invalid(
                "wavelength",
                format!("must be > 0, got {}", self.wavelength_nm),
            ));
        }
        if !(self.average_power_w >= 0.0 && self.average_power_w.is_finite()) {
            return Err(Error::invalid(
                "average_power",
                format!("must be >= 0, got {}", self.average_power_w),
            ));
        }
        if !(self.pulse_fwhm_ps > 0.0 && self.pulse_fwhm_ps.is_finite()) {
            return Err(Error::invalid(
                "pulse_fwhm",
                format!("must be > 0, got {}", self.pulse_fwhm_ps),
            ));
        }
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(Error::invalid(
                "rep_rate",
                format!("must be > 0, got {}", self.rep_rate_hz),
            ));
        }
        if !self.delay_ps.is_finite() {
            return Err(Error::invalid("delay", "must be finite"));
        }
        Ok(())
    }

    /// Quasi-CW peak power `P_avg / (rep_rate * tau)`, W.
    pub fn peak_power_w(&self) -> f64 {
        self.average_power_w / (self.rep_rate_hz * self.pulse_fwhm_ps * 1e-12)
    }

    pub fn with_power(mut self, average_power_w: f64) -> Self {
        self.average_power_w = average_power_w;
        self
    }
}

/// One pump supplying both photons, or two distinct pumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pumps {
    Degenerate(PumpConfig),
    Dual(PumpConfig, PumpConfig),
}

impl Pumps {
    pub fn validate(&self) -> Result<()> {
        match self {
            Pumps::Degenerate(p) => p.validate(),
            Pumps::Dual(a, b) => {
                a.validate()?;
                b.validate()?;
                if (a.rep_rate_hz - b.rep_rate_hz).abs() > 1e-9 * a.rep_rate_hz {
                    return Err(Error::invalid(
                        "rep_rate",
                        "both pumps must share one repetition rate",
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn first(&self) -> &PumpConfig {
        match self {
            Pumps::Degenerate(p) | Pumps::Dual(p, _) => p,
        }
    }

    pub fn wavelengths_nm(&self) -> (f64, f64) {
        match self {
            Pumps::Degenerate(p) => (p.wavelength_nm, p.wavelength_nm),
            Pumps::Dual(a, b) => (a.wavelength_nm, b.wavelength_nm),
        }
    }

    pub fn peak_powers_w(&self) -> (f64, f64) {
        match self {
            Pumps::Degenerate(p) => (p.peak_power_w(), p.peak_power_w()),
            Pumps::Dual(a, b) => (a.peak_power_w(), b.peak_power_w()),
        }
    }

    pub fn average_powers_w(&self) -> (f64, f64) {
        match self {
            Pumps::Degenerate(p) => (p.average_power_w, p.average_power_w),
            Pumps::Dual(a, b) => (a.average_power_w, b.average_power_w),
        }
    }

    /// Total average pump power in the wire, W.
    pub fn total_average_power_w(&self) -> f64 {
        match self {
            Pumps::Degenerate(p) => p.average_power_w,
            Pumps::Dual(a, b) => a.average_power_w + b.average_power_w,
        }
    }

    pub fn rep_rate_hz(&self) -> f64 {
        self.first().rep_rate_hz
    }

    /// Effective duration of the pair-generation window, s (geometric mean for two pumps).
    pub fn tau_eff_s(&self) -> f64 {
        match self {
            Pumps::Degenerate(p) => p.pulse_fwhm_ps * 1e-12,
            Pumps::Dual(a, b) => (a.pulse_fwhm_ps * b.pulse_fwhm_ps).sqrt() * 1e-12,
        }
    }

    /// Center frequency of the pair spectrum, (nu1 + nu2) / 2 in Hz.
    pub fn center_frequency_hz(&self) -> f64 {
        let (l1, l2) = self.wavelengths_nm();
        0.5 * (frequency_hz(l1) + frequency_hz(l2))
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Pumps::Degenerate(_))
    }

    /// Scales every pump's average power by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Pumps::Degenerate(p) => Pumps::Degenerate(p.with_power(p.average_power_w * factor)),
            Pumps::Dual(a, b) => Pumps::Dual(
                a.with_power(a.average_power_w * factor),
                b.with_power(b.average_power_w * factor),
            ),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &PumpConfig> {
        let (a, b) = match self {
            Pumps::Degenerate(p) => (p, None),
            Pumps::Dual(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }
}

/// A rectangular passband filter channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterChannel {
    pub center_nm: f64,
    pub bandwidth_nm: f64,
    pub insertion_loss_db: f64,
    /// Suppression of pump light reaching the detector, dB (may be infinite).
    pub pump_isolation_db: f64,
}

impl FilterChannel {
    pub fn new(center_nm: f64, isolation_db: f64) -> Self {
        Self {
            center_nm,
            bandwidth_nm: FILTER_BANDWIDTH_NM,
            insertion_loss_db: 0.0,
            pump_isolation_db: isolation_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_nm > 0.0 && self.center_nm.is_finite()) {
            return Err(Error::invalid(
                "center",
                format!("must be > 0, got {}", self.center_nm),
            ));
        }
        if !(self.bandwidth_nm > 0.0 && self.bandwidth_nm.is_finite()) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be > 0, got {}", self.bandwidth_nm),
            ));
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(Error::invalid(
                "insertion_loss",
                format!("must be >= 0, got {}", self.insertion_loss_db),
            ));
        }
        if !(self.pump_isolation_db >= 0.0) {
            return Err(Error::invalid(
                "pump_isolation",
                format!("must be >= 0, got {}", self.pump_isolation_db),
            ));
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        db_to_transmission(self.insertion_loss_db)
    }

    /// Optical passband edges in Hz, (low, high).
    pub fn band_hz(&self) -> (f64, f64) {
        let lo_nm = self.center_nm - 0.5 * self.bandwidth_nm;
        let hi_nm = self.center_nm + 0.5 * self.bandwidth_nm;
        (frequency_hz(hi_nm), frequency_hz(lo_nm))
    }

    pub fn bandwidth_hz(&self) -> f64 {
        let (lo, hi) = self.band_hz();
        hi - lo
    }

    pub fn contains_hz(&self, nu: f64) -> bool {
        let (lo, hi) = self.band_hz();
        nu >= lo && nu <= hi
    }

    /// Approximate passband width from the center wavelength, `c dl / l^2`.
    pub fn nominal_bandwidth_hz(&self) -> f64 {
        SPEED_OF_LIGHT * self.bandwidth_nm * 1e-9 / (self.center_nm * 1e-9).powi(2)
    }
}
