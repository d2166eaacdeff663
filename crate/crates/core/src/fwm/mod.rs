//! Classical four-wave-mixing phasematching, spontaneous pair rates and the
//! noise sources that compete with them.

mod noise;
mod pairs;
mod phasematch;
mod pump;

pub use noise::{
    pump_leakage_mean, raman_noise_mean, raman_noise_mean_multi, NoiseModel, RamanShape,
};
pub use pairs::{
    pair_mean_per_pulse, polarization_factor, pump_overlap_factor, PairMean, PairSource,
    BREAKDOWN_MU, DEFAULT_BAND_INTERVALS,
};
pub use phasematch::{
    detuning_of, half_max_width, idler_wavelength, phase_mismatch, seeded_idler_power, seeded_scan,
    signal_at_detuning, sinc, FwmSpectrum, SeededIdler, LOW_GAIN_LIMIT,
};
pub use pump::{FilterChannel, Polarization, PumpConfig, Pumps};

use crate::constants::{wavelength_nm, N2_AS2SE3};
use crate::error::Result;
use crate::optics::{
    effective_area, nonlinear_gamma, solve_fundamental_mode, AeffMode, WaveguideGeometry,
};

/// Waveguide plus the nonlinear constants that turn it into a pair source.
#[derive(Debug, Clone, PartialEq)]
pub struct FwmModel {
    pub geometry: WaveguideGeometry,
    /// Nonlinear index, m^2/W.
    pub n2: f64,
    pub aeff: AeffMode,
    /// Dimensionless mode-count prefactor on the phasematching integral.
    pub mode_prefactor: f64,
}

impl Default for FwmModel {
    fn default() -> Self {
        Self {
            geometry: WaveguideGeometry::default(),
            n2: N2_AS2SE3,
            aeff: AeffMode::reference_constant(),
            mode_prefactor: 1.0,
        }
    }
}

impl FwmModel {
    /// Nonlinear parameter at the mean pump frequency, 1/(W m).
    pub fn gamma(&self, pumps: &Pumps) -> Result<f64> {
        self.gamma_at(wavelength_nm(pumps.center_frequency_hz()))
    }

    pub fn gamma_at(&self, wavelength_nm: f64) -> Result<f64> {
        let aeff = match self.aeff {
            AeffMode::Override(v) => v,
            AeffMode::Computed => {
                let mode = solve_fundamental_mode(&self.geometry, wavelength_nm)?;
                effective_area(&mode, &self.geometry, self.aeff)
            }
        };
        Ok(nonlinear_gamma(wavelength_nm, self.n2, aeff))
    }
}
