//! Physical constants and the apparatus values used as shipped defaults.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Nonlinear refractive index of As2Se3 glass, m^2/W.
pub const N2_AS2SE3: f64 = 1.1e-17;
/// Effective area quoted for the 550 nm microwire, um^2.
pub const REFERENCE_AEFF_UM2: f64 = 0.24;
/// Quoted waveguide nonlinear parameter, 1/(W m).
pub const REFERENCE_GAMMA: f64 = 188.0;

pub const MICROWIRE_LENGTH_M: f64 = 0.12;
pub const MICROWIRE_DIAMETER_NM: f64 = 550.0;
/// Propagation loss of the uniform waist, dB/m.
pub const PROPAGATION_LOSS_DB_PER_M: f64 = 5.1;
/// Total insertion loss including pigtails, dB.
pub const TOTAL_INSERTION_LOSS_DB: f64 = 10.0;
/// Loss budget attributed to the microwire section (roughness, coating, tapers), dB.
pub const MICROWIRE_SECTION_LOSS_DB: f64 = 5.0;
/// Fresnel plus mode-mismatch loss at one SMF/chalcogenide interface, dB.
pub const INTERFACE_LOSS_DB: f64 = 2.5;

pub const REP_RATE_HZ: f64 = 76.0e6;
pub const SOURCE_PULSE_PS: f64 = 4.0;
/// In-wire effective pulse length found by the calibration fit, ps.
pub const FITTED_PULSE_PS: f64 = 25.0;

pub const DEGENERATE_PUMP_NM: f64 = 1553.33;
pub const SIGNAL_CHANNEL_NM: f64 = 1550.12;
pub const IDLER_CHANNEL_NM: f64 = 1556.56;
/// Idler channel that does not conserve energy with the degenerate pump.
pub const NOISE_ONLY_IDLER_NM: f64 = 1558.17;
pub const FILTER_BANDWIDTH_NM: f64 = 0.5;
pub const SIGNAL_ISOLATION_DB: f64 = 118.0;
pub const IDLER_ISOLATION_DB: f64 = 122.0;

pub const NFAD_EFFICIENCY: f64 = 0.10;
pub const NFAD_DARK_RATE_HZ: f64 = 100.0;
pub const GATED_EFFICIENCY: f64 = 0.20;
pub const GATE_WIDTH_NS: f64 = 50.0;
pub const COINCIDENCE_WINDOW_NS: f64 = 2.0;
pub const TRUE_PEAK_OFFSET_NS: f64 = 22.0;
pub const ACCIDENTAL_OFFSET_NS: f64 = 9.0;

pub fn rep_period_ns(rep_rate_hz: f64) -> f64 {
    1e9 / rep_rate_hz
}

/// Optical frequency (Hz) of a vacuum wavelength in nm.
pub fn frequency_hz(wavelength_nm: f64) -> f64 {
    SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

pub fn wavelength_nm(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz * 1e9
}

pub fn photon_energy_j(wavelength_nm: f64) -> f64 {
    PLANCK * frequency_hz(wavelength_nm)
}

pub fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Converts a power loss coefficient in dB/m to a field-power attenuation in 1/m.
pub fn db_per_m_to_alpha(db_per_m: f64) -> f64 {
    db_per_m * std::f64::consts::LN_10 / 10.0
}
