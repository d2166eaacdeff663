use crate::constants::{
    db_per_m_to_alpha, INTERFACE_LOSS_DB, MICROWIRE_DIAMETER_NM, MICROWIRE_LENGTH_M,
    MICROWIRE_SECTION_LOSS_DB, PROPAGATION_LOSS_DB_PER_M,
};
use crate::error::{Error, Result};
use crate::optics::MaterialModel;

/// A uniform-waist step-index microwire with its coupling pigtails.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideGeometry {
    pub length_m: f64,
    pub core_diameter_nm: f64,
    pub core: MaterialModel,
    pub cladding: MaterialModel,
    /// Linear loss of the uniform waist, dB/m.
    pub propagation_loss_db_per_m: f64,
    pub input_coupling_loss_db: f64,
    pub output_coupling_loss_db: f64,
}

impl Default for WaveguideGeometry {
    /// The 12 cm, 550 nm As2Se3/PMMA microwire. The 10 dB insertion loss is
    /// split as 2.5 dB per pigtail interface, 5.1 dB/m over the waist, and the
    /// remainder of the 5 dB microwire-section budget shared by the two tapers.
    fn default() -> Self {
        let waist_db = PROPAGATION_LOSS_DB_PER_M * MICROWIRE_LENGTH_M;
        let per_side = INTERFACE_LOSS_DB + 0.5 * (MICROWIRE_SECTION_LOSS_DB - waist_db);
        Self {
            length_m: MICROWIRE_LENGTH_M,
            core_diameter_nm: MICROWIRE_DIAMETER_NM,
            core: MaterialModel::as2se3(),
            cladding: MaterialModel::pmma(),
            propagation_loss_db_per_m: PROPAGATION_LOSS_DB_PER_M,
            input_coupling_loss_db: per_side,
            output_coupling_loss_db: per_side,
        }
    }
}

impl WaveguideGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::invalid(
                "length",
                format!("must be > 0, got {}", self.length_m),
            ));
        }
        if !(self.core_diameter_nm > 0.0 && self.core_diameter_nm.is_finite()) {
            return Err(Error::invalid(
                "core_diameter",
                format!("must be > 0, got {}", self.core_diameter_nm),
            ));
        }
        for (name, v) in [
            ("propagation_loss", self.propagation_loss_db_per_m),
            ("input_coupling_loss", self.input_coupling_loss_db),
            ("output_coupling_loss", self.output_coupling_loss_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn core_radius_m(&self) -> f64 {
        0.5 * self.core_diameter_nm * 1e-9
    }

    /// Power attenuation coefficient of the waist, 1/m.
    pub fn alpha(&self) -> f64 {
        db_per_m_to_alpha(self.propagation_loss_db_per_m)
    }

    /// Loss-weighted interaction length `(1 - exp(-alpha L)) / alpha`.
    pub fn effective_length_m(&self) -> f64 {
        let al = self.alpha() * self.length_m;
        if al < 1e-12 {
            self.length_m
        } else {
            -(-al).exp_m1() / self.alpha()
        }
    }

    pub fn waist_loss_db(&self) -> f64 {
        self.propagation_loss_db_per_m * self.length_m
    }

    pub fn total_insertion_loss_db(&self) -> f64 {
        self.input_coupling_loss_db + self.waist_loss_db() + self.output_coupling_loss_db
    }

    /// Both index models cover the wavelength.
    pub fn check_wavelength(&self, wavelength_nm: f64) -> Result<()> {
        self.core.check_range(wavelength_nm)?;
        self.cladding.check_range(wavelength_nm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_loss_budget_sums_to_ten_db() {
        let g = WaveguideGeometry::default();
        assert!((g.total_insertion_loss_db() - 10.0).abs() < 1e-12);
        assert!((g.waist_loss_db() - 0.612).abs() < 1e-12);
    }

    #[test]
    fn effective_length_from_loss_and_length() {
        // alpha = 5.1 ln10/10 = 1.17433 /m; (1 - e^{-0.140920}) / alpha
        let g = WaveguideGeometry::default();
        let alpha = 5.1 * std::f64::consts::LN_10 / 10.0;
        let expect = (1.0 - (-alpha * 0.12).exp()) / alpha;
        assert!((g.effective_length_m() - expect).abs() < 1e-15);
        assert!((g.effective_length_m() - 0.112).abs() < 5e-4);
    }

    #[test]
    fn lossless_effective_length_is_length() {
        let g = WaveguideGeometry {
            propagation_loss_db_per_m: 0.0,
            ..Default::default()
        };
        assert_eq!(g.effective_length_m(), g.length_m);
    }

    #[test]
    fn rejects_nonpositive_dimensions() {
        let mut g = WaveguideGeometry::default();
        g.core_diameter_nm = 0.0;
        assert!(g.validate().is_err());
        let mut g = WaveguideGeometry::default();
        g.output_coupling_loss_db = -1.0;
        assert!(g.validate().is_err());
    }
}
