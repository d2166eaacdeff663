use crate::error::{Error, Result};

/// One Sellmeier oscillator: `B * lambda^2 / (lambda^2 - C)` with `C` in um^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellmeierTerm {
    pub strength: f64,
    pub resonance_um2: f64,
}

impl SellmeierTerm {
    pub const fn new(strength: f64, resonance_um2: f64) -> Self {
        Self {
            strength,
            resonance_um2,
        }
    }
}

/// Sellmeier dispersion of a bulk glass, valid on a closed wavelength interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub name: String,
    pub terms: Vec<SellmeierTerm>,
    /// Valid wavelength interval in nm.
    pub valid_range_nm: (f64, f64),
}

// As2Se3: two-oscillator form pinned to n = 2.81 at 1.55 um (bulk-glass value
// for the high-purity As2Se3 used in Raman-gain fiber measurements). The UV
// oscillator sits at 0.35 um (about twice the 1.77 eV optical gap, the usual
// single-oscillator placement for chalcogenides) and the IR lattice pole at
// 19 um. Bulk D at 1.55 um is about -900 ps/(nm km).
const AS2SE3_TERMS: [SellmeierTerm; 2] = [
    SellmeierTerm::new(6.5464, 0.1225),
    SellmeierTerm::new(0.30, 361.0),
];
const AS2SE3_RANGE_NM: (f64, f64) = (800.0, 12_000.0);

// PMMA: single-term Sellmeier of Sultanova, Kasarova and Nikolov (2009),
// n^2 - 1 = 1.1819 lambda^2 / (lambda^2 - 0.011313). The fit was made on
// visible/near-IR data; its use to 1.8 um is an extrapolation.
const PMMA_TERMS: [SellmeierTerm; 1] = [SellmeierTerm::new(1.1819, 0.011313)];
const PMMA_RANGE_NM: (f64, f64) = (400.0, 1800.0);

impl MaterialModel {
    pub fn new(
        name: impl Into<String>,
        terms: Vec<SellmeierTerm>,
        valid_range_nm: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = valid_range_nm;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid(
                "valid_range_nm",
                format!("need 0 < min < max, got ({lo}, {hi})"),
            ));
        }
        let model = Self {
            name: name.into(),
            terms,
            valid_range_nm,
        };
        // Every resonance must lie outside the valid interval or the index has a pole.
        for t in &model.terms {
            let pole_nm = t.resonance_um2.max(0.0).sqrt() * 1e3;
            if t.resonance_um2 > 0.0 && pole_nm >= lo && pole_nm <= hi {
                return Err(Error::invalid(
                    "sellmeier_coefficients",
                    format!(
                        "{}: resonance at {pole_nm:.1} nm inside valid range",
                        model.name
                    ),
                ));
            }
        }
        Ok(model)
    }

    pub fn as2se3() -> Self {
        Self {
            name: "As2Se3".into(),
            terms: AS2SE3_TERMS.to_vec(),
            valid_range_nm: AS2SE3_RANGE_NM,
        }
    }

    pub fn pmma() -> Self {
        Self {
            name: "PMMA".into(),
            terms: PMMA_TERMS.to_vec(),
            valid_range_nm: PMMA_RANGE_NM,
        }
    }

    /// Looks up one of the built-in materials by (case-insensitive) name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "as2se3" => Some(Self::as2se3()),
            "pmma" => Some(Self::pmma()),
            _ => None,
        }
    }

    pub fn contains(&self, wavelength_nm: f64) -> bool {
        wavelength_nm >= self.valid_range_nm.0 && wavelength_nm <= self.valid_range_nm.1
    }

    pub fn check_range(&self, wavelength_nm: f64) -> Result<()> {
        if self.contains(wavelength_nm) {
            Ok(())
        } else {
            Err(Error::WavelengthOutOfRange {
                material: self.name.clone(),
                wavelength_nm,
                min_nm: self.valid_range_nm.0,
                max_nm: self.valid_range_nm.1,
            })
        }
    }

    pub fn refractive_index(&self, wavelength_nm: f64) -> Result<f64> {
        self.check_range(wavelength_nm)?;
        let l2 = (wavelength_nm * 1e-3).powi(2);
        let n2 = 1.0
            + self
                .terms
                .iter()
                .map(|t| t.strength * l2 / (l2 - t.resonance_um2))
                .sum::<f64>();
        if n2 <= 0.0 {
            return Err(Error::invalid(
                "sellmeier_coefficients",
                format!("{}: n^2 = {n2} at {wavelength_nm} nm", self.name),
            ));
        }
        Ok(n2.sqrt())
    }
}

/// Free-function form of [`MaterialModel::refractive_index`].
pub fn refractive_index(material: &MaterialModel, wavelength_nm: f64) -> Result<f64> {
    material.refractive_index(wavelength_nm)
}
