//! Exact HE11 solution of a step-index circular waveguide.
//!
//! The hybrid-mode eigenvalue equation for azimuthal order one is
//!
//! ```text
//! (P + Q)(P + r Q) = (1/u^2 + 1/w^2)(1/u^2 + r/w^2)
//! P = J1'(u) / (u J1(u)),  Q = K1'(w) / (w K1(w)),  r = (n_clad / n_core)^2
//! ```
//!
//! It is solved in the pole-free form obtained by multiplying through by
//! `u^4 J1(u)^2`, so every sign change of the scanned function is a root.

use std::f64::consts::PI;

use puruspe::Jn;
use puruspe::Kn;

use crate::error::{Error, Result};
use crate::optics::WaveguideGeometry;

/// Offset of the scan bracket from the core and cladding indices.
pub const BRACKET_MARGIN: f64 = 1e-6;
const MIN_SEGMENTS: usize = 200;
const MAX_BISECTIONS: usize = 200;
/// Target accuracy of the returned effective index.
pub const NEFF_TOLERANCE: f64 = 1e-12;
/// Largest accepted normalized residual of the eigenvalue equation.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub wavelength_nm: f64,
    pub n_eff: f64,
    /// Propagation constant, rad/m.
    pub beta: f64,
    /// Field-computed effective area, um^2.
    pub effective_area_um2: f64,
    pub n_core: f64,
    pub n_cladding: f64,
    /// Transverse wavenumbers normalized to the core radius.
    pub u: f64,
    pub w: f64,
    /// Normalized residual of the eigenvalue equation at the root.
    pub residual: f64,
}

impl ModeSolution {
    pub fn v_number(&self) -> f64 {
        (self.u * self.u + self.w * self.w).sqrt()
    }
}

/// Index data shared by the residual and field evaluations.
#[derive(Debug, Clone, Copy)]
struct Guide {
    k0: f64,
    radius: f64,
    n_core: f64,
    n_clad: f64,
}

impl Guide {
    fn new(geometry: &WaveguideGeometry, wavelength_nm: f64) -> Result<Self> {
        geometry.validate()?;
        geometry.check_wavelength(wavelength_nm)?;
        let n_core = geometry.core.refractive_index(wavelength_nm)?;
        let n_clad = geometry.cladding.refractive_index(wavelength_nm)?;
        if n_core <= n_clad + 2.0 * BRACKET_MARGIN {
            return Err(Error::NoRoot(format!(
                "core index {n_core} does not exceed cladding index {n_clad} at {wavelength_nm} nm"
            )));
        }
        Ok(Self {
            k0: 2.0 * PI / (wavelength_nm * 1e-9),
            radius: geometry.core_radius_m(),
            n_core,
            n_clad,
        })
    }

    fn v(&self) -> f64 {
        self.k0 * self.radius * (self.n_core.powi(2) - self.n_clad.powi(2)).sqrt()
    }

    fn uw(&self, n_eff: f64) -> (f64, f64) {
        let kr = self.k0 * self.radius;
        let u = kr * (self.n_core.powi(2) - n_eff * n_eff).max(0.0).sqrt();
        let w = kr * (n_eff * n_eff - self.n_clad.powi(2)).max(0.0).sqrt();
        (u, w)
    }

    fn n_eff_from_u(&self, u: f64) -> f64 {
        let kr = self.k0 * self.radius;
        (self.n_core.powi(2) - (u / kr).powi(2)).sqrt()
    }

    /// Pole-free eigenvalue function and a magnitude scale for normalizing it.
    fn residual(&self, n_eff: f64) -> (f64, f64) {
        let (u, w) = self.uw(n_eff);
        let r = (self.n_clad / self.n_core).powi(2);
        let j0 = Jn(0, u);
        let j1 = Jn(1, u);
        let uj1p = u * j0 - j1; // u J1'(u)
        let q = k1_log_derivative_over_w(w);
        let uw2 = (u / w).powi(2);
        let a = uj1p + u * u * j1 * q;
        let b = uj1p + r * u * u * j1 * q;
        let c = j1 * j1 * (1.0 + uw2) * (1.0 + r * uw2);
        let scale = (a * b).abs() + c.abs();
        (a * b - c, scale)
    }
}

/// `K1'(w) / (w K1(w))`, using `K1' = -K0 - K1/w`.
fn k1_log_derivative_over_w(w: f64) -> f64 {
    let ratio = if w < 600.0 {
        Kn(0, w) / Kn(1, w)
    } else {
        // Large-argument expansion of K0/K1.
        1.0 - 0.5 / w + 0.375 / (w * w)
    };
    (-ratio - 1.0 / w) / w
}

/// Solves for the fundamental hybrid mode (largest effective index).
pub fn solve_fundamental_mode(
    geometry: &WaveguideGeometry,
    wavelength_nm: f64,
) -> Result<ModeSolution> {
    let mut sol = solve_propagation(geometry, wavelength_nm)?;
    sol.effective_area_um2 = field_effective_area_um2(&sol, geometry, 1.0);
    Ok(sol)
}

/// Same root as [`solve_fundamental_mode`] without the effective-area
/// quadrature; `effective_area_um2` is left as NaN.
pub fn solve_propagation(geometry: &WaveguideGeometry, wavelength_nm: f64) -> Result<ModeSolution> {
    let guide = Guide::new(geometry, wavelength_nm)?;
    let n_hi = guide.n_core - BRACKET_MARGIN;
    let n_lo = guide.n_clad + BRACKET_MARGIN;

    // Scan uniformly in u from the core index downward so the first bracket
    // found belongs to the mode with the largest effective index.
    let (u_start, _) = guide.uw(n_hi);
    let (u_end, _) = guide.uw(n_lo);
    let segments = MIN_SEGMENTS.max((guide.v() / 0.5).ceil() as usize);
    let du = (u_end - u_start) / segments as f64;

    let mut prev_n = n_hi;
    let mut prev_f = guide.residual(prev_n).0;
    let mut bracket = None;
    for i in 1..=segments {
        let n = if i == segments {
            n_lo
        } else {
            guide.n_eff_from_u(u_start + du * i as f64)
        };
        let f = guide.residual(n).0;
        if prev_f == 0.0 {
            bracket = Some((prev_n, prev_n));
            break;
        }
        if prev_f.signum() != f.signum() {
            bracket = Some((n, prev_n));
            break;
        }
        prev_n = n;
        prev_f = f;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::NoRoot(format!(
            "no sign change of the HE11 equation in ({n_lo}, {n_hi}) at {wavelength_nm} nm, \
             diameter {} nm",
            geometry.core_diameter_nm
        ))
    })?;

    let mut f_lo = guide.residual(lo).0;
    let mut iterations = 0;
    while hi - lo > NEFF_TOLERANCE {
        if iterations == MAX_BISECTIONS {
            return Err(Error::NoConvergence {
                what: format!("HE11 bisection at {wavelength_nm} nm"),
                iterations,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = guide.residual(mid).0;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    // Secant polish inside the final bracket.
    let mut n_eff = 0.5 * (lo + hi);
    let (f_a, _) = guide.residual(lo);
    let (f_b, _) = guide.residual(hi);
    if f_b != f_a {
        let cand = lo - f_a * (hi - lo) / (f_b - f_a);
        if cand >= lo && cand <= hi {
            n_eff = cand;
        }
    }

    let (f, scale) = guide.residual(n_eff);
    let residual = if scale > 0.0 {
        f.abs() / scale
    } else {
        f.abs()
    };
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::NoConvergence {
            what: format!("HE11 residual {residual:e} at {wavelength_nm} nm"),
            iterations,
        });
    }

    let (u, w) = guide.uw(n_eff);
    Ok(ModeSolution {
        wavelength_nm,
        n_eff,
        beta: 2.0 * PI * n_eff / (wavelength_nm * 1e-9),
        effective_area_um2: f64::NAN,
        n_core: guide.n_core,
        n_cladding: guide.n_clad,
        u,
        w,
        residual,
    })
}

/// Normalized residual of the eigenvalue equation at an arbitrary effective index.
pub fn characteristic_residual(
    geometry: &WaveguideGeometry,
    wavelength_nm: f64,
    n_eff: f64,
) -> Result<f64> {
    let guide = Guide::new(geometry, wavelength_nm)?;
    let (f, scale) = guide.residual(n_eff);
    Ok(if scale > 0.0 { f / scale } else { f })
}

/// Radial profiles of the linearly polarized HE11 field.
///
/// With `E_r = e_r(r) cos(phi)`, `E_phi = e_phi(r) sin(phi)` and
/// `E_z = e_z(r) cos(phi)` (the longitudinal part in quadrature), the returned
/// triple is `(e_r, e_phi, e_z)` scaled by `amplitude`.
#[derive(Debug, Clone, Copy)]
pub struct He11Field {
    radius: f64,
    k0: f64,
    beta: f64,
    u: f64,
    w: f64,
    y: f64,
    j1u: f64,
    k1w: f64,
    amplitude: f64,
}

impl He11Field {
    pub fn new(mode: &ModeSolution, geometry: &WaveguideGeometry, amplitude: f64) -> Self {
        let radius = geometry.core_radius_m();
        let (u, w) = (mode.u, mode.w);
        let j1u = Jn(1, u);
        let p = (Jn(0, u) - j1u / u) / (u * j1u);
        let q = k1_log_derivative_over_w(w);
        let s = 1.0 / (u * u) + 1.0 / (w * w);
        // Ratio of the longitudinal magnetic to electric amplitude (in units of
        // the vacuum impedance) fixed by tangential continuity at r = a.
        let y = -mode.n_eff * s / (p + q);
        Self {
            radius,
            k0: 2.0 * PI / (mode.wavelength_nm * 1e-9),
            beta: mode.beta,
            u,
            w,
            y,
            j1u,
            k1w: Kn(1, w),
            amplitude,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn components(&self, r: f64) -> (f64, f64, f64) {
        let a = self.radius;
        let (f, fp, kappa2) = if r <= a {
            let x = self.u * r / a;
            let j1 = Jn(1, x);
            let j1p = if x > 0.0 { Jn(0, x) - j1 / x } else { 0.5 };
            (
                j1 / self.j1u,
                self.u / a * j1p / self.j1u,
                (self.u / a).powi(2),
            )
        } else {
            let x = self.w * r / a;
            let k1 = Kn(1, x);
            let k1p = -Kn(0, x) - k1 / x;
            (
                k1 / self.k1w,
                self.w / a * k1p / self.k1w,
                -(self.w / a).powi(2),
            )
        };
        // f / r at the axis tends to u / (2 a J1(u)).
        let f_over_r = if r > 0.0 {
            f / r
        } else {
            self.u / (2.0 * a * self.j1u)
        };
        let e_r = (self.beta * fp + self.k0 * self.y * f_over_r) / kappa2;
        let e_phi = -(self.beta * f_over_r + self.k0 * self.y * fp) / kappa2;
        (
            self.amplitude * e_r,
            self.amplitude * e_phi,
            self.amplitude * f,
        )
    }

    /// Transverse intensity and its square, integrated over the azimuth.
    fn azimuthal_moments(&self, r: f64) -> (f64, f64) {
        let (er, ep, _) = self.components(r);
        let (er2, ep2) = (er * er, ep * ep);
        let i2 = PI * (er2 + ep2);
        let i4 = 0.75 * PI * (er2 * er2 + ep2 * ep2) + 0.5 * PI * er2 * ep2;
        (i2, i4)
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// `(int |E_t|^2 dA)^2 / int |E_t|^4 dA` of the HE11 profile, in um^2.
fn field_effective_area_um2(
    mode: &ModeSolution,
    geometry: &WaveguideGeometry,
    amplitude: f64,
) -> f64 {
    let field = He11Field::new(mode, geometry, amplitude);
    let a = field.radius();
    // |E|^2 decays as exp(-2 w r / a) outside the core.
    let outer = a * (1.0 + 40.0 / mode.w.max(1e-3));
    let moment = |r: f64, k: usize| {
        let (i2, i4) = field.azimuthal_moments(r);
        r * if k == 2 { i2 } else { i4 }
    };
    let n_core = 2000;
    let n_clad = 8000;
    let i2 =
        simpson(|r| moment(r, 2), 0.0, a, n_core) + simpson(|r| moment(r, 2), a, outer, n_clad);
    let i4 =
        simpson(|r| moment(r, 4), 0.0, a, n_core) + simpson(|r| moment(r, 4), a, outer, n_clad);
    i2 * i2 / i4 * 1e12
}

/// How the effective area entering the nonlinear parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AeffMode {
    /// Computed from the HE11 field profile.
    Computed,
    /// Fixed value in um^2.
    Override(f64),
}

impl AeffMode {
    pub fn reference_constant() -> Self {
        AeffMode::Override(crate::constants::REFERENCE_AEFF_UM2)
    }

    pub fn label(&self) -> String {
        match self {
            AeffMode::Computed => "computed".into(),
            AeffMode::Override(v) => format!("override:{v}"),
        }
    }
}

/// Effective area in um^2 under the given policy.
pub fn effective_area(mode: &ModeSolution, geometry: &WaveguideGeometry, policy: AeffMode) -> f64 {
    match policy {
        AeffMode::Override(v) => v,
        AeffMode::Computed if mode.effective_area_um2.is_finite() => mode.effective_area_um2,
        AeffMode::Computed => field_effective_area_um2(mode, geometry, 1.0),
    }
}

/// Field-computed effective area with an explicit amplitude scale (the result
/// does not depend on it).
pub fn effective_area_with_amplitude(
    mode: &ModeSolution,
    geometry: &WaveguideGeometry,
    amplitude: f64,
) -> f64 {
    field_effective_area_um2(mode, geometry, amplitude)
}
