use std::f64::consts::PI;

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::optics::{solve_propagation, WaveguideGeometry};

/// Initial angular-frequency step (2 pi x 2 THz).
const INITIAL_STEP: f64 = 2.0 * PI * 2.0e12;
const MAX_HALVINGS: usize = 10;
pub const DERIVATIVE_RTOL: f64 = 1e-4;

/// Propagation constant as a function of angular frequency, rad/m.
pub fn beta_at_omega(geometry: &WaveguideGeometry, omega: f64) -> Result<f64> {
    let wavelength_nm = 2.0 * PI * SPEED_OF_LIGHT / omega * 1e9;
    Ok(solve_propagation(geometry, wavelength_nm)?.beta)
}

fn stencil(geometry: &WaveguideGeometry, omega: f64, h: f64, order: u32) -> Result<f64> {
    let b = |k: f64| beta_at_omega(geometry, omega + k * h);
    Ok(match order {
        1 => (b(1.0)? - b(-1.0)?) / (2.0 * h),
        2 => (b(1.0)? - 2.0 * b(0.0)? + b(-1.0)?) / (h * h),
        3 => (b(2.0)? - 2.0 * b(1.0)? + 2.0 * b(-1.0)? - b(-2.0)?) / (2.0 * h * h * h),
        _ => unreachable!(),
    })
}

/// `d^order beta / d omega^order` in s^order/m by central differences, halving
/// the step until two successive estimates agree to [`DERIVATIVE_RTOL`].
pub fn beta_derivatives(
    geometry: &WaveguideGeometry,
    wavelength_nm: f64,
    order: u32,
) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(Error::invalid(
            "order",
            format!("must be 1, 2 or 3, got {order}"),
        ));
    }
    let omega = 2.0 * PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9);
    let mut h = INITIAL_STEP;
    let mut prev = stencil(geometry, omega, h, order)?;
    for _ in 0..MAX_HALVINGS {
        h *= 0.5;
        let cur = stencil(geometry, omega, h, order)?;
        if (cur - prev).abs() <= DERIVATIVE_RTOL * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: format!("order-{order} beta derivative at {wavelength_nm} nm"),
        iterations: MAX_HALVINGS,
    })
}

/// Group-velocity dispersion parameter D = -(2 pi c / lambda^2) beta2, ps/(nm km).
pub fn dispersion_parameter(geometry: &WaveguideGeometry, wavelength_nm: f64) -> Result<f64> {
    let beta2 = beta_derivatives(geometry, wavelength_nm, 2)?;
    let lambda = wavelength_nm * 1e-9;
    Ok(-2.0 * PI * SPEED_OF_LIGHT / (lambda * lambda) * beta2 * 1e6)
}
