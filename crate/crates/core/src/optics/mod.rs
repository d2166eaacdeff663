//! Material dispersion, step-index mode solving and the nonlinear parameter.

mod dispersion;
mod geometry;
mod material;
mod mode;
mod nonlinear;

pub use dispersion::{beta_at_omega, beta_derivatives, dispersion_parameter, DERIVATIVE_RTOL};
pub use geometry::WaveguideGeometry;
pub use material::{refractive_index, MaterialModel, SellmeierTerm};
pub use mode::{
    characteristic_residual, effective_area, effective_area_with_amplitude, solve_fundamental_mode,
    solve_propagation, AeffMode, He11Field, ModeSolution, BRACKET_MARGIN, NEFF_TOLERANCE,
    RESIDUAL_TOLERANCE,
};
pub use nonlinear::nonlinear_gamma;
