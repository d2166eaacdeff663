mod common;

use common::mode_oracle::Oracle;
use common::numeric::polyfit;
use microwire::constants::SPEED_OF_LIGHT;
use microwire::optics::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn oracle_for(g: &WaveguideGeometry, wavelength_nm: f64) -> Oracle {
    Oracle {
        n_core: g.core.refractive_index(wavelength_nm).unwrap(),
        n_clad: g.cladding.refractive_index(wavelength_nm).unwrap(),
        radius_m: g.core_radius_m(),
        wavelength_m: wavelength_nm * 1e-9,
        core_steps: 4000,
        clad_steps: 8000,
    }
}

#[test]
fn finite_difference_oracle_agrees_at_default_geometry() {
    let g = WaveguideGeometry::default();
    let exact = solve_fundamental_mode(&g, 1550.0).unwrap().n_eff;
    let fd = oracle_for(&g, 1550.0).fundamental_n_eff();
    let rel = (exact - fd).abs() / fd;
    assert!(rel < 0.01, "exact {exact}, oracle {fd}");
    // The two routes are independent but should agree far better than 1 %.
    assert!(rel < 1e-5, "exact {exact}, oracle {fd}, rel {rel:e}");
}

#[test]
fn oracle_agrees_across_diameters() {
    for d in [400.0, 700.0, 1000.0] {
        let g = WaveguideGeometry {
            core_diameter_nm: d,
            ..Default::default()
        };
        let exact = solve_fundamental_mode(&g, 1550.0).unwrap().n_eff;
        let fd = oracle_for(&g, 1550.0).fundamental_n_eff();
        assert!((exact - fd).abs() / fd < 1e-4, "d={d}: {exact} vs {fd}");
    }
}

#[test]
fn neff_monotone_and_bounded_over_band() {
    let g = WaveguideGeometry::default();
    let mut prev = f64::INFINITY;
    for i in 0..=50 {
        let l = 1500.0 + 2.0 * i as f64;
        let m = solve_propagation(&g, l).unwrap();
        assert!(m.n_cladding < m.n_eff && m.n_eff < m.n_core);
        assert!(m.n_eff < prev, "not decreasing at {l}");
        assert!(m.residual < 1e-8);
        prev = m.n_eff;
    }
}

#[test]
fn beta_stencil_center_matches_solver() {
    let g = WaveguideGeometry::default();
    let omega = 2.0 * PI * SPEED_OF_LIGHT / 1550e-9;
    let b = beta_at_omega(&g, omega).unwrap();
    let m = solve_fundamental_mode(&g, 1550.0).unwrap();
    assert!((b - m.beta).abs() < 1e-9 * m.beta);
}

#[test]
fn group_delay_positive() {
    let g = WaveguideGeometry::default();
    for l in [1500.0, 1550.0, 1600.0] {
        let b1 = beta_derivatives(&g, l, 1).unwrap();
        assert!(b1 > 0.0);
        // Group index between the cladding index and a few times the core index.
        let ng = b1 * SPEED_OF_LIGHT;
        assert!(ng > 1.48 && ng < 5.0, "n_g = {ng}");
    }
}

#[test]
fn beta2_matches_polynomial_fit_oracle() {
    let g = WaveguideGeometry::default();
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / 1550e-9;
    // 50 samples across 1500-1600 nm, fit beta(omega) and differentiate twice.
    let scale = 2.0 * PI * SPEED_OF_LIGHT * (1.0 / 1500e-9 - 1.0 / 1600e-9) / 2.0;
    let (mut xs, mut ys) = (vec![], vec![]);
    for i in 0..50 {
        let l = 1500.0 + 100.0 * i as f64 / 49.0;
        let n = solve_propagation(&g, l).unwrap().n_eff;
        let omega = 2.0 * PI * SPEED_OF_LIGHT / (l * 1e-9);
        xs.push((omega - omega0) / scale);
        ys.push(n * omega / SPEED_OF_LIGHT);
    }
    let c = polyfit(&xs, &ys, 6);
    let beta2_fit = 2.0 * c[2] / (scale * scale);
    let beta2 = beta_derivatives(&g, 1550.0, 2).unwrap();
    assert!(
        (beta2 - beta2_fit).abs() < 0.01 * beta2_fit.abs(),
        "stencil {beta2:e} vs fit {beta2_fit:e}"
    );
}

#[test]
fn field_area_near_quoted_value() {
    let g = WaveguideGeometry::default();
    let m = solve_fundamental_mode(&g, 1550.0).unwrap();
    let a = effective_area(&m, &g, AeffMode::Computed);
    assert!((a - 0.24).abs() / 0.24 < 0.25, "A_eff = {a}");
}

proptest! {
    #[test]
    fn gamma_homogeneous_in_n2(c in 0.01f64..100.0, l in 1400.0f64..1700.0, a in 0.1f64..2.0) {
        let g1 = nonlinear_gamma(l, c * 1.1e-17, a);
        let g0 = nonlinear_gamma(l, 1.1e-17, a);
        prop_assert!((g1 - c * g0).abs() <= 1e-12 * g1.abs());
    }

    #[test]
    fn guidance_bound_holds(d in 300.0f64..3000.0, l in 1400.0f64..1700.0) {
        let g = WaveguideGeometry { core_diameter_nm: d, ..Default::default() };
        let m = solve_propagation(&g, l).unwrap();
        prop_assert!(m.n_cladding < m.n_eff && m.n_eff < m.n_core);
        prop_assert!(m.residual < 1e-8);
    }
}
