//! HE11 effective index by radial finite differences.
//!
//! Inside each homogeneous region the longitudinal fields obey
//! `psi'' + psi'/r + (kappa^2 - m^2/r^2) psi = 0`. With `phi = sqrt(r) psi`
//! this is integrated by the Numerov scheme (core outward from the axis,
//! cladding inward from far outside), and the mode is located where the 2x2
//! continuity system for tangential E_phi and H_phi at the interface becomes
//! singular. No Bessel functions and no closed-form eigenvalue equation are
//! used.

use std::f64::consts::PI;

const M: f64 = 1.0;

pub struct Oracle {
    pub n_core: f64,
    pub n_clad: f64,
    pub radius_m: f64,
    pub wavelength_m: f64,
    pub core_steps: usize,
    pub clad_steps: usize,
}

impl Oracle {
    fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength_m
    }

    /// (psi(a), psi'(a)) of the axis-regular core solution.
    fn core_solution(&self, beta: f64) -> (f64, f64) {
        let a = self.radius_m;
        let kappa2 = (self.k0() * self.n_core).powi(2) - beta * beta;
        let n = self.core_steps;
        let h = a / n as f64;
        let g = |r: f64| kappa2 - (M * M - 0.25) / (r * r);
        // Series start: psi ~ r (1 - kappa^2 r^2 / 8 + kappa^4 r^4 / 192).
        let start = |r: f64| {
            let x = kappa2 * r * r;
            r.sqrt() * r * (1.0 - x / 8.0 + x * x / 192.0)
        };
        let mut phi = vec![0.0; n + 1];
        phi[1] = start(h);
        phi[2] = start(2.0 * h);
        let c = h * h / 12.0;
        for i in 2..n {
            let (r0, r1, r2) = ((i - 1) as f64 * h, i as f64 * h, (i + 1) as f64 * h);
            phi[i + 1] = (2.0 * phi[i] * (1.0 - 5.0 * c * g(r1)) - phi[i - 1] * (1.0 + c * g(r0)))
                / (1.0 + c * g(r2));
        }
        let dphi = (25.0 * phi[n] - 48.0 * phi[n - 1] + 36.0 * phi[n - 2] - 16.0 * phi[n - 3]
            + 3.0 * phi[n - 4])
            / (12.0 * h);
        let psi = phi[n] / a.sqrt();
        let dpsi = (dphi - 0.5 * phi[n] / a) / a.sqrt();
        (psi, dpsi)
    }

    /// Logarithmic derivative psi'/psi at r = a of the decaying cladding solution.
    fn clad_log_derivative(&self, beta: f64) -> f64 {
        let a = self.radius_m;
        let decay2 = beta * beta - (self.k0() * self.n_clad).powi(2);
        let decay = decay2.sqrt();
        let span = 30.0 / decay;
        let n = self.clad_steps;
        let h = span / n as f64;
        let g = |r: f64| -(decay2 + (M * M - 0.25) / (r * r));
        let r_at = |i: usize| a + i as f64 * h;
        let mut phi = vec![0.0; n + 1];
        phi[n] = 1e-300_f64.max((-decay * span).exp());
        phi[n - 1] = phi[n] * (decay * h).exp();
        let c = h * h / 12.0;
        for i in (1..n).rev() {
            phi[i - 1] = (2.0 * phi[i] * (1.0 - 5.0 * c * g(r_at(i)))
                - phi[i + 1] * (1.0 + c * g(r_at(i + 1))))
                / (1.0 + c * g(r_at(i - 1)));
        }
        let dphi = (-25.0 * phi[0] + 48.0 * phi[1] - 36.0 * phi[2] + 16.0 * phi[3] - 3.0 * phi[4])
            / (12.0 * h);
        dphi / phi[0] - 0.5 / a
    }

    /// Determinant of the interface continuity system, scaled by psi_core(a)^2
    /// to remove the poles at core-solution nodes.
    pub fn determinant(&self, n_eff: f64) -> f64 {
        let k0 = self.k0();
        let a = self.radius_m;
        let beta = k0 * n_eff;
        let k1 = (k0 * self.n_core).powi(2) - beta * beta;
        let k2 = (k0 * self.n_clad).powi(2) - beta * beta;
        let (psi, dpsi) = self.core_solution(beta);
        let f2 = self.clad_log_derivative(beta);
        let mix = M * beta / a * (1.0 / k1 - 1.0 / k2);
        let e_row = dpsi / k1 - f2 * psi / k2;
        let h_row = self.n_core.powi(2) * dpsi / k1 - self.n_clad.powi(2) * f2 * psi / k2;
        (mix * psi).powi(2) - k0 * k0 * e_row * h_row
    }

    /// Largest effective index at which the determinant changes sign.
    pub fn fundamental_n_eff(&self) -> f64 {
        let hi0 = self.n_core - 1e-5;
        let lo0 = self.n_clad + 1e-5;
        let steps = 2000;
        let dn = (hi0 - lo0) / steps as f64;
        let mut prev = (hi0, self.determinant(hi0));
        for i in 1..=steps {
            let n = hi0 - dn * i as f64;
            let d = self.determinant(n);
            if d.signum() != prev.1.signum() {
                let (mut lo, mut hi) = (n, prev.0);
                let s_lo = d.signum();
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.determinant(mid).signum() == s_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            prev = (n, d);
        }
        panic!("oracle found no root");
    }
}
