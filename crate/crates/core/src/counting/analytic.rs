//! Closed-form expectation of the Monte Carlo detection chain.
//!
//! The per-pulse click statistics are exact (pair-number generating
//! functions), including the first-click-only idler gate and the herald
//! phase of dark-count heralds. Two simplifications remain: pulses after
//! the herald are taken with unconditioned pair statistics (exact when the
//! signal dead time covers the gate), and the idler dead time is ignored.

use crate::constants::{ACCIDENTAL_OFFSET_NS, COINCIDENCE_WINDOW_NS};
use crate::counting::sim::Chain;
use crate::counting::{ChannelRates, DetectorModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticCounts {
    /// Expected heralds (signal clicks) per pulse, dead time included.
    pub herald_rate: f64,
    pub coincidences_per_herald: f64,
    pub accidentals_per_herald: f64,
}

impl AnalyticCounts {
    pub fn car(&self) -> Result<f64> {
        if self.accidentals_per_herald <= 0.0 {
            return Err(Error::UndefinedCar);
        }
        Ok(self.coincidences_per_herald / self.accidentals_per_herald)
    }

    /// Expected (coincidences, accidentals) over `n_pulses`.
    pub fn expected_counts(&self, n_pulses: f64) -> (f64, f64) {
        let h = self.herald_rate * n_pulses;
        (
            h * self.coincidences_per_herald,
            h * self.accidentals_per_herald,
        )
    }

    /// Expected true-pair coincidences per pulse, `(C - A) / N`.
    pub fn net_per_pulse(&self) -> f64 {
        self.herald_rate * (self.coincidences_per_herald - self.accidentals_per_herald)
    }
}

#[derive(Clone, Copy)]
enum HeraldType {
    Photon,
    Dark,
}

struct Eval<'a> {
    ch: &'a Chain,
}

impl Eval<'_> {
    fn z(&self, o: f64) -> (f64, f64) {
        let m = self.ch.idler.multiplier(o);
        (1.0 - self.ch.eps_i * m, (-self.ch.nu_i * m).exp())
    }

    fn f(&self, z: f64) -> f64 {
        self.ch.stats.pgf(self.ch.mu, z)
    }

    fn free(&self, o: f64) -> f64 {
        let (z, noise) = self.z(o);
        self.f(z) * noise
    }

    fn unclicked(&self, o: f64) -> f64 {
        let (z, noise) = self.z(o);
        let e = self.ch.eps_s;
        self.f((1.0 - e) * z) / self.f(1.0 - e) * noise
    }

    /// `E[z^n e^{-nu}; herald type]` for the herald pulse's own photons.
    fn herald(&self, ty: HeraldType, o: f64) -> f64 {
        let (z, noise) = self.z(o);
        let ch = self.ch;
        let e = ch.eps_s;
        noise
            * match ty {
                HeraldType::Photon => self.f(z) - (1.0 - ch.b) * self.f((1.0 - e) * z),
                HeraldType::Dark => ch.c * (1.0 - ch.b) * self.f((1.0 - e) * z),
            }
    }

    fn weight(&self, ty: HeraldType) -> f64 {
        let ch = self.ch;
        match ty {
            HeraldType::Photon => 1.0 - (1.0 - ch.b) * (1.0 - ch.a),
            HeraldType::Dark => ch.c * (1.0 - ch.b) * (1.0 - ch.a),
        }
    }

    /// Unnormalized probability of no idler click up to `t` (groups at
    /// offsets `< t`, or `<= t` when `inclusive`), given `live_before`
    /// unclicked live pulses directly before the herald.
    fn survival(
        &self,
        ty: HeraldType,
        phase: f64,
        live_before: i64,
        t: f64,
        inclusive: bool,
    ) -> f64 {
        let ch = self.ch;
        let t = t.clamp(0.0, ch.gate);
        let mut s = (-ch.dark_rate_i * t).exp() * self.weight(ty);
        for dk in -3i64..=5 {
            let o = ch.delay + dk as f64 * ch.period - phase;
            if o < 0.0 || o >= ch.gate || o > t || (!inclusive && o == t) {
                continue;
            }
            s *= if dk == 0 {
                let w = self.weight(ty);
                if w == 0.0 {
                    0.0
                } else {
                    self.herald(ty, o) / w
                }
            } else if dk < 0 && -dk <= live_before {
                self.unclicked(o)
            } else {
                self.free(o)
            };
        }
        s
    }

    /// Unnormalized probability that the first idler click lies in `[lo, hi]`.
    fn first_in(&self, ty: HeraldType, phase: f64, lo: f64, hi: f64) -> f64 {
        let p = self.ch.p_s;
        let q = 1.0 - p;
        // Gap before the herald: 0, 1, 2 or >= 3 live unclicked pulses.
        let classes = [(0, p), (1, p * q), (2, p * q * q), (3, q * q * q)];
        classes
            .iter()
            .map(|&(g, w)| {
                w * (self.survival(ty, phase, g, lo, false) - self.survival(ty, phase, g, hi, true))
            })
            .sum()
    }

    /// Per-herald probability of a first idler click inside the window.
    fn window(&self, center: f64, width: f64) -> f64 {
        let ch = self.ch;
        if ch.p_s <= 0.0 {
            return 0.0;
        }
        let (lo, hi) = (center - 0.5 * width, center + 0.5 * width);
        let photon = self.first_in(HeraldType::Photon, 0.0, lo, hi);
        let dark = if ch.c > 0.0 {
            self.dark_phase_average(|ph| self.first_in(HeraldType::Dark, ph, lo, hi), &[lo, hi])
        } else {
            0.0
        };
        (photon + dark) / ch.p_s
    }

    /// Mean over a uniform herald phase, split where group offsets cross `edges`.
    fn dark_phase_average(&self, f: impl Fn(f64) -> f64, edges: &[f64]) -> f64 {
        let ch = self.ch;
        let t = ch.period;
        let mut cuts = vec![0.0, t];
        for dk in -3i64..=5 {
            for &e in edges.iter().chain(&[0.0, ch.gate]) {
                let ph = ch.delay + dk as f64 * t - e;
                if ph > 0.0 && ph < t {
                    cuts.push(ph);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let n = 8;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = (b - a) / n as f64;
            // Interior nodes only on the piece boundaries' open side.
            let eps = 1e-9 * t;
            let g = |x: f64| f(x.clamp(a + eps, b - eps));
            let mut s = g(a) + g(b);
            for k in 1..n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(a + k as f64 * h);
            }
            total += s * h / 3.0;
        }
        total / t
    }

    fn herald_rate(&self) -> f64 {
        let ch = self.ch;
        if ch.p_s <= 0.0 {
            return 0.0;
        }
        let t = ch.period;
        let d = ch.dead_s;
        let l0 = ch.dead_span(0.0) as f64;
        let q = (d / t).floor();
        let r = d - q * t;
        let l_dark = if d == 0.0 { 1.0 } else { q + 1.0 + r / t };
        let mean_l = (self.weight(HeraldType::Photon) * l0
            + self.weight(HeraldType::Dark) * l_dark)
            / ch.p_s;
        1.0 / (1.0 / ch.p_s + mean_l - 1.0)
    }
}

/// Expected heralds, coincidences and accidentals for the given windows.
pub fn analytic_counts(
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    window_ns: f64,
    true_offset_ns: f64,
    accidental_offset_ns: f64,
) -> Result<AnalyticCounts> {
    let ch = Chain::new(rates, detectors.0, detectors.1)?;
    let ev = Eval { ch: &ch };
    Ok(AnalyticCounts {
        herald_rate: ev.herald_rate(),
        coincidences_per_herald: ev.window(true_offset_ns, window_ns),
        accidentals_per_herald: ev.window(accidental_offset_ns, window_ns),
    })
}

/// CAR of the detection chain with the default 2 ns window, the true peak at
/// the idler electronic delay and accidentals sampled at 9 ns.
pub fn analytic_car(
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
) -> Result<f64> {
    analytic_counts(
        rates,
        detectors,
        COINCIDENCE_WINDOW_NS,
        detectors.1.electronic_delay_ns,
        ACCIDENTAL_OFFSET_NS,
    )?
    .car()
}

/// Leading-order CAR, `1 + mu eps_s eps_i / (p_s p_i)` with single-click
/// probabilities per pulse (signal) and per window (idler). Valid for
/// `mu << 1`, no dead time and no gate shadowing.
pub fn first_order_car(
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    window_ns: f64,
) -> Result<f64> {
    let ch = Chain::new(rates, detectors.0, detectors.1)?;
    let nu_s = detectors.0.efficiency * (rates.eta_s * rates.raman_s + rates.leakage_s);
    let p_s = ch.mu * ch.eps_s + nu_s + detectors.0.dark_rate_hz * ch.period * 1e-9;
    let p_i = ch.mu * ch.eps_i + ch.nu_i + ch.dark_rate_i * window_ns;
    if p_s * p_i <= 0.0 {
        return Err(Error::UndefinedCar);
    }
    Ok(1.0 + ch.mu * ch.eps_s * ch.eps_i / (p_s * p_i))
}
