//! Scenario orchestration: each scenario turns a configuration into one or
//! more CSV tables with a `#` metadata header.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::apparatus::AnalysisWindow;
use crate::calib::{fit_delay_scan, DelayPoint, FitOptions, FitProblem, SeriesKind};
use crate::config::{ConfigError, ScenarioConfig};
use crate::constants::{photon_energy_j, rep_period_ns};
use crate::counting::{car_summary, histogram_summary, pair_metrics, simulate_summary};
use crate::error::{Error, Result};
use crate::fwm::{raman_noise_mean, seeded_scan, FilterChannel, Pumps};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Phasematch,
    Seeded,
    Pairs,
    CarScan,
    Histogram,
    DelayScan,
    Noise,
    Fit,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Phasematch,
        Scenario::Seeded,
        Scenario::Pairs,
        Scenario::CarScan,
        Scenario::Histogram,
        Scenario::DelayScan,
        Scenario::Noise,
        Scenario::Fit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Phasematch => "phasematch",
            Scenario::Seeded => "seeded",
            Scenario::Pairs => "pairs",
            Scenario::CarScan => "car-scan",
            Scenario::Histogram => "histogram",
            Scenario::DelayScan => "delay-scan",
            Scenario::Noise => "noise",
            Scenario::Fit => "fit",
        }
    }

    /// Whether the scenario runs the Monte Carlo (and so depends on the seed).
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            Scenario::Pairs | Scenario::CarScan | Scenario::Histogram | Scenario::DelayScan
        )
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|x| x.name()).collect();
                format!("unknown scenario `{s}` ({})", names.join(", "))
            })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One output table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file_name: impl Into<String>, columns: Vec<&str>) -> Self {
        Self {
            file_name: file_name.into(),
            meta: Vec::new(),
            columns: columns.into_iter().map(String::from).collect(),
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl fmt::Display) {
        self.meta.push((key.into(), value.to_string()));
    }

    fn row(&mut self, values: Vec<String>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[k].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Header row and data rows only.
    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything a scenario produced, plus the provenance written into each file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub scenario: Scenario,
    pub config_hash: String,
    pub seed: u64,
    pub n_pulses: u64,
    pub statistics: String,
    pub tables: Vec<Table>,
}

impl ScenarioOutput {
    pub fn render(&self, table: &Table) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# microwire {VERSION}");
        let _ = writeln!(out, "# scenario: {}", self.scenario);
        let _ = writeln!(out, "# config_sha256: {}", self.config_hash);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# pulses: {}", self.n_pulses);
        let _ = writeln!(out, "# pair_statistics: {}", self.statistics);
        for (k, v) in &table.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&table.body());
        out
    }

    pub fn table(&self, file_name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file_name == file_name)
    }

    /// Writes every table into `dir`, one file at a time, returning the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(&t.file_name);
                std::fs::write(&path, self.render(t)).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

fn f(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        // Normalizes -0.
        format!("{:.10e}", v + 0.0)
    }
}

/// Independent seed for scan point `k`.
pub fn point_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_scenario(scenario: Scenario, cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let tables = match scenario {
        Scenario::Phasematch => phasematch(cfg, false)?,
        Scenario::Seeded => phasematch(cfg, true)?,
        Scenario::Pairs => pairs(cfg)?,
        Scenario::CarScan => car_scan(cfg)?,
        Scenario::Histogram => histogram(cfg)?,
        Scenario::DelayScan => delay_scan(cfg)?,
        Scenario::Noise => noise(cfg)?,
        Scenario::Fit => fit(cfg)?,
    };
    Ok(ScenarioOutput {
        scenario,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        n_pulses: cfg.n_pulses,
        statistics: cfg.apparatus.statistics.to_string(),
        tables,
    })
}

fn phasematch(cfg: &ScenarioConfig, absolute: bool) -> Result<Vec<Table>> {
    let p = &cfg.phasematch;
    let pumps = p.pumps(cfg.apparatus.pumps.rep_rate_hz());
    let model = &cfg.apparatus.model;
    let spec = seeded_scan(model, &pumps, &p.seeds_nm(), p.seed_power_w)?;
    let mut t = if absolute {
        Table::new(
            "seeded.csv",
            vec![
                "seed_nm",
                "idler_nm",
                "idler_power_w",
                "idler_power_dbm",
                "high_gain_warning",
            ],
        )
    } else {
        Table::new(
            "phasematch.csv",
            vec![
                "seed_nm",
                "idler_nm",
                "delta_beta_per_m",
                "kappa_per_m",
                "efficiency",
                "normalized",
            ],
        )
    };
    t.meta("pumps_nm", format!("{}, {}", p.pump1_nm, p.pump2_nm));
    t.meta("pump_power_w", f(p.pump_power_w));
    t.meta("seed_power_w", f(p.seed_power_w));
    t.meta("gamma_per_w_per_m", f(model.gamma(&pumps)?));
    t.meta("effective_length_m", f(model.geometry.effective_length_m()));
    t.meta("main_lobe_width_nm", f(spec.main_lobe_width_nm()));
    for (pt, norm) in spec.points.iter().zip(&spec.normalized) {
        t.row(if absolute {
            let dbm = if pt.idler_power_w > 0.0 {
                10.0 * (pt.idler_power_w * 1e3).log10()
            } else {
                f64::NEG_INFINITY
            };
            vec![
                f(pt.seed_nm),
                f(pt.idler_nm),
                f(pt.idler_power_w),
                f(dbm),
                pt.high_gain_warning.to_string(),
            ]
        } else {
            vec![
                f(pt.seed_nm),
                f(pt.idler_nm),
                f(pt.delta_beta),
                f(pt.kappa),
                f(pt.efficiency),
                f(*norm),
            ]
        });
    }
    Ok(vec![t])
}

fn pairs(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let a = &cfg.apparatus;
    let src = a.pair_source()?;
    let w = cfg.window;
    let mut t = Table::new(
        "pairs.csv",
        vec![
            "power_w",
            "peak_power_w",
            "mu",
            "heralds_per_pulse",
            "coincidences",
            "accidentals",
            "net_per_pulse",
            "net_stderr",
            "analytic_net_per_pulse",
            "pairs_per_pulse_inside",
            "pairs_per_s_inside",
            "brightness_per_s_per_nm_per_mw",
        ],
    );
    for (k, p) in cfg.power_scan.powers_w().into_iter().enumerate() {
        let pumps = a.pumps_at_power(p);
        let rates = a.rates_with(&src, &pumps)?;
        let s = simulate_summary(&rates, a.detectors(), cfg.n_pulses, point_seed(cfg.seed, k))?;
        let h = 0.5 * w.window_ns;
        let c = s.count_between(w.true_offset_ns - h, w.true_offset_ns + h);
        let acc = s.count_between(w.accidental_offset_ns - h, w.accidental_offset_ns + h);
        let n = cfg.n_pulses as f64;
        let net = (c as f64 - acc as f64) / n;
        let m = pair_metrics(net, &rates, a.detectors(), a.signal.bandwidth_nm, p)?;
        let analytic = a.analytic(&rates, &w)?;
        t.row(vec![
            f(p),
            f(pumps.first().peak_power_w()),
            f(rates.mu_pair),
            f(s.heralds as f64 / n),
            c.to_string(),
            acc.to_string(),
            f(net),
            f(((c + acc) as f64).sqrt() / n),
            f(analytic.net_per_pulse()),
            f(m.pairs_per_pulse_inside_wire),
            f(m.pairs_per_s_inside_wire),
            f(m.brightness_per_s_per_nm_per_mw),
        ]);
    }
    Ok(vec![t])
}

fn car_scan(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let a = &cfg.apparatus;
    let src = a.pair_source()?;
    let w = cfg.window;
    let mut t = Table::new(
        "car_scan.csv",
        vec![
            "power_w",
            "mu",
            "coincidences",
            "accidentals",
            "car",
            "car_stderr",
            "analytic_car",
        ],
    );
    let mut best: Option<(f64, f64)> = None;
    let mut curve = Vec::new();
    for (k, p) in cfg.power_scan.powers_w().into_iter().enumerate() {
        let rates = a.rates_with(&src, &a.pumps_at_power(p))?;
        let s = simulate_summary(&rates, a.detectors(), cfg.n_pulses, point_seed(cfg.seed, k))?;
        let analytic = a.analytic(&rates, &w)?.car().unwrap_or(f64::NAN);
        let (c, acc, car, err) =
            match car_summary(&s, w.window_ns, w.true_offset_ns, w.accidental_offset_ns) {
                Ok(e) => (e.coincidences, e.accidentals, e.car, e.stderr),
                Err(Error::UndefinedCar) => {
                    let h = 0.5 * w.window_ns;
                    (
                        s.count_between(w.true_offset_ns - h, w.true_offset_ns + h),
                        0,
                        f64::NAN,
                        f64::NAN,
                    )
                }
                Err(e) => return Err(e),
            };
        if car.is_finite() && best.is_none_or(|(_, b)| car > b) {
            best = Some((p, car));
        }
        if car.is_finite() && err > 0.0 {
            curve.push((p.ln(), car, err));
        }
        t.row(vec![
            f(p),
            f(rates.mu_pair),
            c.to_string(),
            acc.to_string(),
            f(car),
            f(err),
            f(analytic),
        ]);
    }
    if let Some((p, c)) = best {
        t.meta("max_car_power_w", f(p));
        t.meta("max_car", f(c));
    }
    if let Some((x, c)) = parabola_peak(&curve) {
        t.meta("peak_fit_power_w", f(x.exp()));
        t.meta("peak_fit_car", f(c));
    }
    Ok(vec![t])
}

/// Vertex of a weighted parabola through the five points around the largest
/// `y`, for `(x, y, sigma)` sorted by `x`. `None` unless the parabola opens
/// downward with its vertex inside those points.
fn parabola_peak(pts: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    let k = (0..pts.len()).max_by(|&i, &j| pts[i].1.total_cmp(&pts[j].1))?;
    let near = &pts[k.saturating_sub(2)..(k + 3).min(pts.len())];
    if near.len() < 3 {
        return None;
    }
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut v = nalgebra::Vector3::<f64>::zeros();
    for &(x, y, s) in near {
        let b = nalgebra::Vector3::new(1.0, x, x * x);
        let w = 1.0 / (s * s);
        m += w * b * b.transpose();
        v += w * y * b;
    }
    let c = m.lu().solve(&v)?;
    let x = -c[1] / (2.0 * c[2]);
    (c[2] < 0.0 && x >= near[0].0 && x <= near[near.len() - 1].0)
        .then(|| (x, c[0] + c[1] * x + c[2] * x * x))
}

fn histogram(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let a = &cfg.apparatus;
    let w = cfg.window;
    let rates = a.rates()?;
    let s = simulate_summary(&rates, a.detectors(), cfg.n_pulses, cfg.seed)?;
    let period = rep_period_ns(rates.rep_rate_hz);
    let h = histogram_summary(&s, cfg.bin_width_ns, cfg.span_ns, period)?;
    let norm = h.normalized(w.accidental_offset_ns, 0.5 * w.window_ns);
    let mut t = Table::new("histogram.csv", vec!["offset_ns", "counts", "normalized"]);
    t.meta("signal_nm", a.signal.center_nm);
    t.meta("idler_nm", a.idler.center_nm);
    t.meta("mu", f(rates.mu_pair));
    t.meta("heralds", s.heralds);
    t.meta("rep_period_ns", f(period));
    match car_summary(&s, w.window_ns, w.true_offset_ns, w.accidental_offset_ns) {
        Ok(e) => {
            t.meta("car", f(e.car));
            t.meta("car_stderr", f(e.stderr));
            t.meta("coincidences", e.coincidences);
            t.meta("accidentals", e.accidentals);
        }
        Err(Error::UndefinedCar) => t.meta("car", "undefined (no accidentals)"),
        Err(e) => return Err(e),
    }
    for ((c, n), x) in h.centers_ns().iter().zip(&h.counts).zip(&norm) {
        t.row(vec![f(*c), n.to_string(), f(*x)]);
    }
    Ok(vec![t])
}

fn delay_scan(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let a = &cfg.apparatus;
    let Pumps::Dual(p1, p2) = a.pumps else {
        return Err(Error::Config(ConfigError::single(
            &cfg.base_dir,
            "pump2",
            "",
            "delay-scan needs two pumps; add a [pump2] section",
        )));
    };
    let src = a.pair_source()?;
    let w = cfg.window;
    let period = rep_period_ns(a.pumps.rep_rate_hz());
    let next = AnalysisWindow {
        accidental_offset_ns: w.true_offset_ns + period,
        ..w
    };
    let h = 0.5 * w.window_ns;
    let with_delay = |d: f64| {
        Pumps::Dual(
            p1,
            crate::fwm::PumpConfig {
                delay_ps: p1.delay_ps + d,
                ..p2
            },
        )
    };

    let delays = cfg.delay_scan.delays_ps();
    let mut rows = Vec::new();
    for (k, &d) in delays.iter().enumerate() {
        let rates = a.rates_with(&src, &with_delay(d))?;
        let s = simulate_summary(&rates, a.detectors(), cfg.n_pulses, point_seed(cfg.seed, k))?;
        let c = s.count_between(next.true_offset_ns - h, next.true_offset_ns + h);
        let acc = s.count_between(next.accidental_offset_ns - h, next.accidental_offset_ns + h);
        rows.push((d, rates, s.heralds, c, acc));
    }

    let points: Vec<DelayPoint> = rows
        .iter()
        .map(|(d, _, _, c, _)| DelayPoint {
            delay_ps: *d,
            value: *c as f64,
            sigma: (*c as f64).max(1.0).sqrt(),
        })
        .collect();
    let g = fit_delay_scan(&points)?;
    // Pair rate handed to the counting model: peak mu scaled by the fitted profile.
    let mu_peak = src.mean(&with_delay(g.center_ps))?.mu;

    let mut t = Table::new(
        "delay_scan.csv",
        vec![
            "delay_ps",
            "mu",
            "heralds",
            "coincidences",
            "accidentals_next_period",
            "fit_coincidences",
            "predicted_accidentals",
        ],
    );
    t.meta("accidental_offset_ns", f(next.accidental_offset_ns));
    t.meta("fit_amplitude", f(g.amplitude));
    t.meta("fit_center_ps", f(g.center_ps));
    t.meta("fit_fwhm_ps", f(g.fwhm_ps()));
    t.meta(
        "fit_fwhm_stderr_ps",
        f(g.stderr[2] * g.fwhm_ps() / g.width_ps),
    );
    t.meta("fit_background", f(g.background));
    t.meta(
        "predicted_fwhm_ps",
        f(p1.pulse_fwhm_ps.hypot(p2.pulse_fwhm_ps)),
    );
    for (d, rates, heralds, c, acc) in &rows {
        let r = rates.with_mu(mu_peak * g.profile(*d));
        let pred = a.analytic(&r, &next)?;
        let (_, pred_acc) = pred.expected_counts(cfg.n_pulses as f64);
        t.row(vec![
            f(*d),
            f(rates.mu_pair),
            heralds.to_string(),
            c.to_string(),
            acc.to_string(),
            f(g.eval(*d)),
            f(pred_acc),
        ]);
    }
    Ok(vec![t])
}

fn noise(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let a = &cfg.apparatus;
    let pump = *a.pumps.first();
    let shape = &a.noise.shape;
    let (lo, hi) = shape.range_nm();
    let n = &cfg.noise_scan;
    if n.detuning_start_nm < lo || n.detuning_stop_nm > hi {
        return Err(Error::invalid(
            "noise_scan",
            format!("detuning scan exceeds Raman table range [{lo}, {hi}] nm"),
        ));
    }
    let mut t = Table::new(
        "noise.csv",
        vec![
            "detuning_nm",
            "channel_nm",
            "multiplier",
            "raman_per_pulse",
            "raman_per_s",
        ],
    );
    t.meta("pump_nm", pump.wavelength_nm);
    t.meta("pump_power_w", f(pump.average_power_w));
    t.meta("bandwidth_nm", a.signal.bandwidth_nm);
    t.meta("table", &shape.source);
    t.meta("local_minima_nm", format!("{:?}", shape.local_minima()));
    let steps = n.points.max(2) - 1;
    for k in 0..=steps {
        let d = n.detuning_start_nm
            + (n.detuning_stop_nm - n.detuning_start_nm) * k as f64 / steps as f64;
        let ch = FilterChannel {
            center_nm: pump.wavelength_nm + d,
            ..a.signal
        };
        let r = raman_noise_mean(&a.noise, &pump, &ch)?;
        t.row(vec![
            f(d),
            f(ch.center_nm),
            f(shape.multiplier(d)?),
            f(r),
            f(r * pump.rep_rate_hz),
        ]);
    }
    t.meta("photon_energy_j", f(photon_energy_j(pump.wavelength_nm)));
    Ok(vec![t])
}

fn fit(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let series = cfg.fit_series()?;
    let free = cfg.fit.free_params();
    let problem = FitProblem::new(&cfg.apparatus, &series, &free)?;
    let opts = FitOptions {
        grid_points: cfg.fit.grid_points,
        ..FitOptions::default()
    };
    let r = problem.fit(&opts)?;

    let header = r.csv_header();
    let mut summary = Table::new("fit.csv", header.split(',').collect());
    for line in r.to_string().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            summary.meta(k, v);
        }
    }
    summary.row(r.csv_row().split(',').map(String::from).collect());

    let values: Vec<f64> = r.params.iter().map(|p| p.value).collect();
    let mut curves = Table::new(
        "fit_curves.csv",
        vec!["power_w", "car_model", "pair_probability_model"],
    );
    for p in cfg.power_scan.powers_w() {
        let car = problem
            .predict(SeriesKind::Car, p, &values)
            .unwrap_or(f64::NAN);
        let pp = problem
            .predict(SeriesKind::PairProbability, p, &values)
            .unwrap_or(f64::NAN);
        curves.row(vec![f(p), f(car), f(pp)]);
    }
    let mut data = Table::new(
        "fit_data.csv",
        vec!["kind", "power_w", "value", "sigma", "model"],
    );
    for s in &series {
        for pt in &s.points {
            let m = problem
                .predict(s.kind, pt.power_w, &values)
                .unwrap_or(f64::NAN);
            data.row(vec![
                s.kind.to_string(),
                f(pt.power_w),
                f(pt.value),
                f(pt.sigma),
                f(m),
            ]);
        }
    }
    Ok(vec![summary, curves, data])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_recovered() {
        let pts: Vec<_> = (0..9)
            .map(|i| {
                let x = i as f64 * 0.5;
                (x, 3.0 - 0.7 * (x - 1.8).powi(2), 0.1)
            })
            .collect();
        let (x, y) = parabola_peak(&pts).unwrap();
        assert!((x - 1.8).abs() < 1e-9 && (y - 3.0).abs() < 1e-9);
        let rising: Vec<_> = (0..5).map(|i| (i as f64, i as f64, 0.1)).collect();
        assert!(parabola_peak(&rising).is_none());
    }

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("bogus".parse::<Scenario>().is_err());
    }

    #[test]
    fn delay_scan_needs_two_pumps() {
        let cfg = ScenarioConfig::default().with_pulses(1000);
        assert!(matches!(
            run_scenario(Scenario::DelayScan, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn noise_table_has_dips() {
        let out = run_scenario(Scenario::Noise, &ScenarioConfig::default()).unwrap();
        let t = &out.tables[0];
        assert_eq!(t.meta_value("local_minima_nm"), Some("[-40.0, 40.0]"));
        assert_eq!(t.rows.len(), 241);
    }
}
