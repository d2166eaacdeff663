//! Scenario configuration: sectioned INI text with every key typed, checked
//! and defaulted to the shipped apparatus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use ini::Ini;
use sha2::{Digest, Sha256};

use crate::apparatus::{AnalysisWindow, Apparatus};
use crate::calib::{FitParam, FreeParam, MeasurementSeries, SeriesKind};
use crate::counting::{DetectorKind, DetectorModel, EfficiencyProfile};
use crate::fwm::{FilterChannel, Polarization, PumpConfig, Pumps, RamanShape};
use crate::optics::{AeffMode, MaterialModel};

/// One problem found in a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub section: String,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        match (self.section.is_empty(), self.key.is_empty()) {
            (true, true) => {}
            (false, true) => write!(f, "[{}]: ", self.section)?,
            (_, false) => write!(f, "[{}] {}: ", self.section, self.key)?,
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} configuration error(s)",
            self.path.display(),
            self.issues.len()
        )?;
        for i in &self.issues {
            write!(f, "\n  - {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    /// One issue not tied to a line.
    pub fn single(path: &Path, section: &str, key: &str, message: impl Into<String>) -> Self {
        Self {
            path: path.to_path_buf(),
            issues: vec![ConfigIssue {
                line: None,
                section: section.into(),
                key: key.into(),
                message: message.into(),
            }],
        }
    }
}

/// Seeded CW scan for the phasematching scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasematchScan {
    pub pump1_nm: f64,
    pub pump2_nm: f64,
    /// CW power of each pump, W.
    pub pump_power_w: f64,
    pub seed_power_w: f64,
    pub seed_start_nm: f64,
    pub seed_stop_nm: f64,
    pub points: usize,
}

impl Default for PhasematchScan {
    fn default() -> Self {
        Self {
            pump1_nm: 1548.5,
            pump2_nm: 1548.5,
            pump_power_w: 190e-6,
            seed_power_w: 190e-6,
            seed_start_nm: 1500.0,
            seed_stop_nm: 1548.4,
            points: 485,
        }
    }
}

impl PhasematchScan {
    pub fn pumps(&self, rep_rate_hz: f64) -> Pumps {
        let p = |nm| PumpConfig {
            wavelength_nm: nm,
            average_power_w: self.pump_power_w,
            rep_rate_hz,
            ..PumpConfig::default()
        };
        if self.pump1_nm == self.pump2_nm {
            Pumps::Degenerate(p(self.pump1_nm))
        } else {
            Pumps::Dual(p(self.pump1_nm), p(self.pump2_nm))
        }
    }

    pub fn seeds_nm(&self) -> Vec<f64> {
        linspace(self.seed_start_nm, self.seed_stop_nm, self.points)
    }
}

/// Log-spaced total coupled pump power scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerScan {
    pub start_w: f64,
    pub stop_w: f64,
    pub points: usize,
}

impl Default for PowerScan {
    fn default() -> Self {
        Self {
            start_w: 0.3e-6,
            stop_w: 40e-6,
            points: 15,
        }
    }
}

impl PowerScan {
    pub fn powers_w(&self) -> Vec<f64> {
        logspace(self.start_w, self.stop_w, self.points)
    }
}

/// Delay of the second pump relative to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub start_ps: f64,
    pub stop_ps: f64,
    pub points: usize,
}

impl Default for DelayScan {
    fn default() -> Self {
        Self {
            start_ps: -60.0,
            stop_ps: 60.0,
            points: 25,
        }
    }
}

impl DelayScan {
    pub fn delays_ps(&self) -> Vec<f64> {
        linspace(self.start_ps, self.stop_ps, self.points)
    }
}

/// Raman spectrum scan: channel detuning from the first pump.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseScan {
    pub detuning_start_nm: f64,
    pub detuning_stop_nm: f64,
    pub points: usize,
}

impl Default for NoiseScan {
    fn default() -> Self {
        Self {
            detuning_start_nm: -60.0,
            detuning_stop_nm: 60.0,
            points: 241,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    /// `builtin`, `none` or a CSV path.
    pub car_series: String,
    pub pair_series: String,
    pub free: Vec<FitParam>,
    pub tau_bounds_ps: (f64, f64),
    pub dead_time_bounds_ns: (f64, f64),
    pub raman_bounds: (f64, f64),
    pub grid_points: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            car_series: "builtin".into(),
            pair_series: "builtin".into(),
            free: vec![FitParam::PulseLength],
            tau_bounds_ps: (5.0, 100.0),
            dead_time_bounds_ns: (1e3, 1e5),
            raman_bounds: (1e-3, 0.2),
            grid_points: 17,
        }
    }
}

impl FitSettings {
    pub fn free_params(&self) -> Vec<FreeParam> {
        self.free
            .iter()
            .map(|&p| {
                let (lo, hi) = match p {
                    FitParam::PulseLength => self.tau_bounds_ps,
                    FitParam::DeadTime => self.dead_time_bounds_ns,
                    FitParam::RamanRate => self.raman_bounds,
                };
                FreeParam::new(p, lo, hi)
            })
            .collect()
    }
}

const BUILTIN_CAR: &str = include_str!("../data/calibration_car_v1.csv");
const BUILTIN_PAIRS: &str = include_str!("../data/calibration_pairs_v1.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_pulses: u64,
    pub apparatus: Apparatus,
    pub window: AnalysisWindow,
    pub bin_width_ns: f64,
    pub span_ns: f64,
    /// `builtin` or a CSV path as written in the file.
    pub raman_table: String,
    pub signal_profile: Option<String>,
    pub idler_profile: Option<String>,
    pub phasematch: PhasematchScan,
    pub power_scan: PowerScan,
    pub delay_scan: DelayScan,
    pub noise_scan: NoiseScan,
    pub fit: FitSettings,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_pulses: 10_000_000_000,
            apparatus: Apparatus::default(),
            window: AnalysisWindow::default(),
            bin_width_ns: 0.5,
            span_ns: 50.0,
            raman_table: "builtin".into(),
            signal_profile: None,
            idler_profile: None,
            phasematch: PhasematchScan::default(),
            power_scan: PowerScan::default(),
            delay_scan: DelayScan::default(),
            noise_scan: NoiseScan::default(),
            fit: FitSettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

pub const SECTIONS: [&str; 16] = [
    "run",
    "waveguide",
    "pump1",
    "pump2",
    "signal_filter",
    "idler_filter",
    "noise",
    "signal_detector",
    "idler_detector",
    "analysis",
    "phasematch",
    "power_scan",
    "delay_scan",
    "noise_scan",
    "fit",
    "calibration",
];

/// Typed reads from one section, recording issues and consumed keys.
struct Section<'a> {
    name: &'static str,
    props: BTreeMap<String, String>,
    lines: &'a LineIndex,
    used: BTreeSet<String>,
    issues: &'a mut Vec<ConfigIssue>,
}

impl Section<'_> {
    fn issue(&mut self, key: &str, message: String) {
        let line = self.lines.key(self.name, key);
        self.issues.push(ConfigIssue {
            line,
            section: self.name.into(),
            key: key.into(),
            message,
        });
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.into());
        self.props.get(key).cloned()
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => default,
            Some(v) => match v.parse::<T>() {
                Ok(x) => x,
                Err(e) => {
                    self.issue(key, format!("cannot parse `{v}`: {e}"));
                    default
                }
            },
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        let v = self.parse::<f64>(key, default);
        if !v.is_finite() && !(v == f64::INFINITY && key.ends_with("isolation_db")) {
            self.issue(key, format!("must be finite, got {v}"));
            return default;
        }
        v
    }

    /// A value that must be >= 0 (or > 0 when `strict`).
    fn nonneg(&mut self, key: &str, default: f64, strict: bool) -> f64 {
        let v = self.f64(key, default);
        if v < 0.0 || (strict && v == 0.0) {
            let bound = if strict { "> 0" } else { ">= 0" };
            self.issue(key, format!("must be {bound}, got {v}"));
        }
        v
    }

    fn pair(&mut self, key: &str, default: (f64, f64)) -> (f64, f64) {
        let Some(v) = self.raw(key) else {
            return default;
        };
        let parts: Vec<Result<f64, _>> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parts.as_slice() {
            [Ok(a), Ok(b)] if a.is_finite() && b.is_finite() && *a > 0.0 && b > a => (*a, *b),
            _ => {
                self.issue(
                    key,
                    format!("expected `lo, hi` with 0 < lo < hi, got `{v}`"),
                );
                default
            }
        }
    }

    fn finish(self) {
        let unknown: Vec<String> = self
            .props
            .keys()
            .filter(|k| !self.used.contains(*k))
            .cloned()
            .collect();
        for k in unknown {
            let line = self.lines.key(self.name, &k);
            self.issues.push(ConfigIssue {
                line,
                section: self.name.into(),
                key: k.clone(),
                message: "unknown key".into(),
            });
        }
    }
}

/// Line numbers of section headers and keys, for error messages.
#[derive(Default)]
struct LineIndex {
    keys: BTreeMap<(String, String), usize>,
    sections: BTreeMap<String, usize>,
    duplicates: Vec<ConfigIssue>,
}

impl LineIndex {
    fn build(text: &str) -> Self {
        let mut idx = LineIndex::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                section = rest.trim_end_matches(']').trim().to_string();
                if idx.sections.insert(section.clone(), n + 1).is_some() {
                    idx.duplicates.push(ConfigIssue {
                        line: Some(n + 1),
                        section: section.clone(),
                        key: String::new(),
                        message: "duplicate section".into(),
                    });
                }
                continue;
            }
            if let Some(pos) = line.find(['=', ':']) {
                let key = line[..pos].trim().to_string();
                if idx
                    .keys
                    .insert((section.clone(), key.clone()), n + 1)
                    .is_some()
                {
                    idx.duplicates.push(ConfigIssue {
                        line: Some(n + 1),
                        section: section.clone(),
                        key,
                        message: "duplicate key".into(),
                    });
                }
            }
        }
        idx
    }

    fn key(&self, section: &str, key: &str) -> Option<usize> {
        self.keys
            .get(&(section.to_string(), key.to_string()))
            .copied()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

fn kind_name(k: DetectorKind) -> &'static str {
    match k {
        DetectorKind::FreeRunning => "free_running",
        DetectorKind::Gated => "gated",
    }
}

fn parse_kind(s: &str) -> Result<DetectorKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "free_running" => Ok(DetectorKind::FreeRunning),
        "gated" => Ok(DetectorKind::Gated),
        other => Err(format!("expected `free_running` or `gated`, got `{other}`")),
    }
}

struct Aeff(AeffMode);

impl FromStr for Aeff {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("computed") {
            return Ok(Aeff(AeffMode::Computed));
        }
        match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Aeff(AeffMode::Override(v))),
            _ => Err("expected `computed` or an area in um^2 > 0".into()),
        }
    }
}

struct ParamList(Vec<FitParam>);

impl FromStr for ParamList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(FitParam::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("at least one parameter".into());
        }
        Ok(ParamList(v))
    }
}

/// Integer count, also written as `1e10`.
pub fn parse_count(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        let v = s.parse::<f64>().ok()?;
        (v.fract() == 0.0 && v >= 0.0 && v < 9.2e18).then_some(v as u64)
    })
}

fn optional_path(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.eq_ignore_ascii_case("none") && !v.is_empty())
}

fn fmt_f(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v != 0.0 && !(1e-3..1e7).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::single(path, "", "", format!("cannot read: {e}")))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let dir = if dir.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            dir
        };
        Self::parse(&text, path, &dir)
    }

    /// Parses, resolves data files and checks every invariant.
    pub fn parse(text: &str, origin: &Path, base_dir: &Path) -> Result<Self, ConfigError> {
        let err = |issues: Vec<ConfigIssue>| ConfigError {
            path: origin.to_path_buf(),
            issues,
        };
        let ini = Ini::load_from_str(text).map_err(|e| {
            err(vec![ConfigIssue {
                line: Some(e.line),
                section: String::new(),
                key: String::new(),
                message: format!("syntax: {}", e.msg),
            }])
        })?;
        let lines = LineIndex::build(text);
        let mut issues = lines.duplicates.clone();
        let mut sections: BTreeMap<&'static str, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                for (k, _) in props.iter() {
                    issues.push(ConfigIssue {
                        line: lines.key("", k),
                        section: String::new(),
                        key: k.into(),
                        message: "key outside any section".into(),
                    });
                }
                continue;
            };
            let Some(&known) = SECTIONS.iter().find(|s| **s == name) else {
                issues.push(ConfigIssue {
                    line: lines.sections.get(name).copied(),
                    section: name.into(),
                    key: String::new(),
                    message: format!("unknown section (known: {})", SECTIONS.join(", ")),
                });
                continue;
            };
            let entry = sections.entry(known).or_default();
            for (k, v) in props.iter() {
                entry.insert(k.to_string(), v.trim().to_string());
            }
        }

        let mut cfg = ScenarioConfig {
            base_dir: base_dir.to_path_buf(),
            ..ScenarioConfig::default()
        };
        let has_pump2 = sections.contains_key("pump2");
        {
            let mut take = |name: &'static str, f: &mut dyn FnMut(&mut Section)| {
                let mut s = Section {
                    name,
                    props: sections.get(name).cloned().unwrap_or_default(),
                    lines: &lines,
                    used: BTreeSet::new(),
                    issues: &mut issues,
                };
                f(&mut s);
                s.finish();
            };
            let d = ScenarioConfig::default();

            take("run", &mut |s| {
                cfg.seed = s.parse("seed", d.seed);
                if let Some(v) = s.raw("pulses") {
                    match parse_count(&v) {
                        Some(n) if n > 0 => cfg.n_pulses = n,
                        _ => s.issue("pulses", format!("expected a positive integer, got `{v}`")),
                    }
                }
                cfg.apparatus.statistics = s.parse("statistics", d.apparatus.statistics);
                cfg.apparatus.birth = s.parse("birth_model", d.apparatus.birth);
            });

            take("waveguide", &mut |s| {
                let m = &mut cfg.apparatus.model;
                let g = &mut m.geometry;
                g.length_m = s.nonneg("length_m", g.length_m, true);
                g.core_diameter_nm = s.nonneg("core_diameter_nm", g.core_diameter_nm, true);
                for (key, slot) in [
                    ("core_material", &mut g.core),
                    ("cladding_material", &mut g.cladding),
                ] {
                    if let Some(v) = s.raw(key) {
                        match MaterialModel::by_name(&v) {
                            Some(mat) => *slot = mat,
                            None => s.issue(key, format!("unknown material `{v}` (as2se3, pmma)")),
                        }
                    }
                }
                g.propagation_loss_db_per_m = s.nonneg(
                    "propagation_loss_db_per_m",
                    g.propagation_loss_db_per_m,
                    false,
                );
                g.input_coupling_loss_db =
                    s.nonneg("input_coupling_loss_db", g.input_coupling_loss_db, false);
                g.output_coupling_loss_db =
                    s.nonneg("output_coupling_loss_db", g.output_coupling_loss_db, false);
                m.n2 = s.nonneg("n2_m2_per_w", m.n2, true);
                m.aeff = s.parse("effective_area_um2", Aeff(m.aeff)).0;
                m.mode_prefactor = s.nonneg("mode_prefactor", m.mode_prefactor, true);
            });

            let pump = |s: &mut Section, base: PumpConfig| -> PumpConfig {
                let wavelength_nm = s.nonneg("wavelength_nm", base.wavelength_nm, true);
                let average_power_w = s.nonneg("average_power_w", base.average_power_w, false);
                let pulse_fwhm_ps = s.nonneg("pulse_fwhm_ps", base.pulse_fwhm_ps, true);
                let rep_rate_hz = s.nonneg("rep_rate_hz", base.rep_rate_hz, true);
                PumpConfig {
                    wavelength_nm,
                    average_power_w,
                    pulse_fwhm_ps,
                    rep_rate_hz,
                    polarization: s.parse("polarization", base.polarization),
                    delay_ps: s.f64("delay_ps", base.delay_ps),
                }
            };
            let mut p1 = PumpConfig::default();
            take("pump1", &mut |s| p1 = pump(s, PumpConfig::default()));
            cfg.apparatus.pumps = Pumps::Degenerate(p1);
            if has_pump2 {
                let mut p2 = p1;
                take("pump2", &mut |s| {
                    p2 = pump(
                        s,
                        PumpConfig {
                            delay_ps: 0.0,
                            polarization: Polarization::Co,
                            ..p1
                        },
                    )
                });
                cfg.apparatus.pumps = Pumps::Dual(p1, p2);
            }

            let filter = |s: &mut Section, base: FilterChannel| FilterChannel {
                center_nm: s.nonneg("center_nm", base.center_nm, true),
                bandwidth_nm: s.nonneg("bandwidth_nm", base.bandwidth_nm, true),
                insertion_loss_db: s.nonneg("insertion_loss_db", base.insertion_loss_db, false),
                pump_isolation_db: s.nonneg("pump_isolation_db", base.pump_isolation_db, false),
            };
            take("signal_filter", &mut |s| {
                cfg.apparatus.signal = filter(s, d.apparatus.signal)
            });
            take("idler_filter", &mut |s| {
                cfg.apparatus.idler = filter(s, d.apparatus.idler)
            });

            take("noise", &mut |s| {
                let n = &mut cfg.apparatus.noise;
                n.raman_enabled = s.parse("raman_enabled", n.raman_enabled);
                n.leakage_enabled = s.parse("leakage_enabled", n.leakage_enabled);
                n.raman_rate_per_pulse_per_nm = s.nonneg(
                    "raman_rate_per_pulse_per_nm",
                    n.raman_rate_per_pulse_per_nm,
                    false,
                );
                n.reference_power_w = s.nonneg("reference_power_w", n.reference_power_w, true);
                if let Some(t) = s.raw("raman_table") {
                    cfg.raman_table = t;
                }
            });

            let detector =
                |s: &mut Section, base: DetectorModel| -> (DetectorModel, Option<String>) {
                    let kind = match s.raw("kind") {
                        None => base.kind,
                        Some(v) => parse_kind(&v).unwrap_or_else(|e| {
                            s.issue("kind", e);
                            base.kind
                        }),
                    };
                    let efficiency = s.nonneg("efficiency", base.efficiency, false);
                    if efficiency > 1.0 {
                        s.issue("efficiency", format!("must be <= 1, got {efficiency}"));
                    }
                    let dark_prob_per_gate =
                        s.nonneg("dark_prob_per_gate", base.dark_prob_per_gate, false);
                    if dark_prob_per_gate >= 1.0 {
                        s.issue(
                            "dark_prob_per_gate",
                            format!("must be < 1, got {dark_prob_per_gate}"),
                        );
                    }
                    let m = DetectorModel {
                        kind,
                        efficiency,
                        dark_rate_hz: s.nonneg("dark_rate_hz", base.dark_rate_hz, false),
                        dark_prob_per_gate,
                        dead_time_ns: s.nonneg("dead_time_ns", base.dead_time_ns, false),
                        gate_width_ns: s.nonneg("gate_width_ns", base.gate_width_ns, false),
                        electronic_delay_ns: s.nonneg(
                            "electronic_delay_ns",
                            base.electronic_delay_ns,
                            false,
                        ),
                        profile: None,
                    };
                    (m, optional_path(s.raw("efficiency_profile")))
                };
            take("signal_detector", &mut |s| {
                (cfg.apparatus.signal_detector, cfg.signal_profile) =
                    detector(s, d.apparatus.signal_detector.clone());
            });
            take("idler_detector", &mut |s| {
                (cfg.apparatus.idler_detector, cfg.idler_profile) =
                    detector(s, d.apparatus.idler_detector.clone());
            });

            take("analysis", &mut |s| {
                cfg.window.window_ns = s.nonneg("window_ns", d.window.window_ns, true);
                cfg.window.true_offset_ns = s.nonneg(
                    "true_offset_ns",
                    cfg.apparatus.idler_detector.electronic_delay_ns,
                    false,
                );
                cfg.window.accidental_offset_ns =
                    s.nonneg("accidental_offset_ns", d.window.accidental_offset_ns, false);
                cfg.bin_width_ns = s.nonneg("bin_width_ns", d.bin_width_ns, true);
                cfg.span_ns = s.nonneg("span_ns", d.span_ns, true);
            });

            take("phasematch", &mut |s| {
                let p = &mut cfg.phasematch;
                p.pump1_nm = s.nonneg("pump1_nm", p.pump1_nm, true);
                p.pump2_nm = s.nonneg("pump2_nm", p.pump1_nm, true);
                p.pump_power_w = s.nonneg("pump_power_w", p.pump_power_w, false);
                p.seed_power_w = s.nonneg("seed_power_w", p.seed_power_w, false);
                p.seed_start_nm = s.nonneg("seed_start_nm", p.seed_start_nm, true);
                p.seed_stop_nm = s.nonneg("seed_stop_nm", p.seed_stop_nm, true);
                p.points = s.parse("points", p.points);
                if p.points < 2 {
                    s.issue("points", "need at least 2".into());
                }
            });

            take("power_scan", &mut |s| {
                let p = &mut cfg.power_scan;
                p.start_w = s.nonneg("start_w", p.start_w, true);
                p.stop_w = s.nonneg("stop_w", p.stop_w, true);
                p.points = s.parse("points", p.points);
                if p.points < 2 || p.stop_w <= p.start_w {
                    s.issue(
                        "points",
                        "need at least 2 points and stop_w > start_w".into(),
                    );
                }
            });

            take("delay_scan", &mut |s| {
                let p = &mut cfg.delay_scan;
                p.start_ps = s.f64("start_ps", p.start_ps);
                p.stop_ps = s.f64("stop_ps", p.stop_ps);
                p.points = s.parse("points", p.points);
                if p.points < 5 || p.stop_ps <= p.start_ps {
                    s.issue(
                        "points",
                        "need at least 5 points and stop_ps > start_ps".into(),
                    );
                }
            });

            take("noise_scan", &mut |s| {
                let p = &mut cfg.noise_scan;
                p.detuning_start_nm = s.f64("detuning_start_nm", p.detuning_start_nm);
                p.detuning_stop_nm = s.f64("detuning_stop_nm", p.detuning_stop_nm);
                p.points = s.parse("points", p.points);
                if p.points < 2 || p.detuning_stop_nm <= p.detuning_start_nm {
                    s.issue("points", "need at least 2 points and stop > start".into());
                }
            });

            take("fit", &mut |s| {
                let f = &mut cfg.fit;
                if let Some(v) = s.raw("car_series") {
                    f.car_series = v;
                }
                if let Some(v) = s.raw("pair_series") {
                    f.pair_series = v;
                }
                f.free = s.parse("free", ParamList(f.free.clone())).0;
                f.tau_bounds_ps = s.pair("tau_bounds_ps", f.tau_bounds_ps);
                f.dead_time_bounds_ns = s.pair("dead_time_bounds_ns", f.dead_time_bounds_ns);
                f.raman_bounds = s.pair("raman_bounds", f.raman_bounds);
                f.grid_points = s.parse("grid_points", f.grid_points);
                if f.grid_points < 3 {
                    s.issue("grid_points", "need at least 3".into());
                }
            });
            // Reserved for calibration provenance; no keys yet.
            take("calibration", &mut |_| {});
        }

        if let Pumps::Dual(p, q) = cfg.apparatus.pumps {
            if p.rep_rate_hz != q.rep_rate_hz {
                issues.push(ConfigIssue {
                    line: lines.key("pump2", "rep_rate_hz"),
                    section: "pump2".into(),
                    key: "rep_rate_hz".into(),
                    message: "both pumps must share the repetition rate".into(),
                });
            }
        }
        cfg.resolve_files(&mut issues, &lines);
        if issues.is_empty() {
            cfg.check_physics(&mut issues, &lines);
        }
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(err(issues))
        }
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn resolve_files(&mut self, issues: &mut Vec<ConfigIssue>, lines: &LineIndex) {
        let mut fail = |section: &str, key: &str, message: String| {
            issues.push(ConfigIssue {
                line: lines.key(section, key),
                section: section.into(),
                key: key.into(),
                message,
            })
        };
        if !self.raman_table.eq_ignore_ascii_case("builtin") {
            match RamanShape::load(&self.resolve(&self.raman_table)) {
                Ok(t) => self.apparatus.noise.shape = Arc::new(t),
                Err(e) => fail("noise", "raman_table", e.to_string()),
            }
        }
        for (section, which) in [("signal_detector", 0), ("idler_detector", 1)] {
            let path = if which == 0 {
                &self.signal_profile
            } else {
                &self.idler_profile
            };
            if let Some(p) = path {
                match EfficiencyProfile::load(&self.resolve(p)) {
                    Ok(prof) => {
                        let det = if which == 0 {
                            &mut self.apparatus.signal_detector
                        } else {
                            &mut self.apparatus.idler_detector
                        };
                        det.profile = Some(prof);
                    }
                    Err(e) => fail(section, "efficiency_profile", e.to_string()),
                }
            }
        }
        for (key, v) in [
            ("car_series", &self.fit.car_series),
            ("pair_series", &self.fit.pair_series),
        ] {
            let special = ["builtin", "none"]
                .iter()
                .any(|s| v.eq_ignore_ascii_case(s));
            if !special && !self.resolve(v).is_file() {
                fail(
                    "fit",
                    key,
                    format!("file not found: {}", self.resolve(v).display()),
                );
            }
        }
    }

    fn check_physics(&self, issues: &mut Vec<ConfigIssue>, lines: &LineIndex) {
        let a = &self.apparatus;
        let mut push = |section: &str, key: &str, e: crate::Error| {
            issues.push(ConfigIssue {
                line: lines
                    .key(section, key)
                    .or_else(|| lines.sections.get(section).copied()),
                section: section.into(),
                key: key.into(),
                message: e.to_string(),
            })
        };
        if let Err(e) = a.model.geometry.validate() {
            push("waveguide", "", e);
        }
        if let Err(e) = a.pumps.validate() {
            push("pump1", "", e);
        }
        for (section, ch) in [("signal_filter", &a.signal), ("idler_filter", &a.idler)] {
            if let Err(e) = ch.validate() {
                push(section, "", e);
            } else if let Err(e) = a.noise.check_channel(&a.pumps, ch) {
                push(section, "center_nm", e);
            }
        }
        if let Err(e) = a.noise.validate() {
            push("noise", "", e);
        }
        for (section, d) in [
            ("signal_detector", &a.signal_detector),
            ("idler_detector", &a.idler_detector),
        ] {
            if let Err(e) = d.validate() {
                push(section, "", e);
            }
        }
        if a.signal_detector.kind != DetectorKind::FreeRunning
            || a.idler_detector.kind != DetectorKind::Gated
        {
            push(
                "signal_detector",
                "kind",
                crate::Error::invalid(
                    "kind",
                    "the chain needs a free-running signal and a gated idler detector",
                ),
            );
        }
        for (w, nm) in [
            (a.pumps.wavelengths_nm().0, "pump1"),
            (a.pumps.wavelengths_nm().1, "pump2"),
        ] {
            if let Err(e) = a.model.geometry.check_wavelength(w) {
                push(nm, "wavelength_nm", e);
            }
        }
        let n = self.span_ns / self.bin_width_ns;
        if (n - n.round()).abs() > 1e-9 * n {
            push(
                "analysis",
                "bin_width_ns",
                crate::Error::invalid("bin_width", "bin width must divide span_ns evenly"),
            );
        }
        for (k, o) in [
            ("true_offset_ns", self.window.true_offset_ns),
            ("accidental_offset_ns", self.window.accidental_offset_ns),
        ] {
            if o + 0.5 * self.window.window_ns > self.span_ns {
                push(
                    "analysis",
                    k,
                    crate::Error::invalid("offset", "window extends past span_ns"),
                );
            }
        }
    }

    /// Measurement series named by the fit settings.
    pub fn fit_series(&self) -> crate::Result<Vec<MeasurementSeries>> {
        let mut out = Vec::new();
        for (v, kind, builtin) in [
            (&self.fit.car_series, SeriesKind::Car, BUILTIN_CAR),
            (
                &self.fit.pair_series,
                SeriesKind::PairProbability,
                BUILTIN_PAIRS,
            ),
        ] {
            if v.eq_ignore_ascii_case("none") {
                continue;
            }
            out.push(if v.eq_ignore_ascii_case("builtin") {
                MeasurementSeries::parse(builtin, kind, Path::new(&format!("builtin:{kind}")))?
            } else {
                MeasurementSeries::load(&self.resolve(v), kind)?
            });
        }
        Ok(out)
    }

    /// Canonical INI text with every key written out.
    pub fn to_ini(&self) -> String {
        let a = &self.apparatus;
        let mut o = String::new();
        let sec = |o: &mut String, name: &str, kv: Vec<(&str, String)>| {
            let _ = writeln!(o, "[{name}]");
            for (k, v) in kv {
                let _ = writeln!(o, "{k} = {v}");
            }
            o.push('\n');
        };
        sec(
            &mut o,
            "run",
            vec![
                ("seed", self.seed.to_string()),
                ("pulses", self.n_pulses.to_string()),
                ("statistics", a.statistics.to_string()),
                ("birth_model", a.birth.to_string()),
            ],
        );
        let g = &a.model.geometry;
        let aeff = match a.model.aeff {
            AeffMode::Computed => "computed".to_string(),
            AeffMode::Override(v) => fmt_f(v),
        };
        sec(
            &mut o,
            "waveguide",
            vec![
                ("length_m", fmt_f(g.length_m)),
                ("core_diameter_nm", fmt_f(g.core_diameter_nm)),
                ("core_material", g.core.name.to_ascii_lowercase()),
                ("cladding_material", g.cladding.name.to_ascii_lowercase()),
                (
                    "propagation_loss_db_per_m",
                    fmt_f(g.propagation_loss_db_per_m),
                ),
                ("input_coupling_loss_db", fmt_f(g.input_coupling_loss_db)),
                ("output_coupling_loss_db", fmt_f(g.output_coupling_loss_db)),
                ("n2_m2_per_w", fmt_f(a.model.n2)),
                ("effective_area_um2", aeff),
                ("mode_prefactor", fmt_f(a.model.mode_prefactor)),
            ],
        );
        let pump = |p: &PumpConfig| {
            vec![
                ("wavelength_nm", fmt_f(p.wavelength_nm)),
                ("average_power_w", fmt_f(p.average_power_w)),
                ("pulse_fwhm_ps", fmt_f(p.pulse_fwhm_ps)),
                ("rep_rate_hz", fmt_f(p.rep_rate_hz)),
                ("polarization", p.polarization.to_string()),
                ("delay_ps", fmt_f(p.delay_ps)),
            ]
        };
        match &a.pumps {
            Pumps::Degenerate(p) => sec(&mut o, "pump1", pump(p)),
            Pumps::Dual(p, q) => {
                sec(&mut o, "pump1", pump(p));
                sec(&mut o, "pump2", pump(q));
            }
        }
        let filter = |f: &FilterChannel| {
            vec![
                ("center_nm", fmt_f(f.center_nm)),
                ("bandwidth_nm", fmt_f(f.bandwidth_nm)),
                ("insertion_loss_db", fmt_f(f.insertion_loss_db)),
                ("pump_isolation_db", fmt_f(f.pump_isolation_db)),
            ]
        };
        sec(&mut o, "signal_filter", filter(&a.signal));
        sec(&mut o, "idler_filter", filter(&a.idler));
        let n = &a.noise;
        sec(
            &mut o,
            "noise",
            vec![
                ("raman_enabled", n.raman_enabled.to_string()),
                ("leakage_enabled", n.leakage_enabled.to_string()),
                (
                    "raman_rate_per_pulse_per_nm",
                    fmt_f(n.raman_rate_per_pulse_per_nm),
                ),
                ("reference_power_w", fmt_f(n.reference_power_w)),
                ("raman_table", self.raman_table.clone()),
            ],
        );
        let det = |d: &DetectorModel, prof: &Option<String>| {
            vec![
                ("kind", kind_name(d.kind).to_string()),
                ("efficiency", fmt_f(d.efficiency)),
                ("dark_rate_hz", fmt_f(d.dark_rate_hz)),
                ("dark_prob_per_gate", fmt_f(d.dark_prob_per_gate)),
                ("dead_time_ns", fmt_f(d.dead_time_ns)),
                ("gate_width_ns", fmt_f(d.gate_width_ns)),
                ("electronic_delay_ns", fmt_f(d.electronic_delay_ns)),
                (
                    "efficiency_profile",
                    prof.clone().unwrap_or_else(|| "none".into()),
                ),
            ]
        };
        sec(
            &mut o,
            "signal_detector",
            det(&a.signal_detector, &self.signal_profile),
        );
        sec(
            &mut o,
            "idler_detector",
            det(&a.idler_detector, &self.idler_profile),
        );
        sec(
            &mut o,
            "analysis",
            vec![
                ("window_ns", fmt_f(self.window.window_ns)),
                ("true_offset_ns", fmt_f(self.window.true_offset_ns)),
                (
                    "accidental_offset_ns",
                    fmt_f(self.window.accidental_offset_ns),
                ),
                ("bin_width_ns", fmt_f(self.bin_width_ns)),
                ("span_ns", fmt_f(self.span_ns)),
            ],
        );
        let p = &self.phasematch;
        sec(
            &mut o,
            "phasematch",
            vec![
                ("pump1_nm", fmt_f(p.pump1_nm)),
                ("pump2_nm", fmt_f(p.pump2_nm)),
                ("pump_power_w", fmt_f(p.pump_power_w)),
                ("seed_power_w", fmt_f(p.seed_power_w)),
                ("seed_start_nm", fmt_f(p.seed_start_nm)),
                ("seed_stop_nm", fmt_f(p.seed_stop_nm)),
                ("points", p.points.to_string()),
            ],
        );
        sec(
            &mut o,
            "power_scan",
            vec![
                ("start_w", fmt_f(self.power_scan.start_w)),
                ("stop_w", fmt_f(self.power_scan.stop_w)),
                ("points", self.power_scan.points.to_string()),
            ],
        );
        sec(
            &mut o,
            "delay_scan",
            vec![
                ("start_ps", fmt_f(self.delay_scan.start_ps)),
                ("stop_ps", fmt_f(self.delay_scan.stop_ps)),
                ("points", self.delay_scan.points.to_string()),
            ],
        );
        sec(
            &mut o,
            "noise_scan",
            vec![
                (
                    "detuning_start_nm",
                    fmt_f(self.noise_scan.detuning_start_nm),
                ),
                ("detuning_stop_nm", fmt_f(self.noise_scan.detuning_stop_nm)),
                ("points", self.noise_scan.points.to_string()),
            ],
        );
        let f = &self.fit;
        let bounds = |b: (f64, f64)| format!("{}, {}", fmt_f(b.0), fmt_f(b.1));
        sec(
            &mut o,
            "fit",
            vec![
                ("car_series", f.car_series.clone()),
                ("pair_series", f.pair_series.clone()),
                (
                    "free",
                    f.free
                        .iter()
                        .map(|p| p.name())
                        .collect::<Vec<_>>()
                        .join(", "),
                ),
                ("tau_bounds_ps", bounds(f.tau_bounds_ps)),
                ("dead_time_bounds_ns", bounds(f.dead_time_bounds_ns)),
                ("raman_bounds", bounds(f.raman_bounds)),
                ("grid_points", f.grid_points.to_string()),
            ],
        );
        o.truncate(o.trim_end().len());
        o.push('\n');
        o
    }

    /// SHA-256 of the canonical text and of every referenced data file.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_ini().as_bytes());
        let files = [
            Some(&self.raman_table),
            self.signal_profile.as_ref(),
            self.idler_profile.as_ref(),
            Some(&self.fit.car_series),
            Some(&self.fit.pair_series),
        ];
        for f in files.into_iter().flatten() {
            if ["builtin", "none"]
                .iter()
                .any(|s| f.eq_ignore_ascii_case(s))
            {
                continue;
            }
            if let Ok(bytes) = std::fs::read(self.resolve(f)) {
                h.update(f.as_bytes());
                h.update(&bytes);
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_pulses(mut self, n: u64) -> Self {
        self.n_pulses = n;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::parse(text, Path::new("test.ini"), Path::new("."))
    }

    #[test]
    fn empty_file_is_the_default_apparatus() {
        let c = parse("").unwrap();
        assert_eq!(c.apparatus, Apparatus::default());
    }

    #[test]
    fn round_trip() {
        let c = parse("[pump2]\nwavelength_nm = 1561.42\npolarization = cross\n[waveguide]\neffective_area_um2 = computed\n").unwrap();
        let again = parse(&c.to_ini()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_ini(), again.to_ini());
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn unknown_and_bad_keys_are_itemized() {
        let e = parse(
            "[run]\nseed = 3\ncolour = blue\n\n[pump1]\naverage_power_w = -1e-6\n[bogus]\nx = 1\n",
        )
        .unwrap_err();
        assert_eq!(e.issues.len(), 3, "{e}");
        let text = e.to_string();
        assert!(text.contains("line 3: [run] colour: unknown key"), "{text}");
        assert!(
            text.contains("line 6: [pump1] average_power_w: must be >= 0"),
            "{text}"
        );
        assert!(text.contains("unknown section"), "{text}");
    }

    #[test]
    fn raman_range_is_checked() {
        let e = parse("[signal_filter]\ncenter_nm = 1480\n").unwrap_err();
        assert!(e.to_string().contains("outside Raman table range"), "{e}");
        assert!(
            parse("[signal_filter]\ncenter_nm = 1480\n[noise]\nraman_enabled = false\n").is_ok()
        );
    }

    #[test]
    fn duplicate_keys_rejected() {
        let e = parse("[run]\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(e.to_string().contains("duplicate key"), "{e}");
    }
}
