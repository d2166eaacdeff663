use crate::counting::{ChannelRates, CountRecord, CountSummary, DetectorModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimingHistogram {
    pub bin_edges_ns: Vec<f64>,
    pub counts: Vec<u64>,
    pub rep_period_ns: f64,
}

impl TimingHistogram {
    pub fn bin_width_ns(&self) -> f64 {
        self.bin_edges_ns[1] - self.bin_edges_ns[0]
    }

    pub fn centers_ns(&self) -> Vec<f64> {
        self.bin_edges_ns
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Counts scaled so that the tallest bin within `half_width_ns` of the
    /// accidental peak is 1; all zeros if that peak is empty.
    pub fn normalized(&self, accidental_offset_ns: f64, half_width_ns: f64) -> Vec<f64> {
        let peak = self
            .centers_ns()
            .iter()
            .zip(&self.counts)
            .filter(|(c, _)| (**c - accidental_offset_ns).abs() <= half_width_ns)
            .map(|(_, &n)| n)
            .max()
            .unwrap_or(0);
        self.counts
            .iter()
            .map(|&n| {
                if peak > 0 {
                    n as f64 / peak as f64
                } else {
                    0.0
                }
            })
            .collect()
    }
}

fn bins(bin_width_ns: f64, span_ns: f64) -> Result<usize> {
    if !(bin_width_ns > 0.0 && span_ns > 0.0) {
        return Err(Error::invalid(
            "bin_width",
            "bin width and span must be > 0",
        ));
    }
    let n = span_ns / bin_width_ns;
    if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::invalid(
            "bin_width",
            format!("{bin_width_ns} ns does not divide the {span_ns} ns span"),
        ));
    }
    Ok(n.round() as usize)
}

fn build(
    offsets: impl Iterator<Item = (f64, u64)>,
    bin_width_ns: f64,
    span_ns: f64,
    rep_period_ns: f64,
) -> Result<TimingHistogram> {
    let n = bins(bin_width_ns, span_ns)?;
    let mut counts = vec![0u64; n];
    for (o, k) in offsets {
        if o >= 0.0 && o < span_ns {
            counts[((o / bin_width_ns) as usize).min(n - 1)] += k;
        }
    }
    Ok(TimingHistogram {
        bin_edges_ns: (0..=n).map(|k| k as f64 * bin_width_ns).collect(),
        counts,
        rep_period_ns,
    })
}

/// Idler click offsets from the gating signal click, binned over `[0, span)`.
pub fn histogram(
    records: &[CountRecord],
    bin_width_ns: f64,
    span_ns: f64,
    rep_period_ns: f64,
) -> Result<TimingHistogram> {
    build(
        records
            .iter()
            .filter_map(|r| r.idler_time_offset_ns.map(|o| (o, 1))),
        bin_width_ns,
        span_ns,
        rep_period_ns,
    )
}

/// [`histogram`] from a count summary (offsets resolved to 1 ps).
pub fn histogram_summary(
    summary: &CountSummary,
    bin_width_ns: f64,
    span_ns: f64,
    rep_period_ns: f64,
) -> Result<TimingHistogram> {
    build(summary.offsets(), bin_width_ns, span_ns, rep_period_ns)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarEstimate {
    pub car: f64,
    pub stderr: f64,
    pub coincidences: u64,
    pub accidentals: u64,
}

impl CarEstimate {
    pub fn from_counts(coincidences: u64, accidentals: u64) -> Result<Self> {
        if accidentals == 0 {
            return Err(Error::UndefinedCar);
        }
        let (c, a) = (coincidences as f64, accidentals as f64);
        let car = c / a;
        let rel = if coincidences == 0 {
            1.0 / a
        } else {
            1.0 / c + 1.0 / a
        };
        Ok(Self {
            car,
            stderr: car.max(1.0 / a) * rel.sqrt(),
            coincidences,
            accidentals,
        })
    }
}

/// CAR from clicks within `window/2` of the true and accidental offsets.
pub fn car(
    records: &[CountRecord],
    window_ns: f64,
    true_offset_ns: f64,
    accidental_offset_ns: f64,
) -> Result<CarEstimate> {
    let count = |center: f64| {
        records
            .iter()
            .filter_map(|r| r.idler_time_offset_ns)
            .filter(|o| (o - center).abs() <= 0.5 * window_ns)
            .count() as u64
    };
    CarEstimate::from_counts(count(true_offset_ns), count(accidental_offset_ns))
}

pub fn car_summary(
    summary: &CountSummary,
    window_ns: f64,
    true_offset_ns: f64,
    accidental_offset_ns: f64,
) -> Result<CarEstimate> {
    let h = 0.5 * window_ns;
    CarEstimate::from_counts(
        summary.count_between(true_offset_ns - h, true_offset_ns + h),
        summary.count_between(accidental_offset_ns - h, accidental_offset_ns + h),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    /// Accidental-subtracted coincidences per pulse.
    pub pairs_per_pulse_detected: f64,
    /// Detected pairs per pulse back-propagated to the wire.
    pub pairs_per_pulse_inside_wire: f64,
    pub pairs_per_s_inside_wire: f64,
    pub brightness_per_s_per_nm_per_mw: f64,
}

/// Back-propagates a detected pair probability through both channels'
/// path transmission and detector efficiency.
pub fn pair_metrics(
    detected_pairs_per_pulse: f64,
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    signal_bandwidth_nm: f64,
    pump_average_power_w: f64,
) -> Result<PairMetrics> {
    let eff = rates.eta_s * detectors.0.efficiency * rates.eta_i * detectors.1.efficiency;
    if eff <= 0.0 {
        return Err(Error::invalid(
            "efficiency",
            "zero collection efficiency, cannot back-propagate",
        ));
    }
    if !(signal_bandwidth_nm > 0.0 && pump_average_power_w > 0.0) {
        return Err(Error::invalid(
            "pump_power",
            "bandwidth and pump power must be > 0",
        ));
    }
    let inside = detected_pairs_per_pulse / eff;
    let per_s = inside * rates.rep_rate_hz;
    Ok(PairMetrics {
        pairs_per_pulse_detected: detected_pairs_per_pulse,
        pairs_per_pulse_inside_wire: inside,
        pairs_per_s_inside_wire: per_s,
        brightness_per_s_per_nm_per_mw: per_s / signal_bandwidth_nm / (pump_average_power_w * 1e3),
    })
}

/// [`pair_metrics`] from a simulation summary, with accidentals subtracted.
pub fn pair_metrics_summary(
    summary: &CountSummary,
    estimate: &CarEstimate,
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    signal_bandwidth_nm: f64,
    pump_average_power_w: f64,
) -> Result<PairMetrics> {
    let net =
        (estimate.coincidences as f64 - estimate.accidentals as f64) / summary.n_pulses as f64;
    pair_metrics(
        net,
        rates,
        detectors,
        signal_bandwidth_nm,
        pump_average_power_w,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(o: Option<f64>) -> CountRecord {
        CountRecord {
            pulse_index: 0,
            signal_detected: true,
            gate_opened: true,
            idler_detected: o.is_some(),
            idler_time_offset_ns: o,
        }
    }

    #[test]
    fn histogram_bins_and_errors() {
        let r = vec![rec(Some(8.84)), rec(Some(22.0)), rec(Some(22.3)), rec(None)];
        let h = histogram(&r, 0.5, 50.0, 13.16).unwrap();
        assert_eq!(h.counts.len(), 100);
        assert_eq!(h.counts[44], 2);
        assert_eq!(h.counts[17], 1);
        assert_eq!(h.normalized(9.0, 1.0)[44], 2.0);
        assert!(histogram(&r, 0.3, 50.0, 13.16).is_err());
        let empty = histogram(&[], 1.0, 50.0, 13.16).unwrap();
        assert!(empty.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn car_counts_windows() {
        let r = vec![
            rec(Some(22.0)),
            rec(Some(21.5)),
            rec(Some(8.84)),
            rec(Some(30.0)),
        ];
        let e = car(&r, 2.0, 22.0, 9.0).unwrap();
        assert_eq!((e.coincidences, e.accidentals), (2, 1));
        assert_eq!(e.car, 2.0);
        assert!((e.stderr - 2.0 * 1.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            car(&r[..2], 2.0, 22.0, 9.0),
            Err(Error::UndefinedCar)
        ));
    }

    #[test]
    fn back_propagation_consistency() {
        let (s, i) = (DetectorModel::nfad(), DetectorModel::gated());
        let r = ChannelRates {
            eta_s: 0.2,
            eta_i: 0.2,
            ..Default::default()
        };
        let half = ChannelRates { eta_s: 0.1, ..r };
        let a = pair_metrics(1e-4, &r, (&s, &i), 0.5, 30e-6).unwrap();
        let b = pair_metrics(0.5e-4, &half, (&s, &i), 0.5, 30e-6).unwrap();
        assert!((a.pairs_per_s_inside_wire - b.pairs_per_s_inside_wire).abs() < 1e-6);
        let zero = ChannelRates { eta_s: 0.0, ..r };
        assert!(pair_metrics(1e-4, &zero, (&s, &i), 0.5, 30e-6).is_err());
    }
}
