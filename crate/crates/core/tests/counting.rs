use microwire::counting::*;
use proptest::prelude::*;

fn detectors(dead_ns: f64) -> (DetectorModel, DetectorModel) {
    let s = DetectorModel {
        dead_time_ns: dead_ns,
        ..DetectorModel::nfad()
    };
    (s, DetectorModel::gated())
}

fn analytic(rates: &ChannelRates, d: &(DetectorModel, DetectorModel)) -> AnalyticCounts {
    analytic_counts(rates, (&d.0, &d.1), 2.0, d.1.electronic_delay_ns, 9.0).unwrap()
}

#[test]
fn free_running_dark_probability_in_a_window() {
    // 100 counts/s seen through a 2 ns window.
    let s = DetectorModel::nfad();
    assert_eq!(s.dark_rate_hz, 100.0);
    assert!((s.dark_rate_hz * 2e-9 - 2e-7).abs() < 1e-20);
}

#[test]
fn gated_dark_rate_reproduces_gate_probability() {
    let g = DetectorModel::gated();
    let p = 1.0 - (-g.gate_dark_rate_per_ns() * g.gate_width_ns).exp();
    assert!((p - g.dark_prob_per_gate).abs() < 1e-15);
}

#[test]
fn herald_rate_saturates_with_dead_time() {
    let d = detectors(10_000.0);
    let base = ChannelRates {
        eta_s: 0.5,
        eta_i: 0.5,
        ..Default::default()
    };
    let mus: Vec<f64> = (1..=12).map(|k| 0.01 * k as f64).collect();
    let h: Vec<f64> = mus
        .iter()
        .map(|&m| analytic(&base.with_mu(m), &d).herald_rate)
        .collect();
    for w in h.windows(3) {
        assert!(w[1] > w[0], "herald rate must grow");
        assert!(w[2] - w[1] < w[1] - w[0], "and be concave: {w:?}");
    }
    let free = analytic(&base.with_mu(0.12), &detectors(0.0)).herald_rate;
    assert!(*h.last().unwrap() < 0.5 * free);
}

#[test]
fn first_order_car_matches_exact_at_low_mu() {
    let d = detectors(0.0);
    let r = ChannelRates {
        mu_pair: 1e-4,
        raman_s: 1e-4,
        raman_i: 1e-4,
        eta_s: 0.5,
        eta_i: 0.5,
        ..Default::default()
    };
    let exact = analytic(&r, &d).car().unwrap();
    let approx = first_order_car(&r, (&d.0, &d.1), 2.0).unwrap();
    assert!((exact / approx - 1.0).abs() < 0.05, "{exact} vs {approx}");
}

#[test]
fn car_estimate_errors_without_accidentals() {
    assert!(CarEstimate::from_counts(10, 0).is_err());
    let e = CarEstimate::from_counts(400, 100).unwrap();
    assert!((e.car - 4.0).abs() < 1e-15);
    assert!((e.stderr - 4.0 * (1.0f64 / 400.0 + 1.0 / 100.0).sqrt()).abs() < 1e-12);
}

#[test]
fn summary_and_records_agree() {
    let d = detectors(1000.0);
    let r = ChannelRates {
        mu_pair: 0.02,
        raman_s: 0.02,
        raman_i: 0.02,
        eta_s: 0.6,
        eta_i: 0.6,
        ..Default::default()
    };
    let n = 3_000_000;
    let recs = simulate_pulses(&r, (&d.0, &d.1), n, 5).unwrap();
    let from_recs = CountSummary::from_records(&recs, n, d.1.gate_width_ns);
    let streamed = simulate_summary(&r, (&d.0, &d.1), n, 5).unwrap();
    assert_eq!(from_recs, streamed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monte_carlo_matches_closed_form(
        mu in 0.005..0.05f64,
        noise in 0.0..0.05f64,
        eta in 0.3..0.9f64,
        dead in 0.0..5000.0f64,
        thermal in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let d = detectors(dead);
        let r = ChannelRates {
            mu_pair: mu,
            raman_s: noise,
            raman_i: noise,
            eta_s: eta,
            eta_i: eta,
            statistics: if thermal { PairStatistics::Thermal } else { PairStatistics::Poisson },
            ..Default::default()
        };
        let n = 2_000_000u64;
        let s = simulate_summary(&r, (&d.0, &d.1), n, seed).unwrap();
        let a = analytic(&r, &d);
        let heralds = s.heralds as f64;
        let expect = a.herald_rate * n as f64;
        prop_assert!((heralds - expect).abs() < 5.0 * expect.sqrt() + 5.0, "{heralds} vs {expect}");
        let (c_exp, acc_exp) = a.expected_counts(n as f64);
        let c = s.count_between(d.1.electronic_delay_ns - 1.0, d.1.electronic_delay_ns + 1.0) as f64;
        let acc = s.count_between(8.0, 10.0) as f64;
        prop_assert!((c - c_exp).abs() < 5.0 * c_exp.sqrt() + 5.0, "{c} vs {c_exp}");
        prop_assert!((acc - acc_exp).abs() < 5.0 * acc_exp.sqrt() + 5.0, "{acc} vs {acc_exp}");
    }

    #[test]
    fn car_summary_bounded_below_by_zero(seed in any::<u64>()) {
        let d = detectors(0.0);
        let r = ChannelRates { mu_pair: 0.01, raman_i: 0.02, ..Default::default() };
        let s = simulate_summary(&r, (&d.0, &d.1), 500_000, seed).unwrap();
        if let Ok(e) = car_summary(&s, 2.0, d.1.electronic_delay_ns, 9.0) {
            prop_assert!(e.car >= 0.0 && e.stderr > 0.0);
        }
    }
}
