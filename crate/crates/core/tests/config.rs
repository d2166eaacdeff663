use std::path::{Path, PathBuf};

use microwire::config::{parse_count, ScenarioConfig};
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn reparse(c: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig::parse(&c.to_ini(), Path::new("roundtrip.ini"), &c.base_dir).unwrap()
}

#[test]
fn shipped_configs_round_trip() {
    for name in ["default.ini", "noise_only.ini", "nondegenerate.ini"] {
        let c = ScenarioConfig::load(&configs_dir().join(name)).unwrap();
        let again = reparse(&c);
        assert_eq!(c, again, "{name}");
        assert_eq!(c.hash(), again.hash(), "{name}");
    }
}

#[test]
fn hash_tracks_content() {
    let c = ScenarioConfig::load(&configs_dir().join("default.ini")).unwrap();
    assert_eq!(c.hash(), c.clone().hash());
    assert_ne!(c.hash(), c.clone().with_seed(c.seed + 1).hash());
    assert_eq!(c.hash().len(), 64);
}

#[test]
fn counts_accept_exponent_notation() {
    assert_eq!(parse_count("1e10"), Some(10_000_000_000));
    assert_eq!(parse_count("250000"), Some(250_000));
    assert_eq!(parse_count("1.5"), None);
    assert_eq!(parse_count("-3"), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edited_configs_round_trip(
        seed in any::<u64>(),
        pulses in 1u64..10_000_000_000,
        power in 0.1e-6..40e-6f64,
        tau in 5.0..80.0f64,
        dark in 0.0..0.05f64,
        lo in 0.1e-6..1e-6f64,
        points in 3usize..40,
    ) {
        let mut c = ScenarioConfig::default().with_seed(seed).with_pulses(pulses);
        let a = &mut c.apparatus;
        a.pumps = a.pumps_at_power(power);
        if let microwire::fwm::Pumps::Degenerate(p) = &mut a.pumps {
            p.pulse_fwhm_ps = tau;
        }
        a.idler_detector.dark_prob_per_gate = dark;
        c.power_scan.start_w = lo;
        c.power_scan.points = points;
        let again = reparse(&c);
        prop_assert_eq!(&c, &again);
        prop_assert_eq!(c.hash(), again.hash());
    }
}
