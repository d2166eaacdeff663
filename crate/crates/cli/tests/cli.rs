use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn microwire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microwire"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.ini");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_configs_validate() {
    for name in ["default.ini", "noise_only.ini", "nondegenerate.ini"] {
        let p = configs().join(name);
        let o = microwire(&["validate", "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("config_sha256"));
    }
}

#[test]
fn negative_power_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "[pump1]\naverage_power_w = -3.2e-6\n");
    let o = microwire(&["validate", &c]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(
        e.contains("line 2") && e.contains("[pump1] average_power_w"),
        "{e}"
    );
}

#[test]
fn unknown_keys_and_sections_are_itemized() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "[pump1]\ncolour = red\n[wobble]\nx = 1\n");
    let o = microwire(&["validate", "--config", &c]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("colour") && e.contains("wobble"), "{e}");
    assert!(e.contains("2 configuration error(s)"), "{e}");
}

#[test]
fn filter_outside_raman_table_cites_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "[idler_filter]\ncenter_nm = 1640\n");
    let o = microwire(&["validate", &c]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("outside Raman table range [-70, 70]"), "{e}");
}

#[test]
fn missing_config_and_bad_scenario_exit_2() {
    assert_eq!(microwire(&["validate"]).status.code(), Some(2));
    let p = configs().join("default.ini");
    assert_eq!(
        microwire(&["sideways", "-c", p.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        microwire(&["validate", "/no/such/file.ini"]).status.code(),
        Some(2)
    );
}

#[test]
fn delay_scan_with_one_pump_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = configs().join("default.ini");
    let out = dir.path().to_str().unwrap();
    let o = microwire(&[
        "delay-scan",
        "-c",
        p.to_str().unwrap(),
        "--pulses",
        "1000",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("two pumps"));
}

#[test]
fn high_gain_is_a_model_validity_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "[pump1]\naverage_power_w = 1e-3\n");
    let out = dir.path().join("out");
    let o = microwire(&[
        "histogram",
        "-c",
        &c,
        "--pulses",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("model validity"));
}

fn run_to(dir: &Path, scenario: &str, extra: &[&str], threads: &str) -> String {
    let p = configs().join("default.ini");
    let mut args = vec![
        scenario,
        "-c",
        p.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = Command::new(env!("CARGO_BIN_EXE_microwire"))
        .args(&args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let file = String::from_utf8(o.stdout).unwrap();
    std::fs::read_to_string(file.lines().next().unwrap()).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--pulses", "2e7", "--seed", "11"];
    let x = run_to(a.path(), "histogram", &args, "1");
    let y = run_to(b.path(), "histogram", &args, "4");
    assert_eq!(x, y);
    for key in [
        "# microwire ",
        "# config_sha256: ",
        "# seed: 11",
        "# pulses: 20000000",
        "# scenario: histogram",
    ] {
        assert!(x.contains(key), "missing {key}");
    }
    let z = run_to(
        b.path(),
        "histogram",
        &["--pulses", "2e7", "--seed", "12"],
        "4",
    );
    assert_ne!(x, z);
}

#[test]
fn fit_scenario_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = configs().join("default.ini");
    let o = microwire(&[
        "fit",
        "-c",
        p.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["fit.csv", "fit_curves.csv", "fit_data.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn list_names_every_scenario() {
    let o = microwire(&["list"]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().count(), 8);
    assert!(s.contains("delay-scan"));
}
