use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabi-chain")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn spectrum_lists_levels() {
    let text = ok(&["spectrum", "--species", "b", "--levels", "5"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,energy_rad_per_s,parity");
    assert_eq!(lines.len(), 6);
    let parities: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(parities, ["1", "-1", "1", "-1", "1"]);
}

#[test]
fn compile_guards_and_schedule() {
    // the reference rotation rate is above the default drive guard
    assert!(!cli(&["compile"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schedule.json");
    ok(&["compile", "--unchecked", "--emit-schedule", path.to_str().unwrap()]);
    let schedule = rabi_chain::pulse::GateSchedule::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(schedule.segments.len(), 70);
    assert!(schedule.segments.iter().all(|s| !s.tones.is_empty()));
}

fn write_config(dir: &Path, seed: u64) -> String {
    let mut cfg = rabi_chain::experiment::ExperimentConfig::reference();
    cfg.sampling.seed = seed;
    cfg.sampling.n_states = 2;
    cfg.dissipation.enabled = false;
    let path = dir.join(format!("run{seed}.toml"));
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn runs_are_deterministic_and_guarded_by_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 7);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["--config", &config, "run", "--output", a.to_str().unwrap()]);
    ok(&["--config", &config, "run", "--output", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(rabi_chain::experiment::meta_path(&a).exists());

    // same file, different configuration
    let other = cli(&["--config", &config, "--seed", "8", "run", "--output", a.to_str().unwrap()]);
    assert!(!other.status.success());
    assert!(String::from_utf8_lossy(&other.stderr).contains("error"));
    ok(&["--config", &config, "--seed", "8", "run", "--output", a.to_str().unwrap(), "--force"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweep_writes_one_file_per_length() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 3);
    let prefix = dir.path().join("sweep.csv");
    let text = ok(&["--config", &config, "sweep", "--sites", "2,3", "--output", prefix.to_str().unwrap()]);
    assert_eq!(text.lines().count(), 2);
    for n in [2, 3] {
        let rows = rabi_chain::experiment::read_csv(&dir.path().join(format!("sweep_N{n}.csv"))).unwrap();
        assert_eq!(rows.len(), 11);
    }
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[chain]\nn_sites = 1\n").unwrap();
    let out = cli(&["--config", path.to_str().unwrap(), "spectrum"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
