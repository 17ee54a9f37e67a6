use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "[grid]\nn = 128\nlength = 40.0\n\n[solver]\nhorizon = 0.1\ndt = 0.01\n";

fn dispersa(dir: &Path, args: &[&str], config: &str) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dispersa"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--threads")
        .arg("2")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn empty_time_scan_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersa(dir.path(), &["verify-identities"], &format!("{SMALL}[scan]\nt = []\n"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("scan.t"), "{}", stderr(&o));
}

#[test]
fn zero_datum_solves_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersa(dir.path(), &["solve"], &format!("{SMALL}[datum]\nkind = \"zero\"\n"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mut rows = 0;
    for line in lines {
        for (name, v) in header.iter().zip(line.split(',')).skip(1) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{name} in {line}");
        }
        rows += 1;
    }
    assert_eq!(rows, 11);
}

#[test]
fn zero_battery_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}[[battery]]\nkind = \"zero\"\n");
    let o = dispersa(dir.path(), &["calibrate"], &cfg);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("battery"), "{}", stderr(&o));
}

#[test]
fn mismatched_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersa(dir.path(), &["solve"], &format!("command = \"phi-scan\"\n{SMALL}"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("command"));
}

#[test]
fn missing_config_is_an_io_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_dispersa"))
        .args(["solve", "--config", "/nonexistent/dispersa.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn divergent_picard_exits_with_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\nn = 128\nlength = 40.0\n\n[solver]\nhorizon = 2.0\ndt = 0.01\nallow_beyond_existence_time = true\n\n\
               [datum]\nkind = \"gaussian\"\namplitude = 10.0\nwidth = 1.0\ncenter = 0.0\n";
    let o = dispersa(dir.path(), &["solve"], cfg);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn outputs_are_deterministic() {
    let cfg = format!(
        "seed = 7\n{SMALL}[scan]\nt = [0.5, 0.25]\nalpha = [0.5]\n\n[datum]\nkind = \"gaussian\"\namplitude = 0.1\nwidth = 1.0\ncenter = 0.0\n"
    );
    for cmd in ["verify-identities", "solve"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(dispersa(a.path(), &[cmd], &cfg).status.code(), Some(0));
        assert_eq!(dispersa(b.path(), &[cmd], &cfg).status.code(), Some(0));
        let mut names: Vec<_> = fs::read_dir(a.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            let x = fs::read(a.path().join("out").join(&n)).unwrap();
            let y = fs::read(b.path().join("out").join(&n)).unwrap();
            assert_eq!(x, y, "{n:?} differs between runs");
        }
    }
}

#[test]
fn json_format_embeds_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersa(dir.path(), &["strichartz", "--format", "json"], &format!("{SMALL}[scan]\nt_window = [1.0]\nn_times = 21\n"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(text.contains("\"strichartz_ratio\""));
    assert!(!dir.path().join("out/strichartz.csv").exists());
}
