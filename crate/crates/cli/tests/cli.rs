use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lowlying::expansion::ExpansionCoefficients;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_lowlying"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_config_key_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), r#"{"sigmaa": 1.0}"#, &["constants"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(d.path(), r#"{"k": [13]}"#, &["density"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn prime_budget_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), r#"{"big_k": [100000.0], "sigma": 1.9, "signs": ["plus"]}"#, &["averaged-density"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn empty_space_is_reported_and_density_is_header_only() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), r#"{"k": [14], "mn_max": 2}"#, &["verify-petersson"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("14,") && lines[1].ends_with("empty space"));

    let o = run(d.path(), r#"{"k": [14]}"#, &["density"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("k,log_x,"));
}

#[test]
fn corrupted_cache_entry_is_rebuilt() {
    let d = tempfile::tempdir().unwrap();
    let cache = d.path().join("cache");
    let out = d.path().join("p.csv");
    let args = ["verify-petersson", "--cache", cache.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let cfg = r#"{"k": [32], "mn_max": 3}"#;
    let o = run(d.path(), cfg, &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read(&out).unwrap();
    let entries: Vec<_> = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    fs::write(&entries[0], "{not json").unwrap();
    let o = run(d.path(), cfg, &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("rebuilding"));
    assert_eq!(fs::read(&out).unwrap(), first);
    assert!(fs::read_to_string(&entries[0]).unwrap().starts_with('{'));
    assert!(d.path().join("p_survey.csv").exists());
}

#[test]
fn constants_json_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), r#"{"J": 2, "prime_limit": 100000}"#, &["constants", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let co: ExpansionCoefficients = serde_json::from_str(&text).unwrap();
    assert_eq!(co.j, 2);
    assert_eq!(co.c.len(), 2);
    assert_eq!(co.theta_limit, 100_000);
    assert_eq!(serde_json::to_string_pretty(&co).unwrap() + "\n", text);
}

#[test]
fn expansion_writes_plot_file() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("e.csv");
    let o = run(
        d.path(),
        r#"{"big_k": [100.0], "signs": ["plus"], "J": 1, "prime_limit": 100000}"#,
        &["expansion", "--out", out.to_str().unwrap()],
    );
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
    let main = fs::read_to_string(&out).unwrap();
    assert!(main.starts_with("K,sign,direct,expansion,difference"));
    assert_eq!(main.lines().count(), 2);
    let plot = fs::read_to_string(d.path().join("e_plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 2);
    assert!(plot.starts_with("K,sign,scaled_difference\n"));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"samples": 300}"#;
    let a = run(d.path(), cfg, &["bessel-check", "--threads", "1"]);
    let b = run(d.path(), cfg, &["bessel-check", "--threads", "4"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 301);
}
