//! Config parsing, CSV output and the command-line contract.

use histlat::runner::{fmt_num, parse_config, run, RunOptions, CSV_SCHEMA, RESULT_HEADER};
use histlat::Error;
use std::fs;
use std::path::Path;
use std::process::Command;

fn histlat() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_histlat"));
    // keep the caller's overrides out of these runs
    for (k, _) in std::env::vars().filter(|(k, _)| k.to_ascii_uppercase().starts_with("HISTLAT__")) {
        c.env_remove(k);
    }
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn config_line(e: Error) -> usize {
    match e {
        Error::Config { line, .. } => line,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn unknown_key_is_reported_at_its_line() {
    let text = "[run]\nexperiments = stueckelberg\n\n[stueckelberg]\nkx = 2\nbogus = 1\n";
    assert_eq!(config_line(parse_config(text, &[]).unwrap_err()), 6);
}

#[test]
fn malformed_line_is_reported_at_its_line() {
    let text = "[run]\nexperiments = stueckelberg\nthis is not a key\n";
    assert_eq!(config_line(parse_config(text, &[]).unwrap_err()), 3);
    let text = "[run\nexperiments = stueckelberg\n";
    assert_eq!(config_line(parse_config(text, &[]).unwrap_err()), 1);
}

#[test]
fn unknown_experiment_and_bad_values_are_config_errors() {
    assert!(matches!(parse_config("[run]\nexperiments = nope\n", &[]), Err(Error::Config { .. })));
    let text = "[run]\nexperiments = stueckelberg\n[stueckelberg]\nkx = three\n";
    assert_eq!(config_line(parse_config(text, &[]).unwrap_err()), 4);
}

#[test]
fn environment_overrides_win_and_ignore_case() {
    let text = "[run]\nexperiments = stueckelberg\n[stueckelberg]\nkx = 2\n";
    let env = vec![("HISTLAT__STUECKELBERG__KX".to_string(), "4".to_string())];
    let cfg = parse_config(text, &env).unwrap();
    assert_eq!(cfg.experiments[0].1.str("kx").unwrap(), "4");
    let env = vec![("histlat__run__experiments".to_string(), "fock_algebra, stueckelberg".to_string())];
    let cfg = parse_config(text, &env).unwrap();
    let names: Vec<&str> = cfg.experiments.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["fock_algebra", "stueckelberg"]);
    let env = vec![("HISTLAT__STUECKELBERG__NOPE".to_string(), "1".to_string())];
    assert!(matches!(parse_config(text, &env), Err(Error::Config { .. })));
}

#[test]
fn numbers_keep_seventeen_significant_digits() {
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
        let s = fmt_num(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }
}

#[test]
fn run_writes_result_and_summary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("[run]\nexperiments = stueckelberg\n", &[]).unwrap();
    let opt = RunOptions { out: dir.path().to_path_buf(), workers: 1, seed: None };
    let s = run(&cfg, &opt).unwrap();
    assert_eq!(s.exit_code(), 0);
    let mut r = csv::Reader::from_path(dir.path().join("stueckelberg.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, RESULT_HEADER);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), s.results[0].rows.len());
    assert!(rows.iter().all(|x| &x[7] == "true"));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().ends_with(CSV_SCHEMA));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = write(d, "ok.cfg", "[run]\nexperiments = stueckelberg\n");
    let failing = write(d, "fail.cfg", "[run]\nexperiments = branch_orthogonality\n[branch_orthogonality]\nn_t = 64\n");
    let broken = write(d, "broken.cfg", "[run]\nexperiments = stueckelberg\n[stueckelberg]\nbogus = 1\n");
    let status = |args: &[&str]| histlat().args(args).current_dir(d).status().unwrap().code();
    let out = d.join("out");
    let out = out.to_str().unwrap();
    assert_eq!(status(&["--out", out, "run", ok.to_str().unwrap()]), Some(0));
    assert_eq!(status(&["--out", out, "run", failing.to_str().unwrap()]), Some(1));
    assert_eq!(status(&["--out", out, "run", broken.to_str().unwrap()]), Some(2));
    assert_eq!(status(&["--out", out, "run", "missing.cfg"]), Some(2));
    assert_eq!(status(&["run"]), Some(2));
    assert_eq!(status(&["--list"]), Some(0));
    let err = histlat().args(["--out", out, "run", broken.to_str().unwrap()]).output().unwrap();
    assert!(String::from_utf8_lossy(&err.stderr).contains("line 4"));
    let env = histlat()
        .env("HISTLAT__STUECKELBERG__BOGUS", "1")
        .args(["--out", out, "run", ok.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(env.code(), Some(2));
}

#[test]
fn empty_experiment_list_runs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.cfg", "[run]\nexperiments =\n");
    let out = dir.path().join("out");
    let st = histlat().args(["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn sweep_writes_one_row_per_value_and_a_trend() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", "[run]\nexperiments = stueckelberg\n");
    let out = dir.path().join("out");
    let st = histlat()
        .args(["--out", out.to_str().unwrap(), "sweep", cfg.to_str().unwrap(), "--param", "kx", "--values", "1,2,3"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = fs::read_to_string(out.join("stueckelberg_sweep_kx.csv")).unwrap();
    for v in ["1", "2", "3"] {
        assert!(text.lines().any(|l| l.contains(&format!("kx={v}"))), "{text}");
    }
    assert!(out.join("sweep_summary.csv").exists());
    let bad = histlat()
        .args(["--out", out.to_str().unwrap(), "sweep", cfg.to_str().unwrap(), "--param", "nope", "--values", "1"])
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "q.cfg", "[run]\nexperiments = fock_algebra, random_properties, stueckelberg\nseed = 11\n");
    let go = |out: &str, workers: &str| {
        let st = histlat()
            .args(["--out", d.join(out).to_str().unwrap(), "--workers", workers, "run", cfg.to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    };
    go("a", "1");
    go("b", "2");
    for f in ["fock_algebra.csv", "random_properties.csv", "stueckelberg.csv", "summary.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}
