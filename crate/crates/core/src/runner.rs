//! Config-driven experiment runner.
//!
//! A config is INI text. The `[run]` section lists experiments; every other
//! section is named after a registered experiment and overrides its
//! parameters:
//!
//! ```text
//! [run]
//! experiments = free_norm, convolution
//! seed = 7
//!
//! [free_norm]
//! T = 100
//! ```
//!
//! Any key can be overridden from the environment as
//! `HISTLAT__<SECTION>__<KEY>=value` (matched without regard to case).
//! Results are written as one CSV per experiment plus `summary.csv`.

use crate::experiments::{self, fit_order, Params, Row};
use crate::{Error, Result};
use ini::Ini;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Prefix of environment overrides.
pub const ENV_PREFIX: &str = "HISTLAT__";

/// Version of the CSV layout, written into `summary.csv`.
pub const CSV_SCHEMA: &str = "histlat-csv-1";

pub const RESULT_HEADER: [&str; 8] = ["experiment", "check", "parameters", "relation", "measured", "expected", "tolerance", "pass"];

/// A parsed config: experiments in run order with their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiments: Vec<(String, Params)>,
    pub seed: Option<u64>,
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn env_rest(name: &str) -> Option<&str> {
    let n = ENV_PREFIX.len();
    (name.len() >= n && name.is_char_boundary(n) && name[..n].eq_ignore_ascii_case(ENV_PREFIX)).then(|| &name[n..])
}

/// Parameters with a numeric default only take numbers; `kernel` takes
/// `sinc` or `gaussian`.
fn check_value(key: &str, default: &str, value: &str) -> std::result::Result<(), String> {
    let v = value.trim();
    if key == "kernel" {
        return match v {
            "sinc" | "gaussian" => Ok(()),
            _ => Err(format!("`{key}` = `{v}`: expected sinc or gaussian")),
        };
    }
    if default.parse::<f64>().is_ok() && v.parse::<f64>().is_err() {
        return Err(format!("`{key}` = `{v}` is not a number"));
    }
    Ok(())
}

/// Line numbers (1-based) of section headers and keys, for diagnostics.
/// Lines that are neither blank, a comment, a header nor `key = value`
/// are rejected here so the diagnostic points at them.
fn key_lines(text: &str) -> Result<BTreeMap<(String, String), usize>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with(';') {
            continue;
        }
        if l.starts_with('[') {
            if !l.ends_with(']') {
                return Err(config_err(i + 1, format!("unterminated section header `{l}`")));
            }
            section = l.trim_start_matches('[').trim_end_matches(']').trim().to_string();
            out.entry((section.clone(), String::new())).or_insert(i + 1);
        } else if let Some((k, _)) = l.split_once('=') {
            if k.trim().is_empty() {
                return Err(config_err(i + 1, "empty key"));
            }
            out.entry((section.clone(), k.trim().to_string())).or_insert(i + 1);
        } else {
            return Err(config_err(i + 1, format!("expected `key = value`, found `{l}`")));
        }
    }
    Ok(out)
}

/// Parse config text and apply `overrides` (`(name, value)` pairs as they
/// would appear in the environment; names without the prefix are ignored).
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let lines = key_lines(text)?;
    let ini = Ini::load_from_str(text).map_err(|e| config_err(e.line, e.msg.to_string()))?;
    let line_of = |s: &str, k: &str| lines.get(&(s.to_string(), k.to_string())).copied().unwrap_or(0);

    // section -> key -> (value, line); line 0 marks the environment
    let mut table: BTreeMap<String, Vec<(String, String, usize)>> = BTreeMap::new();
    for (sec, props) in ini.iter() {
        let Some(sec) = sec else {
            if let Some((k, _)) = props.iter().next() {
                return Err(config_err(line_of("", k), format!("key `{k}` outside any section")));
            }
            continue;
        };
        let entry = table.entry(sec.to_string()).or_default();
        for (k, v) in props.iter() {
            if entry.iter().any(|(kk, _, _)| kk == k) {
                return Err(config_err(line_of(sec, k), format!("duplicate key `{k}` in [{sec}]")));
            }
            entry.push((k.to_string(), v.to_string(), line_of(sec, k)));
        }
    }
    for (name, value) in overrides {
        let Some(rest) = env_rest(name) else { continue };
        let (sec, key) = rest.split_once("__").ok_or_else(|| config_err(0, format!("{name}: expected {ENV_PREFIX}<SECTION>__<KEY>")))?;
        let sec = if sec.eq_ignore_ascii_case("run") {
            "run".to_string()
        } else {
            experiments::registry()
                .iter()
                .find(|e| e.name.eq_ignore_ascii_case(sec))
                .map(|e| e.name.to_string())
                .ok_or_else(|| config_err(0, format!("{name}: no experiment `{sec}`")))?
        };
        let entry = table.entry(sec.clone()).or_default();
        let declared: Vec<String> = if sec == "run" {
            vec!["experiments".into(), "seed".into()]
        } else {
            experiments::find(&sec).map(|e| e.params.iter().map(|p| p.key.to_string()).collect()).unwrap_or_default()
        };
        let key = declared.into_iter().find(|k| k.eq_ignore_ascii_case(key)).ok_or_else(|| config_err(0, format!("{name}: [{sec}] has no key `{key}`")))?;
        match entry.iter_mut().find(|(k, _, _)| *k == key) {
            Some(e) => {
                e.1 = value.clone();
                e.2 = 0;
            }
            None => entry.push((key, value.clone(), 0)),
        }
    }

    let run = table.remove("run").unwrap_or_default();
    let mut list: Vec<(String, usize)> = Vec::new();
    let mut seed = None;
    for (k, v, line) in &run {
        match k.as_str() {
            "experiments" => {
                list = v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(|s| (s.to_string(), *line)).collect();
            }
            "seed" => seed = Some(v.trim().parse::<u64>().map_err(|_| config_err(*line, format!("seed `{v}` is not a non-negative integer")))?),
            other => return Err(config_err(*line, format!("unknown key `{other}` in [run]"))),
        }
    }
    let mut sections: BTreeMap<String, Params> = BTreeMap::new();
    for (sec, entries) in &table {
        let exp = experiments::find(sec).ok_or_else(|| config_err(line_of(sec, ""), format!("no experiment named `{sec}`")))?;
        let mut p = exp.defaults();
        for (k, v, line) in entries {
            let spec = exp.params.iter().find(|s| s.key == k).ok_or_else(|| config_err(*line, format!("[{sec}] has no parameter `{k}`")))?;
            check_value(k, spec.default, v).map_err(|m| config_err(*line, format!("[{sec}] {m}")))?;
            p.set(k, v)?;
        }
        sections.insert(sec.clone(), p);
    }
    let mut out = Vec::new();
    for (name, line) in list {
        let exp = experiments::find(&name).ok_or_else(|| config_err(line, format!("no experiment named `{name}`")))?;
        if out.iter().any(|(n, _)| *n == name) {
            return Err(config_err(line, format!("`{name}` listed twice")));
        }
        let p = sections.get(&name).cloned().unwrap_or_else(|| exp.defaults());
        out.push((name, p));
    }
    Ok(RunConfig { experiments: out, seed })
}

/// Read a config file and apply overrides from the process environment.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err(0, format!("{}: {e}", path.display())))?;
    let env: Vec<(String, String)> = std::env::vars().filter(|(k, _)| env_rest(k).is_some()).collect();
    parse_config(&text, &env)
}

/// Where and how to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    /// Overrides the config seed for experiments that declare `seed`.
    pub seed: Option<u64>,
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub params: Params,
    pub rows: Vec<Row>,
    pub error: Option<String>,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.rows.iter().all(|r| r.pass)
    }
}

/// Results of a run, in config order.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub results: Vec<ExperimentResult>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed())
    }

    /// 0 if every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Exit code for a failed run: 2 for config errors, 1 for anything else.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

/// Full-precision scientific notation, 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("{}: {e}", path.display()))
}

/// Write `bytes` to `path` through a temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))
}

fn result_record(name: &str, params: &Params, r: &Row) -> Vec<String> {
    vec![
        name.to_string(),
        r.check.clone(),
        params.describe(),
        r.relation.as_str().to_string(),
        fmt_num(r.measured),
        fmt_num(r.expected),
        fmt_num(r.tolerance),
        r.pass.to_string(),
    ]
}

fn error_record(name: &str, params: &Params, msg: &str) -> Vec<String> {
    let nan = fmt_num(f64::NAN);
    vec![name.into(), format!("error: {msg}"), params.describe(), "within".into(), nan.clone(), nan.clone(), nan, "false".into()]
}

fn run_one(name: &str, params: &Params) -> ExperimentResult {
    let exp = experiments::find(name).expect("names are validated when the config is parsed");
    match (exp.run)(params) {
        Ok(rows) => ExperimentResult { name: name.into(), params: params.clone(), rows, error: None },
        Err(e) => ExperimentResult { name: name.into(), params: params.clone(), rows: Vec::new(), error: Some(e.to_string()) },
    }
}

fn with_seed(cfg: &RunConfig, opt: &RunOptions) -> Vec<(String, Params)> {
    let seed = opt.seed.or(cfg.seed);
    cfg.experiments
        .iter()
        .map(|(n, p)| {
            let mut p = p.clone();
            if let (Some(s), true) = (seed, p.contains("seed")) {
                p.set("seed", &s.to_string()).expect("declared key");
            }
            (n.clone(), p)
        })
        .collect()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| Error::Invalid(format!("thread pool: {e}")))
}

/// Run every experiment of `cfg` and write `<name>.csv` and `summary.csv`
/// into `opt.out`.
pub fn run(cfg: &RunConfig, opt: &RunOptions) -> Result<Summary> {
    fs::create_dir_all(&opt.out).map_err(|e| io_err(&opt.out, e))?;
    let jobs = with_seed(cfg, opt);
    let results: Vec<ExperimentResult> = pool(opt.workers)?.install(|| {
        jobs.par_iter()
            .map(|(name, params)| {
                let res = run_one(name, params);
                let records: Vec<Vec<String>> = match &res.error {
                    Some(msg) => vec![error_record(name, params, msg)],
                    None => res.rows.iter().map(|r| result_record(name, params, r)).collect(),
                };
                let bytes = csv_bytes(&RESULT_HEADER, &records)?;
                write_atomic(&opt.out.join(format!("{name}.csv")), &bytes)?;
                Ok(res)
            })
            .collect::<Result<_>>()
    })?;
    // join barrier passed: assemble the summary
    let summary = Summary { results };
    let records: Vec<Vec<String>> = summary
        .results
        .iter()
        .map(|r| {
            let passed = r.rows.iter().filter(|x| x.pass).count();
            let status = if r.error.is_some() {
                "error"
            } else if r.passed() {
                "pass"
            } else {
                "fail"
            };
            vec![r.name.clone(), r.rows.len().to_string(), passed.to_string(), status.to_string(), r.error.clone().unwrap_or_default(), CSV_SCHEMA.to_string()]
        })
        .collect();
    let bytes = csv_bytes(&["experiment", "checks", "passed", "status", "message", "schema"], &records)?;
    write_atomic(&opt.out.join("summary.csv"), &bytes)?;
    Ok(summary)
}

/// Per-check trend across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrend {
    pub experiment: String,
    pub check: String,
    /// Log-log slope of `measured` against the swept value (NaN if undefined).
    pub order: f64,
    /// `decreasing`, `increasing` or `none`.
    pub monotone: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub param: String,
    pub values: Vec<f64>,
    /// One result per (experiment, value), experiment-major.
    pub results: Vec<(f64, ExperimentResult)>,
    pub trends: Vec<SweepTrend>,
}

impl SweepSummary {
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().all(|(_, r)| r.passed()) {
            0
        } else {
            1
        }
    }
}

fn monotone(v: &[f64]) -> &'static str {
    if v.len() < 2 {
        "none"
    } else if v.windows(2).all(|w| w[1] < w[0]) {
        "decreasing"
    } else if v.windows(2).all(|w| w[1] > w[0]) {
        "increasing"
    } else {
        "none"
    }
}

/// Run each experiment of `cfg` that declares `param` once per value and
/// write `<name>_sweep_<param>.csv` and `sweep_summary.csv`.
pub fn sweep(cfg: &RunConfig, param: &str, values: &[String], opt: &RunOptions) -> Result<SweepSummary> {
    let nums: Vec<f64> = values
        .iter()
        .map(|v| v.trim().parse::<f64>().map_err(|_| config_err(0, format!("sweep value `{v}` is not a number"))))
        .collect::<Result<_>>()?;
    if nums.is_empty() {
        return Err(config_err(0, "sweep needs at least one value"));
    }
    let jobs: Vec<(String, Params)> = with_seed(cfg, opt).into_iter().filter(|(_, p)| p.contains(param)).collect();
    if jobs.is_empty() {
        return Err(config_err(0, format!("no listed experiment declares `{param}`")));
    }
    let mut grid = Vec::new();
    for (name, p) in &jobs {
        for (raw, &v) in values.iter().zip(&nums) {
            let mut q = p.clone();
            q.set(param, raw.trim())?;
            grid.push((name.clone(), v, q));
        }
    }
    fs::create_dir_all(&opt.out).map_err(|e| io_err(&opt.out, e))?;
    let results: Vec<(f64, ExperimentResult)> = pool(opt.workers)?.install(|| grid.par_iter().map(|(n, v, q)| (*v, run_one(n, q))).collect());
    let mut trends = Vec::new();
    for (name, _) in &jobs {
        let mine: Vec<&(f64, ExperimentResult)> = results.iter().filter(|(_, r)| r.name == *name).collect();
        let checks: Vec<String> = mine.iter().flat_map(|(_, r)| r.rows.iter().map(|x| x.check.clone())).fold(Vec::new(), |mut acc, c| {
            if !acc.contains(&c) {
                acc.push(c);
            }
            acc
        });
        let mut records = Vec::new();
        let mut local = Vec::new();
        for c in &checks {
            let (xs, ys): (Vec<f64>, Vec<f64>) = mine.iter().filter_map(|(v, r)| r.rows.iter().find(|x| x.check == *c).map(|x| (*v, x.measured))).unzip();
            let order = if ys.iter().all(|y| *y > 0.0) && ys.len() == nums.len() { fit_order(&xs, &ys) } else { f64::NAN };
            local.push(SweepTrend { experiment: name.clone(), check: c.clone(), order, monotone: monotone(&ys) });
        }
        for (v, r) in &mine {
            if let Some(msg) = &r.error {
                let mut rec = error_record(name, &r.params, msg);
                rec.extend([param.to_string(), fmt_num(*v), fmt_num(f64::NAN), "none".to_string()]);
                records.push(rec);
            }
            for row in &r.rows {
                let t = local.iter().find(|t| t.check == row.check).expect("trend per check");
                let mut rec = result_record(name, &r.params, row);
                rec.extend([param.to_string(), fmt_num(*v), fmt_num(t.order), t.monotone.to_string()]);
                records.push(rec);
            }
        }
        let mut header = RESULT_HEADER.to_vec();
        header.extend(["param", "value", "order", "monotone"]);
        write_atomic(&opt.out.join(format!("{name}_sweep_{param}.csv")), &csv_bytes(&header, &records)?)?;
        trends.extend(local);
    }
    let records: Vec<Vec<String>> = trends.iter().map(|t| vec![t.experiment.clone(), t.check.clone(), param.to_string(), fmt_num(t.order), t.monotone.to_string()]).collect();
    write_atomic(&opt.out.join("sweep_summary.csv"), &csv_bytes(&["experiment", "check", "param", "order", "monotone"], &records)?)?;
    Ok(SweepSummary { param: param.to_string(), values: nums, results, trends })
}

/// Text of the `--list` output: each experiment, its operation chain and
/// its parameters with defaults.
pub fn list_text() -> String {
    let mut s = String::new();
    for e in experiments::registry() {
        s.push_str(&format!("{}\n  chain: {}\n", e.name, e.chain));
        for p in e.params {
            s.push_str(&format!("  {:<12} = {:<10} {}\n", p.key, p.default, p.doc));
        }
    }
    s
}
