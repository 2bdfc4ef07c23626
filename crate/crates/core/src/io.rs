//! Experiment configuration (`key=value` lines, `#` comments) and
//! deterministic CSV output.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`; lines end in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::conductivity::{ElectrodeConfig, CONTRAST_GUARD};
use crate::engine::{ExponentFit, InstabilityProblem, InstabilityReport, ProblemKind};
use crate::packing::PerturbationClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' has no value")]
    MissingValue { line: usize, key: String },
    #[error("line {line}: cannot parse {key}: {message}")]
    Parse { line: usize, key: String, message: String },
    #[error("line {line}: {key} out of range: {message}")]
    Range { line: usize, key: String, message: String },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
}

impl ConfigError {
    pub fn line(&self) -> usize {
        match self {
            ConfigError::Syntax { line }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::MissingValue { line, .. }
            | ConfigError::Parse { line, .. }
            | ConfigError::Range { line, .. }
            | ConfigError::Duplicate { line, .. } => *line,
        }
    }
}

/// Every setting of an experiment. `radius` and `cap` fall back to the
/// problem's default class when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub m: u32,
    pub beta: f64,
    pub eps_list: Vec<f64>,
    pub radius: Option<f64>,
    pub cap: Option<f64>,
    /// Inclusion conductivity.
    pub a: f64,
    /// Wave parameters of the far-field problem.
    pub a_list: Vec<f64>,
    pub electrodes: usize,
    pub electrode_coverage: f64,
    pub impedance: f64,
    pub n_max: u32,
    pub grid_size: usize,
    pub nodes: usize,
    pub budget: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Dtn,
            m: 1,
            beta: 1.0,
            eps_list: vec![0.12, 0.08, 0.05, 0.03],
            radius: None,
            cap: None,
            a: 2.0,
            a_list: vec![1.0, 4.0],
            electrodes: 8,
            electrode_coverage: 0.5,
            impedance: 0.1,
            n_max: 32,
            grid_size: 2048,
            nodes: 256,
            budget: 200,
            seed: 0,
            out: PathBuf::from("out"),
            threads: 0,
        }
    }
}

const KEYS: [&str; 18] = [
    "problem",
    "m",
    "beta",
    "eps_list",
    "radius",
    "cap",
    "a",
    "a_list",
    "electrodes",
    "electrode_coverage",
    "impedance",
    "n_max",
    "grid_size",
    "nodes",
    "budget",
    "seed",
    "out",
    "threads",
];

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::Parse { line, key: key.into(), message: e.to_string() })
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| parse_num::<f64>(line, key, s.trim())).collect()
}

fn range(line: usize, key: &str, ok: bool, message: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Range { line, key: key.into(), message: message.into() })
    }
}

/// Parses and validates a configuration; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.into() });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Duplicate { line, key: key.into() });
        }
        if value.is_empty() {
            return Err(ConfigError::MissingValue { line, key: key.into() });
        }
        match key {
            "problem" => {
                cfg.problem = value
                    .parse()
                    .map_err(|_| ConfigError::Parse { line, key: key.into(), message: format!("unknown problem '{value}'") })?
            }
            "m" => {
                cfg.m = parse_num(line, key, value)?;
                range(line, key, (1..=6).contains(&cfg.m), "must lie in 1..=6")?;
            }
            "beta" => {
                cfg.beta = parse_num(line, key, value)?;
                range(line, key, cfg.beta > 0.0 && cfg.beta.is_finite(), "must be positive")?;
            }
            "eps_list" => {
                cfg.eps_list = parse_list(line, key, value)?;
                range(line, key, cfg.eps_list.iter().all(|e| *e > 0.0 && *e < 1.0), "entries must lie in (0, 1)")?;
            }
            "radius" => {
                let r: f64 = parse_num(line, key, value)?;
                range(line, key, r > 0.0 && r <= 1.5, "must lie in (0, 1.5]")?;
                cfg.radius = Some(r);
            }
            "cap" => {
                let c: f64 = parse_num(line, key, value)?;
                range(line, key, c > 0.0 && c.is_finite(), "must be positive")?;
                cfg.cap = Some(c);
            }
            "a" => {
                cfg.a = parse_num(line, key, value)?;
                range(
                    line,
                    key,
                    cfg.a > 0.0 && cfg.a.is_finite() && (cfg.a == 1.0 || (cfg.a - 1.0).abs() >= CONTRAST_GUARD),
                    "must be positive with |a - 1| >= 1e-6",
                )?;
            }
            "a_list" => {
                cfg.a_list = parse_list(line, key, value)?;
                range(line, key, cfg.a_list.iter().all(|a| *a > 0.0 && a.is_finite()), "entries must be positive")?;
            }
            "electrodes" => {
                cfg.electrodes = parse_num(line, key, value)?;
                range(line, key, (2..=64).contains(&cfg.electrodes), "must lie in 2..=64")?;
            }
            "electrode_coverage" => {
                cfg.electrode_coverage = parse_num(line, key, value)?;
                range(line, key, cfg.electrode_coverage > 0.0 && cfg.electrode_coverage < 1.0, "must lie in (0, 1)")?;
            }
            "impedance" => {
                cfg.impedance = parse_num(line, key, value)?;
                range(line, key, cfg.impedance > 0.0 && cfg.impedance.is_finite(), "must be positive")?;
            }
            "n_max" => {
                cfg.n_max = parse_num(line, key, value)?;
                range(line, key, (1..=128).contains(&cfg.n_max), "must lie in 1..=128")?;
            }
            "grid_size" => {
                cfg.grid_size = parse_num(line, key, value)?;
                range(line, key, (16..=1 << 20).contains(&cfg.grid_size), "must lie in 16..=1048576")?;
            }
            "nodes" => {
                cfg.nodes = parse_num(line, key, value)?;
                range(line, key, cfg.nodes >= 16 && cfg.nodes % 2 == 0 && cfg.nodes <= 4096, "must be even in 16..=4096")?;
            }
            "budget" => {
                cfg.budget = parse_num(line, key, value)?;
                range(line, key, cfg.budget >= 2, "must be at least 2")?;
            }
            "seed" => cfg.seed = parse_num(line, key, value)?,
            "out" => cfg.out = PathBuf::from(value),
            "threads" => cfg.threads = parse_num(line, key, value)?,
            _ => unreachable!("key list checked above"),
        }
    }
    Ok(cfg)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// The effective configuration in the input format; parsing it back
    /// gives the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem={}", self.problem);
        let _ = writeln!(s, "m={}", self.m);
        let _ = writeln!(s, "beta={}", self.beta);
        let _ = writeln!(s, "eps_list={}", join(&self.eps_list));
        if let Some(r) = self.radius {
            let _ = writeln!(s, "radius={r}");
        }
        if let Some(c) = self.cap {
            let _ = writeln!(s, "cap={c}");
        }
        let _ = writeln!(s, "a={}", self.a);
        let _ = writeln!(s, "a_list={}", join(&self.a_list));
        let _ = writeln!(s, "electrodes={}", self.electrodes);
        let _ = writeln!(s, "electrode_coverage={}", self.electrode_coverage);
        let _ = writeln!(s, "impedance={}", self.impedance);
        let _ = writeln!(s, "n_max={}", self.n_max);
        let _ = writeln!(s, "grid_size={}", self.grid_size);
        let _ = writeln!(s, "nodes={}", self.nodes);
        let _ = writeln!(s, "budget={}", self.budget);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(s, "threads={}", self.threads);
        s
    }

    /// The shape class implied by the problem and the class keys.
    pub fn class(&self) -> PerturbationClass {
        let base = InstabilityProblem::default_for(self.problem, self.m).class;
        let mut class = PerturbationClass::new(base.kind, self.radius.unwrap_or(base.r), self.m, self.beta)
            .with_grid_size(self.grid_size);
        if let Some(cap) = self.cap.or(base.amplitude_cap) {
            class = class.with_amplitude_cap(cap);
        }
        class
    }

    pub fn electrode_config(&self) -> Result<ElectrodeConfig, crate::conductivity::ConductivityError> {
        ElectrodeConfig::equally_spaced(self.electrodes, self.electrode_coverage, self.impedance)
    }

    pub fn instability_problem(&self) -> Result<InstabilityProblem, crate::conductivity::ConductivityError> {
        Ok(InstabilityProblem {
            kind: self.problem,
            class: self.class(),
            n_max: self.n_max,
            contrast: self.a,
            wave_params: self.a_list.clone(),
            electrodes: self.electrode_config()?,
            nodes: self.nodes,
        })
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    /// Appends one row; panics if the field count differs from the header.
    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width must match the header");
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &self.text)
    }
}

pub const REPORT_HEADER: [&str; 17] = [
    "eps",
    "pattern_a",
    "pattern_b",
    "hausdorff",
    "resolution_error",
    "norm",
    "floored",
    "neg_log_delta",
    "cell_count",
    "patterns",
    "packing_log_count",
    "c2",
    "alpha2",
    "net_log_bound",
    "counting_margin",
    "counting_holds",
    "label",
];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "nan".into())
}

/// One row per ε of an instability report.
pub fn report_csv(report: &InstabilityReport) -> Csv {
    let mut csv = Csv::new(&REPORT_HEADER);
    for r in &report.records {
        csv.row(&[
            fmt_f64(r.eps),
            r.first.id(),
            r.second.id(),
            fmt_f64(r.hausdorff),
            fmt_f64(r.resolution_error),
            fmt_f64(r.norm),
            r.floored.to_string(),
            fmt_f64(r.neg_log_delta),
            r.cell_count.to_string(),
            r.patterns.to_string(),
            fmt_f64(r.packing_log_count),
            opt(r.constants.map(|c| c.c2)),
            opt(r.constants.map(|c| c.alpha2)),
            opt(r.net_log_bound),
            opt(r.counting.map(|c| c.margin)),
            r.counting.map(|c| c.holds.to_string()).unwrap_or_else(|| "nan".into()),
            report.label.replace(' ', "_"),
        ]);
    }
    csv
}

/// `(log(1/ε), log(-log ‖ΔF‖))` pairs.
pub fn plot_csv(report: &InstabilityReport) -> Csv {
    let mut csv = Csv::new(&["log_inv_eps", "log_neg_log_norm"]);
    for r in &report.records {
        let y = if r.norm < 1.0 { (-r.norm.ln()).ln() } else { f64::NAN };
        csv.row(&[fmt_f64((1.0 / r.eps).ln()), fmt_f64(y)]);
    }
    csv
}

/// Key/value summary of a report and its exponent fit.
pub fn summary_csv(report: &InstabilityReport, fit: Option<&ExponentFit>) -> Csv {
    let mut csv = Csv::new(&["key", "value"]);
    let mut kv = |k: &str, v: String| csv.row(&[k.to_string(), v]);
    kv("problem", report.kind.to_string());
    kv("m", report.m.to_string());
    kv("seed", report.seed.to_string());
    kv("budget", report.budget.to_string());
    kv("search", report.label.replace(' ', "_"));
    kv("theoretical_exponent", fmt_f64(report.theoretical_exponent));
    kv("eps_one", opt(report.eps_one));
    if let Some(f) = fit {
        kv("q_hat", fmt_f64(f.q));
        kv("intercept", fmt_f64(f.intercept));
        kv("r_squared", fmt_f64(f.r_squared));
        kv("polynomial_r_squared", fmt_f64(f.polynomial_r_squared));
        kv("non_exponential", f.non_exponential.to_string());
        kv("floored", f.floored.to_string());
    }
    csv
}

pub fn real_matrix_csv(m: &DMatrix<f64>) -> Csv {
    let mut csv = Csv::new(&["row", "col", "value"]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            csv.row(&[i.to_string(), j.to_string(), fmt_f64(m[(i, j)])]);
        }
    }
    csv
}

pub fn complex_matrix_csv(m: &DMatrix<Complex64>) -> Csv {
    let mut csv = Csv::new(&["row", "col", "re", "im", "abs"]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            csv.row(&[i.to_string(), j.to_string(), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm())]);
        }
    }
    csv
}

/// Parses the rows of a CSV produced here (header skipped).
pub fn read_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}
