// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: `list`, `verify` and `report`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{self, BoxOverrides, Family, Instance, Params, CHECK_GROUPS};
use crate::error::{Error, Result};
use crate::soliton::{Check, VerificationReport, SCHEMA_VERSION};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "soliton-check", version, about = "Verify gradient Ricci soliton families on pseudo-Riemannian metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the metric families and their parameters.
    List {
        #[arg(long)]
        json: bool,
        /// Show one family's parameter schema.
        #[arg(long)]
        family: Option<String>,
    },
    /// Build a family instance and run its checks.
    Verify(RunConfig),
    /// Merge verification reports into a pass matrix.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunConfig {
    pub family: String,
    /// Family parameters `k=v,...`; may be repeated.
    #[arg(long = "param", value_name = "K=V,...")]
    pub params: Vec<String>,
    /// File of `k=v` lines (`#` starts a comment).
    #[arg(long, value_name = "PATH")]
    pub params_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance overrides `check=eps,...`, by check name or group.
    #[arg(long = "tol", value_name = "NAME=EPS,...")]
    pub tol: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Check names or groups to run, comma separated; default all.
    #[arg(long, value_delimiter = ',')]
    pub checks: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Soliton constant; sets the family's `lambda` parameter if it has one.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Sampling interval `coord=lo:hi`; may be repeated.
    #[arg(long = "box", value_name = "COORD=LO:HI", allow_hyphen_values = true)]
    pub boxes: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::List { json, family } => cmd_list(json, family.as_deref(), out).map(|_| EXIT_PASS),
        Command::Verify(cfg) => cmd_verify(&cfg, out).map(|rep| if rep.passed { EXIT_PASS } else { EXIT_FAIL }),
        Command::Report { paths, format, out: path } => cmd_report(&paths, format, path.as_deref(), out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

pub fn cmd_list(json: bool, family: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let selected: Vec<&Family> = match family {
        Some(id) => vec![catalog::family(id)?],
        None => catalog::families().iter().collect(),
    };
    if json {
        let schemas: Vec<_> = selected.iter().map(|f| f.schema()).collect();
        let v = if family.is_some() {
            serde_json::to_value(&schemas[0])?
        } else {
            serde_json::to_value(&schemas)?
        };
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        return Ok(());
    }
    for f in selected {
        writeln!(out, "{:<24} {}", f.id, f.summary)?;
        writeln!(out, "{:<24} from: {}", "", f.origin)?;
        if family.is_some() {
            for p in f.params {
                writeln!(out, "{:<24} {}  ({})", "", p.signature(), p.doc)?;
            }
        } else {
            writeln!(out, "{:<24} params: {}", "", f.signature())?;
        }
    }
    Ok(())
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_boxes(specs: &[String]) -> Result<BoxOverrides> {
    let mut out = BoxOverrides::new();
    for spec in specs {
        let bad = || config(format!("--box expects coord=lo:hi, got '{spec}'"));
        let (name, range) = spec.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if out.insert(name.trim().to_string(), (lo, hi)).is_some() {
            return Err(config(format!("--box for '{name}' given twice")));
        }
    }
    Ok(out)
}

fn read_params_file(path: &Path, into: &mut Params) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            into.extend_from(line)?;
        }
    }
    Ok(())
}

fn parse_tolerances(specs: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in specs.iter().flat_map(|s| s.split(',')) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let bad = || config(format!("--tol expects name=eps, got '{item}'"));
        let (name, eps) = item.split_once('=').ok_or_else(bad)?;
        let eps: f64 = eps.trim().parse().map_err(|_| bad())?;
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(bad());
        }
        out.insert(name.trim().to_string(), eps);
    }
    Ok(out)
}

fn matches(check: &Check, selector: &str) -> bool {
    check.name == selector || check.group() == selector
}

/// Applies `--checks` and `--tol` to the instance's checks.
fn select_checks(all: Vec<Check>, selectors: &[String], tol: &BTreeMap<String, f64>) -> Result<Vec<Check>> {
    let known = |s: &str| CHECK_GROUPS.contains(&s) || all.iter().any(|c| matches(c, s));
    for s in selectors.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if !known(s) {
            return Err(config(format!(
                "unknown check '{s}'; groups are {}",
                CHECK_GROUPS.join(", ")
            )));
        }
    }
    for name in tol.keys() {
        if !all.iter().any(|c| matches(c, name)) {
            return Err(config(format!("--tol names no check of this instance: '{name}'")));
        }
    }
    let wanted: Vec<&str> = selectors.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    let mut out: Vec<Check> = all
        .into_iter()
        .filter(|c| wanted.is_empty() || wanted.iter().any(|s| matches(c, s)))
        .collect();
    if out.is_empty() {
        return Err(config("no checks selected for this instance"));
    }
    for c in &mut out {
        // An exact name beats its group.
        if let Some(eps) = tol.get(&c.name).or_else(|| tol.get(c.group())) {
            c.tolerance = *eps;
        }
    }
    Ok(out)
}

/// Builds the configured instance.
pub fn build_instance(cfg: &RunConfig) -> Result<Instance> {
    let family = catalog::family(&cfg.family)?;
    let mut params = Params::new();
    if let Some(path) = &cfg.params_file {
        read_params_file(path, &mut params)?;
    }
    for p in &cfg.params {
        params.extend_from(p)?;
    }
    let has_lambda = family.params.iter().any(|p| p.name == "lambda");
    if let (Some(l), true) = (cfg.lambda, has_lambda) {
        if params.get("lambda").is_some() {
            return Err(config("lambda given both as --lambda and as a parameter"));
        }
        params = params.set("lambda", &format!("{l}"));
    }
    let inst = family.build_with_boxes(&params, &parse_boxes(&cfg.boxes)?)?;
    match cfg.lambda {
        Some(l) if !has_lambda => inst.with_lambda(l),
        _ => Ok(inst),
    }
}

/// Runs the configured verification and writes the report.
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<VerificationReport> {
    if cfg.points == 0 {
        return Err(config("--points must be positive"));
    }
    let tol = parse_tolerances(&cfg.tol)?;
    let inst = build_instance(cfg)?;
    let checks = select_checks(inst.checks()?, &cfg.checks, &tol)?;
    let report = inst.run(&checks, cfg.points, cfg.seed);
    let text = match cfg.format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => report.to_csv()?,
        Format::Text => report.to_text(),
    };
    emit(&text, cfg.out.as_deref(), out)?;
    Ok(report)
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct MergedEntry {
    pub path: String,
    pub family: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub passed: bool,
    /// Check name to pass flag.
    pub checks: BTreeMap<String, bool>,
}

#[derive(Debug, Serialize)]
pub struct MergedReport {
    pub schema_version: u32,
    pub reports: Vec<MergedEntry>,
    /// Family to check group to "all runs passed".
    pub matrix: BTreeMap<String, BTreeMap<String, bool>>,
    pub passed: bool,
}

/// Reads reports; every unreadable file is listed before failing.
pub fn merge_reports(paths: &[PathBuf]) -> std::result::Result<MergedReport, Vec<String>> {
    let mut errors = Vec::new();
    let mut reports = Vec::new();
    for p in paths {
        let parsed = std::fs::read_to_string(p)
            .map_err(Error::from)
            .and_then(|s| VerificationReport::from_json(&s));
        match parsed {
            Ok(r) => reports.push((p.display().to_string(), r)),
            Err(e) => errors.push(format!("{}: {e}", p.display())),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let mut matrix: BTreeMap<String, BTreeMap<String, bool>> = BTreeMap::new();
    let mut entries = Vec::new();
    for (path, r) in reports {
        let row = matrix.entry(r.family.clone()).or_default();
        for c in &r.checks {
            let group = c.name.split('.').next().unwrap_or(&c.name).to_string();
            let cell = row.entry(group).or_insert(true);
            *cell &= c.passed;
        }
        entries.push(MergedEntry {
            path,
            family: r.family,
            parameters: r.parameters,
            seed: r.seed,
            passed: r.passed,
            checks: r.checks.iter().map(|c| (c.name.clone(), c.passed)).collect(),
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(MergedReport {
        schema_version: SCHEMA_VERSION,
        reports: entries,
        matrix,
        passed,
    })
}

impl MergedReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "family", "check", "passed"])?;
        for e in &self.reports {
            for (name, ok) in &e.checks {
                w.write_record([e.path.as_str(), e.family.as_str(), name.as_str(), &ok.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.reports {
            let mark = if e.passed { "PASS" } else { "FAIL" };
            s += &format!("{mark} {} ({})\n", e.family, e.path);
            for (name, ok) in e.checks.iter().filter(|(_, ok)| !**ok) {
                s += &format!("     failed {name} = {ok}\n");
            }
        }
        s += "\npass matrix\n";
        for (family, row) in &self.matrix {
            let cells: Vec<String> = row
                .iter()
                .map(|(g, ok)| format!("{g}:{}", if *ok { "pass" } else { "FAIL" }))
                .collect();
            s += &format!("{family:<24} {}\n", cells.join(" "));
        }
        s += if self.passed { "all reports passed\n" } else { "some reports failed\n" };
        s
    }
}

pub fn cmd_report(paths: &[PathBuf], format: Format, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let merged = match merge_reports(paths) {
        Ok(m) => m,
        Err(errors) => {
            for e in errors {
                writeln!(err, "error: {e}")?;
            }
            return Ok(EXIT_CONFIG);
        }
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&merged)? + "\n",
        Format::Csv => merged.to_csv()?,
        Format::Text => merged.to_text(),
    };
    emit(&text, path, out)?;
    Ok(if merged.passed { EXIT_PASS } else { EXIT_FAIL })
}
