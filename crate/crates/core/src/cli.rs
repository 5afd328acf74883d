//! The `simulate`, `analyze` and `report` commands behind the `pearl` binary.
//!
//! Exit codes: 0 success, 2 bad usage, config or input data, 3 I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::Period;
use crate::domain::Arm;
use crate::io::{
    read_decisions, read_feedback, read_steps, write_log, IoError, RunManifest, RunStatus, DECISIONS_FILE,
    FEEDBACK_FILE, MANIFEST_FILE, SCHEMA_VERSION, STEPS_FILE,
};
use crate::sim::{run_trial, TrialConfig};
use crate::stats::{
    daily_means, gee_fit, summarize_periods, table4, table6_design, DailyMean, GeeOptions, GeeResult, PeriodSummary,
    RegressionResult, StatsError, StepPanel,
};

pub const RESULTS_FILE: &str = "results.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Loads a config file, or the defaults when `path` is `None`, and applies
/// the seed precedence: command line, then config file, then 0.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrialConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            TrialConfig::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => TrialConfig::default(),
    };
    config.seed = Some(seed.or(config.seed).unwrap_or(0));
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

/// Runs a trial and writes `steps.csv`, `decisions.csv`, `feedback.csv` and
/// `manifest.json` into `out`. The manifest is written first with status
/// `running` and rewritten once the CSVs are complete.
pub fn cmd_simulate(config: &TrialConfig, out: &Path, quiet: bool) -> Result<RunManifest, CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let manifest_path = out.join(MANIFEST_FILE);
    let mut manifest = RunManifest::start(config);
    manifest.write(&manifest_path)?;

    let result = run_trial(config)
        .map_err(|e| CliError::Config(e.to_string()))
        .and_then(|log| Ok((write_log(out, &log)?, log)));
    let (files, log) = match result {
        Ok(v) => v,
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.finished_at = Some(crate::io::unix_now());
            // The original error matters more than a failed status update.
            let _ = manifest.write(&manifest_path);
            return Err(e);
        }
    };
    manifest.files = files;
    manifest.status = RunStatus::Complete;
    manifest.finished_at = Some(crate::io::unix_now());
    manifest.write(&manifest_path)?;
    if !quiet {
        eprintln!(
            "simulated {} participants x {} days (seed {}): {} decisions, {} withdrawals -> {}",
            log.participants.len(),
            config.study_days,
            config.seed(),
            log.decisions.len(),
            log.withdrawals.len(),
            out.display()
        );
    }
    Ok(manifest)
}

/// Everything `analyze` computes, as stored in `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResults {
    pub schema_version: String,
    pub study_days: i32,
    /// Arms the run was configured with, including any left without data.
    pub arms: Vec<Arm>,
    pub table3: PeriodSummary,
    pub table4: Vec<RegressionResult>,
    pub table6: GeeResult,
    pub daily_means: Vec<DailyMean>,
}

/// In-process analysis of a step panel.
pub fn analyze_panel(panel: &StepPanel, study_days: i32, arms: Vec<Arm>) -> Result<AnalysisResults, StatsError> {
    let table4 = table4(panel)?;
    let table6 = gee_fit(&table6_design(panel)?, &GeeOptions::default())?;
    Ok(AnalysisResults {
        schema_version: SCHEMA_VERSION.to_string(),
        study_days,
        arms,
        table3: summarize_periods(panel),
        table4,
        table6,
        daily_means: daily_means(panel, study_days),
    })
}

fn table3_csv(s: &PeriodSummary) -> String {
    let mut out = String::from("arm,period,mean_steps,sd,n\n");
    for c in &s.cells {
        let _ = writeln!(out, "{},{},{},{},{}", c.arm, c.period.name(), c.mean, c.sd, c.n);
    }
    out
}

fn table4_csv(rows: &[RegressionResult]) -> String {
    let mut out = String::from("comparison,period,b,se,p,adjusted_p,n_treated,n_reference\n");
    for r in rows {
        let adj = r.adjusted_p.map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.label,
            r.period.name(),
            r.b,
            r.se,
            r.p,
            adj,
            r.n_treated,
            r.n_reference
        );
    }
    out
}

fn table6_csv(g: &GeeResult) -> String {
    let mut out = String::from("covariate,estimate,se,ci_low,ci_high,p\n");
    for k in 0..g.names.len() {
        let _ = writeln!(out, "{},{},{},{},{},{}", g.names[k], g.estimates[k], g.se[k], g.ci_low[k], g.ci_high[k], g.p[k]);
    }
    out
}

/// Reads a log directory and writes `table3.csv`, `table4.csv`,
/// `table6.csv` and `results.json` into `out`.
pub fn cmd_analyze(log_dir: &Path, out: &Path, quiet: bool) -> Result<AnalysisResults, CliError> {
    for f in [STEPS_FILE, DECISIONS_FILE, FEEDBACK_FILE] {
        if !log_dir.join(f).is_file() {
            return Err(CliError::Input(format!("{} is missing", log_dir.join(f).display())));
        }
    }
    let steps = read_steps(&log_dir.join(STEPS_FILE))?;
    // Decisions and feedback are validated even though the tables only use steps.
    read_decisions(&log_dir.join(DECISIONS_FILE))?;
    read_feedback(&log_dir.join(FEEDBACK_FILE))?;
    let panel = StepPanel::from_records(steps);

    let manifest_path = log_dir.join(MANIFEST_FILE);
    let (study_days, arms) = if manifest_path.is_file() {
        let m = RunManifest::read(&manifest_path)?;
        (m.config.study_days as i32, m.config.arms)
    } else {
        (panel.max_day().max(0), panel.arms())
    };
    let results = analyze_panel(&panel, study_days, arms)?;

    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_file(&out.join("table3.csv"), &table3_csv(&results.table3))?;
    write_file(&out.join("table4.csv"), &table4_csv(&results.table4))?;
    write_file(&out.join("table6.csv"), &table6_csv(&results.table6))?;
    let json = serde_json::to_string_pretty(&results).expect("results serialize");
    write_file(&out.join(RESULTS_FILE), &(json + "\n"))?;
    if !quiet {
        eprintln!("analyzed {} participants -> {}", panel.participants.len(), out.display());
    }
    Ok(results)
}

/// Renders the plain-text summary and collects warnings for configured arms
/// that have no daily data.
pub fn render_report(r: &AnalysisResults) -> (String, Vec<String>) {
    let mut warnings = Vec::new();
    let mut s = String::new();
    let _ = writeln!(s, "Step counts by arm and period (mean of per-participant means)");
    for arm in &r.arms {
        if !r.daily_means.iter().any(|d| d.arm == *arm) {
            warnings.push(format!("warning: arm {arm} has no step data; omitted"));
            continue;
        }
        for period in Period::ALL {
            if let Some(c) = r.table3.cell(*arm, period) {
                let _ = writeln!(s, "  {:<8} {:<9} {:>8.1} (SD {:.1}, n = {})", arm.to_string(), period.name(), c.mean, c.sd, c.n);
            }
        }
    }
    let _ = writeln!(s, "\nDifference in differences (change from baseline)");
    for t in &r.table4 {
        let adj = t.adjusted_p.map(|a| format!(", adjusted p = {a:.3}")).unwrap_or_default();
        let _ = writeln!(s, "  {:<18} {:<7} B = {:>7.1} SE = {:>6.1} p = {:.4}{adj}", t.label, t.period.name(), t.b, t.se, t.p);
    }
    let g = &r.table6;
    let _ = writeln!(s, "\nGEE, exchangeable correlation (rho = {:.3}, {} clusters, {} observations)", g.rho, g.n_clusters, g.n_obs);
    for k in 0..g.names.len() {
        let _ = writeln!(
            s,
            "  {:<14} {:>9.2} ({:.2}, {:.2}) p = {:.4}",
            g.names[k], g.estimates[k], g.ci_low[k], g.ci_high[k], g.p[k]
        );
    }
    for w in &warnings {
        let _ = writeln!(s, "{w}");
    }
    (s, warnings)
}

/// Reads `results.json` from `results_dir` and writes `daily_means.csv`
/// (long format: arm, day, mean_steps, n) and `summary.txt` into `out`.
/// Returns the warnings that were also printed.
pub fn cmd_report(results_dir: &Path, out: &Path, quiet: bool) -> Result<Vec<String>, CliError> {
    let path = results_dir.join(RESULTS_FILE);
    if !path.is_file() {
        return Err(CliError::Input(format!("{} is missing", path.display())));
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let results: AnalysisResults =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;

    let mut csv = String::from("arm,day,mean_steps,n\n");
    for d in &results.daily_means {
        let _ = writeln!(csv, "{},{},{},{}", d.arm, d.day, d.mean_steps, d.n);
    }
    let (summary, warnings) = render_report(&results);
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_file(&out.join("daily_means.csv"), &csv)?;
    write_file(&out.join("summary.txt"), &summary)?;
    if !quiet {
        for w in &warnings {
            eprintln!("{w}");
        }
    }
    Ok(warnings)
}

/// `--out` for `report` defaults to the results directory itself.
pub fn report_out_dir(results_dir: &Path, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| results_dir.to_path_buf())
}
