//! Versioned CSV export/import of trial logs and the run manifest.
//!
//! Every CSV starts with a `#schema_version=MAJOR.MINOR` line; readers
//! reject files whose major version they do not know. Floats are written in
//! shortest round-trip form so exported logs re-import bit for bit.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{Action, Arm, DecisionRecord, FeedbackEvent, ParticipantId, Rating, StepRecord};
use crate::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::sim::{TrialConfig, TrialLog};

pub const SCHEMA_VERSION: &str = "1.0";
const SCHEMA_MAJOR: u32 = 1;

pub const STEPS_FILE: &str = "steps.csv";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const FEEDBACK_FILE: &str = "feedback.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const STEPS_HEADER: [&str; 6] = ["participant_id", "arm", "day", "morning_steps", "evening_steps", "total_steps"];
const DECISION_FIXED: [&str; 10] =
    ["participant_id", "arm", "day", "action", "theme", "time", "propensity", "message_id", "reward", "rating"];
pub const FEEDBACK_HEADER: [&str; 5] = ["participant_id", "day", "message_id", "rating", "free_text"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: unsupported schema version {found} (this build reads {SCHEMA_MAJOR}.x)")]
    Schema { path: PathBuf, found: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    fn format(path: &Path, message: impl Into<String>) -> Self {
        IoError::Format { path: path.to_path_buf(), message: message.into() }
    }

    /// True for problems with the file contents rather than the file system.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}

fn rating_name(r: Rating) -> &'static str {
    match r {
        Rating::Up => "up",
        Rating::Down => "down",
        Rating::None => "none",
    }
}

fn parse_rating(s: &str) -> Option<Rating> {
    match s {
        "up" => Some(Rating::Up),
        "down" => Some(Rating::Down),
        "none" => Some(Rating::None),
        _ => None,
    }
}

fn time_name(a: Action) -> &'static str {
    if a.time.is_morning() {
        "morning"
    } else {
        "afternoon"
    }
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>, IoError> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "#schema_version={SCHEMA_VERSION}").map_err(|e| IoError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header).map_err(|e| IoError::format(path, e.to_string()))?;
    Ok(w)
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<(), IoError> {
    let mut inner = w.into_inner().map_err(|e| IoError::format(path, e.to_string()))?;
    inner.flush().map_err(|e| IoError::io(path, e))
}

fn put(path: &Path, w: &mut csv::Writer<BufWriter<File>>, row: &[String]) -> Result<(), IoError> {
    w.write_record(row).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::io(path, io),
        other => IoError::format(path, format!("{other:?}")),
    })
}

/// Checks the schema line and returns a reader positioned on the header.
fn csv_reader(path: &Path, header: &[&str]) -> Result<csv::Reader<BufReader<File>>, IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut buf = BufReader::new(file);
    let mut first = String::new();
    buf.read_line(&mut first).map_err(|e| IoError::io(path, e))?;
    let version = first
        .trim_end()
        .strip_prefix("#schema_version=")
        .ok_or_else(|| IoError::format(path, "missing #schema_version line"))?;
    let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(SCHEMA_MAJOR) {
        return Err(IoError::Schema { path: path.to_path_buf(), found: version.to_string() });
    }
    let mut r = csv::ReaderBuilder::new().from_reader(buf);
    let got = r.headers().map_err(|e| IoError::format(path, e.to_string()))?;
    for name in header {
        if !got.iter().any(|h| h == *name) {
            return Err(IoError::format(path, format!("missing column `{name}`")));
        }
    }
    Ok(r)
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    rec: csv::StringRecord,
    cols: &'a csv::StringRecord,
}

impl Row<'_> {
    fn str(&self, name: &str) -> Result<&str, IoError> {
        let k = self.cols.iter().position(|h| h == name).expect("header checked on open");
        self.rec.get(k).ok_or_else(|| IoError::format(self.path, format!("line {}: short row", self.line)))
    }

    fn parse<T: std::str::FromStr>(&self, name: &str) -> Result<T, IoError> {
        let s = self.str(name)?;
        s.parse()
            .map_err(|_| IoError::format(self.path, format!("line {}: bad `{name}` value {s:?}", self.line)))
    }

    fn opt<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, IoError> {
        if self.str(name)?.is_empty() {
            Ok(None)
        } else {
            self.parse(name).map(Some)
        }
    }
}

fn for_rows(
    path: &Path,
    header: &[&str],
    mut f: impl FnMut(&Row<'_>) -> Result<(), IoError>,
) -> Result<(), IoError> {
    let mut r = csv_reader(path, header)?;
    let cols = r.headers().map_err(|e| IoError::format(path, e.to_string()))?.clone();
    for rec in r.records() {
        let rec = rec.map_err(|e| IoError::format(path, e.to_string()))?;
        // +1 for the schema line the csv reader never saw.
        let line = rec.position().map_or(0, |p| p.line()) + 1;
        f(&Row { path, line, rec, cols: &cols })?;
    }
    Ok(())
}

pub fn write_steps(path: &Path, log: &TrialLog) -> Result<(), IoError> {
    let mut w = csv_writer(path, &STEPS_HEADER)?;
    for r in &log.steps {
        let arm = log.profile(r.participant_id).map_or(Arm::Control, |p| p.arm);
        let row = [
            r.participant_id.0.to_string(),
            arm.to_string(),
            r.day.to_string(),
            r.morning_steps.to_string(),
            r.evening_steps.to_string(),
            r.total_steps().to_string(),
        ];
        put(path, &mut w, &row)?;
    }
    finish(path, w)
}

/// Reads `(arm, record)` pairs; `total_steps` must equal the two buckets.
pub fn read_steps(path: &Path) -> Result<Vec<(Arm, StepRecord)>, IoError> {
    let mut out = Vec::new();
    for_rows(path, &STEPS_HEADER, |row| {
        let arm: Arm = row.parse("arm")?;
        let rec = StepRecord::new(
            ParticipantId(row.parse("participant_id")?),
            row.parse("day")?,
            row.parse("morning_steps")?,
            row.parse("evening_steps")?,
        );
        let total: u32 = row.parse("total_steps")?;
        if total != rec.total_steps() {
            return Err(IoError::format(path, format!("line {}: total_steps != morning + evening", row.line)));
        }
        out.push((arm, rec));
        Ok(())
    })?;
    Ok(out)
}

fn decisions_header() -> Vec<&'static str> {
    DECISION_FIXED.iter().copied().chain(FEATURE_NAMES.iter().copied()).collect()
}

pub fn write_decisions(path: &Path, decisions: &[DecisionRecord]) -> Result<(), IoError> {
    let mut w = csv_writer(path, &decisions_header())?;
    for d in decisions {
        let mut row = vec![
            d.participant_id.0.to_string(),
            d.arm.to_string(),
            d.day.to_string(),
            d.action.index().to_string(),
            d.action.theme.to_string(),
            time_name(d.action).to_string(),
            d.propensity.to_string(),
            d.message_id.clone(),
            d.reward.map(|r| r.to_string()).unwrap_or_default(),
            d.feedback.as_ref().map(|f| rating_name(f.rating).to_string()).unwrap_or_default(),
        ];
        row.extend(d.features.as_slice().iter().map(|v| v.to_string()));
        put(path, &mut w, &row)?;
    }
    finish(path, w)
}

pub fn read_decisions(path: &Path) -> Result<Vec<DecisionRecord>, IoError> {
    let header = decisions_header();
    let mut out = Vec::new();
    for_rows(path, &header, |row| {
        let index: usize = row.parse("action")?;
        let action = Action::from_index(index)
            .map_err(|e| IoError::format(path, format!("line {}: {e}", row.line)))?;
        let mut features = Vec::with_capacity(N_FEATURES);
        for name in FEATURE_NAMES {
            features.push(row.parse::<f64>(name)?);
        }
        let participant_id = ParticipantId(row.parse("participant_id")?);
        let day = row.parse("day")?;
        let message_id = row.str("message_id")?.to_string();
        let feedback = match row.str("rating")? {
            "" => None,
            s => Some(FeedbackEvent {
                participant_id,
                day,
                message_id: message_id.clone(),
                rating: parse_rating(s)
                    .ok_or_else(|| IoError::format(path, format!("line {}: bad rating {s:?}", row.line)))?,
                free_text: None,
            }),
        };
        out.push(DecisionRecord {
            participant_id,
            arm: row.parse("arm")?,
            day,
            features: FeatureVector(features),
            action,
            propensity: row.parse("propensity")?,
            message_id,
            reward: row.opt("reward")?,
            feedback,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_feedback(path: &Path, feedback: &[FeedbackEvent]) -> Result<(), IoError> {
    let mut w = csv_writer(path, &FEEDBACK_HEADER)?;
    for f in feedback {
        let row = [
            f.participant_id.0.to_string(),
            f.day.to_string(),
            f.message_id.clone(),
            rating_name(f.rating).to_string(),
            f.free_text.clone().unwrap_or_default(),
        ];
        put(path, &mut w, &row)?;
    }
    finish(path, w)
}

pub fn read_feedback(path: &Path) -> Result<Vec<FeedbackEvent>, IoError> {
    let mut out = Vec::new();
    for_rows(path, &FEEDBACK_HEADER, |row| {
        let rating = row.str("rating")?;
        out.push(FeedbackEvent {
            participant_id: ParticipantId(row.parse("participant_id")?),
            day: row.parse("day")?,
            message_id: row.str("message_id")?.to_string(),
            rating: parse_rating(rating)
                .ok_or_else(|| IoError::format(path, format!("line {}: bad rating {rating:?}", row.line)))?,
            free_text: Some(row.str("free_text")?.to_string()).filter(|s| !s.is_empty()),
        });
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Self-describing record of a simulation run: with the embedded config
/// and seed the run can be reproduced exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub engine_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub status: RunStatus,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: Option<u64>,
    pub files: Vec<FileEntry>,
    pub config: TrialConfig,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    /// A manifest for a run that is about to start. `config.seed` should
    /// already hold the effective seed.
    pub fn start(config: &TrialConfig) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION.to_string(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed(),
            config_hash: config.hash(),
            status: RunStatus::Running,
            started_at: unix_now(),
            finished_at: None,
            files: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|e| IoError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let s = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| IoError::format(path, e.to_string()))
    }
}

pub fn file_entry(path: &Path) -> Result<FileEntry, IoError> {
    let mut f = File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let k = f.read(&mut buf).map_err(|e| IoError::io(path, e))?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
        bytes += k as u64;
    }
    Ok(FileEntry {
        name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Writes the three CSVs into `dir` and returns their inventory entries.
pub fn write_log(dir: &Path, log: &TrialLog) -> Result<Vec<FileEntry>, IoError> {
    let steps = dir.join(STEPS_FILE);
    let decisions = dir.join(DECISIONS_FILE);
    let feedback = dir.join(FEEDBACK_FILE);
    write_steps(&steps, log)?;
    write_decisions(&decisions, &log.decisions)?;
    write_feedback(&feedback, &log.feedback)?;
    [steps, decisions, feedback].iter().map(|p| file_entry(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run_trial;

    fn tiny() -> TrialLog {
        let mut cfg = TrialConfig { n_per_arm: 4, study_days: 6, seed: Some(5), ..Default::default() };
        cfg.learner.min_samples_leaf = 1;
        run_trial(&cfg).unwrap()
    }

    #[test]
    fn round_trips() {
        let log = tiny();
        let dir = tempfile::tempdir().unwrap();
        write_log(dir.path(), &log).unwrap();
        let steps = read_steps(&dir.path().join(STEPS_FILE)).unwrap();
        assert_eq!(steps.iter().map(|s| s.1).collect::<Vec<_>>(), log.steps);
        assert_eq!(read_decisions(&dir.path().join(DECISIONS_FILE)).unwrap(), log.decisions);
        assert_eq!(read_feedback(&dir.path().join(FEEDBACK_FILE)).unwrap(), log.feedback);
    }

    #[test]
    fn rejects_unknown_major_version() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(STEPS_FILE);
        fs::write(&p, "#schema_version=2.0\nparticipant_id,arm,day,morning_steps,evening_steps,total_steps\n").unwrap();
        assert!(matches!(read_steps(&p), Err(IoError::Schema { .. })));
        fs::write(&p, "#schema_version=1.7\nparticipant_id,arm,day,morning_steps,evening_steps,total_steps\n0,RL,1,2,3,5\n")
            .unwrap();
        assert_eq!(read_steps(&p).unwrap().len(), 1);
        fs::write(&p, "participant_id,arm\n").unwrap();
        assert!(matches!(read_steps(&p), Err(IoError::Format { .. })));
    }

    #[test]
    fn bad_cell_reports_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(STEPS_FILE);
        fs::write(&p, "#schema_version=1.0\nparticipant_id,arm,day,morning_steps,evening_steps,total_steps\n0,RL,x,2,3,5\n")
            .unwrap();
        let msg = read_steps(&p).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("`day`"), "{msg}");
    }
}
