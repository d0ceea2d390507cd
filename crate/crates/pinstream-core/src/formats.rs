//! On-disk formats: JSONL sensor streams, ground-truth / template / model /
//! report JSON, and the CSV tables (features, CV grid, corpus manifest, plot
//! data). Every JSON file and stream carries a schema tag and every loader
//! rejects versions it does not know. CSV headers are fixed and checked on
//! read, which serves the same purpose.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::error_detection::ErrorFlags;
use crate::features::{FeatureRow, SkillLabel, FEATURE_COUNT, FEATURE_NAMES};
use crate::gait::AccelStream;
use crate::quality::{QualityReport, Template};
use crate::quat::Quaternion;
use crate::segment::ThrowRecord;
use crate::sim::{GroundTruth, SimThrow};
use crate::svm::{GridSearchResult, SvmModel};

pub const STREAM_SCHEMA: &str = "pinstream.stream.v1";
pub const TRUTH_SCHEMA: &str = "pinstream.truth.v1";
pub const TEMPLATES_SCHEMA: &str = "pinstream.templates.v1";
pub const MODEL_SCHEMA: &str = "pinstream.model.v1";
pub const REPORT_SCHEMA: &str = "pinstream.report.v1";

fn check_schema(expected: &str, found: &str) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::UnsupportedSchema { expected: expected.into(), found: found.into() })
    }
}

// ---------------------------------------------------------------------------
// Sensor streams: JSONL, one file per sensor. The first line is a header
// carrying the schema, the sensor kind, the nominal rate and (for the wrist)
// the rest-pose baseline; every following line is one sample.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Wrist,
    Leg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub schema: String,
    pub sensor: SensorKind,
    pub fs_hz: f64,
    /// Rest-pose baseline quaternion [w, x, y, z]; wrist streams only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamRecord {
    pub t_ms: f64,
    pub sensor: SensorKind,
    /// Orientation [w, x, y, z]; wrist samples only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<[f64; 4]>,
    /// Acceleration [x, y, z] in m/s²; leg samples only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[f64; 3]>,
}

/// One parsed line of a stream file.
#[derive(Debug, Clone)]
pub enum StreamLine {
    Header(StreamHeader),
    Record(StreamRecord),
}

/// Parses a single JSONL line; the header is recognized by its `schema`
/// field. Tail readers feed lines here one at a time.
pub fn parse_stream_line(line: &str) -> Result<StreamLine> {
    let value: serde_json::Value = serde_json::from_str(line)?;
    if value.get("schema").is_some() {
        let header: StreamHeader = serde_json::from_value(value)?;
        check_schema(STREAM_SCHEMA, &header.schema)?;
        Ok(StreamLine::Header(header))
    } else {
        Ok(StreamLine::Record(serde_json::from_value(value)?))
    }
}

/// Wrist stream contents: timestamps, orientations and the setup baseline.
#[derive(Debug, Clone)]
pub struct WristStream {
    pub fs_hz: f64,
    pub t_ms: Vec<f64>,
    pub q: Vec<Quaternion>,
    pub baseline: Quaternion,
}

pub fn write_wrist_stream(
    path: &Path,
    fs_hz: f64,
    baseline: Quaternion,
    t_ms: &[f64],
    q: &[Quaternion],
) -> Result<()> {
    if t_ms.len() != q.len() {
        return Err(Error::DimensionMismatch { left: t_ms.len(), right: q.len() });
    }
    let mut w = BufWriter::new(File::create(path)?);
    let header = StreamHeader {
        schema: STREAM_SCHEMA.into(),
        sensor: SensorKind::Wrist,
        fs_hz,
        baseline: Some([baseline.w, baseline.x, baseline.y, baseline.z]),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (&t, quat) in t_ms.iter().zip(q) {
        let rec = StreamRecord {
            t_ms: t,
            sensor: SensorKind::Wrist,
            q: Some([quat.w, quat.x, quat.y, quat.z]),
            a: None,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_wrist_stream(path: &Path) -> Result<WristStream> {
    let (header, records) = read_stream(path, SensorKind::Wrist)?;
    let baseline = header
        .baseline
        .ok_or_else(|| Error::InvalidInput(format!("{}: wrist stream lacks a baseline", path.display())))?;
    let mut t_ms = Vec::with_capacity(records.len());
    let mut q = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        let raw = r.q.ok_or_else(|| Error::CorruptSample {
            index: i,
            reason: "wrist sample without orientation".into(),
        })?;
        t_ms.push(r.t_ms);
        q.push(Quaternion { w: raw[0], x: raw[1], y: raw[2], z: raw[3] });
    }
    Ok(WristStream {
        fs_hz: header.fs_hz,
        t_ms,
        q,
        baseline: Quaternion { w: baseline[0], x: baseline[1], y: baseline[2], z: baseline[3] },
    })
}

pub fn write_leg_stream(path: &Path, fs_hz: f64, leg: &AccelStream) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header =
        StreamHeader { schema: STREAM_SCHEMA.into(), sensor: SensorKind::Leg, fs_hz, baseline: None };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (&t, a) in leg.t_ms.iter().zip(&leg.accel) {
        let rec = StreamRecord { t_ms: t, sensor: SensorKind::Leg, q: None, a: Some(*a) };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Leg stream contents; sample validity is enforced by [`AccelStream::new`].
pub fn read_leg_stream(path: &Path) -> Result<(f64, AccelStream)> {
    let (header, records) = read_stream(path, SensorKind::Leg)?;
    let mut t_ms = Vec::with_capacity(records.len());
    let mut accel = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        let a = r.a.ok_or_else(|| Error::CorruptSample {
            index: i,
            reason: "leg sample without acceleration".into(),
        })?;
        t_ms.push(r.t_ms);
        accel.push(a);
    }
    Ok((header.fs_hz, AccelStream::new(t_ms, accel)?))
}

fn read_stream(path: &Path, want: SensorKind) -> Result<(StreamHeader, Vec<StreamRecord>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut header: Option<StreamHeader> = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_stream_line(&line)? {
            StreamLine::Header(h) => {
                if i != 0 {
                    return Err(Error::CorruptSample {
                        index: i,
                        reason: "header line not at start of stream".into(),
                    });
                }
                if h.sensor != want {
                    return Err(Error::InvalidInput(format!(
                        "{}: expected a {want:?} stream, found {:?}",
                        path.display(),
                        h.sensor
                    )));
                }
                header = Some(h);
            }
            StreamLine::Record(r) => {
                if header.is_none() {
                    return Err(Error::CorruptSample {
                        index: i,
                        reason: "stream does not start with a header line".into(),
                    });
                }
                if r.sensor != want {
                    return Err(Error::CorruptSample {
                        index: i,
                        reason: format!("{:?} sample in a {want:?} stream", r.sensor),
                    });
                }
                records.push(r);
            }
        }
    }
    let header = header.ok_or_else(|| {
        Error::InvalidInput(format!("{}: empty stream file", path.display()))
    })?;
    Ok((header, records))
}

// ---------------------------------------------------------------------------
// Versioned JSON documents. serde_json prints f64 with shortest round-trip
// notation, so numeric fields survive save/load exactly.

#[derive(Debug, Serialize, Deserialize)]
struct VersionedDoc<T> {
    schema: String,
    #[serde(flatten)]
    body: T,
}

fn write_versioned<T: Serialize>(path: &Path, schema: &str, body: T) -> Result<()> {
    let doc = VersionedDoc { schema: schema.into(), body };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_versioned<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<T> {
    let doc: VersionedDoc<T> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    check_schema(schema, &doc.schema)?;
    Ok(doc.body)
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthBody {
    truth: GroundTruth,
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_versioned(path, TRUTH_SCHEMA, TruthBody { truth: truth.clone() })
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    Ok(read_versioned::<TruthBody>(path, TRUTH_SCHEMA)?.truth)
}

#[derive(Debug, Serialize, Deserialize)]
struct TemplatesBody {
    templates: Vec<Template>,
}

pub fn write_templates(path: &Path, templates: &[Template]) -> Result<()> {
    write_versioned(path, TEMPLATES_SCHEMA, TemplatesBody { templates: templates.to_vec() })
}

pub fn read_templates(path: &Path) -> Result<Vec<Template>> {
    Ok(read_versioned::<TemplatesBody>(path, TEMPLATES_SCHEMA)?.templates)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelBody {
    model: SvmModel,
}

pub fn write_model(path: &Path, model: &SvmModel) -> Result<()> {
    write_versioned(path, MODEL_SCHEMA, ModelBody { model: model.clone() })
}

pub fn read_model(path: &Path) -> Result<SvmModel> {
    Ok(read_versioned::<ModelBody>(path, MODEL_SCHEMA)?.model)
}

// ---------------------------------------------------------------------------
// Analysis reports. A report embeds the config it was produced with, so the
// file is self-describing; per-throw failures are part of the report rather
// than aborting the batch.

/// Stride events and timing of one analyzed throw, in seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaitSummary {
    pub strides: usize,
    pub is_s: Vec<f64>,
    pub mid_swing_s: Vec<f64>,
    pub ic_s: Vec<f64>,
    pub swing_period_s: Vec<f64>,
    pub stance_period_s: Vec<f64>,
    pub swing_stance_ratio: Vec<f64>,
    pub avg_velocity_ms: Vec<f64>,
}

impl GaitSummary {
    pub fn from_record(rec: &ThrowRecord) -> Self {
        let at = |i: usize| rec.swing.t_ms[i] / 1000.0;
        GaitSummary {
            strides: rec.gait.strides.len(),
            is_s: rec.gait.strides.iter().map(|s| at(s.is_idx)).collect(),
            mid_swing_s: rec.gait.strides.iter().map(|s| at(s.mid_swing_idx)).collect(),
            ic_s: rec.gait.strides.iter().map(|s| at(s.ic_idx)).collect(),
            swing_period_s: rec.gait.swing_period.clone(),
            stance_period_s: rec.gait.stance_period.clone(),
            swing_stance_ratio: rec.gait.ratio.clone(),
            avg_velocity_ms: rec.gait.avg_velocity.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzedThrow {
    pub gait: GaitSummary,
    pub quality: QualityReport,
    pub flags: ErrorFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ThrowOutcome {
    Analyzed(Box<AnalyzedThrow>),
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThrowReport {
    /// Input identifier: file path, throw directory or simulator id.
    pub source: String,
    pub outcome: ThrowOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: Config,
    pub throws: Vec<ThrowReport>,
}

pub fn write_report(path: &Path, report: &AnalysisReport) -> Result<()> {
    write_versioned(path, REPORT_SCHEMA, report.clone())
}

pub fn read_report(path: &Path) -> Result<AnalysisReport> {
    read_versioned::<AnalysisReport>(path, REPORT_SCHEMA)
}

/// The report serialization used for on-disk files, also handy for hashing a
/// run's output in one piece.
pub fn report_to_string(report: &AnalysisReport) -> Result<String> {
    let doc = VersionedDoc { schema: REPORT_SCHEMA.to_string(), body: report.clone() };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------------------
// Feature table: CSV with one column per feature plus `label` and
// `athlete_id`. The exact header doubles as the schema version.

pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    header.push("athlete_id");
    w.write_record(&header)?;
    for row in rows {
        if row.features.len() != FEATURE_COUNT {
            return Err(Error::DimensionMismatch {
                left: row.features.len(),
                right: FEATURE_COUNT,
            });
        }
        let mut rec: Vec<String> = row.features.iter().map(|v| v.to_string()).collect();
        rec.push(row.label.as_str().to_string());
        rec.push(row.athlete_id.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut expected: Vec<&str> = FEATURE_NAMES.to_vec();
    expected.push("label");
    expected.push("athlete_id");
    let header = r.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::UnsupportedSchema {
            expected: expected.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != FEATURE_COUNT + 2 {
            return Err(Error::CorruptSample {
                index: i,
                reason: format!("{} fields, expected {}", record.len(), FEATURE_COUNT + 2),
            });
        }
        let mut features = Vec::with_capacity(FEATURE_COUNT);
        for (j, field) in record.iter().take(FEATURE_COUNT).enumerate() {
            features.push(field.parse::<f64>().map_err(|e| Error::CorruptSample {
                index: i,
                reason: format!("column {}: {e}", FEATURE_NAMES[j]),
            })?);
        }
        let label: SkillLabel = record[FEATURE_COUNT].parse()?;
        rows.push(FeatureRow {
            features,
            label,
            athlete_id: record[FEATURE_COUNT + 1].to_string(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Cross-validation table: one row per (C, γ) grid cell.

pub fn write_cv_table(path: &Path, grid: &GridSearchResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["c", "gamma", "mean_macro_f1", "std_macro_f1", "failed_folds"])?;
    for cell in &grid.table {
        w.write_record(&[
            cell.c.to_string(),
            cell.gamma.to_string(),
            cell.mean_macro_f1.to_string(),
            cell.std_macro_f1.to_string(),
            cell.failed_folds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Corpus layout: `<root>/<athlete>/throw-<n>/{wrist.jsonl,leg.jsonl,truth.json}`
// plus one manifest CSV at the root listing every throw.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRow {
    pub athlete_id: String,
    pub skill: SkillLabel,
    pub throw: usize,
    pub seed: u64,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub e4: bool,
    /// Paths relative to the manifest's directory.
    pub wrist: String,
    pub leg: String,
    pub truth: String,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in r.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

/// Writes one simulated throw under `root/<athlete_id>/throw-<n>/` at the
/// stream rate `fs_hz` and returns its manifest row.
pub fn write_throw_dir(root: &Path, throw_idx: usize, sim: &SimThrow, fs_hz: f64) -> Result<ManifestRow> {
    let truth = &sim.truth;
    let rel = PathBuf::from(&truth.athlete_id).join(format!("throw-{throw_idx:03}"));
    let dir = root.join(&rel);
    std::fs::create_dir_all(&dir)?;
    write_wrist_stream(&dir.join("wrist.jsonl"), fs_hz, sim.baseline, &sim.t_ms, &sim.wrist)?;
    write_leg_stream(&dir.join("leg.jsonl"), fs_hz, &sim.leg)?;
    write_truth(&dir.join("truth.json"), truth)?;
    let rel_str = |name: &str| rel.join(name).to_string_lossy().into_owned();
    Ok(ManifestRow {
        athlete_id: truth.athlete_id.clone(),
        skill: truth.skill,
        throw: throw_idx,
        seed: truth.seed,
        e1: truth.labels.e1,
        e2: truth.labels.e2,
        e3: truth.labels.e3,
        e4: truth.labels.e4,
        wrist: rel_str("wrist.jsonl"),
        leg: rel_str("leg.jsonl"),
        truth: rel_str("truth.json"),
    })
}

// ---------------------------------------------------------------------------
// Plot table: per-sample rows of one analyzed segment, ready for any
// spreadsheet or plotting tool.

pub fn write_plot_csv(path: &Path, rec: &ThrowRecord, unwrap_margin: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t_s", "swing_angle_rad", "accel_mag_ms2", "velocity_ms", "event"])?;
    let swing = rec.centered_swing(unwrap_margin);
    let mut velocity = vec![None; swing.len()];
    let mut event = vec![""; swing.len()];
    for (k, s) in rec.gait.strides.iter().enumerate() {
        for (offset, v) in rec.gait.velocity[k].iter().enumerate() {
            velocity[s.is_idx + offset] = Some(*v);
        }
        event[s.is_idx] = "is";
        event[s.mid_swing_idx] = "mid_swing";
        event[s.ic_idx] = "ic";
    }
    for i in 0..swing.len() {
        w.write_record(&[
            (rec.swing.t_ms[i] / 1000.0).to_string(),
            swing[i].to_string(),
            rec.gait.mag[i].to_string(),
            velocity[i].map(|v| v.to_string()).unwrap_or_default(),
            event[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
