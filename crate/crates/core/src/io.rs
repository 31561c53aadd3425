//! File formats.
//!
//! A dataset directory holds one `<subject>.csv` per sequence with header
//! `t,d,d_dot,x,y,z,x_dot,y_dot,z_dot,arousal` and a `<subject>.json`
//! sidecar carrying the subject id and the shared feature standardization.
//! Floats are written in shortest round-trip form, so reading back is exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BernsteinCurve;
use crate::model::{AttentionState, Dataset, FeatureVector, ObservationSequence, Standardization};
use crate::synth::{GroundTruth, LatentTrace};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    t: f64,
    d: f64,
    d_dot: f64,
    x: f64,
    y: f64,
    z: f64,
    x_dot: f64,
    y_dot: f64,
    z_dot: f64,
    arousal: f64,
}

/// Per-sequence metadata stored next to each CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub subject_id: String,
    pub standardization: Standardization,
}

fn check_subject_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidDataset(format!("subject id {id:?} is not usable as a file name")))
    }
}

/// Writes every sequence of `dataset` into `dir`, creating it if needed.
/// Returns the files written.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for seq in &dataset.sequences {
        check_subject_id(&seq.subject_id)?;
        let csv_path = dir.join(format!("{}.csv", seq.subject_id));
        let rows = seq.times.iter().zip(&seq.features).zip(&seq.targets).map(|((&t, f), &y)| SampleRow {
            t,
            d: f.d,
            d_dot: f.d_dot,
            x: f.x,
            y: f.y,
            z: f.z,
            x_dot: f.x_dot,
            y_dot: f.y_dot,
            z_dot: f.z_dot,
            arousal: y,
        });
        write_csv(&csv_path, rows)?;
        let json_path = dir.join(format!("{}.json", seq.subject_id));
        write_json(
            &json_path,
            &Sidecar {
                subject_id: seq.subject_id.clone(),
                standardization: dataset.standardization.clone(),
            },
        )?;
        written.push(csv_path);
        written.push(json_path);
    }
    Ok(written)
}

/// Reads every `*.csv` in `dir` (sorted by name) with its sidecar. All
/// sidecars must carry the same standardization.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let mut csvs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Err(Error::InvalidDataset(format!("no sequence files in {}", dir.display())));
    }
    let mut sequences = Vec::with_capacity(csvs.len());
    let mut standardization: Option<Standardization> = None;
    for csv_path in csvs {
        let sidecar: Sidecar = read_json(&csv_path.with_extension("json"))?;
        match &standardization {
            None => standardization = Some(sidecar.standardization.clone()),
            Some(s) if *s != sidecar.standardization => {
                return Err(Error::InvalidDataset(format!(
                    "{} disagrees with the other sequences on standardization",
                    csv_path.display()
                )))
            }
            Some(_) => {}
        }
        let rows: Vec<SampleRow> = read_csv(&csv_path)?;
        let mut times = Vec::with_capacity(rows.len());
        let mut features = Vec::with_capacity(rows.len());
        let mut targets = Vec::with_capacity(rows.len());
        for r in rows {
            times.push(r.t);
            features.push(FeatureVector {
                d: r.d,
                d_dot: r.d_dot,
                x: r.x,
                y: r.y,
                z: r.z,
                x_dot: r.x_dot,
                y_dot: r.y_dot,
                z_dot: r.z_dot,
            });
            targets.push(r.arousal);
        }
        sequences.push(ObservationSequence::new(sidecar.subject_id, times, features, targets)?);
    }
    Dataset::with_standardization(sequences, standardization.expect("at least one sidecar"))
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    t: f64,
    z: u8,
    w: u8,
}

/// Writes `<subject>.csv` files with columns `t,z,w` (`z` is the state tag,
/// 1 attentive and 2 distracted) and `theta_true.json`.
pub fn write_ground_truth(dir: &Path, truth: &GroundTruth) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for trace in &truth.traces {
        check_subject_id(&trace.subject_id)?;
        let path = dir.join(format!("{}.csv", trace.subject_id));
        let rows = trace
            .times
            .iter()
            .zip(&trace.z)
            .zip(&trace.w)
            .map(|((&t, z), &w)| TruthRow { t, z: z.tag(), w });
        write_csv(&path, rows)?;
        written.push(path);
    }
    let theta_path = dir.join("theta_true.json");
    write_json(&theta_path, &truth.theta_true)?;
    written.push(theta_path);
    Ok(written)
}

pub fn read_ground_truth(dir: &Path) -> Result<GroundTruth> {
    let theta_true = read_json(&dir.join("theta_true.json"))?;
    let mut csvs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    let mut traces = Vec::new();
    for path in csvs {
        let rows: Vec<TruthRow> = read_csv(&path)?;
        let subject_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let mut trace = LatentTrace {
            subject_id,
            times: Vec::with_capacity(rows.len()),
            z: Vec::with_capacity(rows.len()),
            w: Vec::with_capacity(rows.len()),
        };
        for r in rows {
            trace.times.push(r.t);
            trace.z.push(AttentionState::try_from(r.z)?);
            trace.w.push(r.w);
        }
        traces.push(trace);
    }
    Ok(GroundTruth { traces, theta_true })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub speed: f64,
}

/// `samples + 1` evenly spaced points of `curve` at constant `altitude`.
pub fn sample_path(curve: &BernsteinCurve, altitude: f64, samples: usize) -> Vec<PathSample> {
    let vel = curve.derivative();
    let n = samples.max(1);
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let p = curve.eval_unit(s);
            PathSample {
                t: s * curve.t_f(),
                x: p.x,
                y: p.y,
                z: altitude,
                speed: vel.eval_unit(s).norm(),
            }
        })
        .collect()
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub test_log_likelihood: f64,
}
