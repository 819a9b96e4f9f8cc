//! Output files. Every CSV carries the config hash so artifacts from
//! different configs cannot be mixed silently.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use splice_core::datagen::{fmt_f64, write_csv, PairedDataset};
use splice_core::metrics::MembershipReport;
use splice_core::splice::LatentGroup;
use splice_core::LatentBundle;

use crate::error::{CliError, Result};
use crate::evaluate::AngleSweep;

pub const MANIFEST: &str = "manifest.csv";
pub const METRICS: &str = "metrics.csv";
pub const SATURATION: &str = "saturation.csv";
pub const CCA: &str = "cca.csv";
pub const LATENTS: &str = "latents.csv";
pub const ANGLE_CURVES: &str = "angle_curves.csv";
pub const DISTANCES: &str = "distances.csv";
pub const STEP1_CKPT: &str = "step1.ckpt";
pub const STEP2_CKPT: &str = "step2.ckpt";
pub const DATA_DIR: &str = "data";
pub const LOCK: &str = ".splice.lock";

/// One long-format metric value.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub group: String,
    pub value: f64,
}

impl MetricRow {
    pub fn new(metric: impl Into<String>, group: impl Into<String>, value: f64) -> Self {
        Self {
            metric: metric.into(),
            group: group.into(),
            value,
        }
    }
}

/// Looks up one value by metric and group.
pub fn find_metric(rows: &[MetricRow], metric: &str, group: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r.metric == metric && r.group == group)
        .map(|r| r.value)
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn write_metrics(path: &Path, rows: &[MetricRow], hash: &str, seed: u64) -> Result<()> {
    write_csv(
        path,
        &strings(&["metric", "group", "value", "config_hash", "seed"]),
        rows.iter().map(|r| {
            vec![
                r.metric.clone(),
                r.group.clone(),
                fmt_f64(r.value),
                hash.to_string(),
                seed.to_string(),
            ]
        }),
    )?;
    Ok(())
}

/// Reads back `metrics.csv` rows (value columns only).
pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let mut rdr = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let value = rec[2].parse().map_err(|e| parse_err(path, e))?;
        out.push(MetricRow::new(&rec[0], &rec[1], value));
    }
    Ok(out)
}

/// One point of a saturation curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub method: String,
    pub dim: usize,
    pub score: f64,
}

pub fn write_saturation(path: &Path, points: &[CurvePoint], hash: &str) -> Result<()> {
    write_csv(
        path,
        &strings(&["method", "dim", "score", "config_hash"]),
        points
            .iter()
            .map(|p| vec![p.method.clone(), p.dim.to_string(), fmt_f64(p.score), hash.to_string()]),
    )?;
    Ok(())
}

pub fn read_saturation(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut rdr = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        out.push(CurvePoint {
            method: rec[0].to_string(),
            dim: rec[1].parse().map_err(|e| parse_err(path, e))?,
            score: rec[2].parse().map_err(|e| parse_err(path, e))?,
        });
    }
    Ok(out)
}

pub fn write_cca(path: &Path, train: &[f64], test: &[f64], hash: &str) -> Result<()> {
    write_csv(
        path,
        &strings(&["component", "train_correlation", "test_correlation", "config_hash"]),
        train
            .iter()
            .zip(test)
            .enumerate()
            .map(|(k, (a, b))| vec![k.to_string(), fmt_f64(*a), fmt_f64(*b), hash.to_string()]),
    )?;
    Ok(())
}

/// Every latent group of every dataset row, in dataset order.
pub fn write_latents(path: &Path, data: &PairedDataset, bundle: &LatentBundle, hash: &str) -> Result<()> {
    let mut header = strings(&["sample", "split"]);
    let groups: Vec<LatentGroup> = LatentGroup::ALL
        .into_iter()
        .filter(|&g| bundle.group(g).cols() > 0)
        .collect();
    for &g in &groups {
        header.extend((0..bundle.group(g).cols()).map(|c| format!("{}_{c}", g.name())));
    }
    header.push("config_hash".into());
    write_csv(
        path,
        &header,
        (0..data.len()).map(|i| {
            let mut row = vec![i.to_string(), data.split[i].name().to_string()];
            for &g in &groups {
                row.extend(bundle.group(g).row(i).iter().map(|&v| fmt_f64(v)));
            }
            row.push(hash.to_string());
            row
        }),
    )?;
    Ok(())
}

/// Dense rotation sweep: one row per (digit, angle step). `aligned_step`
/// applies the digit's circular offset onto the reference curve.
pub fn write_angle_curves(path: &Path, sweep: &AngleSweep, hash: &str) -> Result<()> {
    let m = sweep.curves.first().map_or(0, |c| c.cols());
    let mut header = strings(&["sample", "step", "angle_deg", "aligned_step"]);
    header.extend((0..m).map(|c| format!("z_B_{c}")));
    header.push("config_hash".into());
    let rows = sweep.curves.iter().enumerate().flat_map(|(d, curve)| {
        let n = curve.rows();
        (0..n).map(move |j| {
            let mut row = vec![
                sweep.rows[d].to_string(),
                j.to_string(),
                fmt_f64(360.0 * j as f64 / n as f64),
                ((j + n - sweep.offsets[d] % n) % n).to_string(),
            ];
            row.extend(curve.row(j).iter().map(|&v| fmt_f64(v)));
            row.push(hash.to_string());
            row
        })
    });
    write_csv(path, &header, rows)?;
    Ok(())
}

/// Nearest-neighbor distances behind the membership metric, long format.
/// `kind` is `projection` or `observed`; the mean within-class distance is
/// repeated on every row when labels exist.
pub fn write_distances(path: &Path, mem: &MembershipReport, hash: &str) -> Result<()> {
    let within = mem.within_class_mean.map_or(String::new(), fmt_f64);
    let rows = [("projection", &mem.projection_nn), ("observed", &mem.observed_nn)]
        .into_iter()
        .flat_map(|(kind, d)| d.iter().map(move |&v| (kind, v)))
        .map(|(kind, v)| vec![kind.to_string(), fmt_f64(v), within.clone(), hash.to_string()]);
    write_csv(
        path,
        &strings(&["kind", "distance", "within_class_mean", "config_hash"]),
        rows,
    )?;
    Ok(())
}

/// Appends `stage,wall_time_s,config_hash`, writing the header first if the
/// manifest is new.
pub fn append_manifest(dir: &Path, stage: &str, wall: Duration, hash: &str) -> Result<()> {
    let path = dir.join(MANIFEST);
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
    if fresh {
        writeln!(f, "stage,wall_time_s,config_hash")?;
    }
    writeln!(f, "{stage},{:.3},{hash}", wall.as_secs_f64())?;
    Ok(())
}

/// Whether the manifest records `stage` under config hash `hash`.
pub fn manifest_has(dir: &Path, stage: &str, hash: &str) -> Result<bool> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(false);
    }
    let mut rdr = csv_reader(&path)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(&path, e))?;
        if &rec[0] == stage && &rec[2] == hash {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fails with the expected path when a prerequisite artifact is absent.
pub fn require(path: PathBuf, hint: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact {
            path: path.display().to_string(),
            hint: hint.to_string(),
        })
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let path = require(path.to_path_buf(), "produce it with the stage that writes it")?;
    csv::Reader::from_path(&path).map_err(|e| parse_err(&path, e))
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Core(splice_core::Error::Parse(format!("{}: {e}", path.display())))
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(dir.display().to_string())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
