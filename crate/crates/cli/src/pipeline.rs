//! Pipeline stages. Each stage reads its inputs from the output directory
//! (or an explicit checkpoint), writes its artifacts there, and appends one
//! manifest line.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use splice_core::baselines::{fit_linear_cca, rrr_curve};
use splice_core::datagen::{
    export_dataset, gen_lgnv1, gen_linear_toy, gen_rotated_digits, import_dataset, load_csv_pair, load_idx_pair,
    PairedDataset,
};
use splice_core::geometry::{build_geodesic_tables, step2_train};
use splice_core::metrics::r_squared;
use splice_core::splice::{load_checkpoint, save_checkpoint, step1_train, Checkpoint};
use splice_core::{GeodesicTable, SpliceModel};

use crate::artifacts::{self as art, CurvePoint, DirLock};
use crate::config::{DataConfig, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::evaluate::{encode_rows, evaluate, standardized};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Gen,
    Step1,
    Step2,
    Baselines,
    Metrics,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Gen,
        Stage::Step1,
        Stage::Step2,
        Stage::Baselines,
        Stage::Metrics,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Step1 => "step1",
            Stage::Step2 => "step2",
            Stage::Baselines => "baselines",
            Stage::Metrics => "metrics",
            Stage::Export => "export",
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            format!("unknown stage `{s}`; expected one of gen, step1, step2, baselines, metrics, export")
        })
    }
}

/// One experiment bound to its output directory.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub hash: String,
    _lock: DirLock,
}

impl Run {
    /// Claims the output directory. `seed` and `out` override the config.
    pub fn open(mut cfg: ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(o) = out {
            cfg.output_dir = o;
        }
        let out = cfg.output_dir.clone();
        let lock = DirLock::acquire(&out)?;
        let hash = cfg.hash();
        info!("config_hash={hash} out={}", out.display());
        Ok(Self {
            cfg,
            out,
            hash,
            _lock: lock,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn timed<T>(&self, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let v = f()?;
        let wall = t.elapsed();
        info!("stage={} wall_s={:.3}", stage.name(), wall.as_secs_f64());
        art::append_manifest(&self.out, stage.name(), wall, &self.hash)?;
        Ok(v)
    }

    /// Runs `from` and every later stage; earlier stages' artifacts are read
    /// from disk. `resume` replaces the checkpoint the first model stage
    /// would otherwise load.
    pub fn run(&self, from: Stage, resume: Option<&Path>) -> Result<()> {
        let step2 = self.cfg.step2.enabled || (from == Stage::Step2 && resume.is_some());
        if from > Stage::Gen && !self.path(art::DATA_DIR).join("viewA.csv").exists() {
            self.gen()?;
        }
        for stage in Stage::ALL.into_iter().filter(|&s| s >= from) {
            let resume = if stage == from { resume } else { None };
            match stage {
                Stage::Gen => drop(self.gen()?),
                Stage::Step1 => drop(self.step1()?),
                Stage::Step2 if step2 => drop(self.step2(resume)?),
                Stage::Step2 => {}
                Stage::Baselines => drop(self.baselines(&[])?),
                Stage::Metrics => drop(self.metrics(resume)?),
                Stage::Export => drop(self.export(resume)?),
            }
        }
        Ok(())
    }

    /// Builds the dataset from the config source and writes it to `data/`.
    pub fn gen(&self) -> Result<PairedDataset> {
        self.timed(Stage::Gen, || {
            let data = build_dataset(&self.cfg.data, self.cfg.seed)?;
            export_dataset(&data, self.path(art::DATA_DIR), Some(&self.hash))?;
            info!(
                "rows={} n_a={} n_b={}",
                data.len(),
                data.view_a.cols(),
                data.view_b.cols()
            );
            Ok(data)
        })
    }

    pub fn load_data(&self) -> Result<PairedDataset> {
        let dir = self.path(art::DATA_DIR);
        art::require(dir.join("viewA.csv"), "run the gen stage (or gen-data) first")?;
        Ok(import_dataset(dir)?)
    }

    pub fn step1(&self) -> Result<SpliceModel> {
        let data = self.load_data()?;
        self.timed(Stage::Step1, || {
            let model = train_step1(&self.cfg, &data, self.cfg.model.m_s)?;
            save_checkpoint(self.path(art::STEP1_CKPT), &model, &[])?;
            Ok(model)
        })
    }

    pub fn step2(&self, resume: Option<&Path>) -> Result<SpliceModel> {
        let data = self.load_data()?;
        let start = match resume {
            Some(p) => art::require(p.to_path_buf(), "pass an existing checkpoint to --resume")?,
            None => art::require(self.path(art::STEP1_CKPT), "run the step1 stage first")?,
        };
        let mut model = load_checkpoint::<f64>(&start)?.model;
        self.timed(Stage::Step2, || {
            let s2 = self.cfg.step2.to_core(self.cfg.seed);
            let tables: Vec<GeodesicTable> = build_geodesic_tables(&model, &data, &s2)?;
            step2_train(&mut model, &data, &tables, &s2)?;
            save_checkpoint(self.path(art::STEP2_CKPT), &model, &tables)?;
            Ok(model)
        })
    }

    /// The most refined model available: the explicit checkpoint, else
    /// Step 2's, else Step 1's.
    pub fn load_model(&self, resume: Option<&Path>) -> Result<Checkpoint<f64>> {
        let path = match resume {
            Some(p) => art::require(p.to_path_buf(), "pass an existing checkpoint")?,
            None if self.path(art::STEP2_CKPT).exists() => self.path(art::STEP2_CKPT),
            None => art::require(self.path(art::STEP1_CKPT), "run the step1 stage first")?,
        };
        info!("checkpoint={}", path.display());
        Ok(load_checkpoint(path)?)
    }

    /// The Step 1 checkpoint in the output directory when this config wrote
    /// it with shared width `m_s`. Training is deterministic, so it equals a
    /// fresh fit.
    fn own_step1(&self, m_s: usize) -> Result<Option<SpliceModel>> {
        let ckpt = self.path(art::STEP1_CKPT);
        if m_s != self.cfg.model.m_s
            || !ckpt.exists()
            || !art::manifest_has(&self.out, Stage::Step1.name(), &self.hash)?
        {
            return Ok(None);
        }
        Ok(Some(load_checkpoint::<f64>(&ckpt)?.model))
    }

    /// RRR saturation curve, optional SPLICE curve, and linear CCA. Non-empty
    /// `dims` replaces the configured RRR ranks.
    pub fn baselines(&self, dims: &[usize]) -> Result<Vec<CurvePoint>> {
        let data = self.load_data()?;
        self.timed(Stage::Baselines, || {
            let b = &self.cfg.baselines;
            let ranks: &[usize] = if dims.is_empty() { &b.rrr_dims } else { dims };
            let (train, test) = (data.train_indices(), data.heldout_indices());
            let dims = self.cfg.model.dims(data.view_a.cols(), data.view_b.cols());
            let mut scaler = SpliceModel::new(dims, &self.cfg.model.architecture(), self.cfg.seed)?;
            scaler.fit_standardization(&data, self.cfg.step1.standardization.into());
            let (xa_tr, xb_tr) = standardized(&scaler, &data, &train)?;
            let (xa_te, xb_te) = standardized(&scaler, &data, &test)?;

            let limit = xa_tr.cols().min(xb_tr.cols());
            let mut ranks: Vec<usize> = ranks.iter().map(|&r| r.min(limit)).collect();
            ranks.sort_unstable();
            ranks.dedup();
            let mut points = Vec::new();
            if !ranks.is_empty() {
                let curve = rrr_curve(&xa_tr, &xb_tr, &xa_te, &xb_te, &ranks)?;
                points.extend(curve.dims.iter().zip(&curve.scores).map(|(&dim, &score)| CurvePoint {
                    method: "rrr".into(),
                    dim,
                    score,
                }));
            }
            for &m_s in &b.splice_dims {
                let model = match self.own_step1(m_s)? {
                    Some(m) => m,
                    None => train_step1(&self.cfg, &data, m_s)?,
                };
                let score = splice_r2(&model, &data)?;
                info!("splice m_s={m_s} test_r2={score:.4}");
                points.push(CurvePoint {
                    method: "splice".into(),
                    dim: m_s,
                    score,
                });
            }
            art::write_saturation(&self.path(art::SATURATION), &points, &self.hash)?;

            if b.cca_components > 0 {
                let k = b.cca_components.min(limit);
                let cca = fit_linear_cca(&xa_tr, &xb_tr, k)?;
                let corr = |a, b| -> Result<Vec<f64>> {
                    let (pa, pb) = (cca.transform_a(a)?, cca.transform_b(b)?);
                    Ok((0..k)
                        .map(|c| splice_core::metrics::pearson(&pa.col_vec(c), &pb.col_vec(c)).unwrap_or(0.0))
                        .collect())
                };
                art::write_cca(
                    &self.path(art::CCA),
                    &corr(&xa_tr, &xb_tr)?,
                    &corr(&xa_te, &xb_te)?,
                    &self.hash,
                )?;
            }
            Ok(points)
        })
    }

    pub fn metrics(&self, resume: Option<&Path>) -> Result<Vec<art::MetricRow>> {
        let data = self.load_data()?;
        let model = self.load_model(resume)?.model;
        let sat = self.path(art::SATURATION);
        let curves = if sat.exists() {
            art::read_saturation(&sat)?
        } else {
            Vec::new()
        };
        self.timed(Stage::Metrics, || {
            let ev = evaluate(&model, &data, &self.cfg, self.cfg.seed, &curves)?;
            art::write_metrics(&self.path(art::METRICS), &ev.rows, &self.hash, self.cfg.seed)?;
            if let Some(sweep) = &ev.angle {
                art::write_angle_curves(&self.path(art::ANGLE_CURVES), sweep, &self.hash)?;
            }
            if let Some(mem) = &ev.membership {
                art::write_distances(&self.path(art::DISTANCES), mem, &self.hash)?;
            }
            Ok(ev.rows)
        })
    }

    pub fn export(&self, resume: Option<&Path>) -> Result<usize> {
        let data = self.load_data()?;
        let model = self.load_model(resume)?.model;
        self.timed(Stage::Export, || {
            let all: Vec<usize> = (0..data.len()).collect();
            let bundle = encode_rows(&model, &data, &all)?;
            art::write_latents(&self.path(art::LATENTS), &data, &bundle, &self.hash)?;
            Ok(data.len())
        })
    }
}

/// Generates or loads the dataset described by a data section.
pub fn build_dataset(data: &DataConfig, seed: u64) -> Result<PairedDataset> {
    Ok(match data {
        DataConfig::Lgnv1 { .. } => gen_lgnv1(&data.lgnv1(seed).expect("lgnv1 source"))?,
        DataConfig::LinearToy { .. } => gen_linear_toy(&data.linear_toy(seed).expect("toy source"))?.data,
        DataConfig::RotatedDigits { images, labels, .. } => {
            let (imgs, labs) = load_idx_pair(images, labels)?;
            gen_rotated_digits(&imgs.to_mat(), &labs, data.digit_counts().expect("digits source"), seed)?
        }
        DataConfig::CsvPair {
            view_a,
            view_b,
            train_frac,
        } => load_csv_pair(view_a, view_b, *train_frac, seed)?,
    })
}

/// Step 1 with shared width `m_s` and every other setting from the config.
pub fn train_step1(cfg: &ExperimentConfig, data: &PairedDataset, m_s: usize) -> Result<SpliceModel> {
    let mut dims = cfg.model.dims(data.view_a.cols(), data.view_b.cols());
    dims.m_s = m_s;
    let mut model = SpliceModel::new(dims, &cfg.model.architecture(), cfg.seed)?;
    let report = step1_train(&mut model, data, &cfg.step1.to_core(cfg.seed))?;
    if let Some(last) = report.records.last() {
        info!(
            "step1 m_s={m_s} epochs={} rec_a={:.5} rec_b={:.5} restarts={}",
            cfg.step1.epochs, last.rec_a, last.rec_b, report.restarts
        );
    }
    Ok(model)
}

/// Held-out R² of the joint reconstruction `[x_A | x_B]` in standardized
/// space.
pub fn splice_r2(model: &SpliceModel, data: &PairedDataset) -> Result<f64> {
    let test = data.heldout_indices();
    let (xa, xb) = standardized(model, data, &test)?;
    let (ra, rb) = model.reconstruct(&xa, &xb)?;
    Ok(r_squared(&xa.hcat(&xb)?, &ra.hcat(&rb)?)?)
}

/// Parses a comma-separated dimension list.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| CliError::Config(format!("at `--dims`: `{t}` is not a positive integer")))
        })
        .collect()
}
