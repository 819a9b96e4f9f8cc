//! Experiment configuration: a strict JSON schema with an embedded format
//! version. Every section has defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use splice_core::baselines::ClassifierConfig;
use splice_core::datagen::{DigitCounts, LgnV1Config, LinearToyConfig};
use splice_core::geometry::Step2Config;
use splice_core::metrics::ProbeConfig;
use splice_core::nncore::Activation;
use splice_core::splice::{Architecture, SpliceDims, Standardization, Step1Config};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Excluded from the config hash.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub step1: Step1Section,
    #[serde(default)]
    pub step2: Step2Section,
    #[serde(default)]
    pub baselines: BaselinesSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    Lgnv1 {
        #[serde(default = "d_grid")]
        grid: usize,
        #[serde(default = "d_trials")]
        trials: usize,
        #[serde(default)]
        noise_level: f64,
        #[serde(default = "d_ratio")]
        private_ratio: f64,
        #[serde(default = "d_bar_w")]
        bar_width: f64,
        #[serde(default = "d_bar_h")]
        bar_height: f64,
        #[serde(default = "d_train_frac")]
        train_frac: f64,
    },
    RotatedDigits {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default = "d_digits_train")]
        train: usize,
        #[serde(default)]
        val: usize,
        #[serde(default = "d_digits_test")]
        test: usize,
    },
    LinearToy {
        #[serde(default = "d_toy_n")]
        n: usize,
        #[serde(default = "d_toy_dim")]
        n_a: usize,
        #[serde(default = "d_toy_dim")]
        n_b: usize,
        #[serde(default = "d_two")]
        m_za: usize,
        #[serde(default = "d_two")]
        m_zb: usize,
        #[serde(default = "d_two")]
        m_s: usize,
        #[serde(default = "d_toy_noise")]
        noise: f64,
        #[serde(default = "d_train_frac")]
        train_frac: f64,
    },
    CsvPair {
        view_a: PathBuf,
        view_b: PathBuf,
        /// Used only when view A has no `split` column.
        #[serde(default = "d_train_frac")]
        train_frac: f64,
    },
}

fn d_grid() -> usize {
    LgnV1Config::default().grid
}
fn d_trials() -> usize {
    LgnV1Config::default().n_trials
}
fn d_ratio() -> f64 {
    LgnV1Config::default().private_ratio
}
fn d_bar_w() -> f64 {
    LgnV1Config::default().bar_width
}
fn d_bar_h() -> f64 {
    LgnV1Config::default().bar_height
}
fn d_train_frac() -> f64 {
    0.8
}
fn d_digits_train() -> usize {
    8_000
}
fn d_digits_test() -> usize {
    2_000
}
fn d_toy_n() -> usize {
    10_000
}
fn d_toy_dim() -> usize {
    10
}
fn d_two() -> usize {
    2
}
fn d_toy_noise() -> f64 {
    0.05
}

impl DataConfig {
    pub fn name(&self) -> &'static str {
        match self {
            DataConfig::Lgnv1 { .. } => "lgnv1",
            DataConfig::RotatedDigits { .. } => "rotated_digits",
            DataConfig::LinearToy { .. } => "linear_toy",
            DataConfig::CsvPair { .. } => "csv_pair",
        }
    }

    pub fn lgnv1(&self, seed: u64) -> Option<LgnV1Config> {
        match *self {
            DataConfig::Lgnv1 {
                grid,
                trials,
                noise_level,
                private_ratio,
                bar_width,
                bar_height,
                train_frac,
            } => Some(LgnV1Config {
                grid,
                n_trials: trials,
                noise_level,
                private_ratio,
                bar_width,
                bar_height,
                train_frac,
                seed,
                ..LgnV1Config::default()
            }),
            _ => None,
        }
    }

    pub fn linear_toy(&self, seed: u64) -> Option<LinearToyConfig> {
        match *self {
            DataConfig::LinearToy {
                n,
                n_a,
                n_b,
                m_za,
                m_zb,
                m_s,
                noise,
                train_frac,
            } => Some(LinearToyConfig {
                dims: SpliceDims {
                    n_a,
                    n_b,
                    m_za,
                    m_zb,
                    m_s,
                },
                noise,
                n,
                train_frac,
                val_frac: 0.0,
                seed,
            }),
            _ => None,
        }
    }

    pub fn digit_counts(&self) -> Option<DigitCounts> {
        match *self {
            DataConfig::RotatedDigits { train, val, test, .. } => Some(DigitCounts { train, val, test }),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationName {
    LeakyRelu,
    Tanh,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizationName {
    PerDimension,
    Global,
    None,
}

impl From<StandardizationName> for Standardization {
    fn from(s: StandardizationName) -> Self {
        match s {
            StandardizationName::PerDimension => Standardization::PerDimension,
            StandardizationName::Global => Standardization::Global,
            StandardizationName::None => Standardization::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub m_za: usize,
    pub m_zb: usize,
    pub m_s: usize,
    /// Encoder hidden widths.
    pub hidden: Vec<usize>,
    /// Decoder hidden widths; defaults to `hidden`.
    #[serde(default)]
    pub decoder_hidden: Option<Vec<usize>>,
    /// Measurement-network hidden widths; defaults to the decoder widths.
    #[serde(default)]
    pub measurement_hidden: Option<Vec<usize>>,
    #[serde(default = "d_activation")]
    pub activation: ActivationName,
    #[serde(default = "d_slope")]
    pub leaky_slope: f64,
}

fn d_activation() -> ActivationName {
    ActivationName::LeakyRelu
}
fn d_slope() -> f64 {
    0.01
}

impl ModelConfig {
    pub fn dims(&self, n_a: usize, n_b: usize) -> SpliceDims {
        SpliceDims {
            n_a,
            n_b,
            m_za: self.m_za,
            m_zb: self.m_zb,
            m_s: self.m_s,
        }
    }

    pub fn architecture(&self) -> Architecture {
        let decoder = self.decoder_hidden.clone().unwrap_or_else(|| self.hidden.clone());
        Architecture {
            encoder_hidden: self.hidden.clone(),
            measurement_hidden: self.measurement_hidden.clone().unwrap_or_else(|| decoder.clone()),
            decoder_hidden: decoder,
            activation: match self.activation {
                ActivationName::LeakyRelu => Activation::LeakyRelu(self.leaky_slope),
                ActivationName::Tanh => Activation::Tanh,
                ActivationName::Linear => Activation::Linear,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Step1Section {
    pub epochs: usize,
    /// `0` means full batch.
    pub minibatch_size: usize,
    pub n_msr_inner: usize,
    pub n_msr_restart: usize,
    pub t_restart: usize,
    pub disentangle_weight: f64,
    pub base_lr: f64,
    pub final_lr: f64,
    pub standardization: StandardizationName,
    pub log_every: usize,
}

impl Default for Step1Section {
    fn default() -> Self {
        let d = Step1Config::default();
        Self {
            epochs: d.epochs,
            minibatch_size: d.minibatch_size,
            n_msr_inner: d.n_msr_inner,
            n_msr_restart: d.n_msr_restart,
            t_restart: d.t_restart,
            disentangle_weight: d.disentangle_weight,
            base_lr: d.base_lr,
            final_lr: d.final_lr,
            standardization: StandardizationName::PerDimension,
            log_every: d.log_every,
        }
    }
}

impl Step1Section {
    pub fn to_core(&self, seed: u64) -> Step1Config {
        Step1Config {
            epochs: self.epochs,
            minibatch_size: self.minibatch_size,
            n_msr_inner: self.n_msr_inner,
            n_msr_restart: self.n_msr_restart,
            t_restart: self.t_restart,
            disentangle_weight: self.disentangle_weight,
            base_lr: self.base_lr,
            final_lr: self.final_lr,
            standardization: Some(self.standardization.into()),
            seed,
            log_every: self.log_every,
        }
    }
}

/// Geometry-loss weight per latent group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoWeights {
    #[serde(rename = "z_A")]
    pub z_a: f64,
    #[serde(rename = "z_B")]
    pub z_b: f64,
    #[serde(rename = "s_AtoB")]
    pub s_ab: f64,
    #[serde(rename = "s_BtoA")]
    pub s_ba: f64,
}

impl Default for GeoWeights {
    fn default() -> Self {
        Self {
            z_a: 1.0,
            z_b: 1.0,
            s_ab: 1.0,
            s_ba: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Step2Section {
    pub enabled: bool,
    pub k_graph: usize,
    pub k_avg: usize,
    pub n_landmarks: usize,
    pub geo_weight: GeoWeights,
    /// Schedule of the continued training; its `standardization` is ignored.
    pub train: Step1Section,
}

impl Default for Step2Section {
    fn default() -> Self {
        let d = Step2Config::default();
        Self {
            enabled: false,
            k_graph: d.k_graph,
            k_avg: d.k_avg,
            n_landmarks: d.n_landmarks,
            geo_weight: GeoWeights::default(),
            train: Step1Section::default(),
        }
    }
}

impl Step2Section {
    pub fn to_core(&self, seed: u64) -> Step2Config {
        let w = &self.geo_weight;
        Step2Config {
            k_graph: self.k_graph,
            k_avg: self.k_avg,
            n_landmarks: self.n_landmarks,
            // Indexed by LatentGroup::tag: z_A, z_B, s_AtoB, s_BtoA.
            geo_weight: [w.z_a, w.z_b, w.s_ab, w.s_ba],
            train: self.train.to_core(seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let d = ClassifierConfig::default();
        Self {
            lr: d.lr,
            epochs: d.epochs,
            l2: d.l2,
        }
    }
}

impl ClassifierSection {
    pub fn to_core(&self, seed: u64) -> ClassifierConfig {
        ClassifierConfig {
            lr: self.lr,
            epochs: self.epochs,
            l2: self.l2,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselinesSection {
    /// RRR ranks for the saturation curve (capped at the rank limit).
    pub rrr_dims: Vec<usize>,
    /// Shared widths for the SPLICE saturation curve; one model per entry.
    /// Empty disables the curve.
    pub splice_dims: Vec<usize>,
    pub cca_components: usize,
    pub saturation_fraction: f64,
    pub classifier: ClassifierSection,
}

impl Default for BaselinesSection {
    fn default() -> Self {
        Self {
            rrr_dims: vec![1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 100],
            splice_dims: Vec::new(),
            cca_components: 2,
            saturation_fraction: splice_core::baselines::SATURATION_FRACTION,
            classifier: ClassifierSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Test digits rotated through the dense angle grid.
    pub dense_digits: usize,
    pub angle_steps: usize,
    /// Window width in angle steps (odd).
    pub angle_window: usize,
    /// Orders of the higher-order independence probe; empty disables it.
    pub higher_order: Vec<u32>,
    pub probe_epochs: usize,
    pub probe_hidden: Vec<usize>,
    /// Test digits whose private-latent projection is checked against the
    /// observed images; 0 disables it.
    pub membership_samples: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let p = ProbeConfig::default();
        Self {
            dense_digits: 100,
            angle_steps: 360,
            angle_window: 5,
            higher_order: Vec::new(),
            probe_epochs: p.epochs,
            probe_hidden: p.hidden,
            membership_samples: 1_000,
        }
    }
}

impl MetricsSection {
    pub fn probe(&self, seed: u64) -> ProbeConfig {
        ProbeConfig {
            hidden: self.probe_hidden.clone(),
            epochs: self.probe_epochs,
            seed,
            ..ProbeConfig::default()
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates, reporting the JSON path of any schema error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(CliError::Config(format!("at `{field}`: {msg}")));
        if self.format_version != FORMAT_VERSION {
            return bad(
                "format_version",
                &format!("unsupported version {}, expected {FORMAT_VERSION}", self.format_version),
            );
        }
        match &self.data {
            DataConfig::Lgnv1 { grid, trials, .. } => {
                if *grid < 2 {
                    return bad("data.grid", "must be at least 2");
                }
                if *trials < 2 {
                    return bad("data.trials", "must be at least 2");
                }
            }
            DataConfig::RotatedDigits {
                images,
                labels,
                train,
                test,
                ..
            } => {
                for (field, p) in [("data.images", images), ("data.labels", labels)] {
                    if !p.exists() {
                        return bad(field, &format!("file {} does not exist", p.display()));
                    }
                }
                if *train == 0 || *test == 0 {
                    return bad("data.train", "train and test counts must be positive");
                }
            }
            DataConfig::LinearToy { n, .. } => {
                if *n < 2 {
                    return bad("data.n", "must be at least 2");
                }
            }
            DataConfig::CsvPair { view_a, view_b, .. } => {
                for (field, p) in [("data.view_a", view_a), ("data.view_b", view_b)] {
                    if !p.exists() {
                        return bad(field, &format!("file {} does not exist", p.display()));
                    }
                }
            }
        }
        if self.model.m_s == 0 {
            return bad("model.m_s", "must be positive");
        }
        if self.model.hidden.contains(&0) {
            return bad("model.hidden", "widths must be positive");
        }
        for (field, s) in [("step1", &self.step1), ("step2.train", &self.step2.train)] {
            if s.epochs == 0 {
                return bad(&format!("{field}.epochs"), "must be positive");
            }
            if s.n_msr_inner == 0 || s.n_msr_restart == 0 || s.t_restart == 0 {
                return bad(field, "measurement step counts and restart period must be positive");
            }
        }
        if self.step2.enabled && (self.step2.k_graph == 0 || self.step2.k_avg == 0 || self.step2.n_landmarks < 2) {
            return bad("step2", "k_graph and k_avg must be positive, n_landmarks at least 2");
        }
        if self
            .baselines
            .rrr_dims
            .iter()
            .chain(&self.baselines.splice_dims)
            .any(|&d| d == 0)
        {
            return bad("baselines", "dimension lists must hold positive entries");
        }
        if self.metrics.angle_window.is_multiple_of(2) || self.metrics.angle_steps == 0 {
            return bad("metrics.angle_window", "must be odd with a positive angle_steps");
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}
