use std::fmt;

use crate::datagen::PairedDataset;
use crate::error::{Error, Result};
use crate::nncore::{Activation, Matrix, Network};
use crate::scalar::Scalar;

/// Observed and latent widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpliceDims {
    pub n_a: usize,
    pub n_b: usize,
    /// Private latent width of view A; may be zero.
    pub m_za: usize,
    /// Private latent width of view B; may be zero.
    pub m_zb: usize,
    pub m_s: usize,
}

impl SpliceDims {
    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || self.n_b == 0 {
            return Err(Error::config(format!(
                "observed dims must be positive (n_a={}, n_b={})",
                self.n_a, self.n_b
            )));
        }
        if self.m_s == 0 {
            return Err(Error::config("shared latent width m_s must be at least 1"));
        }
        Ok(())
    }
}

/// One of the two observed views.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum View {
    A,
    B,
}

/// The four latent groups of the crossed architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatentGroup {
    /// `z_A = F_A(x_A)`
    PrivateA,
    /// `z_B = F_B(x_B)`
    PrivateB,
    /// `s_{A->B} = F_{A->B}(x_A)`, decoded by `G_B`.
    SharedAtoB,
    /// `s_{B->A} = F_{B->A}(x_B)`, decoded by `G_A`.
    SharedBtoA,
}

impl LatentGroup {
    pub const ALL: [LatentGroup; 4] = [
        LatentGroup::PrivateA,
        LatentGroup::PrivateB,
        LatentGroup::SharedAtoB,
        LatentGroup::SharedBtoA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatentGroup::PrivateA => "z_A",
            LatentGroup::PrivateB => "z_B",
            LatentGroup::SharedAtoB => "s_AtoB",
            LatentGroup::SharedBtoA => "s_BtoA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    /// View the encoder of this group reads.
    pub fn source_view(self) -> View {
        match self {
            LatentGroup::PrivateA | LatentGroup::SharedAtoB => View::A,
            LatentGroup::PrivateB | LatentGroup::SharedBtoA => View::B,
        }
    }

    /// View whose decoder consumes this group.
    pub fn decoded_view(self) -> View {
        match self {
            LatentGroup::PrivateA | LatentGroup::SharedBtoA => View::A,
            LatentGroup::PrivateB | LatentGroup::SharedAtoB => View::B,
        }
    }

    /// The other latent feeding the same decoder.
    pub fn complement(self) -> LatentGroup {
        match self {
            LatentGroup::PrivateA => LatentGroup::SharedBtoA,
            LatentGroup::SharedBtoA => LatentGroup::PrivateA,
            LatentGroup::PrivateB => LatentGroup::SharedAtoB,
            LatentGroup::SharedAtoB => LatentGroup::PrivateB,
        }
    }

    pub fn width(self, dims: &SpliceDims) -> usize {
        match self {
            LatentGroup::PrivateA => dims.m_za,
            LatentGroup::PrivateB => dims.m_zb,
            LatentGroup::SharedAtoB | LatentGroup::SharedBtoA => dims.m_s,
        }
    }
}

impl fmt::Display for LatentGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Direction of a measurement network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `M_{A->B}`: predicts `x_B` from `z_A`.
    AtoB,
    /// `M_{B->A}`: predicts `x_A` from `z_B`.
    BtoA,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::AtoB => "AtoB",
            Direction::BtoA => "BtoA",
        }
    }

    /// Private latent the measurement network reads.
    pub fn source(self) -> LatentGroup {
        match self {
            Direction::AtoB => LatentGroup::PrivateA,
            Direction::BtoA => LatentGroup::PrivateB,
        }
    }

    /// View it tries to predict.
    pub fn target(self) -> View {
        match self {
            Direction::AtoB => View::B,
            Direction::BtoA => View::A,
        }
    }
}

/// Hidden-layer widths of the three network families.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub measurement_hidden: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    /// Same hidden stack for every network.
    pub fn uniform(hidden: &[usize]) -> Self {
        Self {
            encoder_hidden: hidden.to_vec(),
            decoder_hidden: hidden.to_vec(),
            measurement_hidden: hidden.to_vec(),
            activation: Activation::default(),
        }
    }

    /// Encoders use `hidden`, decoders and measurement nets its reverse.
    pub fn mirrored(hidden: &[usize]) -> Self {
        let rev: Vec<usize> = hidden.iter().rev().copied().collect();
        Self {
            encoder_hidden: hidden.to_vec(),
            decoder_hidden: rev.clone(),
            measurement_hidden: rev,
            activation: Activation::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let max = |v: &[usize]| v.iter().copied().max().unwrap_or(0);
        if self.measurement_hidden.len() < self.decoder_hidden.len()
            || max(&self.measurement_hidden) < max(&self.decoder_hidden)
        {
            return Err(Error::config(format!(
                "measurement networks {:?} must be at least as wide and deep as decoders {:?}",
                self.measurement_hidden, self.decoder_hidden
            )));
        }
        Ok(())
    }
}

fn stack(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input);
    dims.extend_from_slice(hidden);
    dims.push(output);
    dims
}

/// How observed columns are normalized before training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Standardization {
    /// z-score every column with its own training mean and std.
    #[default]
    PerDimension,
    /// One mean and std pooled over all columns.
    Global,
    None,
}

/// Affine map `x -> (x - mean) / std`, one entry per observed column.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Statistics over `rows` of `x`. Constant columns keep unit scale.
    pub fn fit(x: &Matrix<f64>, rows: &[usize], mode: Standardization) -> Self {
        let sub = x.select_rows(rows);
        let n = x.cols();
        match mode {
            Standardization::None => Self::identity(n),
            Standardization::PerDimension => {
                let mean = sub.col_means();
                let std = sub
                    .col_variances()
                    .into_iter()
                    .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
                    .collect();
                Self { mean, std }
            }
            Standardization::Global => {
                let count = (sub.rows() * n).max(1) as f64;
                let mu = sub.sum() / count;
                let var = sub.data().iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / count;
                let sd = if var > 1e-24 { var.sqrt() } else { 1.0 };
                Self {
                    mean: vec![mu; n],
                    std: vec![sd; n],
                }
            }
        }
    }

    pub fn apply<T: Scalar>(&self, x: &Matrix<f64>) -> Matrix<T> {
        Matrix::from_fn(x.rows(), x.cols(), |r, c| {
            T::of((x[(r, c)] - self.mean[c]) / self.std[c])
        })
    }

    pub fn invert<T: Scalar>(&self, z: &Matrix<T>) -> Matrix<f64> {
        Matrix::from_fn(z.rows(), z.cols(), |r, c| {
            z[(r, c)].as_f64() * self.std[c] + self.mean[c]
        })
    }
}

/// Estimated latents for a batch. Absent private latents are `rows x 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentBundle<T> {
    pub z_a: Matrix<T>,
    pub z_b: Matrix<T>,
    pub s_ab: Matrix<T>,
    pub s_ba: Matrix<T>,
}

impl<T: Scalar> LatentBundle<T> {
    pub fn rows(&self) -> usize {
        self.s_ab.rows()
    }

    pub fn group(&self, g: LatentGroup) -> &Matrix<T> {
        match g {
            LatentGroup::PrivateA => &self.z_a,
            LatentGroup::PrivateB => &self.z_b,
            LatentGroup::SharedAtoB => &self.s_ab,
            LatentGroup::SharedBtoA => &self.s_ba,
        }
    }

    pub fn group_mut(&mut self, g: LatentGroup) -> &mut Matrix<T> {
        match g {
            LatentGroup::PrivateA => &mut self.z_a,
            LatentGroup::PrivateB => &mut self.z_b,
            LatentGroup::SharedAtoB => &mut self.s_ab,
            LatentGroup::SharedBtoA => &mut self.s_ba,
        }
    }
}

/// Six autoencoder networks plus two measurement networks.
///
/// `encode`/`decode` operate in standardized coordinates; use
/// [`SpliceModel::standardize`] and [`SpliceModel::destandardize`] to move
/// between raw and model space.
#[derive(Clone, Debug)]
pub struct SpliceModel<T> {
    pub dims: SpliceDims,
    pub f_a: Option<Network<T>>,
    pub f_b: Option<Network<T>>,
    pub f_ab: Network<T>,
    pub f_ba: Network<T>,
    pub g_a: Network<T>,
    pub g_b: Network<T>,
    pub m_ab: Option<Network<T>>,
    pub m_ba: Option<Network<T>>,
    pub norm_a: Standardizer,
    pub norm_b: Standardizer,
}

impl<T: Scalar> PartialEq for SpliceModel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.f_a == other.f_a
            && self.f_b == other.f_b
            && self.f_ab == other.f_ab
            && self.f_ba == other.f_ba
            && self.g_a == other.g_a
            && self.g_b == other.g_b
            && self.m_ab == other.m_ab
            && self.m_ba == other.m_ba
            && self.norm_a == other.norm_a
            && self.norm_b == other.norm_b
    }
}

/// Seed for network `slot` of generation `generation` (0 for the initial
/// build, incremented at every measurement-network restart).
pub(crate) fn net_seed(seed: u64, slot: u64, generation: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(slot.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(generation.wrapping_mul(0x94D0_49BB_1331_11EB))
}

impl<T: Scalar> SpliceModel<T> {
    pub fn new(dims: SpliceDims, arch: &Architecture, seed: u64) -> Result<Self> {
        dims.validate()?;
        arch.validate()?;
        let act = arch.activation;
        let enc = |input, output, slot| {
            Network::new(
                &stack(input, &arch.encoder_hidden, output),
                act,
                net_seed(seed, slot, 0),
            )
        };
        let dec = |input, output, slot| {
            Network::new(
                &stack(input, &arch.decoder_hidden, output),
                act,
                net_seed(seed, slot, 0),
            )
        };
        let f_a = (dims.m_za > 0).then(|| enc(dims.n_a, dims.m_za, 0)).transpose()?;
        let f_b = (dims.m_zb > 0).then(|| enc(dims.n_b, dims.m_zb, 1)).transpose()?;
        let mut model = Self {
            dims,
            f_a,
            f_b,
            f_ab: enc(dims.n_a, dims.m_s, 2)?,
            f_ba: enc(dims.n_b, dims.m_s, 3)?,
            g_a: dec(dims.m_s + dims.m_za, dims.n_a, 4)?,
            g_b: dec(dims.m_s + dims.m_zb, dims.n_b, 5)?,
            m_ab: None,
            m_ba: None,
            norm_a: Standardizer::identity(dims.n_a),
            norm_b: Standardizer::identity(dims.n_b),
        };
        model.reset_measurement(&arch.measurement_hidden, act, seed, 0)?;
        Ok(model)
    }

    /// Re-initializes both measurement networks (cold restart).
    pub fn reset_measurement(&mut self, hidden: &[usize], act: Activation, seed: u64, generation: u64) -> Result<()> {
        let d = self.dims;
        self.m_ab = (d.m_za > 0)
            .then(|| Network::new(&stack(d.m_za, hidden, d.n_b), act, net_seed(seed, 6, generation)))
            .transpose()?;
        self.m_ba = (d.m_zb > 0)
            .then(|| Network::new(&stack(d.m_zb, hidden, d.n_a), act, net_seed(seed, 7, generation)))
            .transpose()?;
        Ok(())
    }

    /// Hidden widths of the measurement networks (empty when both are absent).
    pub fn measurement_hidden(&self) -> Vec<usize> {
        self.m_ab
            .as_ref()
            .or(self.m_ba.as_ref())
            .map(|n| n.dims()[1..n.dims().len() - 1].to_vec())
            .unwrap_or_default()
    }

    pub fn activation(&self) -> Activation {
        self.g_a.hidden_activation()
    }

    pub fn measurement(&self, dir: Direction) -> Option<&Network<T>> {
        match dir {
            Direction::AtoB => self.m_ab.as_ref(),
            Direction::BtoA => self.m_ba.as_ref(),
        }
    }

    pub fn encoder(&self, g: LatentGroup) -> Option<&Network<T>> {
        match g {
            LatentGroup::PrivateA => self.f_a.as_ref(),
            LatentGroup::PrivateB => self.f_b.as_ref(),
            LatentGroup::SharedAtoB => Some(&self.f_ab),
            LatentGroup::SharedBtoA => Some(&self.f_ba),
        }
    }

    pub fn decoder(&self, v: View) -> &Network<T> {
        match v {
            View::A => &self.g_a,
            View::B => &self.g_b,
        }
    }

    pub fn normalizer(&self, v: View) -> &Standardizer {
        match v {
            View::A => &self.norm_a,
            View::B => &self.norm_b,
        }
    }

    /// Fits both standardizers on the training split of `data`.
    pub fn fit_standardization(&mut self, data: &PairedDataset, mode: Standardization) {
        let rows = data.train_indices();
        self.norm_a = Standardizer::fit(&data.view_a, &rows, mode);
        self.norm_b = Standardizer::fit(&data.view_b, &rows, mode);
    }

    pub fn standardize(&self, v: View, x: &Matrix<f64>) -> Result<Matrix<T>> {
        let norm = self.normalizer(v);
        if x.cols() != norm.mean.len() {
            return Err(Error::config(format!(
                "view {v:?} has {} columns, model expects {}",
                x.cols(),
                norm.mean.len()
            )));
        }
        Ok(norm.apply(x))
    }

    pub fn destandardize(&self, v: View, x: &Matrix<T>) -> Matrix<f64> {
        self.normalizer(v).invert(x)
    }

    /// Latent group of a single view's batch.
    pub fn encode_group(&self, g: LatentGroup, x: &Matrix<T>) -> Result<Matrix<T>> {
        match self.encoder(g) {
            Some(net) => net.predict(x),
            None => Ok(Matrix::zeros(x.rows(), 0)),
        }
    }

    /// Applies the four encoders. Inputs are in standardized coordinates.
    pub fn encode(&self, x_a: &Matrix<T>, x_b: &Matrix<T>) -> Result<LatentBundle<T>> {
        if x_a.cols() != self.dims.n_a || x_b.cols() != self.dims.n_b {
            return Err(Error::config(format!(
                "encode expects ({}, {}) columns, got ({}, {})",
                self.dims.n_a,
                self.dims.n_b,
                x_a.cols(),
                x_b.cols()
            )));
        }
        if x_a.rows() != x_b.rows() {
            return Err(Error::config("views must have equal row counts"));
        }
        Ok(LatentBundle {
            z_a: self.encode_group(LatentGroup::PrivateA, x_a)?,
            z_b: self.encode_group(LatentGroup::PrivateB, x_b)?,
            s_ab: self.f_ab.predict(x_a)?,
            s_ba: self.f_ba.predict(x_b)?,
        })
    }

    /// Decoder input for view `v`: `[shared from the other view | private]`.
    pub fn decoder_input(&self, v: View, bundle: &LatentBundle<T>) -> Result<Matrix<T>> {
        let (shared, private, m_z) = match v {
            View::A => (&bundle.s_ba, &bundle.z_a, self.dims.m_za),
            View::B => (&bundle.s_ab, &bundle.z_b, self.dims.m_zb),
        };
        if shared.cols() != self.dims.m_s || private.cols() != m_z {
            return Err(Error::config(format!(
                "decoder {v:?} expects latents ({}, {m_z}), got ({}, {})",
                self.dims.m_s,
                shared.cols(),
                private.cols()
            )));
        }
        shared.hcat(private)
    }

    /// `x_A_hat = G_A(s_{B->A}, z_A)` and `x_B_hat = G_B(s_{A->B}, z_B)`.
    pub fn decode(&self, bundle: &LatentBundle<T>) -> Result<(Matrix<T>, Matrix<T>)> {
        let in_a = self.decoder_input(View::A, bundle)?;
        let in_b = self.decoder_input(View::B, bundle)?;
        Ok((self.g_a.predict(&in_a)?, self.g_b.predict(&in_b)?))
    }

    pub fn reconstruct(&self, x_a: &Matrix<T>, x_b: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
        self.decode(&self.encode(x_a, x_b)?)
    }

    pub fn cast<U: Scalar>(&self) -> SpliceModel<U> {
        SpliceModel {
            dims: self.dims,
            f_a: self.f_a.as_ref().map(Network::cast),
            f_b: self.f_b.as_ref().map(Network::cast),
            f_ab: self.f_ab.cast(),
            f_ba: self.f_ba.cast(),
            g_a: self.g_a.cast(),
            g_b: self.g_b.cast(),
            m_ab: self.m_ab.as_ref().map(Network::cast),
            m_ba: self.m_ba.as_ref().map(Network::cast),
            norm_a: self.norm_a.clone(),
            norm_b: self.norm_b.clone(),
        }
    }
}
