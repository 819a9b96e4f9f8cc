use rand::RngCore as _;

use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::nncore::{Activation, AdamConfig, AdamState};
use crate::splice::output_variance;
use crate::{Mat, Mlp};

/// Training recipe for a fresh regression probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub base_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::default(),
            epochs: 50,
            minibatch_size: 256,
            base_lr: 1e-3,
            final_lr: 1e-5,
            seed: 0,
        }
    }
}

/// Trains a fresh network regressing `y` on `x` with mean squared error.
pub fn fit_probe(x: &Mat, y: &Mat, cfg: &ProbeConfig) -> Result<Mlp> {
    if x.rows() != y.rows() || x.rows() < 2 {
        return Err(Error::config("probe needs at least 2 paired rows"));
    }
    if cfg.epochs == 0 || cfg.minibatch_size == 0 {
        return Err(Error::config("probe epochs and minibatch size must be positive"));
    }
    let mut dims = vec![x.cols()];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(y.cols());
    let mut net = Mlp::new(
        &dims,
        cfg.activation,
        rng::stream(cfg.seed, streams::METRICS).next_u64(),
    )?;
    let n = x.rows();
    let batch = cfg.minibatch_size.min(n);
    let per_epoch = n.div_ceil(batch);
    let adam_cfg = AdamConfig {
        base_lr: cfg.base_lr,
        final_lr: cfg.final_lr,
        total_epochs: cfg.epochs as f64,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::for_network(&net, adam_cfg);
    let mut r = rng::stream(cfg.seed, streams::MSR_SHUFFLE);
    for epoch in 0..cfg.epochs {
        let order = rng::permutation(n, &mut r);
        for (b, idx) in order.chunks(batch).enumerate() {
            if idx.len() < 2 {
                continue;
            }
            let xb = x.select_rows(idx);
            let yb = y.select_rows(idx);
            let out = net.forward(&xb)?;
            let scale = 2.0 / (out.data().len() as f64);
            let grad = out.zip_with(&yb, |p, t| scale * (p - t))?;
            let g = net.backward(&grad)?;
            if !g.is_finite() {
                return Err(Error::NonFinite {
                    term: "probe",
                    iteration: epoch * per_epoch + b,
                });
            }
            adam.step_network(&mut net, &g, epoch as f64 + b as f64 / per_epoch as f64)?;
        }
    }
    Ok(net)
}

/// Elementwise `order`-th power of `x` centered on `mean`, then scaled per
/// column by `scale`.
fn power_target(x: &Mat, mean: &[f64], order: u32, scale: &[f64]) -> Mat {
    Mat::from_fn(x.rows(), x.cols(), |r, c| {
        (x[(r, c)] - mean[c]).powi(order as i32) / scale[c]
    })
}

/// Held-out output-variance ratio of a fresh probe predicting the centered
/// `order`-th power of the other view from a private latent.
///
/// Targets are z-scored per column on the training rows, so the ratio is
/// `Var[probe(z)] / Var[target]`, both averaged over columns. `order = 1`
/// is the measurement-variance ratio with a freshly trained network.
pub fn higher_order_check(
    z_train: &Mat,
    other_train: &Mat,
    z_test: &Mat,
    other_test: &Mat,
    order: u32,
    cfg: &ProbeConfig,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::config("independence order must be at least 1"));
    }
    let mean = other_train.col_means();
    let ones = vec![1.0; mean.len()];
    let raw = power_target(other_train, &mean, order, &ones);
    let scale: Vec<f64> = raw
        .col_variances()
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    let target = power_target(other_train, &mean, order, &scale);
    let target_test = power_target(other_test, &mean, order, &scale);
    let net = fit_probe(z_train, &target, cfg)?;
    let denom = output_variance(&target_test)?;
    if denom <= 0.0 {
        return Err(Error::Degenerate("held-out target has zero variance".into()));
    }
    Ok(output_variance(&net.predict(z_test)?)? / denom)
}
