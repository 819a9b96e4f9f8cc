use log::info;

use crate::datagen::PairedDataset;
use crate::error::{Error, Result};
use crate::geometry::{geo_loss_pairs, GeodesicTable};
use crate::nncore::rng::{self, streams, Rng};
use crate::nncore::{AdamConfig, AdamState, Matrix, Network};
use crate::scalar::Scalar;
use crate::splice::loss::{output_variance, output_variance_grad, recon_grad, recon_loss};
use crate::splice::{LatentGroup, SpliceModel, Standardization, View};

/// Schedule of the alternating step-1 optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Step1Config {
    /// Passes over the training split. One outer iteration consumes one
    /// minibatch, so `n_iter = epochs * batches_per_epoch`.
    pub epochs: usize,
    /// Samples per minibatch; `0` means full batch.
    pub minibatch_size: usize,
    /// Measurement-network steps per outer iteration.
    pub n_msr_inner: usize,
    /// Measurement-network steps right after a cold restart.
    pub n_msr_restart: usize,
    /// Cold-restart period in outer iterations.
    pub t_restart: usize,
    /// Multiplier on the measurement-variance penalty.
    pub disentangle_weight: f64,
    pub base_lr: f64,
    pub final_lr: f64,
    /// Refit view standardization on the training split before training.
    pub standardization: Option<Standardization>,
    pub seed: u64,
    /// Emit one progress line every this many iterations (0 disables).
    pub log_every: usize,
}

impl Default for Step1Config {
    fn default() -> Self {
        Self {
            epochs: 100,
            minibatch_size: 0,
            n_msr_inner: 5,
            n_msr_restart: 1000,
            t_restart: 1000,
            disentangle_weight: 1.0,
            base_lr: 1e-3,
            final_lr: 1e-5,
            standardization: Some(Standardization::PerDimension),
            seed: 0,
            log_every: 0,
        }
    }
}

impl Step1Config {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("epochs", self.epochs),
            ("n_msr_inner", self.n_msr_inner),
            ("n_msr_restart", self.n_msr_restart),
            ("t_restart", self.t_restart),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !(self.disentangle_weight >= 0.0) {
            return Err(Error::config("disentangle_weight must be non-negative"));
        }
        if !(self.base_lr > 0.0 && self.final_lr > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            base_lr: self.base_lr,
            final_lr: self.final_lr,
            total_epochs: self.epochs as f64,
            ..AdamConfig::default()
        }
    }
}

/// Losses recorded at one outer iteration. Geometry terms are `None` outside
/// step 2 or for inactive groups.
#[derive(Clone, Debug, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub epoch: f64,
    pub rec_a: f64,
    pub rec_b: f64,
    pub var_ab: f64,
    pub var_ba: f64,
    pub pred_a: f64,
    pub pred_b: f64,
    pub geo: [Option<f64>; 4],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub records: Vec<LossRecord>,
    pub batches_per_epoch: usize,
    pub restarts: usize,
}

impl TrainReport {
    /// Mean reconstruction loss (`rec_a + rec_b`) over the last `n` records.
    pub fn tail_reconstruction(&self, n: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        tail.iter().map(|r| r.rec_a + r.rec_b).sum::<f64>() / tail.len().max(1) as f64
    }
}

/// Geometry-preserving term attached to the autoencoder objective.
#[derive(Clone, Debug)]
pub struct GeoTerm<T> {
    pub weight: f64,
    pub table: GeodesicTable<T>,
}

/// Minibatch index stream over `0..n`, reshuffled every pass. Full batch
/// yields `0..n` in order.
struct BatchSampler {
    n: usize,
    batch: usize,
    rng: Rng,
    queue: Vec<Vec<usize>>,
}

impl BatchSampler {
    fn new(n: usize, minibatch: usize, rng: Rng) -> Self {
        let batch = if minibatch == 0 || minibatch >= n { n } else { minibatch };
        Self {
            n,
            batch,
            rng,
            queue: Vec::new(),
        }
    }

    fn batches_per_epoch(&self) -> usize {
        let full = self.n / self.batch;
        let rem = self.n % self.batch;
        if rem >= 2 || full == 0 {
            full + 1
        } else {
            full
        }
    }

    fn next_batch(&mut self) -> Vec<usize> {
        if self.batch == self.n {
            return (0..self.n).collect();
        }
        if self.queue.is_empty() {
            let perm = rng::permutation(self.n, &mut self.rng);
            let mut chunks: Vec<Vec<usize>> = perm.chunks(self.batch).map(<[usize]>::to_vec).collect();
            if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < 2) {
                let tail = chunks.pop().unwrap();
                chunks.last_mut().unwrap().extend(tail);
            }
            chunks.reverse();
            self.queue = chunks;
        }
        self.queue.pop().unwrap()
    }
}

fn finite<T: Scalar>(v: T, term: &'static str, iteration: usize) -> Result<f64> {
    let x = v.as_f64();
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { term, iteration })
    }
}

fn geo_term_name(g: LatentGroup) -> &'static str {
    match g {
        LatentGroup::PrivateA => "geo_z_A",
        LatentGroup::PrivateB => "geo_z_B",
        LatentGroup::SharedAtoB => "geo_s_AtoB",
        LatentGroup::SharedBtoA => "geo_s_BtoA",
    }
}

struct GeoBinding<T> {
    group: LatentGroup,
    weight: T,
    table: GeodesicTable<T>,
    /// Standardized training rows of the landmark samples.
    landmark_rows: Matrix<T>,
}

/// Alternating trainer over one model and the training split of a dataset.
///
/// Each outer iteration runs [`autoencoder_step`](Self::autoencoder_step),
/// [`disentangle_step`](Self::disentangle_step) and
/// [`measurement_steps`](Self::measurement_steps) on fresh minibatches.
pub struct Step1Trainer<'m, T: Scalar> {
    model: &'m mut SpliceModel<T>,
    cfg: Step1Config,
    x_a: Matrix<T>,
    x_b: Matrix<T>,
    sampler: BatchSampler,
    msr_sampler: BatchSampler,
    /// Optimizers for F_A, F_B, F_{A->B}, F_{B->A}, G_A, G_B.
    opt_ae: [Option<AdamState<T>>; 6],
    /// Separate optimizers for the private encoders under the variance penalty.
    opt_priv: [Option<AdamState<T>>; 2],
    opt_msr: [Option<AdamState<T>>; 2],
    geo: Vec<GeoBinding<T>>,
    iteration: usize,
    generation: u64,
    restarts: usize,
}

fn adam_for<T: Scalar>(net: Option<&Network<T>>, cfg: AdamConfig) -> Option<AdamState<T>> {
    net.map(|n| AdamState::for_network(n, cfg))
}

impl<'m, T: Scalar> Step1Trainer<'m, T> {
    pub fn new(model: &'m mut SpliceModel<T>, data: &PairedDataset, cfg: &Step1Config) -> Result<Self> {
        cfg.validate()?;
        if data.view_a.cols() != model.dims.n_a || data.view_b.cols() != model.dims.n_b {
            return Err(Error::config(format!(
                "dataset has ({}, {}) columns, model expects ({}, {})",
                data.view_a.cols(),
                data.view_b.cols(),
                model.dims.n_a,
                model.dims.n_b
            )));
        }
        let train = data.train_indices();
        if train.len() < 2 {
            return Err(Error::Degenerate(format!(
                "training split has {} samples, need at least 2",
                train.len()
            )));
        }
        if let Some(mode) = cfg.standardization {
            model.fit_standardization(data, mode);
        }
        let x_a = model.standardize(View::A, &data.view_a.select_rows(&train))?;
        let x_b = model.standardize(View::B, &data.view_b.select_rows(&train))?;
        let n = train.len();
        let adam = cfg.adam();
        let opt_ae = [
            adam_for(model.f_a.as_ref(), adam),
            adam_for(model.f_b.as_ref(), adam),
            adam_for(Some(&model.f_ab), adam),
            adam_for(Some(&model.f_ba), adam),
            adam_for(Some(&model.g_a), adam),
            adam_for(Some(&model.g_b), adam),
        ];
        let opt_priv = [adam_for(model.f_a.as_ref(), adam), adam_for(model.f_b.as_ref(), adam)];
        let opt_msr = [adam_for(model.m_ab.as_ref(), adam), adam_for(model.m_ba.as_ref(), adam)];
        Ok(Self {
            model,
            cfg: cfg.clone(),
            x_a,
            x_b,
            sampler: BatchSampler::new(n, cfg.minibatch_size, rng::stream(cfg.seed, streams::SHUFFLE)),
            msr_sampler: BatchSampler::new(n, cfg.minibatch_size, rng::stream(cfg.seed, streams::MSR_SHUFFLE)),
            opt_ae,
            opt_priv,
            opt_msr,
            geo: Vec::new(),
            iteration: 0,
            generation: 0,
            restarts: 0,
        })
    }

    /// Adds geometry-preserving terms. Table columns index training rows.
    pub fn with_geometry(mut self, terms: Vec<GeoTerm<T>>) -> Result<Self> {
        for term in terms {
            let g = term.table.group;
            if g.width(&self.model.dims) == 0 {
                continue;
            }
            if term.table.n_samples() != self.x_a.rows() {
                return Err(Error::config(format!(
                    "geodesic table for {g} covers {} samples, training split has {}",
                    term.table.n_samples(),
                    self.x_a.rows()
                )));
            }
            let source = match g.source_view() {
                View::A => &self.x_a,
                View::B => &self.x_b,
            };
            let landmark_rows = source.select_rows(&term.table.landmarks);
            self.geo.push(GeoBinding {
                group: g,
                weight: T::of(term.weight),
                table: term.table,
                landmark_rows,
            });
        }
        Ok(self)
    }

    pub fn model(&self) -> &SpliceModel<T> {
        self.model
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.sampler.batches_per_epoch()
    }

    pub fn n_iter(&self) -> usize {
        self.cfg.epochs * self.batches_per_epoch()
    }

    fn epoch(&self) -> f64 {
        self.iteration.saturating_sub(1) as f64 / self.batches_per_epoch() as f64
    }

    /// One Adam step on all encoders and decoders for reconstruction (plus
    /// any geometry terms). Returns `(rec_a, rec_b, geo)`.
    pub fn autoencoder_step(&mut self, idx: &[usize]) -> Result<(f64, f64, [Option<f64>; 4])> {
        let it = self.iteration;
        let epoch = self.epoch();
        let b = idx.len();
        let xa = self.x_a.select_rows(idx);
        let xb = self.x_b.select_rows(idx);
        let m = &mut *self.model;

        // Encoder passes; geometry groups append their landmark rows.
        let mut outputs: [Option<Matrix<T>>; 4] = [None, None, None, None];
        for (slot, g) in LatentGroup::ALL.into_iter().enumerate() {
            let x = match g.source_view() {
                View::A => &xa,
                View::B => &xb,
            };
            let input = match self.geo.iter().find(|t| t.group == g) {
                Some(t) => x.vcat(&t.landmark_rows)?,
                None => x.clone(),
            };
            let net = match g {
                LatentGroup::PrivateA => m.f_a.as_mut(),
                LatentGroup::PrivateB => m.f_b.as_mut(),
                LatentGroup::SharedAtoB => Some(&mut m.f_ab),
                LatentGroup::SharedBtoA => Some(&mut m.f_ba),
            };
            outputs[slot] = match net {
                Some(net) => Some(net.forward(&input)?),
                None => None,
            };
        }
        let batch_part = |o: &Option<Matrix<T>>| match o {
            Some(out) => out.row_range(0, b),
            None => Matrix::zeros(b, 0),
        };
        let z_a = batch_part(&outputs[0]);
        let z_b = batch_part(&outputs[1]);
        let s_ab = batch_part(&outputs[2]);
        let s_ba = batch_part(&outputs[3]);

        let xa_hat = m.g_a.forward(&s_ba.hcat(&z_a)?)?;
        let xb_hat = m.g_b.forward(&s_ab.hcat(&z_b)?)?;
        let rec_a = finite(recon_loss(&xa, &xa_hat)?, "rec_A", it)?;
        let rec_b = finite(recon_loss(&xb, &xb_hat)?, "rec_B", it)?;
        let grad_ga = m.g_a.backward(&recon_grad(&xa_hat, &xa))?;
        let grad_gb = m.g_b.backward(&recon_grad(&xb_hat, &xb))?;
        let m_s = m.dims.m_s;
        let mut latent_grads: [Matrix<T>; 4] = [
            grad_ga.input.col_slice(m_s, m.dims.m_za),
            grad_gb.input.col_slice(m_s, m.dims.m_zb),
            grad_gb.input.col_slice(0, m_s),
            grad_ga.input.col_slice(0, m_s),
        ];

        let mut geo = [None; 4];
        for t in &self.geo {
            let slot = t.group as usize;
            let out = outputs[slot].as_ref().expect("geometry group has an encoder");
            let n_land = t.table.landmarks.len();
            let batch_lat = out.row_range(0, b);
            let land_lat = out.row_range(b, n_land);
            let (loss, mut g_land, mut g_batch) = geo_loss_pairs(&land_lat, &batch_lat, &t.table, idx)?;
            geo[slot] = Some(finite(loss, geo_term_name(t.group), it)?);
            g_land.scale(t.weight);
            g_batch.scale(t.weight);
            let merged = latent_grads[slot].add(&g_batch)?.vcat(&g_land)?;
            latent_grads[slot] = merged;
        }

        let grads_f: Vec<Option<_>> = {
            let nets = [m.f_a.as_ref(), m.f_b.as_ref(), Some(&m.f_ab), Some(&m.f_ba)];
            nets.iter()
                .zip(&latent_grads)
                .map(|(net, g)| net.map(|n| n.backward(g)).transpose())
                .collect::<Result<_>>()?
        };
        let mut nets: [Option<&mut Network<T>>; 6] = [
            m.f_a.as_mut(),
            m.f_b.as_mut(),
            Some(&mut m.f_ab),
            Some(&mut m.f_ba),
            Some(&mut m.g_a),
            Some(&mut m.g_b),
        ];
        let all_grads = grads_f.into_iter().chain([Some(grad_ga), Some(grad_gb)]);
        for ((net, grads), opt) in nets.iter_mut().zip(all_grads).zip(self.opt_ae.iter_mut()) {
            if let (Some(net), Some(grads), Some(opt)) = (net.as_deref_mut(), grads, opt.as_mut()) {
                opt.step_network(net, &grads, epoch)?;
            }
        }
        Ok((rec_a, rec_b, geo))
    }

    /// One Adam step on the private encoders only, minimizing the weighted
    /// variance of the (frozen) measurement networks' outputs. Returns
    /// `(var_ab, var_ba)` before the update.
    pub fn disentangle_step(&mut self, idx: &[usize]) -> Result<(f64, f64)> {
        let it = self.iteration;
        let epoch = self.epoch();
        let weight = T::of(self.cfg.disentangle_weight);
        let update = self.cfg.disentangle_weight > 0.0;
        let m = &mut *self.model;
        let mut out = [0.0, 0.0];
        let pairs = [
            (m.f_a.as_mut(), m.m_ab.as_mut(), &self.x_a, "var_AtoB"),
            (m.f_b.as_mut(), m.m_ba.as_mut(), &self.x_b, "var_BtoA"),
        ];
        for (k, (enc, msr, x, term)) in pairs.into_iter().enumerate() {
            let (Some(enc), Some(msr)) = (enc, msr) else {
                continue;
            };
            let x = x.select_rows(idx);
            if !update {
                let y = msr.predict(&enc.predict(&x)?)?;
                out[k] = finite(output_variance(&y)?, term, it)?;
                continue;
            }
            let z = enc.forward(&x)?;
            let y = msr.forward(&z)?;
            out[k] = finite(output_variance(&y)?, term, it)?;
            let mut gy = output_variance_grad(&y);
            gy.scale(weight);
            let gz = msr.backward_input(&gy)?;
            msr.clear_cache();
            let grads = enc.backward(&gz)?;
            if let Some(opt) = self.opt_priv[k].as_mut() {
                opt.step_network(enc, &grads, epoch)?;
            }
        }
        Ok((out[0], out[1]))
    }

    /// Cold restart of both measurement networks and their optimizers.
    pub fn restart_measurement(&mut self) -> Result<()> {
        self.generation += 1;
        self.restarts += 1;
        let hidden = self.model.measurement_hidden();
        let act = self.model.activation();
        self.model
            .reset_measurement(&hidden, act, self.cfg.seed, self.generation)?;
        let adam = self.cfg.adam();
        self.opt_msr = [
            adam_for(self.model.m_ab.as_ref(), adam),
            adam_for(self.model.m_ba.as_ref(), adam),
        ];
        Ok(())
    }

    /// `n` Adam steps on the measurement networks with frozen encoders.
    /// Returns the prediction losses `(pred_a, pred_b)` of the last step.
    pub fn measurement_steps(&mut self, n: usize) -> Result<(f64, f64)> {
        let it = self.iteration;
        let epoch = self.epoch();
        let mut last = (0.0, 0.0);
        for _ in 0..n {
            let idx = self.msr_sampler.next_batch();
            let m = &mut *self.model;
            let xa = self.x_a.select_rows(&idx);
            let xb = self.x_b.select_rows(&idx);
            // M_{B->A}(z_B) predicts x_A; M_{A->B}(z_A) predicts x_B.
            let jobs = [
                (m.f_b.as_ref(), m.m_ba.as_mut(), &xb, &xa, 1usize, "pred_A"),
                (m.f_a.as_ref(), m.m_ab.as_mut(), &xa, &xb, 0usize, "pred_B"),
            ];
            let mut losses = [0.0, 0.0];
            for (k, (enc, msr, src, target, opt_slot, term)) in jobs.into_iter().enumerate() {
                let (Some(enc), Some(msr)) = (enc, msr) else {
                    continue;
                };
                let z = enc.predict(src)?;
                let pred = msr.forward(&z)?;
                losses[k] = finite(recon_loss(target, &pred)?, term, it)?;
                let grads = msr.backward(&recon_grad(&pred, target))?;
                if let Some(opt) = self.opt_msr[opt_slot].as_mut() {
                    opt.step_network(msr, &grads, epoch)?;
                }
            }
            last = (losses[0], losses[1]);
        }
        Ok(last)
    }

    /// One full outer iteration.
    pub fn iterate(&mut self) -> Result<LossRecord> {
        self.iteration += 1;
        let it = self.iteration;
        let idx = self.sampler.next_batch();
        let (rec_a, rec_b, geo) = self.autoencoder_step(&idx)?;
        let (var_ab, var_ba) = self.disentangle_step(&idx)?;
        let n_msr = if it.is_multiple_of(self.cfg.t_restart) {
            self.restart_measurement()?;
            self.cfg.n_msr_restart
        } else {
            self.cfg.n_msr_inner
        };
        let (pred_a, pred_b) = self.measurement_steps(n_msr)?;
        let rec = LossRecord {
            iteration: it,
            epoch: self.epoch(),
            rec_a,
            rec_b,
            var_ab,
            var_ba,
            pred_a,
            pred_b,
            geo,
        };
        if self.cfg.log_every > 0 && it.is_multiple_of(self.cfg.log_every) {
            let geo_sum: f64 = geo.iter().flatten().sum();
            info!(
                "iter={it} epoch={:.3} rec_A={rec_a:.6e} rec_B={rec_b:.6e} var_AtoB={var_ab:.6e} \
                 var_BtoA={var_ba:.6e} pred_A={pred_a:.6e} pred_B={pred_b:.6e} geo={geo_sum:.6e}",
                rec.epoch
            );
        }
        Ok(rec)
    }

    /// Runs all `epochs * batches_per_epoch` outer iterations.
    pub fn run(mut self) -> Result<TrainReport> {
        let total = self.n_iter();
        let mut records = Vec::with_capacity(total);
        for _ in 0..total {
            records.push(self.iterate()?);
        }
        Ok(TrainReport {
            records,
            batches_per_epoch: self.batches_per_epoch(),
            restarts: self.restarts,
        })
    }
}

/// Step 1: disentangle shared from private latents.
pub fn step1_train<T: Scalar>(
    model: &mut SpliceModel<T>,
    data: &PairedDataset,
    cfg: &Step1Config,
) -> Result<TrainReport> {
    Step1Trainer::new(model, data, cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_covers_every_row_each_epoch() {
        let mut s = BatchSampler::new(10, 3, rng::seeded(1));
        assert_eq!(s.batches_per_epoch(), 3);
        let mut seen: Vec<usize> = (0..3).flat_map(|_| s.next_batch()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sampler_merges_singleton_tail() {
        let mut s = BatchSampler::new(7, 3, rng::seeded(2));
        assert_eq!(s.batches_per_epoch(), 2);
        let a = s.next_batch();
        let b = s.next_batch();
        assert_eq!(a.len() + b.len(), 7);
        assert!(a.len() >= 2 && b.len() >= 2);
    }

    #[test]
    fn full_batch_is_ordered() {
        let mut s = BatchSampler::new(5, 0, rng::seeded(3));
        assert_eq!(s.next_batch(), vec![0, 1, 2, 3, 4]);
        assert_eq!(s.batches_per_epoch(), 1);
    }

    #[test]
    fn config_validation() {
        let bad = Step1Config {
            t_restart: 0,
            ..Step1Config::default()
        };
        assert!(bad.validate().is_err());
        let bad = Step1Config {
            disentangle_weight: -1.0,
            ..Step1Config::default()
        };
        assert!(bad.validate().is_err());
    }
}
