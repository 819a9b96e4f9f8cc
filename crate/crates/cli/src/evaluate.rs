//! Scores a trained model against its dataset and ground truth.

use log::info;
use splice_core::baselines::{canonical_correlations, fit_linear_classifier, saturation_dim};
use splice_core::datagen::PairedDataset;
use splice_core::geometry::project_submanifold;
use splice_core::metrics::{
    angle_conditioned_variance, angle_curves, angle_offset_correct, axis_alignment, higher_order_check, leakage_scores,
    manifold_membership, msr_variance_ratio, procrustes_rotation, r_squared, AngleVarianceReport, AxisAlignment,
    LeakageConfig, MembershipReport,
};
use splice_core::splice::{Direction, LatentGroup, View};
use splice_core::{LatentBundle, Mat, SpliceModel};

use crate::artifacts::{CurvePoint, MetricRow};
use crate::config::ExperimentConfig;
use crate::error::Result;

/// Both views of `rows` in the model's standardized coordinates.
pub fn standardized(model: &SpliceModel, data: &PairedDataset, rows: &[usize]) -> Result<(Mat, Mat)> {
    Ok((
        model.standardize(View::A, &data.view_a.select_rows(rows))?,
        model.standardize(View::B, &data.view_b.select_rows(rows))?,
    ))
}

pub fn encode_rows(model: &SpliceModel, data: &PairedDataset, rows: &[usize]) -> Result<LatentBundle> {
    let (xa, xb) = standardized(model, data, rows)?;
    Ok(model.encode(&xa, &xb)?)
}

/// Reconstruction R² in standardized space: view A, view B, and both views
/// pooled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction {
    pub view_a: f64,
    pub view_b: f64,
    pub joint: f64,
}

pub fn reconstruction_r2(model: &SpliceModel, data: &PairedDataset, rows: &[usize]) -> Result<Reconstruction> {
    let (xa, xb) = standardized(model, data, rows)?;
    let (ra, rb) = model.reconstruct(&xa, &xb)?;
    Ok(Reconstruction {
        view_a: r_squared(&xa, &ra)?,
        view_b: r_squared(&xb, &rb)?,
        joint: r_squared(&xa.hcat(&xb)?, &ra.hcat(&rb)?)?,
    })
}

fn truth_for(data: &PairedDataset, g: LatentGroup) -> Option<&Mat> {
    let t = data.truth.as_ref()?;
    match g {
        LatentGroup::SharedAtoB | LatentGroup::SharedBtoA => t.shared.as_ref(),
        LatentGroup::PrivateA => t.private_a.as_ref(),
        LatentGroup::PrivateB => t.private_b.as_ref(),
    }
}

/// Spearman alignment of each shared latent with the true shared variables
/// on held-out rows, after an orthogonal Procrustes map fitted on the
/// training rows and an optimal signed pairing of axes.
pub fn shared_alignment(model: &SpliceModel, data: &PairedDataset) -> Result<Vec<(LatentGroup, AxisAlignment)>> {
    let (train, test) = (data.train_indices(), data.heldout_indices());
    let (tr, te) = (encode_rows(model, data, &train)?, encode_rows(model, data, &test)?);
    let mut out = Vec::new();
    for g in [LatentGroup::SharedAtoB, LatentGroup::SharedBtoA] {
        let Some(truth) = truth_for(data, g) else {
            continue;
        };
        if truth.cols() != g.width(&model.dims) {
            continue;
        }
        let q = procrustes_rotation(tr.group(g), &truth.select_rows(&train))?;
        let rotated = te.group(g).matmul(&q)?;
        out.push((g, axis_alignment(&rotated, &truth.select_rows(&test))?));
    }
    Ok(out)
}

/// Canonical correlations between each estimated latent group and its true
/// counterpart on held-out rows.
pub fn latent_recovery(model: &SpliceModel, data: &PairedDataset) -> Result<Vec<(LatentGroup, Vec<f64>)>> {
    let test = data.heldout_indices();
    let te = encode_rows(model, data, &test)?;
    let mut out = Vec::new();
    for g in LatentGroup::ALL {
        let Some(truth) = truth_for(data, g) else {
            continue;
        };
        if g.width(&model.dims) == 0 {
            continue;
        }
        out.push((g, canonical_correlations(te.group(g), &truth.select_rows(&test))?));
    }
    Ok(out)
}

/// Private view-B latent of held-out digits rotated through a full turn,
/// with the circular shift aligning each curve to the reference.
pub struct AngleSweep {
    pub rows: Vec<usize>,
    pub curves: Vec<Mat>,
    pub offsets: Vec<usize>,
    pub report: AngleVarianceReport,
}

/// Angle-conditioned variance of the private view-B latent over the first
/// `digits` held-out images rotated through `steps` angles.
pub fn angle_report(
    model: &SpliceModel,
    data: &PairedDataset,
    digits: usize,
    steps: usize,
    window: usize,
    seed: u64,
) -> Result<AngleSweep> {
    let rows: Vec<usize> = data.heldout_indices().into_iter().take(digits).collect();
    let curves = angle_curves(model, &data.view_a.select_rows(&rows), steps)?;
    let offsets = angle_offset_correct(&curves, seed)?.offsets;
    let report = angle_conditioned_variance(&curves, &offsets, window)?;
    Ok(AngleSweep {
        rows,
        curves,
        offsets,
        report,
    })
}

/// Nearest-neighbor distances of decoded private-submanifold points (shared
/// latent fixed at one training sample) to the observed view-B data, in
/// standardized space.
pub fn private_membership(
    model: &SpliceModel,
    data: &PairedDataset,
    samples: usize,
    seed: u64,
) -> Result<MembershipReport> {
    let proj = project_submanifold(model, data, LatentGroup::PrivateB, 1, seed)?;
    let take = samples.min(proj.raw.rows());
    let projections = proj.raw.row_range(0, take);
    let all: Vec<usize> = (0..data.len()).collect();
    let observed = model.standardize(View::B, &data.view_b)?;
    let labels: Option<Vec<usize>> = data
        .truth
        .as_ref()
        .and_then(|t| t.label.as_ref())
        .map(|l| all.iter().map(|&i| l[i] as usize).collect());
    Ok(manifold_membership(&projections, &observed, labels.as_deref())?)
}

/// Held-out accuracy of the linear classifier on raw view-A and view-B
/// pixels, when labels exist.
pub fn pixel_accuracy(data: &PairedDataset, cfg: &ExperimentConfig, seed: u64) -> Result<Option<(f64, f64)>> {
    let Some(labels) = data.truth.as_ref().and_then(|t| t.label.as_ref()) else {
        return Ok(None);
    };
    let (train, test) = (data.train_indices(), data.heldout_indices());
    let pick = |rows: &[usize]| rows.iter().map(|&i| labels[i] as usize).collect::<Vec<_>>();
    let clf_cfg = cfg.baselines.classifier.to_core(seed);
    let n_classes = labels.iter().copied().max().map_or(2, |m| m as usize + 1).max(2);
    let mut acc = [0.0; 2];
    for (slot, view) in [&data.view_a, &data.view_b].into_iter().enumerate() {
        let clf = fit_linear_classifier(&view.select_rows(&train), &pick(&train), n_classes, &clf_cfg)?;
        acc[slot] = clf.accuracy(&view.select_rows(&test), &pick(&test))?;
    }
    Ok(Some((acc[0], acc[1])))
}

/// Held-out accuracy of a linear classifier reading each private latent and
/// predicting the quadrant of the first two true shared variables. Chance is
/// 0.25 when the private latent carries no shared information.
pub fn shared_quadrant_leakage(
    model: &SpliceModel,
    data: &PairedDataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<(LatentGroup, f64)>> {
    let Some(shared) = data.truth.as_ref().and_then(|t| t.shared.as_ref()) else {
        return Ok(Vec::new());
    };
    if shared.cols() < 2 {
        return Ok(Vec::new());
    }
    let means = shared.col_means();
    let quadrant = |rows: &[usize]| -> Vec<usize> {
        rows.iter()
            .map(|&i| {
                let r = shared.row(i);
                usize::from(r[0] > means[0]) + 2 * usize::from(r[1] > means[1])
            })
            .collect()
    };
    let (train, test) = (data.train_indices(), data.heldout_indices());
    let (tr, te) = (encode_rows(model, data, &train)?, encode_rows(model, data, &test)?);
    let clf_cfg = cfg.baselines.classifier.to_core(seed);
    let mut out = Vec::new();
    for g in [LatentGroup::PrivateA, LatentGroup::PrivateB] {
        if g.width(&model.dims) == 0 {
            continue;
        }
        let clf = fit_linear_classifier(tr.group(g), &quadrant(&train), 4, &clf_cfg)?;
        out.push((g, clf.accuracy(te.group(g), &quadrant(&test))?));
    }
    Ok(out)
}

/// Metric rows plus the raw per-sample measurements behind some of them.
pub struct Evaluation {
    pub rows: Vec<MetricRow>,
    pub angle: Option<AngleSweep>,
    pub membership: Option<MembershipReport>,
}

/// Every metric applicable to the dataset, in a fixed order.
pub fn evaluate(
    model: &SpliceModel,
    data: &PairedDataset,
    cfg: &ExperimentConfig,
    seed: u64,
    curves: &[CurvePoint],
) -> Result<Evaluation> {
    let mut rows = Vec::new();
    let mut angle = None;
    let mut membership = None;
    let test = data.heldout_indices();
    let rec = reconstruction_r2(model, data, &test)?;
    rows.push(MetricRow::new("reconstruction_r2", "view_A", rec.view_a));
    rows.push(MetricRow::new("reconstruction_r2", "view_B", rec.view_b));
    rows.push(MetricRow::new("reconstruction_r2", "joint", rec.joint));

    let labels = data.truth.as_ref().and_then(|t| t.label.as_ref());
    if labels.is_some() {
        let n_classes = labels
            .unwrap()
            .iter()
            .copied()
            .max()
            .map_or(2, |m| m as usize + 1)
            .max(2);
        let lk = leakage_scores(
            model,
            data,
            &LeakageConfig {
                classifier: cfg.baselines.classifier.to_core(seed),
                n_classes,
            },
        )?;
        rows.extend(lk.rows().into_iter().map(|(m, g, v)| MetricRow::new(m, g, v)));
        if let Some((a, b)) = pixel_accuracy(data, cfg, seed)? {
            rows.push(MetricRow::new("label_accuracy", "pixels_A", a));
            rows.push(MetricRow::new("label_accuracy", "pixels_B", b));
        }
    } else {
        let te = encode_rows(model, data, &test)?;
        let (xa, xb) = standardized(model, data, &test)?;
        for dir in [Direction::AtoB, Direction::BtoA] {
            if let Some(r) = msr_variance_ratio(model, &te, &xa, &xb, dir)? {
                rows.push(MetricRow::new("msr_variance_ratio", dir.name(), r));
            }
        }
        for (g, acc) in shared_quadrant_leakage(model, data, cfg, seed)? {
            rows.push(MetricRow::new("shared_quadrant_accuracy", g.name(), acc));
        }
    }

    for (g, al) in shared_alignment(model, data)? {
        for (t, rho) in al.rho.iter().enumerate() {
            rows.push(MetricRow::new("shared_spearman", format!("{}/axis{t}", g.name()), *rho));
        }
        rows.push(MetricRow::new("shared_spearman_min", g.name(), al.min_rho()));
    }
    for (g, cc) in latent_recovery(model, data)? {
        for (k, c) in cc.iter().enumerate() {
            rows.push(MetricRow::new("latent_cca", format!("{}/{k}", g.name()), *c));
        }
        let min = cc.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(MetricRow::new("latent_cca_min", g.name(), min));
    }

    let digits = data.truth.as_ref().is_some_and(|t| t.theta_deg.is_some()) && labels.is_some();
    if digits && model.dims.m_zb > 0 && cfg.metrics.dense_digits > 0 {
        let m = &cfg.metrics;
        let sweep = angle_report(model, data, m.dense_digits, m.angle_steps, m.angle_window, seed)?;
        let fe = sweep.report.fraction_explained;
        info!("angle fraction_explained={fe:.4}");
        rows.push(MetricRow::new("angle_fraction_explained", "z_B", fe));
        angle = Some(sweep);
        if m.membership_samples > 0 {
            let mem = private_membership(model, data, m.membership_samples, seed)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            rows.push(MetricRow::new(
                "membership_projection_nn_mean",
                "z_B",
                mean(&mem.projection_nn),
            ));
            rows.push(MetricRow::new(
                "membership_observed_nn_mean",
                "z_B",
                mean(&mem.observed_nn),
            ));
            if let (Some(w), Some(f)) = (mem.within_class_mean, mem.fraction_below_within_class()) {
                rows.push(MetricRow::new("membership_within_class_mean", "z_B", w));
                rows.push(MetricRow::new("membership_fraction_below", "z_B", f));
            }
            membership = Some(mem);
        }
    }

    if !cfg.metrics.higher_order.is_empty() {
        let train = data.train_indices();
        let (tr, te) = (encode_rows(model, data, &train)?, encode_rows(model, data, &test)?);
        let (xa_tr, xb_tr) = standardized(model, data, &train)?;
        let (xa_te, xb_te) = standardized(model, data, &test)?;
        let probe = cfg.metrics.probe(seed);
        for &order in &cfg.metrics.higher_order {
            for (g, other_tr, other_te) in [
                (LatentGroup::PrivateA, &xb_tr, &xb_te),
                (LatentGroup::PrivateB, &xa_tr, &xa_te),
            ] {
                if g.width(&model.dims) == 0 {
                    continue;
                }
                let r = higher_order_check(tr.group(g), other_tr, te.group(g), other_te, order, &probe)?;
                rows.push(MetricRow::new(format!("higher_order_ratio_{order}"), g.name(), r));
            }
        }
    }

    for method in ["rrr", "splice"] {
        let pts: Vec<&CurvePoint> = curves.iter().filter(|p| p.method == method).collect();
        if pts.is_empty() {
            continue;
        }
        let dims: Vec<usize> = pts.iter().map(|p| p.dim).collect();
        let scores: Vec<f64> = pts.iter().map(|p| p.score).collect();
        let d = saturation_dim(&dims, &scores, cfg.baselines.saturation_fraction);
        rows.push(MetricRow::new("saturation_dim", method, d as f64));
    }
    Ok(Evaluation {
        rows,
        angle,
        membership,
    })
}
