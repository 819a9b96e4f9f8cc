use crate::baselines::{fit_linear_classifier, fit_rrr, ClassifierConfig};
use crate::datagen::PairedDataset;
use crate::error::{Error, Result};
use crate::metrics::r_squared;
use crate::splice::{output_variance, Direction, LatentGroup, View};
use crate::{LatentBundle, Mat, SpliceModel};

/// R² of a linear regression (with intercept) from `x` onto
/// `(cos theta, sin theta)`, fitted on the training rows and scored on the
/// test rows over both targets jointly.
pub fn circular_r2(x_train: &Mat, theta_train_deg: &[f64], x_test: &Mat, theta_test_deg: &[f64]) -> Result<f64> {
    let target = |t: &[f64]| {
        Mat::from_fn(t.len(), 2, |r, c| {
            let rad = t[r].to_radians();
            if c == 0 {
                rad.cos()
            } else {
                rad.sin()
            }
        })
    };
    if x_train.cols() == 0 {
        return Err(Error::config("circular regression needs at least one feature"));
    }
    let (y_train, y_test) = (target(theta_train_deg), target(theta_test_deg));
    let model = fit_rrr(x_train, &y_train, x_train.cols().min(2))?;
    r_squared(&y_test, &model.predict(x_test)?)
}

/// `Var[M(z)] / Var[x_target]` on the given rows, both averaged over output
/// columns, using the model's own measurement network. `None` when the
/// direction has no private latent.
pub fn msr_variance_ratio(
    model: &SpliceModel,
    bundle: &LatentBundle,
    x_a: &Mat,
    x_b: &Mat,
    dir: Direction,
) -> Result<Option<f64>> {
    let Some(net) = model.measurement(dir) else {
        return Ok(None);
    };
    let (z, target) = match dir {
        Direction::AtoB => (&bundle.z_a, x_b),
        Direction::BtoA => (&bundle.z_b, x_a),
    };
    let denom = output_variance(target)?;
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!("view {:?} has zero variance", dir.target())));
    }
    Ok(Some(output_variance(&net.predict(z)?)? / denom))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeakageConfig {
    pub classifier: ClassifierConfig,
    pub n_classes: usize,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierConfig::default(),
            n_classes: 10,
        }
    }
}

/// Cross-predictive scores on the held-out rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LeakageScores {
    pub msr_ratio: Vec<(Direction, f64)>,
    /// Linear-classifier label accuracy per latent group (labeled data only).
    pub label_accuracy: Vec<(LatentGroup, f64)>,
    /// Circular-regression R² of the rotation angle per latent group (data
    /// with angles only).
    pub angle_r2: Vec<(LatentGroup, f64)>,
}

impl LeakageScores {
    pub fn msr(&self, dir: Direction) -> Option<f64> {
        self.msr_ratio.iter().find(|(d, _)| *d == dir).map(|p| p.1)
    }

    pub fn accuracy(&self, g: LatentGroup) -> Option<f64> {
        self.label_accuracy.iter().find(|(x, _)| *x == g).map(|p| p.1)
    }

    pub fn angle(&self, g: LatentGroup) -> Option<f64> {
        self.angle_r2.iter().find(|(x, _)| *x == g).map(|p| p.1)
    }

    /// `(metric, group, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for (d, v) in &self.msr_ratio {
            out.push(("msr_variance_ratio".into(), d.name().into(), *v));
        }
        for (g, v) in &self.label_accuracy {
            out.push(("label_accuracy".into(), g.name().into(), *v));
        }
        for (g, v) in &self.angle_r2 {
            out.push(("angle_r2".into(), g.name().into(), *v));
        }
        out
    }
}

/// Encodes the training and held-out rows and scores: the measurement
/// variance ratio per direction, label accuracy of a linear classifier per
/// latent group, and angle decodability per latent group.
pub fn leakage_scores(model: &SpliceModel, data: &PairedDataset, cfg: &LeakageConfig) -> Result<LeakageScores> {
    let train = data.train_indices();
    let test = data.heldout_indices();
    if train.is_empty() || test.len() < 2 {
        return Err(Error::config(
            "leakage needs training rows and at least 2 held-out rows",
        ));
    }
    let encode = |rows: &[usize]| -> Result<(Mat, Mat, LatentBundle)> {
        let xa = model.standardize(View::A, &data.view_a.select_rows(rows))?;
        let xb = model.standardize(View::B, &data.view_b.select_rows(rows))?;
        let bundle = model.encode(&xa, &xb)?;
        Ok((xa, xb, bundle))
    };
    let (_, _, tr) = encode(&train)?;
    let (xa, xb, te) = encode(&test)?;
    let mut out = LeakageScores::default();
    for dir in [Direction::AtoB, Direction::BtoA] {
        if let Some(r) = msr_variance_ratio(model, &te, &xa, &xb, dir)? {
            out.msr_ratio.push((dir, r));
        }
    }
    let groups: Vec<LatentGroup> = LatentGroup::ALL
        .into_iter()
        .filter(|g| g.width(&model.dims) > 0)
        .collect();
    let truth = data.truth.as_ref();
    if let Some(labels) = truth.and_then(|t| t.label.as_ref()) {
        let pick = |rows: &[usize]| rows.iter().map(|&i| labels[i] as usize).collect::<Vec<_>>();
        let (l_train, l_test) = (pick(&train), pick(&test));
        for &g in &groups {
            let clf = fit_linear_classifier(tr.group(g), &l_train, cfg.n_classes, &cfg.classifier)?;
            out.label_accuracy.push((g, clf.accuracy(te.group(g), &l_test)?));
        }
    }
    if let Some(theta) = truth.and_then(|t| t.theta_deg.as_ref()) {
        let pick = |rows: &[usize]| rows.iter().map(|&i| theta[i]).collect::<Vec<_>>();
        let (t_train, t_test) = (pick(&train), pick(&test));
        for &g in &groups {
            out.angle_r2
                .push((g, circular_r2(tr.group(g), &t_train, te.group(g), &t_test)?));
        }
    }
    Ok(out)
}
