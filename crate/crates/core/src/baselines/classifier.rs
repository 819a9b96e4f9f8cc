use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::Mat;

/// Fixed training recipe for the linear decodability probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 200,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// One-vs-rest linear classifier on standardized features.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearClassifier {
    /// `n_classes x d`.
    pub weights: Mat,
    pub bias: Vec<f64>,
    pub mean: Vec<f64>,
    /// Per-feature scale; constant features keep scale 1.
    pub scale: Vec<f64>,
}

impl LinearClassifier {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &v), (m, s)) in out.iter_mut().zip(x).zip(self.mean.iter().zip(&self.scale)) {
            *o = (v - m) / s;
        }
    }

    /// Per-class decision values of one sample.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; x.len()];
        self.standardize(x, &mut z);
        (0..self.n_classes())
            .map(|c| dot(self.weights.row(c), &z) + self.bias[c])
            .collect()
    }

    /// Argmax class per row; ties resolve to the lowest class.
    pub fn predict(&self, x: &Mat) -> Result<Vec<usize>> {
        if x.cols() != self.mean.len() {
            return Err(Error::config(format!(
                "classifier expects {} features, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        Ok(x.iter_rows()
            .map(|row| {
                let s = self.scores(row);
                (0..s.len()).fold(0, |best, c| if s[c] > s[best] { c } else { best })
            })
            .collect())
    }

    pub fn accuracy(&self, x: &Mat, labels: &[usize]) -> Result<f64> {
        let pred = self.predict(x)?;
        if pred.len() != labels.len() || pred.is_empty() {
            return Err(Error::config("accuracy needs one label per row"));
        }
        Ok(pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / pred.len() as f64)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains a one-vs-rest hinge-loss classifier by per-sample SGD with L2
/// decay. Labels must lie in `0..n_classes`.
pub fn fit_linear_classifier(
    x: &Mat,
    labels: &[usize],
    n_classes: usize,
    cfg: &ClassifierConfig,
) -> Result<LinearClassifier> {
    let (n, d) = x.shape();
    if labels.len() != n || n == 0 {
        return Err(Error::config("classifier needs one label per row"));
    }
    if n_classes < 2 {
        return Err(Error::config("classifier needs at least 2 classes"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::config(format!("label {bad} outside 0..{n_classes}")));
    }
    let mean = x.col_means();
    let scale: Vec<f64> = x
        .col_variances()
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    let mut clf = LinearClassifier {
        weights: Mat::zeros(n_classes, d),
        bias: vec![0.0; n_classes],
        mean,
        scale,
    };
    let mut z = Mat::zeros(n, d);
    for r in 0..n {
        let (src, dst) = (x.row(r), z.row_mut(r));
        for c in 0..d {
            dst[c] = (src[c] - clf.mean[c]) / clf.scale[c];
        }
    }
    let mut r = rng::stream(cfg.seed, streams::CLASSIFIER);
    let decay = 1.0 - cfg.lr * cfg.l2;
    for _ in 0..cfg.epochs {
        for i in rng::permutation(n, &mut r) {
            let xi = z.row(i);
            for c in 0..n_classes {
                let y = if labels[i] == c { 1.0 } else { -1.0 };
                let w = clf.weights.row_mut(c);
                let margin = y * (dot(w, xi) + clf.bias[c]);
                if margin < 1.0 {
                    for (wj, &xj) in w.iter_mut().zip(xi) {
                        *wj = *wj * decay + cfg.lr * y * xj;
                    }
                    clf.bias[c] += cfg.lr * y;
                } else {
                    for wj in w.iter_mut() {
                        *wj *= decay;
                    }
                }
            }
        }
    }
    if !clf.weights.is_finite() {
        return Err(Error::NonFinite {
            term: "classifier",
            iteration: cfg.epochs,
        });
    }
    Ok(clf)
}
