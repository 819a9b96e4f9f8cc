use nalgebra::DMatrix;

use crate::baselines::rrr::{center, from_na};
use crate::error::{Error, Result};
use crate::Mat;

/// Ridge added to a covariance whose smallest eigenvalue falls below
/// `1e-12` of its largest, relative to its mean diagonal.
pub const CCA_RIDGE_EPS: f64 = 1e-8;

/// Linear canonical correlation analysis of two views.
#[derive(Clone, Debug, PartialEq)]
pub struct Cca {
    /// `n_a x k` projection of centered view A.
    pub w_a: Mat,
    /// `n_b x k` projection of centered view B.
    pub w_b: Mat,
    /// Canonical correlations in decreasing order, clipped to `[0, 1]`.
    pub correlations: Vec<f64>,
    pub mean_a: Vec<f64>,
    pub mean_b: Vec<f64>,
    /// Whether either covariance needed the ridge fallback.
    pub ridge: bool,
}

impl Cca {
    pub fn n_components(&self) -> usize {
        self.correlations.len()
    }

    pub fn transform_a(&self, x: &Mat) -> Result<Mat> {
        project(x, &self.mean_a, &self.w_a)
    }

    pub fn transform_b(&self, x: &Mat) -> Result<Mat> {
        project(x, &self.mean_b, &self.w_b)
    }
}

fn project(x: &Mat, mean: &[f64], w: &Mat) -> Result<Mat> {
    if x.cols() != mean.len() {
        return Err(Error::config(format!(
            "CCA expects {} columns, got {}",
            mean.len(),
            x.cols()
        )));
    }
    Mat::from_fn(x.rows(), x.cols(), |r, c| x[(r, c)] - mean[c]).matmul(w)
}

/// `C^{-1/2}` of a symmetric positive semi-definite covariance, with the
/// ridge fallback.
fn inv_sqrt(cov: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = cov.nrows();
    let eig = cov.clone().symmetric_eigen();
    let hi = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let lo = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let (eig, ridge) = if lo > 1e-12 * hi {
        (eig, false)
    } else {
        let eps = CCA_RIDGE_EPS * (cov.trace() / n as f64).max(f64::MIN_POSITIVE);
        ((cov + DMatrix::identity(n, n) * eps).symmetric_eigen(), true)
    };
    let d = eig.eigenvalues.map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    let q = &eig.eigenvectors;
    (q * DMatrix::from_diagonal(&d) * q.transpose(), ridge)
}

/// Fits `k` canonical pairs by whitening both views and taking the SVD of the
/// whitened cross-covariance.
pub fn fit_linear_cca(a: &Mat, b: &Mat, k: usize) -> Result<Cca> {
    if a.rows() != b.rows() {
        return Err(Error::config("CCA: views must have equal row counts"));
    }
    let n = a.rows();
    if n < 2 {
        return Err(Error::Degenerate("CCA needs at least 2 samples".into()));
    }
    let max_k = a.cols().min(b.cols());
    if k == 0 || k > max_k {
        return Err(Error::config(format!("CCA: k={k} outside 1..={max_k}")));
    }
    let (ac, mean_a) = center(a);
    let (bc, mean_b) = center(b);
    let denom = (n - 1) as f64;
    let caa = ac.transpose() * &ac / denom;
    let cbb = bc.transpose() * &bc / denom;
    let cab = ac.transpose() * &bc / denom;
    let (wa_half, ra) = inv_sqrt(caa);
    let (wb_half, rb) = inv_sqrt(cbb);
    let m = &wa_half * cab * &wb_half;
    let svd = m.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Degenerate("CCA: SVD failed".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let order = &order[..k];
    let uk = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let vk = DMatrix::from_fn(vt.ncols(), k, |r, c| vt[(order[c], r)]);
    Ok(Cca {
        w_a: from_na(&(wa_half * uk)),
        w_b: from_na(&(wb_half * vk)),
        correlations: order.iter().map(|&i| svd.singular_values[i].clamp(0.0, 1.0)).collect(),
        mean_a,
        mean_b,
        ridge: ra || rb,
    })
}

/// Canonical correlations between two sets of variables; convenience for
/// evaluating recovered latents against ground truth.
pub fn canonical_correlations(a: &Mat, b: &Mat) -> Result<Vec<f64>> {
    let k = a.cols().min(b.cols());
    Ok(fit_linear_cca(a, b, k)?.correlations)
}
