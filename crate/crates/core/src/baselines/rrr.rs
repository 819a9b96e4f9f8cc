use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::r_squared;
use crate::Mat;

/// Ridge added to `X^T X` when it is numerically singular, relative to its
/// mean diagonal.
pub const RIDGE_EPS: f64 = 1e-8;

pub(crate) fn from_na(m: &DMatrix<f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

pub(crate) fn center(m: &Mat) -> (DMatrix<f64>, Vec<f64>) {
    let mean = m.col_means();
    let c = DMatrix::from_fn(m.rows(), m.cols(), |r, j| m[(r, j)] - mean[j]);
    (c, mean)
}

/// Reduced-rank linear map `y = (x - x_mean) B + y_mean` with `rank(B) <= rank`.
#[derive(Clone, Debug, PartialEq)]
pub struct RrrModel {
    pub rank: usize,
    /// `n_x x n_y`.
    pub coef: Mat,
    pub x_mean: Vec<f64>,
    /// Intercept: the training mean of `y`.
    pub intercept: Vec<f64>,
    /// Training R² of this rank.
    pub train_r2: f64,
    /// Whether the ridge fallback was needed for the OLS solve.
    pub ridge: bool,
}

impl RrrModel {
    pub fn predict(&self, x: &Mat) -> Result<Mat> {
        if x.cols() != self.x_mean.len() {
            return Err(Error::config(format!(
                "RRR expects {} input columns, got {}",
                self.x_mean.len(),
                x.cols()
            )));
        }
        let xc = Mat::from_fn(x.rows(), x.cols(), |r, c| x[(r, c)] - self.x_mean[c]);
        let mut y = xc.matmul(&self.coef)?;
        y.add_row(&self.intercept);
        Ok(y)
    }
}

/// OLS coefficients plus the right singular vectors of the fitted values,
/// shared by every rank.
#[derive(Clone, Debug)]
pub struct RrrFit {
    ols: DMatrix<f64>,
    /// Columns are right singular vectors of the fitted values, by decreasing
    /// singular value.
    v: DMatrix<f64>,
    x_mean: Vec<f64>,
    y_mean: Vec<f64>,
    ridge: bool,
    max_rank: usize,
}

impl RrrFit {
    pub fn new(x: &Mat, y: &Mat) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::config("RRR: X and Y must have equal row counts"));
        }
        if x.rows() < 2 || x.cols() == 0 || y.cols() == 0 {
            return Err(Error::Degenerate(
                "RRR needs at least 2 samples and non-empty views".into(),
            ));
        }
        let (xc, x_mean) = center(x);
        let (yc, y_mean) = center(y);
        let xtx = xc.transpose() * &xc;
        let xty = xc.transpose() * &yc;
        let (ols, ridge) = solve_spd(xtx, &xty)?;
        let fitted = &xc * &ols;
        let svd = fitted.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let v = DMatrix::from_fn(y.cols(), order.len(), |r, c| vt[(order[c], r)]);
        Ok(Self {
            ols,
            v,
            x_mean,
            y_mean,
            ridge,
            max_rank: x.cols().min(y.cols()),
        })
    }

    pub fn max_rank(&self) -> usize {
        self.max_rank
    }

    pub fn model(&self, rank: usize, x: &Mat, y: &Mat) -> Result<RrrModel> {
        if rank == 0 || rank > self.max_rank {
            return Err(Error::config(format!("rank {rank} outside 1..={}", self.max_rank)));
        }
        let r = rank.min(self.v.ncols());
        let vr = self.v.columns(0, r);
        let coef = &self.ols * (vr * vr.transpose());
        let mut m = RrrModel {
            rank,
            coef: from_na(&coef),
            x_mean: self.x_mean.clone(),
            intercept: self.y_mean.clone(),
            train_r2: f64::NAN,
            ridge: self.ridge,
        };
        m.train_r2 = r_squared(y, &m.predict(x)?)?;
        Ok(m)
    }
}

/// Solves `A X = B` for symmetric positive semi-definite `A`, falling back to
/// `A + eps I` (with `eps = RIDGE_EPS * mean diag`) when Cholesky fails or the
/// matrix is badly conditioned.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    let n = a.nrows();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if dmin > 1e-12 * dmax {
        if let Some(ch) = a.clone().cholesky() {
            let sol = ch.solve(b);
            let ev = a.clone().symmetric_eigenvalues();
            let (lo, hi) = ev
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v.abs())));
            if lo > 1e-12 * hi && sol.iter().all(|v| v.is_finite()) {
                return Ok((sol, false));
            }
        }
    }
    let eps = RIDGE_EPS * (diag.iter().sum::<f64>() / n.max(1) as f64).max(f64::MIN_POSITIVE);
    let reg = a + DMatrix::identity(n, n) * eps;
    let ch = reg
        .cholesky()
        .ok_or_else(|| Error::Degenerate("design matrix is singular even with ridge".into()))?;
    Ok((ch.solve(b), true))
}

/// Reduced-rank regression of `y` on `x`.
pub fn fit_rrr(x: &Mat, y: &Mat, rank: usize) -> Result<RrrModel> {
    if x.rows() < rank + 1 {
        return Err(Error::config(format!(
            "rank {rank} needs at least {} samples, got {}",
            rank + 1,
            x.rows()
        )));
    }
    RrrFit::new(x, y)?.model(rank, x, y)
}
