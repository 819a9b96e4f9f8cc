//! Evaluation metrics.
//!
//! All metrics are read-only over model and data and deterministic given
//! their seed arguments.

mod angle;
mod independence;
mod leakage;
mod membership;

pub use angle::{
    angle_conditioned_variance, angle_curves, angle_offset_correct, best_shift, AngleVarianceReport, OffsetReport,
};
pub use independence::{fit_probe, higher_order_check, ProbeConfig};
pub use leakage::{circular_r2, leakage_scores, msr_variance_ratio, LeakageConfig, LeakageScores};
pub use membership::{manifold_membership, mean_within_class_distance, nearest_distances, MembershipReport};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Mat;

/// `1 - SSE / SST`, both summed over all dimensions, with SST taken about
/// the per-dimension mean of `x`.
pub fn r_squared(x: &Mat, x_hat: &Mat) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::config(format!(
            "r_squared shape mismatch: {:?} vs {:?}",
            x.shape(),
            x_hat.shape()
        )));
    }
    let mean = x.col_means();
    let (mut sse, mut sst) = (0.0, 0.0);
    for (row, row_hat) in x.iter_rows().zip(x_hat.iter_rows()) {
        for c in 0..row.len() {
            sse += (row[c] - row_hat[c]).powi(2);
            sst += (row[c] - mean[c]).powi(2);
        }
    }
    if sst <= 0.0 {
        return Err(Error::Degenerate("r_squared of zero-variance data".into()));
    }
    Ok(1.0 - sse / sst)
}

/// Ranks starting at 1; ties share their average rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::config("correlation needs two equal-length series of at least 2"));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    pearson(&ranks(a), &ranks(b))
}

/// Latent axis matched to each truth column with its sign, and the
/// resulting Spearman correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisAlignment {
    /// `axes[t]` is the latent column paired with truth column `t`.
    pub axes: Vec<usize>,
    pub signs: Vec<f64>,
    /// Signed correlations after sign flips, so all are `>= 0` at the optimum.
    pub rho: Vec<f64>,
}

impl AxisAlignment {
    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Pairs truth columns with distinct latent columns, maximizing the smallest
/// `|rho|` (ties broken by the sum). Exhaustive over injective pairings.
pub fn axis_alignment(latent: &Mat, truth: &Mat) -> Result<AxisAlignment> {
    let (m, t) = (latent.cols(), truth.cols());
    if latent.rows() != truth.rows() || t == 0 || m < t || m > 8 {
        return Err(Error::config(format!(
            "axis alignment needs equal rows and 1 <= truth cols ({t}) <= latent cols ({m}) <= 8"
        )));
    }
    let lat: Vec<Vec<f64>> = (0..m).map(|c| latent.col_vec(c)).collect();
    let tru: Vec<Vec<f64>> = (0..t).map(|c| truth.col_vec(c)).collect();
    let mut rho = vec![vec![0.0; m]; t];
    for (i, tc) in tru.iter().enumerate() {
        for (j, lc) in lat.iter().enumerate() {
            rho[i][j] = spearman(lc, tc).unwrap_or(0.0);
        }
    }
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(t);
    search(&rho, m, &mut current, &mut best);
    let (_, _, axes) = best.expect("at least one pairing exists");
    let signs: Vec<f64> = axes
        .iter()
        .enumerate()
        .map(|(i, &j)| if rho[i][j] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let r = axes.iter().enumerate().map(|(i, &j)| rho[i][j] * signs[i]).collect();
    Ok(AxisAlignment { axes, signs, rho: r })
}

fn search(rho: &[Vec<f64>], m: usize, cur: &mut Vec<usize>, best: &mut Option<(f64, f64, Vec<usize>)>) {
    if cur.len() == rho.len() {
        let vals: Vec<f64> = cur.iter().enumerate().map(|(i, &j)| rho[i][j].abs()).collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = vals.iter().sum();
        let better = match best {
            None => true,
            Some((bm, bs, _)) => min > *bm || (min == *bm && sum > *bs),
        };
        if better {
            *best = Some((min, sum, cur.clone()));
        }
        return;
    }
    for j in 0..m {
        if !cur.contains(&j) {
            cur.push(j);
            search(rho, m, cur, best);
            cur.pop();
        }
    }
}

/// Orthogonal matrix `Q` (reflections allowed) minimizing
/// `||(latent - mean) Q - (truth - mean)||_F`. Requires equal widths.
pub fn procrustes_rotation(latent: &Mat, truth: &Mat) -> Result<Mat> {
    if latent.shape() != truth.shape() || latent.rows() < 2 {
        return Err(Error::config("procrustes needs equally shaped inputs with 2+ rows"));
    }
    let (n, d) = latent.shape();
    let (ml, mt) = (latent.col_means(), truth.col_means());
    let l = DMatrix::from_fn(n, d, |r, c| latent[(r, c)] - ml[c]);
    let t = DMatrix::from_fn(n, d, |r, c| truth[(r, c)] - mt[c]);
    let svd = (l.transpose() * t).svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Degenerate("procrustes SVD failed".into())),
    };
    let q = u * vt;
    Ok(Mat::from_fn(d, d, |r, c| q[(r, c)]))
}
