use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{gemm_slack, knn_indices};
use crate::nncore::{euclidean, sq_distances};
use crate::Mat;

const BLOCK: usize = 256;

/// Euclidean distance from every query row to its nearest reference row.
/// GEMM distances shortlist candidates within rounding slack of the minimum;
/// the shortlist is measured exactly.
pub fn nearest_distances(queries: &Mat, refs: &Mat) -> Result<Vec<f64>> {
    if queries.cols() != refs.cols() {
        return Err(Error::config("queries and references must share a space"));
    }
    if refs.rows() == 0 {
        return Err(Error::config("no reference points"));
    }
    let sq_norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let max_ref = refs.iter_rows().map(sq_norm).fold(0.0, f64::max);
    let starts: Vec<usize> = (0..queries.rows()).step_by(BLOCK).collect();
    let blocks = starts
        .into_par_iter()
        .map(|s| {
            let q = queries.row_range(s, BLOCK.min(queries.rows() - s));
            let d = sq_distances(&q, refs)?;
            Ok(d.iter_rows()
                .zip(q.iter_rows())
                .map(|(row, qr)| {
                    let min = row.iter().copied().fold(f64::INFINITY, f64::min);
                    let cut = min + gemm_slack(qr.len(), sq_norm(qr) + max_ref);
                    row.iter()
                        .enumerate()
                        .filter(|&(_, &v)| v <= cut)
                        .map(|(j, _)| euclidean(qr, refs.row(j)))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.concat())
}

/// Mean Euclidean distance over all unordered pairs of distinct rows that
/// share a label.
pub fn mean_within_class_distance(x: &Mat, labels: &[usize]) -> Result<f64> {
    if labels.len() != x.rows() {
        return Err(Error::config("one label per row required"));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let (mut total, mut pairs) = (0.0, 0.0);
    for c in 0..n_classes {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if rows.len() < 2 {
            continue;
        }
        let pts = x.select_rows(&rows);
        let d = sq_distances(&pts, &pts)?;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                total += d[(i, j)].max(0.0).sqrt();
            }
        }
        pairs += (rows.len() * (rows.len() - 1) / 2) as f64;
    }
    if pairs == 0.0 {
        return Err(Error::Degenerate("no class has two members".into()));
    }
    Ok(total / pairs)
}

/// Nearest-neighbor distance distributions of projected points against the
/// observed data.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    /// Distance from each projected point to its nearest observed point.
    pub projection_nn: Vec<f64>,
    /// Distance from each observed point to its nearest other observed point.
    pub observed_nn: Vec<f64>,
    pub within_class_mean: Option<f64>,
}

impl MembershipReport {
    /// Share of projection distances strictly below the mean within-class
    /// distance.
    pub fn fraction_below_within_class(&self) -> Option<f64> {
        let t = self.within_class_mean?;
        let below = self.projection_nn.iter().filter(|&&d| d < t).count();
        Some(below as f64 / self.projection_nn.len().max(1) as f64)
    }
}

/// `projections` and `observed` must live in the same coordinates.
pub fn manifold_membership(projections: &Mat, observed: &Mat, labels: Option<&[usize]>) -> Result<MembershipReport> {
    let projection_nn = nearest_distances(projections, observed)?;
    let observed_nn = knn_indices(observed, 1)?.into_iter().map(|l| l[0].1).collect();
    let within_class_mean = labels.map(|l| mean_within_class_distance(observed, l)).transpose()?;
    Ok(MembershipReport {
        projection_nn,
        observed_nn,
        within_class_mean,
    })
}
