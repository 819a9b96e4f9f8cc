use log::info;
use rand::Rng as _;

use crate::datagen::PairedDataset;
use crate::error::{Error, Result};
use crate::geometry::knn_indices;
use crate::nncore::rng::{self, streams};
use crate::nncore::Matrix;
use crate::scalar::Scalar;
use crate::splice::{LatentGroup, SpliceModel, View};

/// Decoded submanifold of one latent group over the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T> {
    pub group: LatentGroup,
    /// Dataset row whose complementary latent was held fixed.
    pub fixed_row: usize,
    /// Dataset rows of the projected samples (the training split, in order).
    pub rows: Vec<usize>,
    /// Decoded points before neighborhood averaging (standardized space).
    pub raw: Matrix<T>,
    /// Decoded points after neighborhood averaging.
    pub points: Matrix<T>,
}

/// Replaces every point by the mean of its `k_avg` nearest points, itself
/// included. `k_avg = 1` is the identity.
pub fn neighborhood_average<T: Scalar>(points: &Matrix<T>, k_avg: usize) -> Result<Matrix<T>> {
    if k_avg == 0 {
        return Err(Error::config("k_avg must be at least 1"));
    }
    if k_avg == 1 {
        return Ok(points.clone());
    }
    if points.rows() < k_avg {
        return Err(Error::config(format!(
            "k_avg = {k_avg} exceeds the {} available points",
            points.rows()
        )));
    }
    let nn = knn_indices(points, k_avg - 1)?;
    let inv = T::one() / T::of(k_avg as f64);
    let mut out = points.clone();
    for (i, list) in nn.iter().enumerate() {
        let row = out.row_mut(i);
        for &(j, _) in list {
            for (o, &v) in row.iter_mut().zip(points.row(j)) {
                *o += v;
            }
        }
        row.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

/// Decodes the training samples with `group` varying and its complementary
/// latent fixed at one random training sample, then averages each decoded
/// point over its `k_avg` nearest decoded neighbors.
pub fn project_submanifold<T: Scalar>(
    model: &SpliceModel<T>,
    data: &PairedDataset,
    group: LatentGroup,
    k_avg: usize,
    seed: u64,
) -> Result<Projection<T>> {
    if group.width(&model.dims) == 0 {
        return Err(Error::config(format!("latent group {group} has zero width")));
    }
    let rows = data.train_indices();
    if rows.is_empty() {
        return Err(Error::Degenerate("training split is empty".into()));
    }
    let x_a = model.standardize(View::A, &data.view_a.select_rows(&rows))?;
    let x_b = model.standardize(View::B, &data.view_b.select_rows(&rows))?;
    let source = |g: LatentGroup| match g.source_view() {
        View::A => &x_a,
        View::B => &x_b,
    };
    let mut r = rng::stream(seed, streams::PROJECTION + 16 * group.tag() as u64);
    let fixed = r.gen_range(0..rows.len());
    let fixed_row = rows[fixed];
    info!("projection group={group} fixed_row={fixed_row}");

    let comp = group.complement();
    let varying = model.encode_group(group, source(group))?;
    let held = model
        .encode_group(comp, &source(comp).row_range(fixed, 1))?
        .broadcast_row(0, rows.len());
    let input = match group {
        LatentGroup::SharedAtoB | LatentGroup::SharedBtoA => varying.hcat(&held)?,
        LatentGroup::PrivateA | LatentGroup::PrivateB => held.hcat(&varying)?,
    };
    let raw = model.decoder(group.decoded_view()).predict(&input)?;
    let points = neighborhood_average(&raw, k_avg)?;
    Ok(Projection {
        group,
        fixed_row,
        rows,
        raw,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averaging_k1_is_identity_and_k2_pairs() {
        let p = Matrix::from_rows(&[[0.0], [1.0], [10.0], [12.0]]).unwrap();
        assert_eq!(neighborhood_average(&p, 1).unwrap(), p);
        let a = neighborhood_average(&p, 2).unwrap();
        assert_eq!(a.data(), &[0.5, 0.5, 11.0, 11.0]);
        assert!(neighborhood_average(&p, 5).is_err());
    }
}
