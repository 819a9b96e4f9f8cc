use crate::error::{Error, Result};
use crate::geometry::GeodesicTable;
use crate::nncore::{euclidean, Matrix};
use crate::scalar::Scalar;

/// Root mean square over all (landmark, sample) pairs of the gap between the
/// Euclidean latent distance and the fixed geodesic length.
pub fn geo_loss<T: Scalar>(latents: &Matrix<T>, table: &GeodesicTable<T>) -> Result<T> {
    if latents.rows() != table.n_samples() {
        return Err(Error::config(format!(
            "latents have {} rows, geodesic table covers {} samples",
            latents.rows(),
            table.n_samples()
        )));
    }
    let pairs = table.n_landmarks() * table.n_samples();
    if pairs == 0 {
        return Ok(T::zero());
    }
    let mut sum = T::zero();
    for (r, &l) in table.landmarks.iter().enumerate() {
        let zl = latents.row(l);
        for (j, &g) in table.distances.row(r).iter().enumerate() {
            let e = euclidean(zl, latents.row(j)) - g;
            sum += e * e;
        }
    }
    Ok((sum / T::of(pairs as f64)).sqrt())
}

/// Minibatch form of [`geo_loss`]: pairs of every landmark with every batch
/// sample. `land` holds the landmark latents in table order, `batch` the
/// latents of samples `idx`. Returns the loss with its gradients with
/// respect to `land` and `batch`.
pub fn geo_loss_pairs<T: Scalar>(
    land: &Matrix<T>,
    batch: &Matrix<T>,
    table: &GeodesicTable<T>,
    idx: &[usize],
) -> Result<(T, Matrix<T>, Matrix<T>)> {
    if land.rows() != table.n_landmarks() || batch.rows() != idx.len() || land.cols() != batch.cols() {
        return Err(Error::config(format!(
            "geo pairs: landmarks {:?} / batch {:?} / {} indices do not match a table of {} landmarks",
            land.shape(),
            batch.shape(),
            idx.len(),
            table.n_landmarks()
        )));
    }
    if let Some(&bad) = idx.iter().find(|&&j| j >= table.n_samples()) {
        return Err(Error::config(format!("sample {bad} outside the geodesic table")));
    }
    let m = land.cols();
    let mut g_land = Matrix::zeros(land.rows(), m);
    let mut g_batch = Matrix::zeros(batch.rows(), m);
    let pairs = land.rows() * batch.rows();
    if pairs == 0 {
        return Ok((T::zero(), g_land, g_batch));
    }
    // Cache the Euclidean distances; the gradient pass needs them again.
    let mut dist = Vec::with_capacity(pairs);
    let mut sum = T::zero();
    for r in 0..land.rows() {
        let zl = land.row(r);
        let geo = table.distances.row(r);
        for (c, &j) in idx.iter().enumerate() {
            let d = euclidean(zl, batch.row(c));
            let e = d - geo[j];
            sum += e * e;
            dist.push((d, e));
        }
    }
    let p = T::of(pairs as f64);
    let loss = (sum / p).sqrt();
    if loss == T::zero() {
        return Ok((loss, g_land, g_batch));
    }
    let scale = T::one() / (p * loss);
    for r in 0..land.rows() {
        for c in 0..batch.rows() {
            let (d, e) = dist[r * batch.rows() + c];
            if d == T::zero() {
                continue;
            }
            let coef = scale * e / d;
            for k in 0..m {
                let delta = coef * (land[(r, k)] - batch[(c, k)]);
                g_land[(r, k)] += delta;
                g_batch[(c, k)] -= delta;
            }
        }
    }
    Ok((loss, g_land, g_batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::rng;
    use crate::splice::LatentGroup;

    fn table(landmarks: Vec<usize>, distances: Matrix<f64>) -> GeodesicTable<f64> {
        GeodesicTable {
            group: LatentGroup::SharedAtoB,
            landmarks,
            distances,
        }
    }

    #[test]
    fn single_pair() {
        let z = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let t = table(vec![0], Matrix::from_rows(&[[0.0, 3.0]]).unwrap());
        // Pairs (0,0): 0 and (0,1): 1 - 3 = -2, so RMS = sqrt(4 / 2).
        assert!((geo_loss(&z, &t).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let t1 = table(vec![0], Matrix::from_rows(&[[0.0, 3.0]]).unwrap());
        let (l, _, _) = geo_loss_pairs(&z.row_range(0, 1), &z.row_range(1, 1), &t1, &[1]).unwrap();
        assert_eq!(l, 2.0);
    }

    #[test]
    fn pair_gradient_matches_finite_differences() {
        let mut r = rng::seeded(8);
        let land = Matrix::from_fn(3, 2, |_, _| rng::normal(&mut r));
        let batch = Matrix::from_fn(4, 2, |_, _| rng::normal(&mut r));
        let t = table(
            vec![0, 1, 2],
            Matrix::from_fn(3, 6, |_, _| rng::normal(&mut r).abs() * 2.0),
        );
        let idx = [5, 0, 3, 3];
        let (_, gl, gb) = geo_loss_pairs(&land, &batch, &t, &idx).unwrap();
        let h = 1e-6;
        let f = |l: &Matrix<f64>, b: &Matrix<f64>| geo_loss_pairs(l, b, &t, &idx).unwrap().0;
        for i in 0..land.data().len() {
            let (mut p, mut m) = (land.clone(), land.clone());
            p.data_mut()[i] += h;
            m.data_mut()[i] -= h;
            let fd = (f(&p, &batch) - f(&m, &batch)) / (2.0 * h);
            assert!((fd - gl.data()[i]).abs() < 1e-7);
        }
        for i in 0..batch.data().len() {
            let (mut p, mut m) = (batch.clone(), batch.clone());
            p.data_mut()[i] += h;
            m.data_mut()[i] -= h;
            let fd = (f(&land, &p) - f(&land, &m)) / (2.0 * h);
            assert!((fd - gb.data()[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn row_mismatch_is_error() {
        let z = Matrix::<f64>::zeros(3, 1);
        let t = table(vec![0], Matrix::zeros(1, 2));
        assert!(geo_loss(&z, &t).is_err());
    }
}
