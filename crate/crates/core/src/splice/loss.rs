use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::scalar::Scalar;
use crate::splice::{Direction, LatentBundle, SpliceModel, View};

fn same_shape<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::config(format!(
            "shape mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Mean over samples and dimensions of the squared error.
pub fn recon_loss<T: Scalar>(x: &Matrix<T>, x_hat: &Matrix<T>) -> Result<T> {
    same_shape(x, x_hat)?;
    let n = x.data().len();
    if n == 0 {
        return Ok(T::zero());
    }
    let sse: T = x
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(sse / T::of(n as f64))
}

/// Gradient of [`recon_loss`] with respect to `x_hat`.
pub(crate) fn recon_grad<T: Scalar>(x_hat: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    let scale = T::of(2.0 / (x.data().len().max(1) as f64));
    x_hat.zip_with(x, |p, t| scale * (p - t)).expect("shapes checked")
}

/// Mean over output columns of the population variance over the batch.
pub fn output_variance<T: Scalar>(y: &Matrix<T>) -> Result<T> {
    if y.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "variance needs at least 2 samples, got {}",
            y.rows()
        )));
    }
    if y.cols() == 0 {
        return Ok(T::zero());
    }
    let total: T = y.col_variances().into_iter().sum();
    Ok(total / T::of(y.cols() as f64))
}

/// Gradient of [`output_variance`] with respect to `y`.
pub(crate) fn output_variance_grad<T: Scalar>(y: &Matrix<T>) -> Matrix<T> {
    let means = y.col_means();
    let scale = T::of(2.0 / ((y.rows() * y.cols()).max(1) as f64));
    Matrix::from_fn(y.rows(), y.cols(), |r, c| scale * (y[(r, c)] - means[c]))
}

/// Variance of the measurement network's output on `z_hat`. Zero when the
/// direction has no private latent.
pub fn msr_variance<T: Scalar>(model: &SpliceModel<T>, z_hat: &Matrix<T>, dir: Direction) -> Result<T> {
    match model.measurement(dir) {
        None => {
            if z_hat.rows() < 2 {
                return Err(Error::Degenerate("variance needs at least 2 samples".into()));
            }
            Ok(T::zero())
        }
        Some(net) => output_variance(&net.predict(z_hat)?),
    }
}

/// `MSE(M_{B->A}(z_B), x_A) + MSE(M_{A->B}(z_A), x_B)`, omitting absent
/// directions. Evaluation only; the trainer differentiates it with respect to
/// the measurement networks alone.
pub fn msr_prediction_loss<T: Scalar>(
    model: &SpliceModel<T>,
    bundle: &LatentBundle<T>,
    x_a: &Matrix<T>,
    x_b: &Matrix<T>,
) -> Result<T> {
    let (a, b) = msr_prediction_terms(model, bundle, x_a, x_b)?;
    Ok(a + b)
}

/// Per-view prediction losses `(L_pred^A, L_pred^B)`.
pub fn msr_prediction_terms<T: Scalar>(
    model: &SpliceModel<T>,
    bundle: &LatentBundle<T>,
    x_a: &Matrix<T>,
    x_b: &Matrix<T>,
) -> Result<(T, T)> {
    let term = |dir: Direction, z: &Matrix<T>, target: &Matrix<T>| -> Result<T> {
        match model.measurement(dir) {
            None => Ok(T::zero()),
            Some(net) => recon_loss(target, &net.predict(z)?),
        }
    };
    debug_assert_eq!(Direction::BtoA.target(), View::A);
    Ok((
        term(Direction::BtoA, &bundle.z_b, x_a)?,
        term(Direction::AtoB, &bundle.z_a, x_b)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::rng;

    #[test]
    fn recon_loss_cases() {
        let x = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let y = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert_eq!(recon_loss(&x, &x).unwrap(), 0.0);
        assert_eq!(recon_loss(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn recon_loss_matches_double_loop() {
        let mut r = rng::seeded(4);
        let x = Matrix::from_fn(6, 5, |_, _| rng::normal(&mut r));
        let y = Matrix::from_fn(6, 5, |_, _| rng::normal(&mut r));
        let mut s = 0.0;
        for i in 0..6 {
            for j in 0..5 {
                s += (x[(i, j)] - y[(i, j)]).powi(2);
            }
        }
        assert!((recon_loss(&x, &y).unwrap() - s / 30.0).abs() < 1e-14);
    }

    #[test]
    fn variance_cases() {
        let y = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        assert_eq!(output_variance(&y).unwrap(), 1.0);
        let c = Matrix::filled(5, 3, 7.0);
        assert_eq!(output_variance(&c).unwrap(), 0.0);
        let shifted: Matrix<f64> = y.map(|v| v + 100.0);
        assert!((output_variance(&shifted).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            output_variance(&Matrix::<f64>::zeros(1, 2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn variance_gradient_matches_finite_differences() {
        let mut r = rng::seeded(1);
        let y = Matrix::from_fn(5, 3, |_, _| rng::normal(&mut r));
        let g = output_variance_grad(&y);
        let h = 1e-6;
        for i in 0..y.data().len() {
            let mut p = y.clone();
            p.data_mut()[i] += h;
            let mut m = y.clone();
            m.data_mut()[i] -= h;
            let fd = (output_variance(&p).unwrap() - output_variance(&m).unwrap()) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-8);
        }
    }
}
