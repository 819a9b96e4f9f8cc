use crate::baselines::RrrFit;
use crate::error::{Error, Result};
use crate::metrics::r_squared;
use crate::Mat;

/// Default fraction of the best score that counts as saturated.
pub const SATURATION_FRACTION: f64 = 0.95;

/// Held-out score as a function of latent dimensionality.
#[derive(Clone, Debug, PartialEq)]
pub struct SaturationCurve {
    pub dims: Vec<usize>,
    pub scores: Vec<f64>,
}

impl SaturationCurve {
    pub fn new(dims: Vec<usize>, scores: Vec<f64>) -> Result<Self> {
        if dims.len() != scores.len() || dims.is_empty() {
            return Err(Error::config("saturation curve needs one score per dimension"));
        }
        Ok(Self { dims, scores })
    }

    pub fn best(&self) -> f64 {
        self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn saturation_dim(&self, fraction: f64) -> usize {
        saturation_dim(&self.dims, &self.scores, fraction)
    }
}

/// Smallest dimension whose score reaches `fraction` of the best score.
/// When the best score is not positive, the dimension attaining it.
pub fn saturation_dim(dims: &[usize], scores: &[f64], fraction: f64) -> usize {
    assert!(!dims.is_empty() && dims.len() == scores.len());
    let mut order: Vec<usize> = (0..dims.len()).collect();
    order.sort_by_key(|&i| dims[i]);
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = if best > 0.0 { fraction * best } else { best };
    order
        .into_iter()
        .find(|&i| scores[i] >= threshold)
        .map(|i| dims[i])
        .expect("the best score always meets its threshold")
}

/// Held-out R² of reduced-rank regression from `x` to `y` at each rank.
pub fn rrr_curve(x_train: &Mat, y_train: &Mat, x_test: &Mat, y_test: &Mat, ranks: &[usize]) -> Result<SaturationCurve> {
    let fit = RrrFit::new(x_train, y_train)?;
    let scores = ranks
        .iter()
        .map(|&r| {
            let m = fit.model(r, x_train, y_train)?;
            r_squared(y_test, &m.predict(x_test)?)
        })
        .collect::<Result<Vec<_>>>()?;
    SaturationCurve::new(ranks.to_vec(), scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_dimension_reaching_the_fraction() {
        assert_eq!(saturation_dim(&[1, 2, 4, 8], &[0.2, 0.96, 0.99, 1.0], 0.95), 2);
        assert_eq!(saturation_dim(&[8, 1, 2], &[1.0, 0.5, 0.94], 0.95), 8);
    }

    #[test]
    fn non_positive_best_picks_the_argmax() {
        assert_eq!(saturation_dim(&[1, 2, 3], &[-0.5, -0.1, -0.3], 0.95), 2);
    }
}
