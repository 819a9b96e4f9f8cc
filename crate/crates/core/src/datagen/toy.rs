use nalgebra::DMatrix;

use crate::datagen::{random_split, PairedDataset, Truth};
use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams, Rng};
use crate::splice::SpliceDims;
use crate::Mat;

/// Linear two-view generator: `x_A = W_A [s; z_A] + noise`,
/// `x_B = W_B [s; z_B] + noise` with orthonormal-column mixing matrices and
/// independent standard-normal latents.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearToyConfig {
    pub dims: SpliceDims,
    /// Standard deviation of the i.i.d. observation noise.
    pub noise: f64,
    pub n: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub seed: u64,
}

impl Default for LinearToyConfig {
    fn default() -> Self {
        Self {
            dims: SpliceDims {
                n_a: 10,
                n_b: 10,
                m_za: 2,
                m_zb: 2,
                m_s: 2,
            },
            noise: 0.05,
            n: 10_000,
            train_frac: 0.8,
            val_frac: 0.0,
            seed: 0,
        }
    }
}

/// Linear toy dataset together with its mixing matrices.
#[derive(Clone, Debug)]
pub struct LinearToy {
    pub data: PairedDataset,
    /// `n_a x (m_s + m_za)`, columns ordered `[s | z_A]`.
    pub w_a: Mat,
    /// `n_b x (m_s + m_zb)`, columns ordered `[s | z_B]`.
    pub w_b: Mat,
}

/// `rows x cols` matrix with orthonormal columns from the QR factor of a
/// Gaussian matrix.
pub fn random_orthonormal(rows: usize, cols: usize, r: &mut Rng) -> Result<Mat> {
    if cols > rows {
        return Err(Error::config(format!(
            "cannot fit {cols} orthonormal columns in {rows} dimensions"
        )));
    }
    if cols == 0 {
        return Ok(Mat::zeros(rows, 0));
    }
    let g = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng::normal(r));
    let q = g.qr().q();
    Ok(Mat::from_fn(rows, cols, |i, j| q[(i, j)]))
}

fn gaussian(rows: usize, cols: usize, r: &mut Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng::normal(r))
}

pub fn gen_linear_toy(cfg: &LinearToyConfig) -> Result<LinearToy> {
    let d = cfg.dims;
    d.validate()?;
    if !(cfg.noise >= 0.0) {
        return Err(Error::config("noise must be non-negative"));
    }
    let mut r = rng::stream(cfg.seed, streams::DATA);
    let w_a = random_orthonormal(d.n_a, d.m_s + d.m_za, &mut r)?;
    let w_b = random_orthonormal(d.n_b, d.m_s + d.m_zb, &mut r)?;
    let s = gaussian(cfg.n, d.m_s, &mut r);
    let z_a = gaussian(cfg.n, d.m_za, &mut r);
    let z_b = gaussian(cfg.n, d.m_zb, &mut r);
    let mut x_a = s.hcat(&z_a)?.matmul_nt(&w_a)?;
    let mut x_b = s.hcat(&z_b)?.matmul_nt(&w_b)?;
    for x in [&mut x_a, &mut x_b] {
        for v in x.data_mut() {
            *v += cfg.noise * rng::normal(&mut r);
        }
    }
    let split = random_split(cfg.n, cfg.train_frac, cfg.val_frac, cfg.seed)?;
    let truth = Truth {
        shared: Some(s),
        private_a: Some(z_a),
        private_b: Some(z_b),
        ..Truth::default()
    };
    Ok(LinearToy {
        data: PairedDataset::new(x_a, x_b, Some(truth), split)?,
        w_a,
        w_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_columns() {
        let q = random_orthonormal(6, 4, &mut rng::seeded(1)).unwrap();
        let g = q.matmul_tn(&q).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-12);
            }
        }
        assert!(random_orthonormal(2, 3, &mut rng::seeded(1)).is_err());
    }

    #[test]
    fn seeded_generation_is_repeatable() {
        let cfg = LinearToyConfig {
            n: 50,
            ..LinearToyConfig::default()
        };
        let a = gen_linear_toy(&cfg).unwrap();
        let b = gen_linear_toy(&cfg).unwrap();
        assert_eq!(a.data, b.data);
    }
}
