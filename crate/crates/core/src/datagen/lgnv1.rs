//! Simulated LGN (view A) and V1 (view B) populations.
//!
//! Both populations respond to the same vertical bar (the shared latent is
//! its `(x, y)` center). LGN neurons have difference-of-Gaussians receptive
//! fields on a `grid x grid` lattice; V1 has one lattice of vertical and one
//! of horizontal Gabor receptive fields. Each population also carries Gaussian
//! place fields on its own 1-D track (the private latents), added linearly.

use rand::Rng as _;
use rayon::prelude::*;

use crate::datagen::{random_split, PairedDataset, Truth};
use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct LgnV1Config {
    /// The visual field is `field_px x field_px`.
    pub field_px: usize,
    /// Side of each receptive-field patch.
    pub rf_px: usize,
    /// Receptive-field lattice size per population grid.
    pub grid: usize,
    pub n_trials: usize,
    /// Target `Var(private response) / Var(shared response)` per view.
    pub private_ratio: f64,
    /// Noise norm as a fraction of the noiseless response norm.
    pub noise_level: f64,
    pub bar_width: f64,
    pub bar_height: f64,
    /// Place-field standard deviation as a fraction of the track length.
    pub place_width: f64,
    /// Defaults to `rf_px / 8`.
    pub dog_center_sigma: Option<f64>,
    /// Defaults to `rf_px / 4`.
    pub dog_surround_sigma: Option<f64>,
    /// Defaults to `rf_px / 6`.
    pub gabor_sigma: Option<f64>,
    /// Defaults to `rf_px / 3`.
    pub gabor_wavelength: Option<f64>,
    pub train_frac: f64,
    pub seed: u64,
}

impl Default for LgnV1Config {
    fn default() -> Self {
        Self {
            field_px: 100,
            rf_px: 30,
            grid: 20,
            n_trials: 18_900,
            private_ratio: 6.0,
            noise_level: 0.0,
            bar_width: 4.0,
            bar_height: 12.0,
            place_width: 0.1,
            dog_center_sigma: None,
            dog_surround_sigma: None,
            gabor_sigma: None,
            gabor_wavelength: None,
            train_frac: 0.8,
            seed: 0,
        }
    }
}

impl LgnV1Config {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::config("grid must be at least 2"));
        }
        if self.rf_px == 0 || self.rf_px > self.field_px {
            return Err(Error::config(format!(
                "rf_px = {} must lie in 1..={}",
                self.rf_px, self.field_px
            )));
        }
        let f = self.field_px as f64;
        if !(self.bar_width > 0.0 && self.bar_width <= f && self.bar_height > 0.0 && self.bar_height <= f) {
            return Err(Error::config("bar must be non-empty and fit inside the field"));
        }
        if self.n_trials < 2 {
            return Err(Error::config("n_trials must be at least 2"));
        }
        if !(self.private_ratio >= 0.0 && self.noise_level >= 0.0 && self.place_width > 0.0) {
            return Err(Error::config(
                "private_ratio and noise_level must be non-negative, place_width positive",
            ));
        }
        Ok(())
    }

    fn rf(&self) -> f64 {
        self.rf_px as f64
    }

    /// Receptive-field centers of one lattice, row-major over `(y, x)`.
    pub fn centers(&self) -> Vec<(f64, f64)> {
        let step = self.field_px as f64 / self.grid as f64;
        let mut out = Vec::with_capacity(self.grid * self.grid);
        for gy in 0..self.grid {
            for gx in 0..self.grid {
                out.push(((gx as f64 + 0.5) * step, (gy as f64 + 0.5) * step));
            }
        }
        out
    }

    /// Range of valid bar centers `([x_lo, x_hi], [y_lo, y_hi])`.
    pub fn bar_range(&self) -> ((f64, f64), (f64, f64)) {
        let f = self.field_px as f64;
        (
            (self.bar_width / 2.0, f - self.bar_width / 2.0),
            (self.bar_height / 2.0, f - self.bar_height / 2.0),
        )
    }
}

/// Receptive field restricted to its pixel patch.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    /// Column of the patch's first pixel.
    pub x0: usize,
    /// Row of the patch's first pixel.
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major weights, `height x width`.
    pub values: Vec<f64>,
}

impl Kernel {
    /// Response to a bar centered at `(bx, by)`: sum of kernel weights times
    /// the fraction of each pixel the bar covers.
    pub fn bar_response(&self, bx: f64, by: f64, bw: f64, bh: f64) -> f64 {
        let (left, right) = (bx - bw / 2.0, bx + bw / 2.0);
        let (top, bottom) = (by - bh / 2.0, by + bh / 2.0);
        let c0 = (left.floor().max(self.x0 as f64)) as usize;
        let c1 = (right.ceil().min((self.x0 + self.width) as f64)) as usize;
        let r0 = (top.floor().max(self.y0 as f64)) as usize;
        let r1 = (bottom.ceil().min((self.y0 + self.height) as f64)) as usize;
        let mut acc = 0.0;
        for row in r0..r1 {
            let cy = (bottom.min(row as f64 + 1.0) - top.max(row as f64)).max(0.0);
            if cy == 0.0 {
                continue;
            }
            let base = (row - self.y0) * self.width;
            for col in c0..c1 {
                let cx = (right.min(col as f64 + 1.0) - left.max(col as f64)).max(0.0);
                acc += cx * cy * self.values[base + col - self.x0];
            }
        }
        acc
    }
}

fn gauss2(r2: f64, sigma: f64) -> f64 {
    (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * std::f64::consts::PI * sigma * sigma)
}

/// Patch of pixels whose centers lie within `rf / 2` of `(cx, cy)` on both
/// axes, clipped to the field; `f` receives the offsets `(dx, dy)`.
fn patch(cfg: &LgnV1Config, (cx, cy): (f64, f64), f: impl Fn(f64, f64) -> f64) -> Kernel {
    let half = cfg.rf() / 2.0;
    let n = cfg.field_px;
    let inside = |p: usize, c: f64| (p as f64 + 0.5 - c).abs() < half;
    let cols: Vec<usize> = (0..n).filter(|&p| inside(p, cx)).collect();
    let rows: Vec<usize> = (0..n).filter(|&p| inside(p, cy)).collect();
    let mut values = Vec::with_capacity(cols.len() * rows.len());
    for &r in &rows {
        for &c in &cols {
            values.push(f(c as f64 + 0.5 - cx, r as f64 + 0.5 - cy));
        }
    }
    Kernel {
        x0: cols[0],
        y0: rows[0],
        width: cols.len(),
        height: rows.len(),
        values,
    }
}

/// Center-surround kernel: center Gaussian minus a surround Gaussian scaled
/// so the patch sums to zero.
pub fn dog_kernel(cfg: &LgnV1Config, center: (f64, f64)) -> Kernel {
    let sc = cfg.dog_center_sigma.unwrap_or(cfg.rf() / 8.0);
    let ss = cfg.dog_surround_sigma.unwrap_or(cfg.rf() / 4.0);
    let c = patch(cfg, center, |dx, dy| gauss2(dx * dx + dy * dy, sc));
    let s = patch(cfg, center, |dx, dy| gauss2(dx * dx + dy * dy, ss));
    let alpha = c.values.iter().sum::<f64>() / s.values.iter().sum::<f64>();
    Kernel {
        values: c.values.iter().zip(&s.values).map(|(a, b)| a - alpha * b).collect(),
        ..c
    }
}

/// Gabor kernel with phase 0. `vertical` stripes vary along x.
pub fn gabor_kernel(cfg: &LgnV1Config, center: (f64, f64), vertical: bool) -> Kernel {
    let sigma = cfg.gabor_sigma.unwrap_or(cfg.rf() / 6.0);
    let lambda = cfg.gabor_wavelength.unwrap_or(cfg.rf() / 3.0);
    patch(cfg, center, |dx, dy| {
        let u = if vertical { dx } else { dy };
        (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp() * (2.0 * std::f64::consts::PI * u / lambda).cos()
    })
}

/// LGN kernels (view A) and V1 kernels (view B: vertical lattice, then
/// horizontal lattice).
pub fn lgnv1_kernels(cfg: &LgnV1Config) -> (Vec<Kernel>, Vec<Kernel>) {
    let centers = cfg.centers();
    let lgn = centers.iter().map(|&c| dog_kernel(cfg, c)).collect();
    let v1 = centers
        .iter()
        .map(|&c| gabor_kernel(cfg, c, true))
        .chain(centers.iter().map(|&c| gabor_kernel(cfg, c, false)))
        .collect();
    (lgn, v1)
}

/// The simulated responses split into their additive components.
#[derive(Clone, Debug)]
pub struct LgnV1Parts {
    pub shared_a: Mat,
    pub private_a: Mat,
    pub noise_a: Mat,
    pub shared_b: Mat,
    pub private_b: Mat,
    pub noise_b: Mat,
    /// Place-response gains applied to views A and B.
    pub gain: (f64, f64),
    /// Bar centers `(x, y)` per trial.
    pub stimulus: Mat,
    /// Track positions in `[0, 1)` per trial, views A and B.
    pub track: Mat,
}

impl LgnV1Parts {
    pub fn view_a(&self) -> Mat {
        sum3(&self.shared_a, &self.private_a, &self.noise_a)
    }

    pub fn view_b(&self) -> Mat {
        sum3(&self.shared_b, &self.private_b, &self.noise_b)
    }
}

fn sum3(a: &Mat, b: &Mat, c: &Mat) -> Mat {
    a.add(b).and_then(|ab| ab.add(c)).expect("component shapes agree")
}

/// Sum over columns of the population variance.
pub fn total_variance(m: &Mat) -> f64 {
    m.col_variances().iter().sum()
}

pub fn gen_lgnv1_parts(cfg: &LgnV1Config) -> Result<LgnV1Parts> {
    cfg.validate()?;
    let (lgn, v1) = lgnv1_kernels(cfg);
    let n = cfg.n_trials;
    let mut r = rng::stream(cfg.seed, streams::DATA);
    let centers_a: Vec<f64> = (0..lgn.len()).map(|_| r.gen::<f64>()).collect();
    let centers_b: Vec<f64> = (0..v1.len()).map(|_| r.gen::<f64>()).collect();
    let ((xl, xh), (yl, yh)) = cfg.bar_range();

    // Per-trial draws: bar center, two track positions, then the noise
    // directions for both views.
    let trials: Vec<([f64; 4], Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut tr = rng::stream(cfg.seed, streams::TRIALS + t as u64);
            let draw = [
                xl + (xh - xl) * tr.gen::<f64>(),
                yl + (yh - yl) * tr.gen::<f64>(),
                tr.gen::<f64>(),
                tr.gen::<f64>(),
            ];
            let na = if cfg.noise_level > 0.0 {
                (0..lgn.len()).map(|_| rng::normal(&mut tr)).collect()
            } else {
                Vec::new()
            };
            let nb = if cfg.noise_level > 0.0 {
                (0..v1.len()).map(|_| rng::normal(&mut tr)).collect()
            } else {
                Vec::new()
            };
            (draw, na, nb)
        })
        .collect();

    let respond = |kernels: &[Kernel]| -> Mat {
        let rows: Vec<Vec<f64>> = trials
            .par_iter()
            .map(|(d, _, _)| {
                kernels
                    .iter()
                    .map(|k| k.bar_response(d[0], d[1], cfg.bar_width, cfg.bar_height))
                    .collect()
            })
            .collect();
        Mat::from_vec(n, kernels.len(), rows.concat()).expect("row lengths agree")
    };
    let place = |centers: &[f64], slot: usize| -> Mat {
        let inv = 1.0 / (2.0 * cfg.place_width * cfg.place_width);
        Mat::from_fn(n, centers.len(), |t, j| {
            let d = trials[t].0[slot] - centers[j];
            (-d * d * inv).exp()
        })
    };
    let shared_a = respond(&lgn);
    let shared_b = respond(&v1);
    let mut private_a = place(&centers_a, 2);
    let mut private_b = place(&centers_b, 3);

    let gain_for = |shared: &Mat, private: &Mat| -> Result<f64> {
        let vp = total_variance(private);
        if vp <= 0.0 {
            return Err(Error::Degenerate("place responses have zero variance".into()));
        }
        // The variance ratio is exactly quadratic in the gain.
        Ok((cfg.private_ratio * total_variance(shared) / vp).sqrt())
    };
    let gain = (gain_for(&shared_a, &private_a)?, gain_for(&shared_b, &private_b)?);
    private_a.scale(gain.0);
    private_b.scale(gain.1);

    let noise = |shared: &Mat, private: &Mat, view_b: bool| -> Mat {
        let (rows, cols) = shared.shape();
        if cfg.noise_level == 0.0 {
            return Mat::zeros(rows, cols);
        }
        let clean = shared.add(private).expect("same shape");
        let sigma = cfg.noise_level * clean.frobenius_norm() / ((rows * cols) as f64).sqrt();
        Mat::from_fn(rows, cols, |t, j| {
            let draws = if view_b { &trials[t].2 } else { &trials[t].1 };
            sigma * draws[j]
        })
    };
    let noise_a = noise(&shared_a, &private_a, false);
    let noise_b = noise(&shared_b, &private_b, true);

    Ok(LgnV1Parts {
        stimulus: Mat::from_fn(n, 2, |t, c| trials[t].0[c]),
        track: Mat::from_fn(n, 2, |t, c| trials[t].0[2 + c]),
        shared_a,
        private_a,
        noise_a,
        shared_b,
        private_b,
        noise_b,
        gain,
    })
}

/// Simulated dataset with truth `shared = (x, y)`, `private_a`/`private_b`
/// the track positions, and a random train/test split.
pub fn gen_lgnv1(cfg: &LgnV1Config) -> Result<PairedDataset> {
    let parts = gen_lgnv1_parts(cfg)?;
    let split = random_split(cfg.n_trials, cfg.train_frac, 0.0, cfg.seed)?;
    let truth = Truth {
        shared: Some(parts.stimulus.clone()),
        private_a: Some(parts.track.col_slice(0, 1)),
        private_b: Some(parts.track.col_slice(1, 1)),
        ..Truth::default()
    };
    PairedDataset::new(parts.view_a(), parts.view_b(), Some(truth), split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dog_patch_is_balanced() {
        let cfg = LgnV1Config::default();
        let k = dog_kernel(&cfg, (50.0, 50.0));
        assert_eq!((k.width, k.height), (30, 30));
        assert!(k.values.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn edge_patches_are_clipped() {
        let cfg = LgnV1Config::default();
        let k = dog_kernel(&cfg, (2.5, 97.5));
        assert_eq!((k.x0, k.width), (0, 17));
        assert_eq!(k.y0 + k.height, 100);
    }

    #[test]
    fn full_pixel_bar_sums_weights() {
        let k = Kernel {
            x0: 2,
            y0: 3,
            width: 2,
            height: 2,
            values: vec![1.0, 2.0, 3.0, 4.0],
        };
        // Bar covering exactly pixel (col 3, row 4).
        assert_eq!(k.bar_response(3.5, 4.5, 1.0, 1.0), 4.0);
        // Half of pixel (2, 3) and half of pixel (3, 3).
        assert_eq!(k.bar_response(3.0, 3.5, 1.0, 1.0), 1.5);
        assert_eq!(k.bar_response(50.0, 50.0, 1.0, 1.0), 0.0);
    }
}
