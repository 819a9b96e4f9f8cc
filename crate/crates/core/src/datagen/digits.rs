use rand::Rng as _;
use rayon::prelude::*;

use crate::datagen::{rotate_image, PairedDataset, Split, Truth};
use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::Mat;

/// Sample counts for the rotated-digit pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DigitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for DigitCounts {
    fn default() -> Self {
        Self {
            train: 50_000,
            val: 10_000,
            test: 10_000,
        }
    }
}

impl DigitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Pairs each digit with one rotated copy: view A holds the original
/// flattened image, view B its rotation by `theta ~ U[0, 360)` degrees.
///
/// `images` holds one flattened square image per row. A random subset of
/// `counts.total()` images is used; splits follow the drawn order.
pub fn gen_rotated_digits(images: &Mat, labels: &[u8], counts: DigitCounts, seed: u64) -> Result<PairedDataset> {
    let side = (images.cols() as f64).sqrt().round() as usize;
    if side * side != images.cols() {
        return Err(Error::config(format!(
            "{} pixels do not form a square image",
            images.cols()
        )));
    }
    if labels.len() != images.rows() {
        return Err(Error::config(format!(
            "{} labels for {} images",
            labels.len(),
            images.rows()
        )));
    }
    let n = counts.total();
    if n > images.rows() {
        return Err(Error::config(format!(
            "requested {n} digits but only {} are available",
            images.rows()
        )));
    }
    let mut r = rng::stream(seed, streams::DATA);
    let order = rand::seq::index::sample(&mut r, images.rows(), n).into_vec();
    let theta: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 360.0).collect();
    let view_a = images.select_rows(&order);
    let rotated: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| rotate_image(view_a.row(i), side, theta[i]))
        .collect();
    let view_b = Mat::from_vec(n, side * side, rotated.concat())?;
    let split = (0..n)
        .map(|i| {
            if i < counts.train {
                Split::Train
            } else if i < counts.train + counts.val {
                Split::Val
            } else {
                Split::Test
            }
        })
        .collect();
    let truth = Truth {
        theta_deg: Some(theta),
        label: Some(order.iter().map(|&i| labels[i]).collect()),
        ..Truth::default()
    };
    PairedDataset::new(view_a, view_b, Some(truth), split)
}

/// Every image rotated through `steps` evenly spaced angles starting at 0.
/// Row `i * steps + j` holds image `i` at angle `j * 360 / steps`.
pub fn dense_rotations(images: &Mat, steps: usize) -> Result<Mat> {
    let side = (images.cols() as f64).sqrt().round() as usize;
    if side * side != images.cols() {
        return Err(Error::config("images are not square"));
    }
    let rows: Vec<Vec<f64>> = (0..images.rows() * steps)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / steps, k % steps);
            rotate_image(images.row(i), side, j as f64 * 360.0 / steps as f64)
        })
        .collect();
    Mat::from_vec(images.rows() * steps, images.cols(), rows.concat())
}
