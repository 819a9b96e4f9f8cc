use rand::Rng as _;

use crate::datagen::dense_rotations;
use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::splice::{LatentGroup, View};
use crate::{Mat, SpliceModel};

/// Private view-B latent of every image rotated through `steps` evenly
/// spaced angles. One `steps x m_zB` curve per image; `images` are raw
/// view-A rows.
pub fn angle_curves(model: &SpliceModel, images: &Mat, steps: usize) -> Result<Vec<Mat>> {
    if steps == 0 {
        return Err(Error::config("angle curves need at least one step"));
    }
    let rotated = dense_rotations(images, steps)?;
    let x = model.standardize(View::B, &rotated)?;
    let z = model.encode_group(LatentGroup::PrivateB, &x)?;
    Ok((0..images.rows()).map(|i| z.row_range(i * steps, steps)).collect())
}

/// Per-curve circular shifts aligning every curve with a reference curve.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetReport {
    pub reference: usize,
    /// `offsets[d]` maximizes `sum_j <curve_d[(j + s) mod n], ref[j]>`.
    pub offsets: Vec<usize>,
}

fn check_curves(curves: &[Mat]) -> Result<(usize, usize)> {
    let first = curves.first().ok_or_else(|| Error::config("no angle curves given"))?;
    let shape = first.shape();
    if shape.0 == 0 || curves.iter().any(|c| c.shape() != shape) {
        return Err(Error::config("angle curves must be non-empty and equally shaped"));
    }
    Ok(shape)
}

/// Best shift of `curve` against `reference`; ties resolve to the smallest.
pub fn best_shift(curve: &Mat, reference: &Mat) -> usize {
    let n = curve.rows();
    let mut best = (f64::NEG_INFINITY, 0);
    for s in 0..n {
        let ip: f64 = (0..n)
            .map(|j| {
                curve
                    .row((j + s) % n)
                    .iter()
                    .zip(reference.row(j))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum();
        if ip > best.0 {
            best = (ip, s);
        }
    }
    best.1
}

/// Aligns each curve with one reference curve chosen at random from `seed`.
pub fn angle_offset_correct(curves: &[Mat], seed: u64) -> Result<OffsetReport> {
    check_curves(curves)?;
    let reference = rng::stream(seed, streams::METRICS).gen_range(0..curves.len());
    let offsets = curves.iter().map(|c| best_shift(c, &curves[reference])).collect();
    Ok(OffsetReport { reference, offsets })
}

/// Windowed variance of the private latent conditioned on the aligned angle.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleVarianceReport {
    pub offsets: Vec<usize>,
    /// Width of each window in angle steps.
    pub window: usize,
    /// Pooled latent variance (summed over coordinates) in the window
    /// centered at each angle step.
    pub window_variances: Vec<f64>,
    pub total_variance: f64,
    /// `1 - mean(window variance) / total variance`.
    pub fraction_explained: f64,
}

/// Sample `j` of curve `d` sits at aligned angle step `(j - offsets[d]) mod n`.
/// Windows of `window` steps (odd) are centered on every step.
pub fn angle_conditioned_variance(curves: &[Mat], offsets: &[usize], window: usize) -> Result<AngleVarianceReport> {
    let (n, m) = check_curves(curves)?;
    if offsets.len() != curves.len() {
        return Err(Error::config("one offset per curve required"));
    }
    if window == 0 || window.is_multiple_of(2) || window > n {
        return Err(Error::config(format!(
            "window must be odd and at most {n}, got {window}"
        )));
    }
    if m == 0 {
        return Err(Error::config("angle curves have no latent coordinates"));
    }
    let mut center = vec![0.0; m];
    for c in curves {
        for (acc, v) in center.iter_mut().zip(c.col_sums()) {
            *acc += v;
        }
    }
    let total_n = (n * curves.len()) as f64;
    center.iter_mut().for_each(|v| *v /= total_n);
    // Per aligned step: count, per-coordinate sum and sum of squares.
    let mut count = vec![0.0; n];
    let mut sum = vec![vec![0.0; m]; n];
    let mut sq = vec![vec![0.0; m]; n];
    for (c, &off) in curves.iter().zip(offsets) {
        for j in 0..n {
            let a = (j + n - off % n) % n;
            count[a] += 1.0;
            for (k, &v) in c.row(j).iter().enumerate() {
                let x = v - center[k];
                sum[a][k] += x;
                sq[a][k] += x * x;
            }
        }
    }
    let pooled = |steps: &mut dyn Iterator<Item = usize>| -> f64 {
        let (mut cnt, mut s, mut q) = (0.0, vec![0.0; m], vec![0.0; m]);
        for a in steps {
            cnt += count[a];
            for k in 0..m {
                s[k] += sum[a][k];
                q[k] += sq[a][k];
            }
        }
        (0..m).map(|k| (q[k] / cnt - (s[k] / cnt).powi(2)).max(0.0)).sum()
    };
    let total_variance = pooled(&mut (0..n));
    if total_variance <= 0.0 {
        return Err(Error::Degenerate("private latent has zero variance".into()));
    }
    let half = window / 2;
    let window_variances: Vec<f64> = (0..n)
        .map(|c| pooled(&mut (0..window).map(|i| (c + n + i - half) % n)))
        .collect();
    let mean_window = window_variances.iter().sum::<f64>() / n as f64;
    Ok(AngleVarianceReport {
        offsets: offsets.to_vec(),
        window,
        window_variances,
        total_variance,
        fraction_explained: 1.0 - mean_window / total_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, shift: usize) -> Mat {
        Mat::from_fn(n, 2, |j, c| {
            let t = ((j + n - shift) % n) as f64 * std::f64::consts::TAU / n as f64;
            if c == 0 {
                t.cos()
            } else {
                t.sin()
            }
        })
    }

    #[test]
    fn identical_curve_has_zero_offset() {
        let c = circle(360, 0);
        assert_eq!(best_shift(&c, &c), 0);
    }

    #[test]
    fn cosine_against_sine_is_a_quarter_period() {
        let cos = Mat::from_fn(360, 1, |j, _| (j as f64).to_radians().cos());
        let sin = Mat::from_fn(360, 1, |j, _| (j as f64).to_radians().sin());
        let s = best_shift(&cos, &sin);
        assert!(s == 90 || s == 270, "{s}");
    }

    #[test]
    fn noiseless_circle_is_fully_explained() {
        let curves = vec![circle(360, 0), circle(360, 10)];
        let off = angle_offset_correct(&curves, 0).unwrap();
        let rep = angle_conditioned_variance(&curves, &off.offsets, 5).unwrap();
        assert!(rep.fraction_explained > 0.99, "{}", rep.fraction_explained);
    }
}
