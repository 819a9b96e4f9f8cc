use proptest::prelude::*;
use splice_core::baselines::{fit_linear_classifier, ClassifierConfig};
use splice_core::datagen::{gen_linear_toy, LinearToyConfig};
use splice_core::metrics::{
    angle_conditioned_variance, angle_offset_correct, axis_alignment, best_shift, circular_r2, fit_probe,
    higher_order_check, leakage_scores, manifold_membership, procrustes_rotation, r_squared, LeakageConfig,
    ProbeConfig,
};
use splice_core::nncore::rng;
use splice_core::splice::{output_variance, Architecture, Direction, LatentGroup, SpliceDims};
use splice_core::{Mat, SpliceModel};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut r = rng::seeded(seed);
    Mat::from_fn(rows, cols, |_, _| rng::normal(&mut r))
}

fn naive_r2(x: &Mat, x_hat: &Mat) -> f64 {
    let (mut sse, mut sst) = (0.0, 0.0);
    for c in 0..x.cols() {
        let col = x.col_vec(c);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        for (r, v) in col.iter().enumerate() {
            sse += (v - x_hat[(r, c)]).powi(2);
            sst += (v - mean).powi(2);
        }
    }
    1.0 - sse / sst
}

fn circle_curve(n: usize, shift: usize) -> Mat {
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
fn r_squared_matches_naive_sums() {
    let x = gaussian(50, 4, 1);
    let x_hat = x.zip_with(&gaussian(50, 4, 2), |a, e| a + 0.3 * e).unwrap();
    assert!((r_squared(&x, &x_hat).unwrap() - naive_r2(&x, &x_hat)).abs() < 1e-12);
}

#[test]
fn constructed_shift_is_recovered_exactly() {
    let reference = Mat::from_fn(360, 2, |j, c| {
        let t = (j as f64).to_radians();
        if c == 0 {
            t.cos() + 0.3 * (3.0 * t).sin()
        } else {
            (2.0 * t).sin()
        }
    });
    let shifted = Mat::from_fn(360, 2, |j, c| reference[((j + 360 - 37) % 360, c)]);
    assert_eq!(best_shift(&shifted, &reference), 37);
    assert_eq!(best_shift(&reference, &reference), 0);
}

#[test]
fn offsets_align_noiseless_circles() {
    let shifts = [0, 12, 200, 359, 90];
    let curves: Vec<Mat> = shifts.iter().map(|&s| circle_curve(360, s)).collect();
    let rep = angle_offset_correct(&curves, 3).unwrap();
    let base = shifts[rep.reference];
    for (o, s) in rep.offsets.iter().zip(shifts) {
        assert_eq!(*o, (s + 360 - base) % 360);
    }
    let v = angle_conditioned_variance(&curves, &rep.offsets, 5).unwrap();
    assert!(v.fraction_explained > 0.99, "{}", v.fraction_explained);
}

#[test]
fn angle_independent_latents_explain_nothing() {
    let curves: Vec<Mat> = (0..100).map(|d| gaussian(360, 2, 100 + d)).collect();
    let offsets = vec![0; curves.len()];
    let v = angle_conditioned_variance(&curves, &offsets, 5).unwrap();
    assert!(v.fraction_explained.abs() < 0.05, "{}", v.fraction_explained);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fraction_explained_is_affine_invariant(
        seed in any::<u64>(), scale in 0.01f64..100.0, shift in -50.0f64..50.0, noise in 0.0f64..1.0,
    ) {
        let curves: Vec<Mat> = (0..6)
            .map(|d| {
                let e = gaussian(36, 2, seed.wrapping_add(d));
                circle_curve(36, 3 * d as usize).zip_with(&e, |a, b| a + noise * b).unwrap()
            })
            .collect();
        let moved: Vec<Mat> = curves.iter().map(|c| c.map(|v| scale * v + shift)).collect();
        let offsets: Vec<usize> = (0..6).map(|d| 3 * d).collect();
        let a = angle_conditioned_variance(&curves, &offsets, 5).unwrap().fraction_explained;
        let b = angle_conditioned_variance(&moved, &offsets, 5).unwrap().fraction_explained;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn axis_alignment_undoes_signed_permutations(seed in any::<u64>(), flip in any::<bool>()) {
        let truth = gaussian(100, 2, seed);
        let sign = if flip { -1.0 } else { 1.0 };
        let latent = Mat::from_fn(100, 3, |r, c| match c {
            0 => rng::normal(&mut rng::seeded(seed ^ r as u64)),
            1 => sign * truth[(r, 1)].powi(3),
            _ => truth[(r, 0)],
        });
        let al = axis_alignment(&latent, &truth).unwrap();
        prop_assert_eq!(&al.axes, &vec![2, 1]);
        prop_assert_eq!(&al.signs, &vec![1.0, sign]);
        prop_assert!((al.min_rho() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn procrustes_undoes_a_rotation() {
    let truth = gaussian(80, 2, 4);
    let (s, c) = 1.1f64.sin_cos();
    let rotated = Mat::from_fn(80, 2, |r, k| {
        let (x, y) = (truth[(r, 0)], truth[(r, 1)]);
        3.0 + if k == 0 { c * x - s * y } else { s * x + c * y }
    });
    let q = procrustes_rotation(&rotated, &truth).unwrap();
    let mean = rotated.col_means();
    let back = Mat::from_fn(80, 2, |r, k| {
        (0..2).map(|j| (rotated[(r, j)] - mean[j]) * q[(j, k)]).sum::<f64>()
    });
    let tmean = truth.col_means();
    let want = Mat::from_fn(80, 2, |r, k| truth[(r, k)] - tmean[k]);
    assert!(back.max_abs_diff(&want) < 1e-10);
}

#[test]
fn circular_regression_reads_angles_from_their_embedding() {
    let mut r = rng::seeded(5);
    let theta: Vec<f64> = (0..400).map(|_| 360.0 * rand::Rng::gen::<f64>(&mut r)).collect();
    let x = Mat::from_fn(400, 3, |i, c| match c {
        0 => 2.0 * theta[i].to_radians().cos() + 1.0,
        1 => -theta[i].to_radians().sin(),
        _ => rng::normal(&mut r),
    });
    let good = circular_r2(
        &x.row_range(0, 300),
        &theta[..300],
        &x.row_range(300, 100),
        &theta[300..],
    )
    .unwrap();
    assert!(good > 0.999, "{good}");
    let noise = gaussian(400, 3, 6);
    let bad = circular_r2(
        &noise.row_range(0, 300),
        &theta[..300],
        &noise.row_range(300, 100),
        &theta[300..],
    )
    .unwrap();
    assert!(bad.abs() < 0.05, "{bad}");
}

/// Four quadrant classes of the shared latent.
fn quadrant_labels(s: &Mat) -> Vec<usize> {
    (0..s.rows())
        .map(|r| usize::from(s[(r, 0)] > 0.0) + 2 * usize::from(s[(r, 1)] > 0.0))
        .collect()
}

#[test]
fn true_private_latents_carry_no_shared_labels() {
    let toy = gen_linear_toy(&LinearToyConfig {
        seed: 7,
        ..LinearToyConfig::default()
    })
    .unwrap();
    let t = toy.data.truth.as_ref().unwrap();
    let labels = quadrant_labels(t.shared.as_ref().unwrap());
    let (tr, te) = (toy.data.train_indices(), toy.data.heldout_indices());
    let pick = |l: &[usize], idx: &[usize]| idx.iter().map(|&i| l[i]).collect::<Vec<_>>();
    let cfg = ClassifierConfig {
        epochs: 20,
        ..ClassifierConfig::default()
    };
    for (z, chance) in [
        (t.private_a.as_ref().unwrap(), 0.25),
        (t.private_b.as_ref().unwrap(), 0.25),
    ] {
        let clf = fit_linear_classifier(&z.select_rows(&tr), &pick(&labels, &tr), 4, &cfg).unwrap();
        let acc = clf.accuracy(&z.select_rows(&te), &pick(&labels, &te)).unwrap();
        assert!((acc - chance).abs() < 0.05, "{acc}");
    }
    let s = t.shared.as_ref().unwrap();
    let clf = fit_linear_classifier(&s.select_rows(&tr), &pick(&labels, &tr), 4, &cfg).unwrap();
    assert!(clf.accuracy(&s.select_rows(&te), &pick(&labels, &te)).unwrap() > 0.9);
}

#[test]
fn leakage_scores_cover_every_latent_group() {
    let mut data = gen_linear_toy(&LinearToyConfig {
        n: 600,
        seed: 8,
        ..LinearToyConfig::default()
    })
    .unwrap()
    .data;
    let truth = data.truth.as_mut().unwrap();
    let labels = quadrant_labels(truth.shared.as_ref().unwrap());
    truth.label = Some(labels.iter().map(|&l| l as u8).collect());
    truth.theta_deg = Some((0..600).map(|i| (i * 7 % 360) as f64).collect());
    let dims = SpliceDims {
        n_a: 10,
        n_b: 10,
        m_za: 2,
        m_zb: 2,
        m_s: 2,
    };
    let mut model = SpliceModel::new(dims, &Architecture::uniform(&[8]), 1).unwrap();
    model.fit_standardization(&data, splice_core::splice::Standardization::PerDimension);
    let cfg = LeakageConfig {
        n_classes: 4,
        ..LeakageConfig::default()
    };
    let s = leakage_scores(&model, &data, &cfg).unwrap();
    for dir in [Direction::AtoB, Direction::BtoA] {
        assert!(s.msr(dir).unwrap() >= 0.0);
    }
    for g in [
        LatentGroup::PrivateA,
        LatentGroup::PrivateB,
        LatentGroup::SharedAtoB,
        LatentGroup::SharedBtoA,
    ] {
        let acc = s.accuracy(g).unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert!(s.angle(g).unwrap() <= 1.0);
    }
    assert_eq!(s.rows().len(), 2 + 4 + 4);
}

#[test]
fn identical_projections_sit_on_the_data() {
    let x = gaussian(300, 5, 9);
    let labels: Vec<usize> = (0..300).map(|i| i % 3).collect();
    let same = manifold_membership(&x, &x, Some(&labels)).unwrap();
    assert!(same.projection_nn.iter().all(|&d| d == 0.0));
    assert_eq!(same.fraction_below_within_class(), Some(1.0));
    let far = manifold_membership(&x.map(|v| v + 100.0), &x, Some(&labels)).unwrap();
    let max_obs = far.observed_nn.iter().copied().fold(0.0, f64::max);
    assert!(far.projection_nn.iter().all(|&d| d > 10.0 * max_obs));
    assert_eq!(far.fraction_below_within_class(), Some(0.0));
}

fn probe_cfg() -> ProbeConfig {
    ProbeConfig {
        hidden: vec![32, 32],
        epochs: 40,
        minibatch_size: 128,
        seed: 2,
        ..ProbeConfig::default()
    }
}

#[test]
fn decorrelated_but_dependent_latent_is_caught_at_second_order() {
    let other = gaussian(5_000, 1, 10);
    let z = other.map(f64::abs);
    let (zt, ot) = (z.row_range(0, 4_000), other.row_range(0, 4_000));
    let (zh, oh) = (z.row_range(4_000, 1_000), other.row_range(4_000, 1_000));
    let first = higher_order_check(&zt, &ot, &zh, &oh, 1, &probe_cfg()).unwrap();
    let second = higher_order_check(&zt, &ot, &zh, &oh, 2, &probe_cfg()).unwrap();
    assert!(first < 0.05, "{first}");
    assert!(second > 0.5, "{second}");
}

#[test]
fn independent_latent_passes_second_order() {
    let toy = gen_linear_toy(&LinearToyConfig {
        n: 5_000,
        seed: 11,
        ..LinearToyConfig::default()
    })
    .unwrap();
    let z = toy.data.truth.as_ref().unwrap().private_b.clone().unwrap();
    let a = &toy.data.view_a;
    let r = higher_order_check(
        &z.row_range(0, 4_000),
        &a.row_range(0, 4_000),
        &z.row_range(4_000, 1_000),
        &a.row_range(4_000, 1_000),
        2,
        &probe_cfg(),
    )
    .unwrap();
    assert!(r < 0.05, "{r}");
}

#[test]
fn first_order_check_is_a_fresh_measurement_network() {
    let z = gaussian(400, 2, 12);
    let other = gaussian(400, 3, 13).map(|v| 2.0 * v + 1.0);
    let cfg = probe_cfg();
    let ratio = higher_order_check(
        &z.row_range(0, 300),
        &other.row_range(0, 300),
        &z.row_range(300, 100),
        &other.row_range(300, 100),
        1,
        &cfg,
    )
    .unwrap();
    let train = other.row_range(0, 300);
    let (mean, var) = (train.col_means(), train.col_variances());
    let zscore = |m: &Mat| Mat::from_fn(m.rows(), m.cols(), |r, c| (m[(r, c)] - mean[c]) / var[c].sqrt());
    let net = fit_probe(&z.row_range(0, 300), &zscore(&train), &cfg).unwrap();
    let manual = output_variance(&net.predict(&z.row_range(300, 100)).unwrap()).unwrap()
        / output_variance(&zscore(&other.row_range(300, 100))).unwrap();
    assert!((ratio - manual).abs() < 1e-12, "{ratio} vs {manual}");
}
