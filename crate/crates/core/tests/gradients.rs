use proptest::prelude::*;
use splice_core::nncore::gradcheck::check_gradients;
use splice_core::nncore::rng;
use splice_core::nncore::{Activation, Matrix, Network};

fn randomized_net(dims: &[usize], act: Activation, seed: u64) -> Network<f64> {
    let mut net = Network::<f64>::new(dims, act, seed).unwrap();
    let mut r = rng::stream(seed, 99);
    for p in net.params_mut() {
        for v in p.iter_mut() {
            *v += 0.1 * rng::normal(&mut r);
        }
    }
    net
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut r = rng::seeded(seed);
    Matrix::from_fn(rows, cols, |_, _| rng::normal(&mut r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn backprop_matches_central_differences(
        widths in prop::collection::vec(1usize..=32, 2..=5),
        tanh in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let act = if tanh { Activation::Tanh } else { Activation::Linear };
        let net = randomized_net(&widths, act, seed);
        let batch = gaussian(4, widths[0], seed ^ 1);
        let upstream = gaussian(4, *widths.last().unwrap(), seed ^ 2);
        let report = check_gradients(&net, &batch, &upstream, 1e-5).unwrap();
        prop_assert!(report.max_error() < 1e-4, "{report:?} for {widths:?}");
    }
}

#[test]
fn leaky_relu_gradients_away_from_the_kink() {
    let net = randomized_net(&[6, 16, 12, 3], Activation::LeakyRelu(0.01), 3);
    let batch = gaussian(5, 6, 4);
    let upstream = gaussian(5, 3, 5);
    let report = check_gradients(&net, &batch, &upstream, 1e-6).unwrap();
    assert!(report.max_error() < 1e-4, "{report:?}");
    assert_eq!(report.checked, net.param_count() + 30);
}

#[test]
fn single_precision_backward_agrees_with_double() {
    let net = randomized_net(&[5, 8, 2], Activation::Tanh, 11);
    let batch = gaussian(3, 5, 12);
    let upstream = gaussian(3, 2, 13);
    let mut n64 = net.clone();
    n64.forward(&batch).unwrap();
    let g64 = n64.backward(&upstream).unwrap();
    let mut n32 = net.cast::<f32>();
    n32.forward(&batch.cast()).unwrap();
    let g32 = n32.backward(&upstream.cast()).unwrap();
    for (a, b) in g64.slices().iter().zip(g32.slices()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - *y as f64).abs() < 1e-4 * x.abs().max(1.0));
        }
    }
}
