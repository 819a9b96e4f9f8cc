use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::nncore::Matrix;
use crate::scalar::Scalar;

/// Hidden-layer nonlinearity. Output layers are always linear.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Tanh,
    Linear,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu(0.01)
    }
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > T::zero() {
                    z
                } else {
                    z * T::of(slope)
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative as a function of the pre-activation.
    #[inline]
    pub fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::of(slope)
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
            Activation::Linear => T::one(),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Tanh => 1,
            Activation::LeakyRelu(_) => 2,
        }
    }
}

/// One affine layer: `y = x W^T + b`, with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Clone, Debug)]
struct Cache<T> {
    inputs: Vec<Matrix<T>>,
    pre: Vec<Matrix<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

/// Parameter gradients (same layout as the network) plus the input gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrad<T>>,
    pub input: Matrix<T>,
}

impl<T: Scalar> Gradients<T> {
    /// Parameter slices in the order used by [`Network::params_mut`].
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weights.data());
            out.push(l.bias.as_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|v| v.is_finite()))
    }
}

/// Multilayer perceptron with explicit forward cache and backward pass.
#[derive(Clone, Debug)]
pub struct Network<T> {
    dims: Vec<usize>,
    hidden: Activation,
    layers: Vec<Layer<T>>,
    cache: Option<Cache<T>>,
}

impl<T: Scalar> PartialEq for Network<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.hidden == other.hidden && self.layers == other.layers
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::config(format!(
            "network needs at least input and output dims, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::config(format!("network dims must be positive, got {dims:?}")));
    }
    Ok(())
}

impl<T: Scalar> Network<T> {
    /// Fan-in scaled Gaussian weights (`sqrt(2 / fan_in)` for layers feeding a
    /// nonlinearity, `sqrt(1 / fan_in)` for the output layer), zero biases.
    pub fn new(dims: &[usize], hidden: Activation, seed: u64) -> Result<Self> {
        validate_dims(dims)?;
        let mut rng = rng::stream(seed, streams::INIT);
        let n_layers = dims.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (fan_in, fan_out) = (dims[l], dims[l + 1]);
                let gain = if l + 1 == n_layers || hidden == Activation::Linear {
                    1.0
                } else {
                    2.0
                };
                let std = (gain / fan_in as f64).sqrt();
                let weights = Matrix::from_fn(fan_out, fan_in, |_, _| T::of(std * rng::normal(&mut rng)));
                Layer {
                    weights,
                    bias: vec![T::zero(); fan_out],
                }
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            hidden,
            layers,
            cache: None,
        })
    }

    /// Builds a network from explicit layers, validating consecutive shapes.
    pub fn from_layers(layers: Vec<Layer<T>>, hidden: Activation) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::config("network needs at least one layer"))?;
        let mut dims = vec![first.input_dim()];
        for (i, l) in layers.iter().enumerate() {
            if l.input_dim() != *dims.last().unwrap() {
                return Err(Error::config(format!(
                    "layer {i} expects {} inputs but previous layer emits {}",
                    l.input_dim(),
                    dims.last().unwrap()
                )));
            }
            if l.bias.len() != l.output_dim() {
                return Err(Error::config(format!(
                    "layer {i} bias has length {}, expected {}",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
            dims.push(l.output_dim());
        }
        validate_dims(&dims)?;
        Ok(Self {
            dims,
            hidden,
            layers,
            cache: None,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        self.cache = None;
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.data().len() + l.bias.len()).sum()
    }

    /// Parameter slices: weights then bias, layer by layer.
    pub fn params(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weights.data());
            out.push(l.bias.as_slice());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weights.data_mut());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            Activation::Linear
        } else {
            self.hidden
        }
    }

    fn check_input(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::config(format!(
                "network expects {} input columns, got {}",
                self.input_dim(),
                batch.cols()
            )));
        }
        Ok(())
    }

    fn affine(layer: &Layer<T>, input: &Matrix<T>) -> Result<Matrix<T>> {
        let mut z = input.matmul_nt(&layer.weights)?;
        z.add_row(&layer.bias);
        Ok(z)
    }

    /// Forward pass without touching the cache.
    pub fn predict(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(batch)?;
        let mut a = batch.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(l);
            a = Self::affine(layer, &a)?;
            if act != Activation::Linear {
                a.map_inplace(|v| act.apply(v));
            }
        }
        Ok(a)
    }

    /// Forward pass that records layer inputs and pre-activations for
    /// [`backward`](Self::backward).
    pub fn forward(&mut self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = batch.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(l);
            let z = Self::affine(layer, &a)?;
            let next = if act == Activation::Linear {
                z.clone()
            } else {
                z.map(|v| act.apply(v))
            };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        self.cache = Some(Cache { inputs, pre });
        Ok(a)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    fn cache_for(&self, upstream: &Matrix<T>) -> Result<&Cache<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        let rows = cache.inputs[0].rows();
        if upstream.shape() != (rows, self.output_dim()) {
            return Err(Error::config(format!(
                "upstream gradient is {:?}, expected ({rows}, {})",
                upstream.shape(),
                self.output_dim()
            )));
        }
        Ok(cache)
    }

    /// Gradients of `sum(upstream * output)` with respect to every parameter
    /// and to the cached input batch.
    pub fn backward(&self, upstream: &Matrix<T>) -> Result<Gradients<T>> {
        let cache = self.cache_for(upstream)?;
        let mut grads: Vec<LayerGrad<T>> = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let act = self.activation_for(l);
            if act != Activation::Linear {
                for (d, &z) in delta.data_mut().iter_mut().zip(cache.pre[l].data()) {
                    *d *= act.derivative(z);
                }
            }
            let weights = delta.matmul_tn(&cache.inputs[l])?;
            let bias = delta.col_sums();
            delta = delta.matmul(&self.layers[l].weights)?;
            grads.push(LayerGrad { weights, bias });
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: delta,
        })
    }

    /// Input gradient only; skips the parameter-gradient products.
    pub fn backward_input(&self, upstream: &Matrix<T>) -> Result<Matrix<T>> {
        let cache = self.cache_for(upstream)?;
        let mut delta = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let act = self.activation_for(l);
            if act != Activation::Linear {
                for (d, &z) in delta.data_mut().iter_mut().zip(cache.pre[l].data()) {
                    *d *= act.derivative(z);
                }
            }
            delta = delta.matmul(&self.layers[l].weights)?;
        }
        Ok(delta)
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            dims: self.dims.clone(),
            hidden: self.hidden,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.cast(),
                    bias: l.bias.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
            cache: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::rng;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut r = rng::seeded(seed);
        Matrix::from_fn(rows, cols, |_, _| rng::normal(&mut r))
    }

    /// Per-sample forward pass written with plain loops.
    fn naive_forward(net: &Network<f64>, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let n = net.layers().len();
        for (l, layer) in net.layers().iter().enumerate() {
            let mut z = Vec::with_capacity(layer.output_dim());
            for o in 0..layer.output_dim() {
                let mut s = layer.bias[o];
                for (i, &ai) in a.iter().enumerate() {
                    s += layer.weights[(o, i)] * ai;
                }
                z.push(s);
            }
            a = if l + 1 == n {
                z
            } else {
                z.into_iter().map(|v| net.hidden_activation().apply(v)).collect()
            };
        }
        a
    }

    #[test]
    fn zero_weights_output_bias() {
        let layer = Layer {
            weights: Matrix::zeros(2, 3),
            bias: vec![0.5, -1.5],
        };
        let net = Network::from_layers(vec![layer], Activation::default()).unwrap();
        let out = net.predict(&random_batch(4, 3, 1)).unwrap();
        for row in out.iter_rows() {
            assert_eq!(row, &[0.5, -1.5]);
        }
    }

    #[test]
    fn single_affine_layer() {
        let layer = Layer {
            weights: Matrix::from_rows(&[[1.0, 2.0]]).unwrap(),
            bias: vec![0.0],
        };
        let net = Network::from_layers(vec![layer], Activation::default()).unwrap();
        let out = net.predict(&Matrix::from_rows(&[[3.0, 4.0]]).unwrap()).unwrap();
        assert_eq!(out.data(), &[11.0]);
    }

    #[test]
    fn batch_forward_matches_per_sample_loop() {
        let net = Network::<f64>::new(&[5, 3, 2], Activation::default(), 11).unwrap();
        let x = random_batch(7, 5, 2);
        let out = net.predict(&x).unwrap();
        for r in 0..7 {
            let expect = naive_forward(&net, x.row(r));
            for (a, b) in out.row(r).iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_is_repeatable_and_matches_predict() {
        let mut net = Network::<f64>::new(&[4, 6, 3], Activation::Tanh, 5).unwrap();
        let x = random_batch(3, 4, 9);
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, net.predict(&x).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = Network::<f64>::new(&[4, 2], Activation::default(), 0).unwrap();
        assert!(matches!(net.predict(&Matrix::zeros(1, 3)), Err(Error::Config(_))));
    }

    #[test]
    fn backward_before_forward_is_state_error() {
        let net = Network::<f64>::new(&[2, 2], Activation::default(), 0).unwrap();
        assert!(matches!(net.backward(&Matrix::zeros(1, 2)), Err(Error::State(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut net = Network::<f64>::new(&[3, 4, 2], Activation::default(), 3).unwrap();
        net.forward(&random_batch(5, 3, 4)).unwrap();
        let g = net.backward(&Matrix::zeros(5, 2)).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(g.input.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_linear_derivative() {
        let layer = Layer {
            weights: Matrix::from_rows(&[[2.5]]).unwrap(),
            bias: vec![0.0],
        };
        let mut net = Network::from_layers(vec![layer], Activation::default()).unwrap();
        net.forward(&Matrix::from_rows(&[[1.75]]).unwrap()).unwrap();
        let g = net.backward(&Matrix::from_rows(&[[1.0]]).unwrap()).unwrap();
        assert_eq!(g.layers[0].weights.data(), &[1.75]);
        assert_eq!(g.layers[0].bias, vec![1.0]);
        assert_eq!(g.input.data(), &[2.5]);
    }

    #[test]
    fn same_seed_same_weights() {
        let a = Network::<f64>::new(&[6, 5, 4], Activation::default(), 42).unwrap();
        let b = Network::<f64>::new(&[6, 5, 4], Activation::default(), 42).unwrap();
        let c = Network::<f64>::new(&[6, 5, 4], Activation::default(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn builds_reference_architectures() {
        let mnist = Network::<f64>::new(&[784, 256, 128, 64, 32, 30], Activation::default(), 0).unwrap();
        assert_eq!(mnist.layers().len(), 5);
        assert_eq!(mnist.layers()[0].weights.shape(), (256, 784));
        assert_eq!(mnist.output_dim(), 30);
        let lgn = Network::<f64>::new(&[400, 200, 200, 200, 200, 200, 200, 2], Activation::default(), 0).unwrap();
        assert_eq!(lgn.layers().len(), 7);
        assert_eq!(lgn.output_dim(), 2);
    }

    #[test]
    fn invalid_dims_rejected() {
        assert!(Network::<f64>::new(&[3], Activation::default(), 0).is_err());
        assert!(Network::<f64>::new(&[3, 0, 2], Activation::default(), 0).is_err());
    }

    #[test]
    fn backward_input_matches_full_backward() {
        let mut net = Network::<f64>::new(&[3, 5, 5, 2], Activation::default(), 8).unwrap();
        net.forward(&random_batch(4, 3, 1)).unwrap();
        let up = random_batch(4, 2, 2);
        let full = net.backward(&up).unwrap();
        let only = net.backward_input(&up).unwrap();
        assert!(full.input.max_abs_diff(&only) < 1e-14);
    }

    #[test]
    fn f32_network_runs() {
        let mut net = Network::<f32>::new(&[3, 4, 1], Activation::Tanh, 1).unwrap();
        let x = Matrix::<f32>::from_fn(2, 3, |i, j| (i + j) as f32 * 0.1);
        let y = net.forward(&x).unwrap();
        let g = net.backward(&Matrix::filled(2, 1, 1.0)).unwrap();
        assert_eq!(y.shape(), (2, 1));
        assert!(g.is_finite());
    }
}
