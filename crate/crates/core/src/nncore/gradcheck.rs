//! Central finite-difference check of [`Network::backward`].
//!
//! The numeric side only calls [`Network::predict`], so it shares no code
//! with backpropagation.

use crate::error::Result;
use crate::nncore::{Matrix, Network};

/// Relative errors below this denominator are measured against it instead.
pub const REL_FLOOR: f64 = 1e-6;

/// Largest elementwise relative error between analytic and numeric
/// gradients of `sum(upstream * net(batch))`, over every parameter and every
/// input entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_param_error: f64,
    pub max_input_error: f64,
    pub checked: usize,
}

impl GradCheck {
    pub fn max_error(&self) -> f64 {
        self.max_param_error.max(self.max_input_error)
    }
}

fn objective(net: &Network<f64>, batch: &Matrix<f64>, upstream: &Matrix<f64>) -> Result<f64> {
    let out = net.predict(batch)?;
    Ok(out.data().iter().zip(upstream.data()).map(|(a, b)| a * b).sum())
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares backprop against central differences with step `h`.
pub fn check_gradients(net: &Network<f64>, batch: &Matrix<f64>, upstream: &Matrix<f64>, h: f64) -> Result<GradCheck> {
    let mut work = net.clone();
    work.forward(batch)?;
    let grads = work.backward(upstream)?;
    work.clear_cache();
    let analytic: Vec<Vec<f64>> = grads.slices().into_iter().map(<[f64]>::to_vec).collect();
    let mut report = GradCheck {
        max_param_error: 0.0,
        max_input_error: 0.0,
        checked: 0,
    };
    for (s, slice) in analytic.iter().enumerate() {
        for (i, &a) in slice.iter().enumerate() {
            let orig = work.params_mut()[s][i];
            work.params_mut()[s][i] = orig + h;
            let plus = objective(&work, batch, upstream)?;
            work.params_mut()[s][i] = orig - h;
            let minus = objective(&work, batch, upstream)?;
            work.params_mut()[s][i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            report.max_param_error = report.max_param_error.max(rel_error(a, numeric));
            report.checked += 1;
        }
    }
    let mut x = batch.clone();
    for i in 0..x.data().len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + h;
        let plus = objective(&work, &x, upstream)?;
        x.data_mut()[i] = orig - h;
        let minus = objective(&work, &x, upstream)?;
        x.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        report.max_input_error = report.max_input_error.max(rel_error(grads.input.data()[i], numeric));
        report.checked += 1;
    }
    Ok(report)
}
