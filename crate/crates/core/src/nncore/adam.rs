use crate::error::{Error, Result};
use crate::nncore::{Gradients, Network};
use crate::scalar::Scalar;

/// Adam hyperparameters with a linear learning-rate decay from `base_lr` to
/// `final_lr` over `total_epochs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub base_lr: f64,
    pub final_lr: f64,
    pub total_epochs: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            base_lr: 1e-3,
            final_lr: 1e-5,
            total_epochs: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    /// Learning rate at (possibly fractional) `epoch`, clamped between the
    /// two endpoints.
    pub fn lr_at(&self, epoch: f64) -> f64 {
        let progress = if self.total_epochs > 0.0 {
            epoch / self.total_epochs
        } else {
            1.0
        };
        let lr = self.base_lr + (self.final_lr - self.base_lr) * progress;
        lr.clamp(self.base_lr.min(self.final_lr), self.base_lr.max(self.final_lr))
    }
}

/// Moment accumulators for one parameter set.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn with_sizes(sizes: &[usize], config: AdamConfig) -> Self {
        Self {
            config,
            first: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
        }
    }

    pub fn for_network(net: &Network<T>, config: AdamConfig) -> Self {
        let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
        Self::with_sizes(&sizes, config)
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Zeroes moments and the step counter.
    pub fn reset(&mut self) {
        for v in self.first.iter_mut().chain(self.second.iter_mut()) {
            v.iter_mut().for_each(|x| *x = T::zero());
        }
        self.step = 0;
    }

    /// One bias-corrected Adam update at the learning rate for `epoch`.
    pub fn apply(&mut self, params: Vec<&mut [T]>, grads: &[&[T]], epoch: f64) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::config(format!(
                "adam state holds {} tensors, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first[i].len() || g.len() != p.len() {
                return Err(Error::config(format!(
                    "adam tensor {i}: moment length {}, param length {}, grad length {}",
                    self.first[i].len(),
                    p.len(),
                    g.len()
                )));
            }
        }
        self.step += 1;
        let c = self.config;
        let lr = T::of(c.lr_at(epoch));
        let (b1, b2, eps) = (T::of(c.beta1), T::of(c.beta2), T::of(c.epsilon));
        let t = self.step as i32;
        let corr1 = T::one() - b1.powi(t);
        let corr2 = T::one() - b2.powi(t);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.first[i];
            let v = &mut self.second[i];
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (T::one() - b1) * gj;
                v[j] = b2 * v[j] + (T::one() - b2) * gj * gj;
                let m_hat = m[j] / corr1;
                let v_hat = v[j] / corr2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn step_network(&mut self, net: &mut Network<T>, grads: &Gradients<T>, epoch: f64) -> Result<()> {
        let g = grads.slices();
        net.clear_cache();
        self.apply(net.params_mut(), &g, epoch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::<f64>::with_sizes(&[3], AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        state.apply(vec![&mut p], &[&[0.0, 0.0, 0.0]], 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // Closed-form recurrence: m1 = (1-b1) g, v1 = (1-b2) g^2, so after bias
        // correction the update is lr * g / (|g| + eps).
        let cfg = AdamConfig {
            total_epochs: 10.0,
            ..AdamConfig::default()
        };
        let expected = 0.001 * 1.0 / (1.0 + 1e-8);
        let mut state = AdamState::<f64>::with_sizes(&[1], cfg);
        let mut p = vec![0.3];
        state.apply(vec![&mut p], &[&[1.0]], 0.0).unwrap();
        assert!((0.3 - p[0] - expected).abs() < 1e-15);
        assert!((0.3 - p[0] - 0.001).abs() < 1e-10);
    }

    #[test]
    fn learning_rate_schedule_endpoints() {
        let cfg = AdamConfig {
            total_epochs: 25_000.0,
            ..AdamConfig::default()
        };
        assert_eq!(cfg.lr_at(0.0), 1e-3);
        assert!((cfg.lr_at(25_000.0) - 1e-5).abs() < 1e-18);
        assert!((cfg.lr_at(12_500.0) - 0.000505).abs() < 1e-15);
        assert_eq!(cfg.lr_at(1e9), 1e-5);
        let mut prev = f64::INFINITY;
        for e in 0..=100 {
            let lr = cfg.lr_at(e as f64 * 250.0);
            assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut state = AdamState::<f64>::with_sizes(&[2], AdamConfig::default());
        let mut p = vec![0.0; 3];
        assert!(state.apply(vec![&mut p], &[&[0.0; 3]], 0.0).is_err());
    }

    #[test]
    fn reset_restores_first_step_behaviour() {
        let mut state = AdamState::<f64>::with_sizes(&[1], AdamConfig::default());
        let mut p = vec![0.0];
        state.apply(vec![&mut p], &[&[5.0]], 0.0).unwrap();
        state.apply(vec![&mut p], &[&[-1.0]], 0.0).unwrap();
        state.reset();
        let mut q = vec![0.0];
        state.apply(vec![&mut q], &[&[1.0]], 0.0).unwrap();
        assert!((q[0] + 0.001).abs() < 1e-10);
        assert_eq!(state.steps_taken(), 1);
    }
}
