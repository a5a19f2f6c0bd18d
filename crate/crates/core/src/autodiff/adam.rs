//! Adam optimizer with decoupled weight decay.

use crate::scalar::Scalar;
use ndarray::Array2;

use super::NumError;

/// Hyperparameters for [`AdamState`].
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig<F: Scalar> {
    pub learning_rate: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
    /// Decoupled weight decay: applied as a `decay * lr * theta` subtraction,
    /// outside the moment estimates.
    pub weight_decay: F,
}

impl<F: Scalar> AdamConfig<F> {
    pub fn new(learning_rate: F, weight_decay: F) -> Self {
        AdamConfig {
            learning_rate,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            epsilon: F::of(1e-8),
            weight_decay,
        }
    }
}

/// Per-parameter first/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<F: Scalar> {
    cfg: AdamConfig<F>,
    step: u64,
    m: Vec<Array2<F>>,
    v: Vec<Array2<F>>,
}

impl<F: Scalar> AdamState<F> {
    /// Accumulators are allocated to match `params` shapes.
    pub fn new(cfg: AdamConfig<F>, params: &[Array2<F>]) -> Self {
        AdamState {
            cfg,
            step: 0,
            m: params.iter().map(|p| Array2::zeros(p.dim())).collect(),
            v: params.iter().map(|p| Array2::zeros(p.dim())).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig<F> {
        &self.cfg
    }

    /// One update over all parameter tensors.
    pub fn step(&mut self, params: &mut [Array2<F>], grads: &[Array2<F>]) -> Result<(), NumError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NumError::Invalid {
                op: "adam_step",
                detail: format!(
                    "expected {} tensors, got {} params / {} grads",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(self.m.iter()) {
            if p.dim() != m.dim() || g.dim() != m.dim() {
                return Err(NumError::ShapeMismatch {
                    op: "adam_step",
                    detail: format!("param {:?} / grad {:?} vs state {:?}", p.dim(), g.dim(), m.dim()),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c = &self.cfg;
        let bias1 = F::one() - c.beta1.powi(t);
        let bias2 = F::one() - c.beta2.powi(t);
        let one = F::one();

        for i in 0..params.len() {
            let g = &grads[i];
            self.m[i].zip_mut_with(g, |mi, &gi| *mi = c.beta1 * *mi + (one - c.beta1) * gi);
            self.v[i].zip_mut_with(g, |vi, &gi| *vi = c.beta2 * *vi + (one - c.beta2) * gi * gi);
            let (m, v) = (&self.m[i], &self.v[i]);
            let p = &mut params[i];
            ndarray::Zip::from(&mut *p).and(m).and(v).for_each(|pi, &mi, &vi| {
                let m_hat = mi / bias1;
                let v_hat = vi / bias2;
                let update = c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon)
                    + c.weight_decay * c.learning_rate * *pi;
                *pi = *pi - update;
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_gradient_zero_decay_is_identity() {
        let mut params = vec![array![[0.3, -1.2], [4.0, 0.0]]];
        let orig = params[0].clone();
        let grads = vec![Array2::zeros((2, 2))];
        let mut adam = AdamState::new(AdamConfig::new(0.1, 0.0), &params);
        for _ in 0..5 {
            adam.step(&mut params, &grads).unwrap();
        }
        assert_eq!(params[0], orig);
        assert_eq!(adam.step_count(), 5);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        // theta = 0, g = 1, lr = 0.1: bias correction makes m_hat = 1, v_hat = 1,
        // so the first step is -lr / (1 + eps) ~ -0.1.
        let mut params = vec![array![[0.0f64]]];
        let grads = vec![array![[1.0]]];
        let mut adam = AdamState::new(AdamConfig::new(0.1, 0.0), &params);
        adam.step(&mut params, &grads).unwrap();
        assert!((params[0][[0, 0]] + 0.1).abs() < 1e-8);
    }

    #[test]
    fn decay_only_update() {
        // g = 0, decay = 0.005, lr = 0.01, theta = 1 -> theta = 1 - 0.00005.
        let mut params = vec![array![[1.0f64]]];
        let grads = vec![array![[0.0]]];
        let mut adam = AdamState::new(AdamConfig::new(0.01, 0.005), &params);
        adam.step(&mut params, &grads).unwrap();
        assert!((params[0][[0, 0]] - (1.0 - 0.00005)).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = vec![Array2::<f64>::zeros((2, 2))];
        let grads = vec![Array2::<f64>::zeros((2, 3))];
        let mut adam = AdamState::new(AdamConfig::new(0.1, 0.0), &params);
        assert!(adam.step(&mut params, &grads).is_err());
    }
}
