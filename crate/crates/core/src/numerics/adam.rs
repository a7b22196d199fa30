//! Adam optimizer with bias correction and the amsgrad variant.

use super::matrix::Matrix;
use super::mlp::{MlpGrads, MlpParams};
use crate::error::{Error, Result};

/// Optimizer state: one accumulator pair per parameter tensor, plus the
/// running second-moment maximum used when `amsgrad` is set.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Matrix>,
    v_weights: Vec<Matrix>,
    vmax_weights: Vec<Matrix>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    vmax_biases: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub amsgrad: bool,
}

impl AdamState {
    pub fn new(params: &MlpParams, learning_rate: f64, amsgrad: bool) -> Self {
        let zw = || {
            params
                .weights()
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect::<Vec<_>>()
        };
        let zb = || {
            params
                .biases()
                .iter()
                .map(|b| vec![0.0; b.len()])
                .collect::<Vec<_>>()
        };
        Self {
            m_weights: zw(),
            v_weights: zw(),
            vmax_weights: zw(),
            m_biases: zb(),
            v_biases: zb(),
            vmax_biases: zb(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            amsgrad: true,
        }
        .with_amsgrad(amsgrad)
    }

    fn with_amsgrad(mut self, amsgrad: bool) -> Self {
        self.amsgrad = amsgrad;
        self
    }

    /// One Adam update in place. Fails if any gradient entry is non-finite,
    /// naming the offending layer.
    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpGrads) -> Result<()> {
        if let Some(layer) = grads.first_non_finite_layer() {
            return Err(Error::NonFinite(format!("gradient at layer {layer}")));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps, ams) =
            (self.beta1, self.beta2, self.learning_rate, self.epsilon, self.amsgrad);

        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64, vmax: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            let denom_v = if ams {
                *vmax = vmax.max(v_hat);
                *vmax
            } else {
                v_hat
            };
            *p -= lr * m_hat / (denom_v.sqrt() + eps);
        };

        for l in 0..grads.weights.len() {
            for (((p, &g), (m, v)), vmax) in params
                .weights_mut(l)
                .data_mut()
                .iter_mut()
                .zip(grads.weights[l].data())
                .zip(
                    self.m_weights[l]
                        .data_mut()
                        .iter_mut()
                        .zip(self.v_weights[l].data_mut().iter_mut()),
                )
                .zip(self.vmax_weights[l].data_mut().iter_mut())
            {
                update(p, g, m, v, vmax);
            }
            for (((p, &g), (m, v)), vmax) in params
                .biases_mut(l)
                .iter_mut()
                .zip(&grads.biases[l])
                .zip(self.m_biases[l].iter_mut().zip(self.v_biases[l].iter_mut()))
                .zip(self.vmax_biases[l].iter_mut())
            {
                update(p, g, m, v, vmax);
            }
        }
        Ok(())
    }
}
