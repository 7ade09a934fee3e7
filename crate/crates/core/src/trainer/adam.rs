use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Inverse-time decay: `lr_t = lr / (1 + decay · t)`.
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            decay: 0.0,
        }
    }
}

/// First and second moment estimates for every parameter array.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            config,
            v: m.clone(),
            m,
            t: 0,
        }
    }

    /// One bias-corrected Adam update:
    /// `m ← β1·m + (1−β1)·g`, `v ← β2·v + (1−β2)·g²`,
    /// `θ ← θ − lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape(format!(
                "adam tracks {} arrays, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(Error::shape(format!(
                    "adam shape mismatch: param {:?}, grad {:?}, state {:?}",
                    p.shape(),
                    g.shape(),
                    m.shape()
                )));
            }
        }

        self.t += 1;
        let c = self.config;
        let t = self.t as f64;
        let lr = c.lr / (1.0 + c.decay * (t - 1.0));
        let bc1 = 1.0 - c.beta1.powf(t);
        let bc2 = 1.0 - c.beta2.powf(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let pd = p.data_mut();
            for (((theta, &gi), mi), vi) in pd
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = c.beta1 * *mi + (1.0 - c.beta1) * gi;
                *vi = c.beta2 * *vi + (1.0 - c.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *theta -= lr * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(params: &[Tensor], grads: &[Tensor], state: &AdamState) -> Result<(Vec<Tensor>, AdamState)> {
    let mut next = state.clone();
    let mut out = params.to_vec();
    let mut refs: Vec<&mut Tensor> = out.iter_mut().collect();
    next.step(&mut refs, grads)?;
    Ok((out, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_fresh_state_is_noop() {
        let p = vec![Tensor::vector(vec![0.3, -1.0])];
        let st = AdamState::new(AdamConfig::default(), &p);
        let (q, st) = adam_step(&p, &[Tensor::zeros(&[2])], &st).unwrap();
        assert_eq!(q, p);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let p = vec![Tensor::scalar(0.0)];
        let st = AdamState::new(AdamConfig::default(), &p);
        let (q, _) = adam_step(&p, &[Tensor::scalar(0.5)], &st).unwrap();
        let expected = -0.001 * 0.5 / (0.5 + 1e-7);
        assert!((q[0].data()[0] - expected).abs() < 1e-15);
        assert!((q[0].data()[0] + 9.999998e-4).abs() < 1e-12);
    }

    #[test]
    fn defaults() {
        let c = AdamConfig::default();
        assert_eq!((c.lr, c.beta1, c.beta2, c.epsilon, c.decay), (0.001, 0.9, 0.999, 1e-7, 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let p = vec![Tensor::zeros(&[2])];
        let st = AdamState::new(AdamConfig::default(), &p);
        assert!(adam_step(&p, &[Tensor::zeros(&[3])], &st).is_err());
    }
}
