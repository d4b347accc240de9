//! Bias-corrected Adam over a list of flat parameter tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{Gradients, MultiGraphGcn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.lr > 0.0 && self.epsilon > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    /// Zero moments shaped like `shapes` (one entry per tensor length).
    pub fn with_shapes(shapes: &[usize], config: AdamConfig) -> Self {
        AdamState {
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            config,
        }
    }

    pub fn for_model(model: &MultiGraphGcn, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        Self::with_shapes(&shapes, config)
    }

    /// One update of every tensor in `params` from the matching `grads`.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) {
        assert_eq!(params.len(), grads.len(), "parameter / gradient count");
        assert_eq!(params.len(), self.first_moment.len(), "parameter / moment count");
        self.step_count += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            assert_eq!(p.len(), g.len());
            assert_eq!(p.len(), m.len());
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

pub fn adam_step(model: &mut MultiGraphGcn, grads: &Gradients, state: &mut AdamState) {
    let g = grads.tensors();
    state.step(model.tensors_mut(), &g);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::init_model;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut model = init_model(&[3], 1).unwrap();
        let before = model.clone();
        let grads = model.zeros_like();
        let mut state = AdamState::for_model(&model, AdamConfig::default());
        adam_step(&mut model, &grads, &mut state);
        assert_eq!(model, before);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = [0.0];
        let mut state = AdamState::with_shapes(&[1], AdamConfig::default());
        state.step(vec![&mut p[..]], &[&[1.0]]);
        // m̂ = 1, v̂ = 1, so the step is lr / (1 + ε).
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn two_steps_differ_from_doubled_lr() {
        let grad = [0.3];
        let mut a = [1.0];
        let mut s = AdamState::with_shapes(&[1], AdamConfig::default());
        s.step(vec![&mut a[..]], &[&grad]);
        s.step(vec![&mut a[..]], &[&[0.7]]);

        let mut b = [1.0];
        let mut s2 = AdamState::with_shapes(
            &[1],
            AdamConfig {
                lr: 2e-3,
                ..AdamConfig::default()
            },
        );
        s2.step(vec![&mut b[..]], &[&grad]);
        assert_ne!(a[0], b[0]);
    }

    #[test]
    fn moments_mirror_model() {
        let model = init_model(&[4, 6], 0).unwrap();
        let state = AdamState::for_model(&model, AdamConfig::default());
        let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        assert_eq!(state.first_moment.iter().map(Vec::len).collect::<Vec<_>>(), shapes);
        assert_eq!(state.second_moment.iter().map(Vec::len).collect::<Vec<_>>(), shapes);
    }

    #[test]
    fn validation() {
        assert!(AdamConfig::default().validate().is_ok());
        assert!(AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        }
        .validate()
        .is_err());
        assert!(AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        }
        .validate()
        .is_err());
    }
}
