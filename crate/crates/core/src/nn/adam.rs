use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::NnError;

/// Adam optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// One descent step along `grads`. Non-finite gradients are rejected
    /// before any state changes.
    pub fn apply(&mut self, params: &mut ParamSet, grads: &ParamSet) -> Result<(), NnError> {
        if grads.len() != params.len() || params.len() != self.m.len() {
            return Err(NnError::Shape(format!(
                "adam state {}, params {}, grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if !grads.all_finite() {
            return Err(NnError::NonFinite("gradient"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .as_mut_slice()
            .iter_mut()
            .zip(grads.as_slice())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = ParamSet::from_vec(vec![0.5, -1.0]);
        let mut opt = Adam::new(2, 0.001);
        opt.apply(&mut p, &ParamSet::zeros(2)).unwrap();
        assert_eq!(p.as_slice(), &[0.5, -1.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = ParamSet::zeros(3);
        let mut opt = Adam::new(3, 0.001);
        opt.apply(&mut p, &ParamSet::from_vec(vec![1.0; 3])).unwrap();
        // lr * 1 / (1 + 1e-8)
        for &v in p.as_slice() {
            assert!((v + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_descends_monotonically() {
        // f(x, y) = (x - 3)^2 + 10 (y + 1)^2
        let loss = |p: &[f64]| (p[0] - 3.0).powi(2) + 10.0 * (p[1] + 1.0).powi(2);
        let mut p = ParamSet::zeros(2);
        let mut opt = Adam::new(2, 0.01);
        let mut prev = loss(p.as_slice());
        for _ in 0..100 {
            let s = p.as_slice();
            let g = ParamSet::from_vec(vec![2.0 * (s[0] - 3.0), 20.0 * (s[1] + 1.0)]);
            opt.apply(&mut p, &g).unwrap();
            let cur = loss(p.as_slice());
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut p = ParamSet::zeros(2);
        let mut opt = Adam::new(2, 0.001);
        let err = opt.apply(&mut p, &ParamSet::from_vec(vec![f64::NAN, 0.0])).unwrap_err();
        assert_eq!(err.to_string(), "non-finite value in gradient");
        assert_eq!(opt.step, 0);
    }
}
