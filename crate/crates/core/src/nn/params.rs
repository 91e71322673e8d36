use serde::{Deserialize, Serialize};

/// Flat vector of every weight and bias of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet(Vec<f64>);

impl ParamSet {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self <- zeta * source + (1 - zeta) * self`, element-wise.
    pub fn soft_update(&mut self, source: &ParamSet, zeta: f64) {
        assert_eq!(self.len(), source.len(), "parameter sets differ in length");
        for (t, &s) in self.0.iter_mut().zip(&source.0) {
            *t = zeta * s + (1.0 - zeta) * *t;
        }
    }

    /// `self <- self + a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &ParamSet) {
        assert_eq!(self.len(), other.len(), "parameter sets differ in length");
        for (t, &o) in self.0.iter_mut().zip(&other.0) {
            *t += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for t in &mut self.0 {
            *t *= a;
        }
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_update_is_affine() {
        let mut target = ParamSet::zeros(3);
        target.soft_update(&ParamSet::from_vec(vec![1.0; 3]), 0.05);
        assert_eq!(target.as_slice(), &[0.05; 3]);
        let src = ParamSet::from_vec(vec![0.3, -2.0, 7.5]);
        target.soft_update(&src, 1.0);
        assert_eq!(target, src);
    }
}
