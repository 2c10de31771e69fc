use crate::error::{FrakError, Result};
use crate::measure::WeightedPointCloud;

/// Real values sampled at the points of a cloud, in cloud order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FrakError::NonFiniteValue(i));
        }
        Ok(Self { values })
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self { values: vec![c; len] }
    }

    /// Evaluates `f` at every cloud point.
    pub fn sample(cloud: &WeightedPointCloud, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(cloud.points().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { values: self.values.iter().map(|v| lambda * v).collect() }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_len(&self, cloud: &WeightedPointCloud) -> Result<()> {
        if self.values.len() != cloud.len() {
            return Err(FrakError::LengthMismatch { expected: cloud.len(), found: self.len() });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for GridFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}
