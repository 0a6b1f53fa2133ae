use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariance functions over flat feature vectors.
///
/// Composite kernels combine sub-kernels; `Block` restricts a kernel to a
/// contiguous slice of the features (e.g. the action or the context part).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `s · exp(-½ Σ_i ((a_i - b_i)/ℓ_i)²)`. A single lengthscale applies to
    /// every dimension.
    SquaredExponential {
        lengthscales: Vec<f64>,
        outputscale: f64,
    },
    /// `s · ⟨a, b⟩`.
    Linear { variance: f64 },
    Sum {
        left: Box<Kernel>,
        right: Box<Kernel>,
    },
    Product {
        left: Box<Kernel>,
        right: Box<Kernel>,
    },
    Block {
        start: usize,
        len: usize,
        inner: Box<Kernel>,
    },
}

impl Kernel {
    pub fn squared_exponential(lengthscale: f64, outputscale: f64) -> Self {
        Kernel::SquaredExponential {
            lengthscales: vec![lengthscale],
            outputscale,
        }
    }

    pub fn sum(left: Kernel, right: Kernel) -> Self {
        Kernel::Sum {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn product(left: Kernel, right: Kernel) -> Self {
        Kernel::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn block(start: usize, len: usize, inner: Kernel) -> Self {
        Kernel::Block {
            start,
            len,
            inner: Box::new(inner),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::SquaredExponential {
                lengthscales,
                outputscale,
            } => {
                if lengthscales.is_empty() || lengthscales.iter().any(|&l| !(l > 0.0)) {
                    return Err(Error::parameter("lengthscales must be positive"));
                }
                if !(*outputscale > 0.0) {
                    return Err(Error::parameter("outputscale must be positive"));
                }
                Ok(())
            }
            Kernel::Linear { variance } => {
                if *variance > 0.0 {
                    Ok(())
                } else {
                    Err(Error::parameter("linear kernel variance must be positive"))
                }
            }
            Kernel::Sum { left, right } | Kernel::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
            Kernel::Block { inner, len, .. } => {
                if *len == 0 {
                    return Err(Error::parameter("kernel block must be non-empty"));
                }
                inner.validate()
            }
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::SquaredExponential {
                lengthscales,
                outputscale,
            } => {
                let sq: f64 = if lengthscales.len() == 1 {
                    let inv = 1.0 / lengthscales[0];
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| {
                            let d = (x - y) * inv;
                            d * d
                        })
                        .sum()
                } else {
                    a.iter()
                        .zip(b)
                        .zip(lengthscales)
                        .map(|((x, y), l)| {
                            let d = (x - y) / l;
                            d * d
                        })
                        .sum()
                };
                outputscale * (-0.5 * sq).exp()
            }
            Kernel::Linear { variance } => {
                variance * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            }
            Kernel::Sum { left, right } => left.eval(a, b) + right.eval(a, b),
            Kernel::Product { left, right } => left.eval(a, b) * right.eval(a, b),
            Kernel::Block { start, len, inner } => {
                inner.eval(&a[*start..start + len], &b[*start..start + len])
            }
        }
    }
}

/// Affine input normalization `x ↦ (x - shift) / scale`, per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl AffineMap {
    /// Standardizes each feature to zero mean and unit variance over
    /// `samples`; constant features keep scale 1.
    pub fn standardizing(samples: &[Vec<f64>]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::input("cannot standardize an empty sample"))?;
        let dim = first.len();
        let count = samples.len() as f64;
        let mut shift = vec![0.0; dim];
        for s in samples {
            for (m, v) in shift.iter_mut().zip(s) {
                *m += v / count;
            }
        }
        let mut scale = vec![0.0; dim];
        for s in samples {
            for ((acc, v), m) in scale.iter_mut().zip(s).zip(&shift) {
                *acc += (v - m) * (v - m) / count;
            }
        }
        for s in &mut scale {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Ok(Self { shift, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_values() {
        let k = Kernel::squared_exponential(0.5, 2.0);
        assert_eq!(k.eval(&[1.0, 2.0], &[1.0, 2.0]), 2.0);
        let expected = 2.0 * (-0.5f64 * 4.0).exp();
        assert!((k.eval(&[0.0], &[1.0]) - expected).abs() < 1e-15);
    }

    #[test]
    fn composite_and_blocks() {
        let action = Kernel::block(0, 1, Kernel::squared_exponential(1.0, 1.0));
        let context = Kernel::block(1, 1, Kernel::Linear { variance: 1.0 });
        let prod = Kernel::product(action.clone(), context.clone());
        let sum = Kernel::sum(action, context);
        let a = [0.0, 2.0];
        let b = [1.0, 3.0];
        let se = (-0.5f64).exp();
        assert!((prod.eval(&a, &b) - se * 6.0).abs() < 1e-14);
        assert!((sum.eval(&a, &b) - (se + 6.0)).abs() < 1e-14);
        assert!(prod.validate().is_ok());
        assert!(Kernel::squared_exponential(-1.0, 1.0).validate().is_err());
    }

    #[test]
    fn standardizing_map() {
        let m = AffineMap::standardizing(&[vec![0.0, 5.0], vec![2.0, 5.0]]).unwrap();
        assert_eq!(m.apply(&[2.0, 5.0]), vec![1.0, 0.0]);
    }
}
