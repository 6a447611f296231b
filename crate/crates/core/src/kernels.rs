//! Positive semi-definite kernels over real vectors.
//!
//! Actions and discrete contexts are fed to kernels as integer coordinates
//! cast to `f64`. A [`KernelSpec::Product`] splits its input at
//! `split_index`, so a joint (action, context) vector can be scored by one
//! kernel on the action block times another on the context block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    SquaredExponential {
        lengthscale: f64,
    },
    /// Only the half-integer smoothness values 1/2, 3/2 and 5/2 are supported.
    Matern {
        lengthscale: f64,
        nu: f64,
    },
    /// `(bias + <x, x'> / lengthscale)^degree`.
    Polynomial {
        bias: f64,
        lengthscale: f64,
        degree: u32,
    },
    /// `left(x[..split_index], x'[..split_index]) * right(x[split_index..], x'[split_index..])`.
    Product {
        left: Box<KernelSpec>,
        right: Box<KernelSpec>,
        split_index: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MaternOrder {
    Half,
    ThreeHalves,
    FiveHalves,
}

fn matern_order(nu: f64) -> Option<MaternOrder> {
    const TOL: f64 = 1e-12;
    if (nu - 0.5).abs() < TOL {
        Some(MaternOrder::Half)
    } else if (nu - 1.5).abs() < TOL {
        Some(MaternOrder::ThreeHalves)
    } else if (nu - 2.5).abs() < TOL {
        Some(MaternOrder::FiveHalves)
    } else {
        None
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{name} must be positive, got {v}")))
    }
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64) -> Self {
        KernelSpec::SquaredExponential { lengthscale }
    }

    pub fn matern(lengthscale: f64, nu: f64) -> Self {
        KernelSpec::Matern { lengthscale, nu }
    }

    pub fn polynomial(bias: f64, lengthscale: f64, degree: u32) -> Self {
        KernelSpec::Polynomial {
            bias,
            lengthscale,
            degree,
        }
    }

    pub fn product(left: KernelSpec, right: KernelSpec, split_index: usize) -> Self {
        KernelSpec::Product {
            left: Box::new(left),
            right: Box::new(right),
            split_index,
        }
    }

    /// Checks hyperparameter ranges. Dimension-dependent checks happen at
    /// evaluation time.
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::SquaredExponential { lengthscale } => positive("lengthscale", *lengthscale),
            KernelSpec::Matern { lengthscale, nu } => {
                positive("lengthscale", *lengthscale)?;
                positive("nu", *nu)?;
                if matern_order(*nu).is_none() {
                    return Err(Error::InvalidKernel(format!(
                        "Matern smoothness nu={nu} unsupported (use 0.5, 1.5 or 2.5)"
                    )));
                }
                Ok(())
            }
            KernelSpec::Polynomial {
                bias,
                lengthscale,
                degree,
            } => {
                if !(bias.is_finite() && *bias >= 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "bias must be non-negative, got {bias}"
                    )));
                }
                positive("lengthscale", *lengthscale)?;
                if *degree == 0 {
                    return Err(Error::InvalidKernel("degree must be positive".into()));
                }
                Ok(())
            }
            KernelSpec::Product {
                left,
                right,
                split_index,
            } => {
                if *split_index == 0 {
                    return Err(Error::InvalidKernel(
                        "product split_index must leave a non-empty left block".into(),
                    ));
                }
                left.validate()?;
                right.validate()
            }
        }
    }

    /// Smallest input dimension this kernel can be evaluated on.
    pub fn min_dim(&self) -> usize {
        match self {
            KernelSpec::Product {
                right, split_index, ..
            } => split_index + right.min_dim().max(1),
            _ => 1,
        }
    }

    /// Whether `k(x, x) <= 1` holds for every input (stationary kernels).
    pub fn is_bounded(&self) -> bool {
        match self {
            KernelSpec::SquaredExponential { .. } | KernelSpec::Matern { .. } => true,
            KernelSpec::Polynomial { .. } => false,
            KernelSpec::Product { left, right, .. } => left.is_bounded() && right.is_bounded(),
        }
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates without dimension checks. Callers guarantee `x.len() == y.len()`
    /// and a valid product split.
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::SquaredExponential { lengthscale } => {
                let s2 = squared_distance(x, y);
                (-s2 / (2.0 * lengthscale * lengthscale)).exp()
            }
            KernelSpec::Matern { lengthscale, nu } => {
                let s = squared_distance(x, y).sqrt();
                if s == 0.0 {
                    return 1.0;
                }
                let r = s / lengthscale;
                match matern_order(*nu) {
                    Some(MaternOrder::Half) => (-r).exp(),
                    Some(MaternOrder::ThreeHalves) => {
                        let u = 3f64.sqrt() * r;
                        (1.0 + u) * (-u).exp()
                    }
                    Some(MaternOrder::FiveHalves) => {
                        let u = 5f64.sqrt() * r;
                        (1.0 + u + u * u / 3.0) * (-u).exp()
                    }
                    None => f64::NAN,
                }
            }
            KernelSpec::Polynomial {
                bias,
                lengthscale,
                degree,
            } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (bias + dot / lengthscale).powi(*degree as i32)
            }
            KernelSpec::Product {
                left,
                right,
                split_index,
            } => {
                let (xl, xr) = x.split_at(*split_index);
                let (yl, yr) = y.split_at(*split_index);
                left.eval_unchecked(xl, yl) * right.eval_unchecked(xr, yr)
            }
        }
    }

    /// Checks that `dim` is a legal input dimension for this kernel.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if let KernelSpec::Product {
            left,
            right,
            split_index,
        } = self
        {
            if *split_index >= dim {
                return Err(Error::InvalidKernel(format!(
                    "product split_index {split_index} leaves an empty right block for dimension {dim}"
                )));
            }
            left.check_dim(*split_index)?;
            right.check_dim(dim - split_index)?;
        }
        Ok(())
    }
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Symmetric Gram matrix `G[i][j] = k(points[i], points[j])`, row-major.
pub fn gram(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let first = points.first().ok_or(Error::DimensionMismatch {
        expected: 1,
        got: 0,
    })?;
    let dim = first.len();
    spec.check_dim(dim)?;
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let n = points.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval_unchecked(&points[i], &points[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}
