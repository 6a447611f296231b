//! Exact Gaussian-process regression with an incrementally grown Cholesky
//! factor.
//!
//! The model keeps `L` with `L Lᵀ = K + (σ² + jitter) I` in packed
//! lower-triangular form together with the whitened targets `w = L⁻¹ y`.
//! Appending an observation borders `L` with one new row, so each update is
//! `O(t²)` and no refactorization happens unless the pivot breaks down.
//! The posterior at `x` is
//!
//! ```text
//! c    = L⁻¹ k(x)
//! mean = cᵀ w            (= k(x)ᵀ (K + σ²I)⁻¹ y)
//! var  = k(x, x) − cᵀ c
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

const BASE_JITTER: f64 = 1e-10;
const MAX_JITTER: f64 = 1e-4;

/// Confidence-bound parameters for one unknown function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    /// Bound `B` on the RKHS norm of the unknown function.
    pub rkhs_bound: f64,
    /// Sub-Gaussian noise scale `σ`; the GP uses `σ²` as noise variance.
    pub noise_scale: f64,
    /// Failure probability `δ`.
    pub failure_prob: f64,
    /// Number of constraints `M` of the learner (enters the union bound).
    pub num_constraints: usize,
}

impl ConfidenceParams {
    pub fn new(rkhs_bound: f64, noise_scale: f64, failure_prob: f64, num_constraints: usize) -> Result<Self> {
        let p = Self {
            rkhs_bound,
            noise_scale,
            failure_prob,
            num_constraints,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rkhs_bound.is_finite() && self.rkhs_bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rkhs_bound must be positive, got {}",
                self.rkhs_bound
            )));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_scale must be positive, got {}",
                self.noise_scale
            )));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "failure_prob must lie in (0, 1), got {}",
                self.failure_prob
            )));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_scale * self.noise_scale
    }
}

/// Confidence width `B + σ √(2 (γ + 1 + ln(2(M+1)/δ)))`.
pub fn beta(params: &ConfidenceParams, info_gain_prev: f64) -> f64 {
    let m = params.num_constraints as f64;
    let log_term = (2.0 * (m + 1.0) / params.failure_prob).ln();
    params.rkhs_bound + params.noise_scale * (2.0 * (info_gain_prev.max(0.0) + 1.0 + log_term)).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpModel {
    kernel: KernelSpec,
    noise_variance: f64,
    dim: Option<usize>,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Packed rows of the lower-triangular factor; row `i` starts at `i(i+1)/2`.
    chol: Vec<f64>,
    /// `L⁻¹ y`.
    whitened: Vec<f64>,
    jitter: f64,
    info_gain: f64,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl GpModel {
    pub fn new(kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        Ok(Self {
            kernel,
            noise_variance,
            dim: None,
            inputs: Vec::new(),
            targets: Vec::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            jitter: 0.0,
            info_gain: 0.0,
        })
    }

    /// Fixes the input dimension before any observation arrives.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        self.kernel.check_dim(dim)?;
        self.dim = Some(dim);
        Ok(self)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Realized information gain `½ log det(I + σ⁻² K)` of the observed inputs.
    pub fn info_gain(&self) -> f64 {
        self.info_gain
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) if d != x.len() => Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            }),
            Some(_) => Ok(()),
            None => self.kernel.check_dim(x.len()),
        }
    }

    /// Forward substitution `L c = k(x)` for the current factor.
    fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let t = self.len();
        let mut c = Vec::with_capacity(t);
        for i in 0..t {
            let row = &self.chol[row_start(i)..row_start(i + 1)];
            let mut acc = self.kernel.eval_unchecked(&self.inputs[i], x);
            for (l, cj) in row[..i].iter().zip(&c) {
                acc -= l * cj;
            }
            c.push(acc / row[i]);
        }
        c
    }

    pub fn add_observation(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.check_input(x)?;
        if !y.is_finite() {
            return Err(Error::NonFiniteTarget(y));
        }
        let prior = self.kernel.eval_unchecked(x, x);
        if self.is_empty() {
            self.dim = Some(x.len());
            self.jitter = BASE_JITTER * prior.abs();
        }
        let mut c = self.whiten(x);
        let explained: f64 = c.iter().map(|v| v * v).sum();
        let posterior_var = (prior - explained).max(0.0);
        let pivot = prior + self.noise_variance + self.jitter - explained;
        if !(pivot > 0.0) {
            // Escalate the diagonal jitter and refactorize everything,
            // including the new point.
            self.inputs.push(x.to_vec());
            self.targets.push(y);
            if let Err(e) = self.refactorize() {
                self.inputs.pop();
                self.targets.pop();
                return Err(e);
            }
            self.info_gain += 0.5 * (posterior_var / self.noise_variance).ln_1p();
            return Ok(());
        }
        let d = pivot.sqrt();
        let w_new = (y - c.iter().zip(&self.whitened).map(|(a, b)| a * b).sum::<f64>()) / d;
        self.chol.append(&mut c);
        self.chol.push(d);
        self.whitened.push(w_new);
        self.inputs.push(x.to_vec());
        self.targets.push(y);
        self.info_gain += 0.5 * (posterior_var / self.noise_variance).ln_1p();
        Ok(())
    }

    /// Full refactorization with escalating jitter.
    fn refactorize(&mut self) -> Result<()> {
        let mut jitter = (self.jitter.max(BASE_JITTER)) * 10.0;
        loop {
            if jitter > MAX_JITTER {
                return Err(Error::Singular { jitter });
            }
            if let Some((chol, whitened)) = self.factor_with(jitter) {
                self.chol = chol;
                self.whitened = whitened;
                self.jitter = jitter;
                return Ok(());
            }
            jitter *= 10.0;
        }
    }

    fn factor_with(&self, jitter: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let t = self.len();
        let mut chol: Vec<f64> = Vec::with_capacity(row_start(t));
        let mut whitened = Vec::with_capacity(t);
        for i in 0..t {
            let base = row_start(i);
            for j in 0..=i {
                let mut acc = self.kernel.eval_unchecked(&self.inputs[i], &self.inputs[j]);
                if i == j {
                    acc += self.noise_variance + jitter;
                }
                let bj = row_start(j);
                for k in 0..j {
                    acc -= chol[base + k] * chol[bj + k];
                }
                if i == j {
                    if !(acc > 0.0) {
                        return None;
                    }
                    chol.push(acc.sqrt());
                } else {
                    chol.push(acc / chol[bj + j]);
                }
            }
            let row = &chol[base..base + i + 1];
            let mut acc = self.targets[i];
            for (l, wj) in row[..i].iter().zip(&whitened) {
                acc -= l * wj;
            }
            whitened.push(acc / row[i]);
        }
        Some((chol, whitened))
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_input(x)?;
        let prior = self.kernel.eval_unchecked(x, x);
        if self.is_empty() {
            return Ok((0.0, prior.max(0.0).sqrt()));
        }
        let c = self.whiten(x);
        let mean = c.iter().zip(&self.whitened).map(|(a, b)| a * b).sum();
        let var = prior - c.iter().map(|v| v * v).sum::<f64>();
        Ok((mean, var.max(0.0).sqrt()))
    }

    /// Posterior at several points with one pass over the factor.
    pub fn posterior_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        for x in xs {
            self.check_input(x)?;
        }
        let q = xs.len();
        let t = self.len();
        let priors: Vec<f64> = xs.iter().map(|x| self.kernel.eval_unchecked(x, x)).collect();
        if t == 0 {
            return Ok(priors.into_iter().map(|p| (0.0, p.max(0.0).sqrt())).collect());
        }
        // c[i * q + j] holds (L⁻¹ k(x_j))_i.
        let mut c = vec![0.0; t * q];
        let mut acc = vec![0.0; q];
        for i in 0..t {
            let row = &self.chol[row_start(i)..row_start(i + 1)];
            for (a, x) in acc.iter_mut().zip(xs) {
                *a = self.kernel.eval_unchecked(&self.inputs[i], x);
            }
            for (j, l) in row[..i].iter().enumerate() {
                let cj = &c[j * q..(j + 1) * q];
                for (a, v) in acc.iter_mut().zip(cj) {
                    *a -= l * v;
                }
            }
            let d = row[i];
            for (dst, a) in c[i * q..(i + 1) * q].iter_mut().zip(&acc) {
                *dst = a / d;
            }
        }
        let mut means = vec![0.0; q];
        let mut explained = vec![0.0; q];
        for i in 0..t {
            let w = self.whitened[i];
            for j in 0..q {
                let v = c[i * q + j];
                means[j] += v * w;
                explained[j] += v * v;
            }
        }
        Ok((0..q)
            .map(|j| (means[j], (priors[j] - explained[j]).max(0.0).sqrt()))
            .collect())
    }

    pub fn ucb(&self, x: &[f64], beta: f64) -> Result<f64> {
        let (m, s) = self.posterior(x)?;
        Ok(m + beta * s)
    }

    pub fn lcb(&self, x: &[f64], beta: f64) -> Result<f64> {
        let (m, s) = self.posterior(x)?;
        Ok(m - beta * s)
    }

    /// `(K + σ²I)⁻¹ y`, by back substitution through the factor.
    pub fn alpha(&self) -> Vec<f64> {
        let t = self.len();
        let mut alpha = self.whitened.clone();
        for i in (0..t).rev() {
            let d = self.chol[row_start(i) + i];
            alpha[i] /= d;
            let ai = alpha[i];
            let row = &self.chol[row_start(i)..row_start(i) + i];
            for (a, l) in alpha[..i].iter_mut().zip(row) {
                *a -= l * ai;
            }
        }
        alpha
    }

    /// The factor as a dense lower-triangular matrix.
    pub fn cholesky_factor(&self) -> Vec<Vec<f64>> {
        let t = self.len();
        (0..t)
            .map(|i| {
                let mut row = vec![0.0; t];
                row[..=i].copy_from_slice(&self.chol[row_start(i)..row_start(i + 1)]);
                row
            })
            .collect()
    }
}
