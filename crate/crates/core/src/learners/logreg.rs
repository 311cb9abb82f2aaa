//! L2-penalized logistic regression fitted by damped Newton steps.
//!
//! The objective is the weighted mean negative log-likelihood plus
//! `l2 / 2 * |w|^2`; the intercept is not penalized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_xy, sigmoid};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegParams {
    pub l2: f64,
    pub max_iters: usize,
    /// Convergence bound on the gradient norm.
    pub tol: f64,
    /// Fit on z-scored columns (the scaling is stored in the model).
    pub standardize: bool,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1e-4,
            max_iters: 100,
            tol: 1e-8,
            standardize: true,
        }
    }
}

impl LogRegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config("l2", "must be finite and non-negative"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::config("tol", "must be positive"));
        }
        Ok(())
    }
}

/// Column shift and scale applied before the linear predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let (n, p) = (x.n_rows() as f64, x.n_cols());
        let mut mean = vec![0.0; p];
        for r in x.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for r in x.rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, j: usize, v: f64) -> f64 {
        (v - self.mean[j]) / self.scale[j]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub feature_names: Vec<String>,
    /// Weights on the (standardized, if present) features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l2_penalty: f64,
    pub standardizer: Option<Standardizer>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogRegModel {
    pub fn raw(&self, x: &[f64]) -> f64 {
        let dot: f64 = match &self.standardizer {
            Some(s) => x
                .iter()
                .enumerate()
                .map(|(j, &v)| self.weights[j] * s.apply(j, v))
                .sum(),
            None => x.iter().zip(&self.weights).map(|(v, w)| v * w).sum(),
        };
        self.intercept + dot
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw(x).clamp(-super::RAW_CLIP, super::RAW_CLIP))
    }

    /// Parameters as `(weights..., intercept)`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut b = self.weights.clone();
        b.push(self.intercept);
        b
    }

    pub fn with_parameters(&self, beta: &[f64]) -> Self {
        let p = self.weights.len();
        LogRegModel {
            weights: beta[..p].to_vec(),
            intercept: beta[p],
            ..self.clone()
        }
    }

    fn problem(&self, x: &FeatureMatrix, y: &[u8], weights: Option<&[f64]>) -> Result<Problem> {
        let w = check_xy(x, y, weights)?;
        if x.n_cols() != self.weights.len() {
            return Err(Error::Precondition(format!(
                "{} columns for a model with {} weights",
                x.n_cols(),
                self.weights.len()
            )));
        }
        Ok(Problem::new(x, y, w, self.standardizer.as_ref(), self.l2_penalty))
    }

    /// Penalized training objective at this model's parameters.
    pub fn objective(&self, x: &FeatureMatrix, y: &[u8], weights: Option<&[f64]>) -> Result<f64> {
        let pr = self.problem(x, y, weights)?;
        Ok(pr.objective(&DVector::from_vec(self.parameters())))
    }

    /// Analytic gradient of [`LogRegModel::objective`] in [`LogRegModel::parameters`] order.
    pub fn gradient(&self, x: &FeatureMatrix, y: &[u8], weights: Option<&[f64]>) -> Result<Vec<f64>> {
        let pr = self.problem(x, y, weights)?;
        let (g, _) = pr.gradient_hessian(&DVector::from_vec(self.parameters()));
        Ok(g.as_slice().to_vec())
    }
}

struct Problem {
    /// Design matrix with a trailing column of ones.
    design: DMatrix<f64>,
    y: DVector<f64>,
    w: DVector<f64>,
    total_w: f64,
    l2: f64,
}

impl Problem {
    fn new(x: &FeatureMatrix, y: &[u8], w: Vec<f64>, standardizer: Option<&Standardizer>, l2: f64) -> Self {
        let (n, p) = (x.n_rows(), x.n_cols());
        let design = DMatrix::from_fn(n, p + 1, |i, j| {
            if j == p {
                1.0
            } else {
                match standardizer {
                    Some(s) => s.apply(j, x.get(i, j)),
                    None => x.get(i, j),
                }
            }
        });
        Problem {
            design,
            y: DVector::from_iterator(n, y.iter().map(|&v| v as f64)),
            total_w: w.iter().sum(),
            w: DVector::from_vec(w),
            l2,
        }
    }

    fn penalty_mask(&self, j: usize) -> f64 {
        if j + 1 == self.design.ncols() {
            0.0
        } else {
            1.0
        }
    }

    fn objective(&self, beta: &DVector<f64>) -> f64 {
        let z = &self.design * beta;
        let mut nll = 0.0;
        for i in 0..z.len() {
            let zi = z[i];
            // log(1 + e^z) - y z
            let softplus = if zi > 0.0 {
                zi + (-zi).exp().ln_1p()
            } else {
                zi.exp().ln_1p()
            };
            nll += self.w[i] * (softplus - self.y[i] * zi);
        }
        let pen: f64 = (0..beta.len()).map(|j| self.penalty_mask(j) * beta[j] * beta[j]).sum();
        nll / self.total_w + 0.5 * self.l2 * pen
    }

    fn gradient_hessian(&self, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let z = &self.design * beta;
        let p = z.map(sigmoid);
        let resid = DVector::from_fn(z.len(), |i, _| self.w[i] * (p[i] - self.y[i]) / self.total_w);
        let mut g = self.design.tr_mul(&resid);
        let d = DVector::from_fn(z.len(), |i, _| (self.w[i] * p[i] * (1.0 - p[i]) / self.total_w).sqrt());
        let mut scaled = self.design.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= d[i];
        }
        let mut h = scaled.tr_mul(&scaled);
        for j in 0..beta.len() {
            let m = self.penalty_mask(j);
            g[j] += m * self.l2 * beta[j];
            h[(j, j)] += m * self.l2;
        }
        (g, h)
    }
}

fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
    let mut jitter = 0.0;
    loop {
        let mut hj = h.clone();
        for j in 0..hj.nrows() {
            hj[(j, j)] += jitter;
        }
        if let Some(ch) = hj.cholesky() {
            return -ch.solve(g);
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if jitter > 1e6 {
            return -g.clone();
        }
    }
}

pub fn fit_logreg(x: &FeatureMatrix, y: &[u8], params: &LogRegParams) -> Result<LogRegModel> {
    fit_logreg_weighted(x, y, None, params)
}

pub fn fit_logreg_weighted(
    x: &FeatureMatrix,
    y: &[u8],
    weights: Option<&[f64]>,
    params: &LogRegParams,
) -> Result<LogRegModel> {
    params.validate()?;
    let w = check_xy(x, y, weights)?;
    let p = x.n_cols();
    let standardizer = params.standardize.then(|| Standardizer::fit(x));
    let problem = Problem::new(x, y, w, standardizer.as_ref(), params.l2);

    let mut beta = DVector::zeros(p + 1);
    let mut obj = problem.objective(&beta);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    while iterations < params.max_iters {
        let (g, h) = problem.gradient_hessian(&beta);
        grad_norm = g.norm();
        if grad_norm < params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = newton_direction(&g, &h);
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = &beta + &dir * step;
            let c = problem.objective(&cand);
            if c <= obj {
                beta = cand;
                obj = c;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !converged {
        let (g, _) = problem.gradient_hessian(&beta);
        grad_norm = g.norm();
        converged = grad_norm < params.tol;
    }
    Ok(LogRegModel {
        feature_names: x.names().to_vec(),
        weights: beta.as_slice()[..p].to_vec(),
        intercept: beta[p],
        l2_penalty: params.l2,
        standardizer,
        converged,
        iterations,
        gradient_norm: grad_norm,
    })
}
