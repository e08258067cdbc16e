use alloc::vec;
use alloc::vec::Vec;

use super::{kernel, Hyperparams, KernelKind, DEFAULT_JITTER, JITTER_RETRIES};
use crate::linalg::Cholesky;
use crate::raster::Observation;
use crate::{Error, Point, Result};

/// `K(X, X) + (σ_n² + jitter) I`, row-major.
pub fn build_train_cov(
    kind: KernelKind,
    xs: &[Point],
    theta: &Hyperparams,
    jitter: f64,
) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::invalid("training covariance needs at least one point"));
    }
    theta.validate()?;
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = theta.sigma_f2 + theta.sigma_n2 + jitter;
        for j in 0..i {
            let v = kernel(kind, xs[i], xs[j], theta);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(k)
}

/// Factors the training covariance, doubling the jitter on failure.
pub(crate) fn factor_train_cov(
    kind: KernelKind,
    xs: &[Point],
    theta: &Hyperparams,
) -> Result<(Cholesky, f64)> {
    let mut jitter = DEFAULT_JITTER;
    for _ in 0..=JITTER_RETRIES {
        let k = build_train_cov(kind, xs, theta, jitter)?;
        if let Some(c) = Cholesky::factor(&k, xs.len()) {
            return Ok((c, jitter));
        }
        jitter *= 2.0;
    }
    Err(Error::NotPositiveDefinite { jitter: jitter / 2.0 })
}

/// A conditioned GP: training data, hyperparameters and the factored
/// training covariance. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    kind: KernelKind,
    theta: Hyperparams,
    xs: Vec<Point>,
    ys: Vec<f64>,
    chol: Option<Cholesky>,
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpModel {
    /// The prior: no training data.
    pub fn prior(kind: KernelKind, theta: Hyperparams) -> Result<Self> {
        theta.validate()?;
        Ok(GpModel {
            kind,
            theta,
            xs: Vec::new(),
            ys: Vec::new(),
            chol: None,
            alpha: Vec::new(),
            jitter: DEFAULT_JITTER,
        })
    }

    pub fn new(kind: KernelKind, theta: Hyperparams, xs: Vec<Point>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        if xs.is_empty() {
            return Self::prior(kind, theta);
        }
        let (chol, jitter) = factor_train_cov(kind, &xs, &theta)?;
        let alpha = chol.solve(&ys);
        Ok(GpModel {
            kind,
            theta,
            xs,
            ys,
            chol: Some(chol),
            alpha,
            jitter,
        })
    }

    pub fn from_observations(kind: KernelKind, theta: Hyperparams, obs: &[Observation]) -> Result<Self> {
        let xs = obs.iter().map(|o| o.pos).collect();
        let ys = obs.iter().map(|o| o.value).collect();
        Self::new(kind, theta, xs, ys)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn theta(&self) -> &Hyperparams {
        &self.theta
    }

    pub fn inputs(&self) -> &[Point] {
        &self.xs
    }

    pub fn targets(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Jitter that made the training covariance factorisable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of the training covariance, row-major.
    pub fn cholesky_factor(&self) -> Option<&[f64]> {
        self.chol.as_ref().map(|c| c.factor_data())
    }

    /// Weights `K_XX⁻¹ y`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    fn cross(&self, q: Point) -> Vec<f64> {
        self.xs.iter().map(|&x| kernel(self.kind, x, q, &self.theta)).collect()
    }

    /// `L⁻¹ k(X, q)`; empty for the prior.
    pub(crate) fn whitened_cross(&self, q: Point) -> Vec<f64> {
        match &self.chol {
            Some(c) => {
                let mut v = self.cross(q);
                c.solve_lower_in_place(&mut v);
                v
            }
            None => Vec::new(),
        }
    }

    /// Posterior mean alone, without the triangular solve.
    pub fn predict_mean(&self, q: Point) -> f64 {
        self.xs
            .iter()
            .zip(&self.alpha)
            .map(|(&x, a)| kernel(self.kind, x, q, &self.theta) * a)
            .sum()
    }

    /// Posterior mean and latent variance at one point.
    pub fn predict_one(&self, q: Point) -> (f64, f64) {
        let prior_var = self.theta.sigma_f2;
        match &self.chol {
            None => (0.0, prior_var),
            Some(c) => {
                let k = self.cross(q);
                let mean = dot(&k, &self.alpha);
                let mut v = k;
                c.solve_lower_in_place(&mut v);
                let var = (prior_var - dot(&v, &v)).max(0.0);
                (mean, var)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Posterior means and latent variances at the query points.
pub fn predict(model: &GpModel, queries: &[Point]) -> (Vec<f64>, Vec<f64>) {
    queries.iter().map(|&q| model.predict_one(q)).unzip()
}

/// Posterior covariance `Σ_f` of the latent field at `points`, row-major `d×d`.
pub fn posterior_cov(model: &GpModel, points: &[Point]) -> Vec<f64> {
    let d = points.len();
    let v: Vec<Vec<f64>> = points.iter().map(|&p| model.whitened_cross(p)).collect();
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let prior = kernel(model.kind, points[i], points[j], &model.theta);
            let mut c = prior - dot(&v[i], &v[j]);
            if i == j {
                c = c.max(0.0);
            }
            s[i * d + j] = c;
            s[j * d + i] = c;
        }
    }
    s
}

/// Whitened cross-covariances for a fixed node set, so that the posterior
/// covariance between any two nodes is one kernel evaluation and one dot
/// product. Used to score many candidate paths against the same model.
#[derive(Debug, Clone)]
pub struct PosteriorCache<'a> {
    model: &'a GpModel,
    nodes: Vec<Point>,
    whitened: Vec<Vec<f64>>,
}

impl<'a> PosteriorCache<'a> {
    pub fn new(model: &'a GpModel, nodes: &[Point]) -> Self {
        PosteriorCache {
            model,
            nodes: nodes.to_vec(),
            whitened: nodes.iter().map(|&p| model.whitened_cross(p)).collect(),
        }
    }

    pub fn model(&self) -> &GpModel {
        self.model
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Posterior covariance between the nodes listed in `path`.
    pub fn cov(&self, path: &[usize]) -> Vec<f64> {
        let d = path.len();
        let m = self.model;
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let (a, b) = (path[i], path[j]);
                let prior = kernel(m.kind, self.nodes[a], self.nodes[b], &m.theta);
                let mut c = prior - dot(&self.whitened[a], &self.whitened[b]);
                if i == j {
                    c = c.max(0.0);
                }
                s[i * d + j] = c;
                s[j * d + i] = c;
            }
        }
        s
    }
}
