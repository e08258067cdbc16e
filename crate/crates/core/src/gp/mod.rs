//! Zero-mean Gaussian-process field model.
//!
//! Coordinates are normalised map positions. The covariance is either Matérn
//! 3/2 (planning) or exponential (offline representation studies); both share
//! the same hyperparameters and log-normal priors.

mod fit;
mod info;
mod model;

pub use fit::{fit_map, log_posterior, log_posterior_grad, FitOptions, FitOutcome};
pub use info::mutual_information;
pub use model::{build_train_cov, posterior_cov, predict, GpModel, PosteriorCache};


use crate::{Error, Point, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Jitter added to the diagonal of every training covariance.
pub const DEFAULT_JITTER: f64 = 1e-6;
/// How many times the jitter is doubled before a factorisation is given up.
pub const JITTER_RETRIES: usize = 3;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    #[default]
    Matern32,
    Exponential,
}

/// Signal variance, lengthscale and noise variance. All strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub sigma_f2: f64,
    pub ell: f64,
    pub sigma_n2: f64,
}

impl Hyperparams {
    pub fn new(sigma_f2: f64, ell: f64, sigma_n2: f64) -> Result<Self> {
        let h = Hyperparams {
            sigma_f2,
            ell,
            sigma_n2,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.sigma_f2) && ok(self.ell) && ok(self.sigma_n2) {
            Ok(())
        } else {
            Err(Error::invalid("hyperparameters must be finite and strictly positive"))
        }
    }

    /// Modes of the default priors.
    pub fn prior_mode() -> Self {
        GpPriors::default().mode()
    }

    pub(crate) fn to_log(self) -> [f64; 3] {
        [self.sigma_f2.ln(), self.ell.ln(), self.sigma_n2.ln()]
    }

    pub(crate) fn from_log(u: [f64; 3]) -> Self {
        Hyperparams {
            sigma_f2: u[0].exp(),
            ell: u[1].exp(),
            sigma_n2: u[2].exp(),
        }
    }
}

/// `LogNormal(mu, sigma)` over a positive parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalPrior {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalPrior {
    pub const fn new(mu: f64, sigma: f64) -> Self {
        LogNormalPrior { mu, sigma }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let z = (x.ln() - self.mu) / self.sigma;
        -x.ln() - self.sigma.ln() - 0.5 * (2.0 * core::f64::consts::PI).ln() - 0.5 * z * z
    }

    /// Derivative of [`Self::log_density`] with respect to `ln x`.
    pub(crate) fn dlog_density_dlog(&self, x: f64) -> f64 {
        -1.0 - (x.ln() - self.mu) / (self.sigma * self.sigma)
    }

    pub fn mode(&self) -> f64 {
        (self.mu - self.sigma * self.sigma).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPriors {
    pub signal: LogNormalPrior,
    pub lengthscale: LogNormalPrior,
    pub noise: LogNormalPrior,
}

impl Default for GpPriors {
    fn default() -> Self {
        GpPriors {
            signal: LogNormalPrior::new(0.0, 0.5),
            lengthscale: LogNormalPrior::new(-2.995_732_273_553_991, 0.2), // ln 0.05
            noise: LogNormalPrior::new(-3.0, 0.3),
        }
    }
}

impl GpPriors {
    pub fn log_density(&self, theta: &Hyperparams) -> f64 {
        self.signal.log_density(theta.sigma_f2)
            + self.lengthscale.log_density(theta.ell)
            + self.noise.log_density(theta.sigma_n2)
    }

    pub fn mode(&self) -> Hyperparams {
        Hyperparams {
            sigma_f2: self.signal.mode(),
            ell: self.lengthscale.mode(),
            sigma_n2: self.noise.mode(),
        }
    }
}

/// Covariance at lag `r`.
pub fn kernel_at(kind: KernelKind, r: f64, theta: &Hyperparams) -> f64 {
    match kind {
        KernelKind::Matern32 => {
            let a = SQRT_3 * r / theta.ell;
            theta.sigma_f2 * (1.0 + a) * (-a).exp()
        }
        KernelKind::Exponential => theta.sigma_f2 * (-r / theta.ell).exp(),
    }
}

/// Derivative of the covariance at lag `r` with respect to `ln ell`.
pub(crate) fn kernel_dlog_ell(kind: KernelKind, r: f64, theta: &Hyperparams) -> f64 {
    match kind {
        KernelKind::Matern32 => {
            let a = SQRT_3 * r / theta.ell;
            theta.sigma_f2 * a * a * (-a).exp()
        }
        KernelKind::Exponential => {
            let a = r / theta.ell;
            theta.sigma_f2 * a * (-a).exp()
        }
    }
}

/// Matérn 3/2 covariance `σ_f² (1 + √3 r/ℓ) exp(−√3 r/ℓ)`.
pub fn kernel_m32(a: Point, b: Point, theta: &Hyperparams) -> f64 {
    kernel_at(KernelKind::Matern32, a.dist(b), theta)
}

pub fn kernel(kind: KernelKind, a: Point, b: Point, theta: &Hyperparams) -> f64 {
    kernel_at(kind, a.dist(b), theta)
}
