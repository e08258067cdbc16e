//! MAP estimation of the hyperparameters under the log-normal priors.

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::model::factor_train_cov;
use super::{kernel_at, kernel_dlog_ell, GpPriors, Hyperparams, KernelKind};
use crate::{Error, Point, Result};

const LOG_2PI: f64 = 1.837_877_066_409_345_5;
/// Box on the log-parameters searched by the optimiser.
const LOG_BOUNDS: (f64, f64) = (-16.0, 8.0);

/// Log marginal likelihood `log N(y | 0, K_XX)` plus the prior log-densities.
/// With no data this is the prior term alone.
pub fn log_posterior(
    kind: KernelKind,
    theta: &Hyperparams,
    xs: &[Point],
    ys: &[f64],
    priors: &GpPriors,
) -> Result<f64> {
    theta.validate()?;
    let prior = priors.log_density(theta);
    if xs.is_empty() {
        return Ok(prior);
    }
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let (chol, _) = factor_train_cov(kind, xs, theta)?;
    let alpha = chol.solve(ys);
    let fit: f64 = ys.iter().zip(&alpha).map(|(y, a)| y * a).sum();
    let n = xs.len() as f64;
    Ok(-0.5 * fit - 0.5 * chol.log_det() - 0.5 * n * LOG_2PI + prior)
}

/// [`log_posterior`] and its gradient with respect to
/// `(ln σ_f², ln ℓ, ln σ_n²)`.
pub fn log_posterior_grad(
    kind: KernelKind,
    theta: &Hyperparams,
    xs: &[Point],
    ys: &[f64],
    priors: &GpPriors,
) -> Result<(f64, [f64; 3])> {
    let value = log_posterior(kind, theta, xs, ys, priors)?;
    let mut grad = [
        priors.signal.dlog_density_dlog(theta.sigma_f2),
        priors.lengthscale.dlog_density_dlog(theta.ell),
        priors.noise.dlog_density_dlog(theta.sigma_n2),
    ];
    if xs.is_empty() {
        return Ok((value, grad));
    }
    let n = xs.len();
    let (chol, _) = factor_train_cov(kind, xs, theta)?;
    let alpha = chol.solve(ys);
    let kinv = chol.inverse();
    // ½ tr((ααᵀ − K⁻¹) ∂K) for each log-parameter.
    let mut g = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - kinv[i * n + j];
            let (d_sf, d_ell) = if i == j {
                (theta.sigma_f2, 0.0)
            } else {
                let r = xs[i].dist(xs[j]);
                (kernel_at(kind, r, theta), kernel_dlog_ell(kind, r, theta))
            };
            g[0] += w * d_sf;
            g[1] += w * d_ell;
        }
        g[2] += (alpha[i] * alpha[i] - kinv[i * n + i]) * theta.sigma_n2;
    }
    for (a, b) in grad.iter_mut().zip(g) {
        *a += 0.5 * b;
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub kind: KernelKind,
    pub priors: GpPriors,
    /// Number of optimiser starts; the first is the supplied initial value,
    /// the rest are prior draws.
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            kind: KernelKind::Matern32,
            priors: GpPriors::default(),
            restarts: 4,
            max_iter: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOutcome {
    pub theta: Hyperparams,
    pub log_posterior: f64,
    /// Set when no start could be factorised; `theta` is then the initial value.
    pub warning: bool,
}

/// Multi-start BFGS ascent of the log posterior in log-parameter space.
/// Never returns a point worse than `init`.
pub fn fit_map(xs: &[Point], ys: &[f64], init: Hyperparams, opts: &FitOptions) -> Result<FitOutcome> {
    if xs.len() < 2 {
        return Err(Error::invalid("hyperparameter fitting needs at least two observations"));
    }
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    init.validate()?;
    let mut starts = Vec::with_capacity(opts.restarts.max(1));
    starts.push(init);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let draw = |p: &super::LogNormalPrior, rng: &mut ChaCha8Rng| {
        LogNormal::new(p.mu, p.sigma).map(|d| d.sample(rng)).unwrap_or(p.mode())
    };
    for _ in 1..opts.restarts.max(1) {
        let sf = draw(&opts.priors.signal, &mut rng);
        let ell = draw(&opts.priors.lengthscale, &mut rng);
        let sn = draw(&opts.priors.noise, &mut rng);
        starts.push(Hyperparams {
            sigma_f2: sf,
            ell,
            sigma_n2: sn,
        });
    }

    let objective = |u: [f64; 3]| -> Option<(f64, [f64; 3])> {
        let t = Hyperparams::from_log(u);
        log_posterior_grad(opts.kind, &t, xs, ys, &opts.priors)
            .ok()
            .filter(|(v, g)| v.is_finite() && g.iter().all(|x| x.is_finite()))
    };

    let mut best: Option<(Hyperparams, f64)> = None;
    for start in starts {
        if let Some((u, v)) = bfgs_ascent(&objective, start.to_log(), opts.max_iter) {
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((Hyperparams::from_log(u), v));
            }
        }
    }
    Ok(match best {
        Some((theta, log_posterior)) => FitOutcome {
            theta,
            log_posterior,
            warning: false,
        },
        None => FitOutcome {
            theta: init,
            log_posterior: f64::NEG_INFINITY,
            warning: true,
        },
    })
}

fn clamp_log(u: [f64; 3]) -> [f64; 3] {
    u.map(|v| v.clamp(LOG_BOUNDS.0, LOG_BOUNDS.1))
}

/// Maximises `f` from `u0`; every accepted step strictly increases `f`.
fn bfgs_ascent<F>(f: &F, u0: [f64; 3], max_iter: usize) -> Option<([f64; 3], f64)>
where
    F: Fn([f64; 3]) -> Option<(f64, [f64; 3])>,
{
    let mut u = clamp_log(u0);
    let (mut fu, mut g) = f(u)?;
    // Inverse Hessian approximation of the negated objective.
    let mut h = [[0.0; 3]; 3];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..max_iter {
        if g.iter().all(|v| v.abs() < 1e-8) {
            break;
        }
        // Ascent direction d = H g.
        let mut d = [0.0; 3];
        for i in 0..3 {
            d[i] = (0..3).map(|j| h[i][j] * g[j]).sum();
        }
        let mut slope: f64 = (0..3).map(|i| d[i] * g[i]).sum();
        if !(slope > 0.0) {
            h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            d = g;
            slope = g.iter().map(|v| v * v).sum();
        }
        let max_comp = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut step = if max_comp > 2.0 { 2.0 / max_comp } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let cand = clamp_log([u[0] + step * d[0], u[1] + step * d[1], u[2] + step * d[2]]);
            if let Some((fc, gc)) = f(cand) {
                if fc >= fu + 1e-4 * step * slope && fc > fu {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((un, fn_, gn)) = accepted else { break };
        let s = [un[0] - u[0], un[1] - u[1], un[2] - u[2]];
        // Gradient change of the negated objective.
        let y = [g[0] - gn[0], g[1] - gn[1], g[2] - gn[2]];
        let sy: f64 = (0..3).map(|i| s[i] * y[i]).sum();
        if sy > 1e-12 {
            let mut hy = [0.0; 3];
            for i in 0..3 {
                hy[i] = (0..3).map(|j| h[i][j] * y[j]).sum();
            }
            let yhy: f64 = (0..3).map(|i| y[i] * hy[i]).sum();
            let rho = 1.0 / sy;
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        let gain = fn_ - fu;
        u = un;
        fu = fn_;
        g = gn;
        if gain < 1e-12 * (1.0 + fu.abs()) {
            break;
        }
    }
    Some((u, fu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::build_train_cov;
    use crate::linalg::Cholesky;
    use alloc::vec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sample_prior(n: usize, theta: &Hyperparams, seed: u64) -> (Vec<Point>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let k = build_train_cov(KernelKind::Matern32, &xs, theta, 1e-9).unwrap();
        let c = Cholesky::factor(&k, n).unwrap();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let l = c.factor_data();
        let ys = (0..n).map(|i| (0..=i).map(|j| l[i * n + j] * z[j]).sum()).collect();
        (xs, ys)
    }

    #[test]
    fn empty_data_is_prior_only() {
        let t = Hyperparams::new(0.7, 0.08, 0.03).unwrap();
        let p = GpPriors::default();
        let lp = log_posterior(KernelKind::Matern32, &t, &[], &[], &p).unwrap();
        assert_eq!(lp, p.log_density(&t));
    }

    #[test]
    fn one_point_likelihood_closed_form() {
        let t = Hyperparams::new(0.5, 0.1, 0.02).unwrap();
        let p = GpPriors::default();
        let y = 0.3;
        let s2: f64 = 0.5 + 0.02 + 1e-6;
        let expect = -0.5 * y * y / s2 - 0.5 * s2.ln() - 0.5 * LOG_2PI + p.log_density(&t);
        let lp = log_posterior(KernelKind::Matern32, &t, &[Point::new(0.4, 0.4)], &[y], &p).unwrap();
        assert!((lp - expect).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (xs, ys) = sample_prior(25, &Hyperparams::new(0.6, 0.12, 0.02).unwrap(), 11);
        let p = GpPriors::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [KernelKind::Matern32, KernelKind::Exponential] {
            for _ in 0..10 {
                let u = [
                    rng.random_range(-1.0..0.5),
                    rng.random_range(-3.5..-1.5),
                    rng.random_range(-5.0..-2.0),
                ];
                let (_, g) = log_posterior_grad(kind, &Hyperparams::from_log(u), &xs, &ys, &p).unwrap();
                for k in 0..3 {
                    let h = 1e-5;
                    let mut up = u;
                    up[k] += h;
                    let mut dn = u;
                    dn[k] -= h;
                    let fp = log_posterior(kind, &Hyperparams::from_log(up), &xs, &ys, &p).unwrap();
                    let fm = log_posterior(kind, &Hyperparams::from_log(dn), &xs, &ys, &p).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    let rel = (fd - g[k]).abs() / fd.abs().max(1e-3);
                    assert!(rel < 1e-4, "param {k}: fd {fd} vs analytic {}", g[k]);
                }
            }
        }
    }

    #[test]
    fn fit_never_regresses_and_is_stable_at_optimum() {
        let (xs, ys) = sample_prior(40, &Hyperparams::new(0.5, 0.06, 0.03).unwrap(), 2);
        let init = Hyperparams::prior_mode();
        let opts = FitOptions::default();
        let p0 = log_posterior(opts.kind, &init, &xs, &ys, &opts.priors).unwrap();
        let out = fit_map(&xs, &ys, init, &opts).unwrap();
        assert!(!out.warning);
        assert!(out.log_posterior >= p0 - 1e-9);

        let again = fit_map(&xs, &ys, out.theta, &FitOptions { restarts: 1, ..opts }).unwrap();
        assert!(again.log_posterior >= out.log_posterior - 1e-9);
        assert!((again.theta.ell / out.theta.ell - 1.0).abs() < 1e-3);
    }

    #[test]
    fn recovers_lengthscale_from_synthetic_data() {
        let truth = Hyperparams::new(0.5, 0.07, 0.01).unwrap();
        let (xs, ys) = sample_prior(200, &truth, 21);
        let out = fit_map(&xs, &ys, Hyperparams::prior_mode(), &FitOptions::default()).unwrap();
        let ratio = out.theta.ell / truth.ell;
        assert!((0.5..=2.0).contains(&ratio), "ell ratio {ratio}");
    }

    #[test]
    fn zero_targets_shrink_signal_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Point> = (0..30)
            .map(|_| Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let ys = vec![0.0; 30];
        let opts = FitOptions::default();
        let mode = Hyperparams::prior_mode();
        let out = fit_map(&xs, &ys, mode, &opts).unwrap();
        assert!(out.theta.sigma_f2 < mode.sigma_f2);
        let at_mode = log_posterior(opts.kind, &mode, &xs, &ys, &opts.priors).unwrap();
        assert!(out.log_posterior > at_mode);
    }

    #[test]
    fn fit_needs_two_points() {
        let r = fit_map(&[Point::new(0.1, 0.1)], &[0.0], Hyperparams::prior_mode(), &FitOptions::default());
        assert!(r.is_err());
    }
}
