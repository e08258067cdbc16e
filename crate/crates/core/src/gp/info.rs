use alloc::vec::Vec;

use crate::linalg::Cholesky;
use crate::{Error, Result};

/// Mutual information between latent values and noisy observations at `d`
/// locations, `½ log det(I + Σ_f / σ_n²)`, via a Cholesky factor.
///
/// `sigma_f` is row-major `d×d`, symmetric and positive semi-definite up to a
/// small relative tolerance.
pub fn mutual_information(sigma_f: &[f64], d: usize, sigma_n2: f64) -> Result<f64> {
    if sigma_f.len() != d * d {
        return Err(Error::DimensionMismatch {
            left: sigma_f.len(),
            right: d * d,
        });
    }
    if !(sigma_n2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let scale = (0..d).fold(1.0f64, |m, i| m.max(sigma_f[i * d + i].abs()));
    for i in 0..d {
        for j in 0..i {
            if (sigma_f[i * d + j] - sigma_f[j * d + i]).abs() > 1e-9 * scale {
                return Err(Error::invalid("covariance must be symmetric"));
            }
        }
    }
    let tol = 1e-8 * scale;
    let shifted: Vec<f64> = (0..d * d)
        .map(|k| sigma_f[k] + if k / d == k % d { tol } else { 0.0 })
        .collect();
    if Cholesky::factor(&shifted, d).is_none() {
        return Err(Error::NotPsd);
    }
    let a: Vec<f64> = (0..d * d)
        .map(|k| sigma_f[k] / sigma_n2 + if k / d == k % d { 1.0 } else { 0.0 })
        .collect();
    let c = Cholesky::factor(&a, d).ok_or(Error::NotPsd)?;
    Ok((0.5 * c.log_det()).max(0.0))
}
