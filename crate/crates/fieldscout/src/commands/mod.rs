mod compare;
mod mission;
mod report;
mod represent;

pub use compare::{compare, COMPOSITE_SCHEMA, SPEARMAN_SCHEMA, SUMMARY_SCHEMA};
pub use mission::{mission, CURVES_SCHEMA, STEPS_SCHEMA};
pub use report::report;
pub use represent::{represent, FEATURES_SCHEMA, FIDELITY_HEADER, FIDELITY_SCHEMA};

use crate::error::{CliError, CliResult};

/// Shortest decimal that round-trips, so tables are byte-stable.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Worker pool for independent trials. Measured runs use one thread so
/// stage timings are not inflated by contention.
pub(crate) fn pool(deterministic: bool) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(if deterministic { 0 } else { 1 })
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))
}
