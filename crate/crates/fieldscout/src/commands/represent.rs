use std::path::Path;
use std::time::Instant;

use fieldscout_core::gp::{fit_map, FitOptions, GpModel, Hyperparams};
use fieldscout_core::metrics::{field_features, fidelity, FidelityReport};
use fieldscout_core::mission::SyntheticCosts;
use fieldscout_core::partition::{rasterize, Field, Method, Partition};
use fieldscout_core::raster::{pooled_samples, WeedRaster};
use rayon::prelude::*;

use super::{mean_std, num, pool};
use crate::config::{parse_methods, Config};
use crate::error::{CliError, CliResult};
use crate::io::{field_from_source, field_image, raster_image};
use crate::output::{RunDir, RunManifest};

pub const FIDELITY_SCHEMA: &str = "fieldscout.fidelity/1";
pub const TRIALS_SCHEMA: &str = "fieldscout.fidelity_trials/1";
pub const FEATURES_SCHEMA: &str = "fieldscout.features/1";
pub const THETA_SCHEMA: &str = "fieldscout.theta/1";

pub const FIDELITY_HEADER: [&str; 12] = [
    "method",
    "ssim_complement_mean",
    "ssim_complement_std",
    "hamming_mean",
    "hamming_std",
    "mse_mean",
    "mse_std",
    "build_time_s_mean",
    "build_time_s_std",
    "memory_bytes_mean",
    "memory_bytes_std",
    "cells_mean",
];

struct Trial {
    theta: Hyperparams,
    log_posterior: f64,
    warning: bool,
    field: Field,
    results: Vec<(Method, FidelityReport, Partition)>,
}

fn run_trial(cfg: &Config, truth: &WeedRaster, methods: &[Method], t: usize) -> CliResult<Trial> {
    let rc = &cfg.represent;
    let seed = cfg.seed.wrapping_add(t as u64);
    let obs = pooled_samples(truth, rc.samples, rc.patch_px, seed)?;
    let xs: Vec<_> = obs.iter().map(|o| o.pos).collect();
    let ys: Vec<_> = obs.iter().map(|o| o.value).collect();
    let opts = FitOptions {
        restarts: rc.fit_restarts,
        seed,
        ..FitOptions::default()
    };
    let fit = fit_map(&xs, &ys, Hyperparams::prior_mode(), &opts)?;
    let model = GpModel::from_observations(opts.kind, fit.theta, &obs)?;
    let field = Field::from_fn(rc.eval_res, |p| model.predict_mean(p))?;
    let settings = cfg.partition.settings();
    let mut results = Vec::with_capacity(methods.len());
    for &m in methods {
        let t0 = Instant::now();
        let p = settings.build(m, &field, seed)?;
        let elapsed = t0.elapsed().as_secs_f64();
        let mut rep = fidelity(&field, &p, rc.hash_bits)?;
        rep.build_time_s = if cfg.deterministic {
            SyntheticCosts::default().representation_s(m)
        } else {
            elapsed
        };
        results.push((m, rep, p));
    }
    Ok(Trial {
        theta: fit.theta,
        log_posterior: fit.log_posterior,
        warning: fit.warning,
        field,
        results,
    })
}

/// Fits the GP on pooled samples, builds every method `trials` times and
/// writes the fidelity tables, field features and trial-0 renderings.
pub fn represent(cfg: &Config, out: &Path) -> CliResult<RunManifest> {
    let methods = parse_methods(&cfg.represent.methods)?;
    if cfg.represent.trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let truth = field_from_source(&cfg.field, cfg.seed)?;
    let trials: Vec<Trial> = pool(cfg.deterministic)?.install(|| {
        (0..cfg.represent.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &truth, &methods, t))
            .collect::<CliResult<_>>()
    })?;

    let mut run = RunDir::create(out)?;
    let mut rows = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (m, r, p) in &trial.results {
            rows.push(vec![
                t.to_string(),
                m.name().to_string(),
                num(r.ssim_complement),
                r.hamming.to_string(),
                num(r.mse),
                num(r.build_time_s),
                r.memory_bytes.to_string(),
                p.len().to_string(),
            ]);
        }
    }
    run.csv(
        "fidelity_trials.csv",
        TRIALS_SCHEMA,
        &["trial", "method", "ssim_complement", "hamming", "mse", "build_time_s", "memory_bytes", "cells"],
        &rows,
    )?;

    let summary: Vec<Vec<String>> = methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let col = |f: &dyn Fn(&FidelityReport, &Partition) -> f64| -> Vec<f64> {
                trials.iter().map(|t| f(&t.results[k].1, &t.results[k].2)).collect()
            };
            let mut row = vec![m.name().to_string()];
            for xs in [
                col(&|r, _| r.ssim_complement),
                col(&|r, _| r.hamming as f64),
                col(&|r, _| r.mse),
                col(&|r, _| r.build_time_s),
                col(&|r, _| r.memory_bytes as f64),
            ] {
                let (mu, sd) = mean_std(&xs);
                row.push(num(mu));
                row.push(num(sd));
            }
            row.push(num(mean_std(&col(&|_, p| p.len() as f64)).0));
            row
        })
        .collect();
    run.csv("fidelity.csv", FIDELITY_SCHEMA, &FIDELITY_HEADER, &summary)?;

    let fc = &cfg.features;
    let features = field_features(&truth, fc.weed_threshold, fc.dbscan_eps, fc.dbscan_min_pts)?;
    let frows: Vec<Vec<String>> = fieldscout_core::metrics::FieldFeatures::NAMES
        .iter()
        .zip(features.values())
        .map(|(n, v)| vec![n.to_string(), num(v)])
        .collect();
    run.csv("features.csv", FEATURES_SCHEMA, &["feature", "value"], &frows)?;

    let trows: Vec<Vec<String>> = trials
        .iter()
        .enumerate()
        .map(|(t, tr)| {
            vec![
                t.to_string(),
                num(tr.theta.sigma_f2),
                num(tr.theta.ell),
                num(tr.theta.sigma_n2),
                num(tr.log_posterior),
                tr.warning.to_string(),
            ]
        })
        .collect();
    run.csv(
        "theta.csv",
        THETA_SCHEMA,
        &["trial", "sigma_f2", "ell", "sigma_n2", "log_posterior", "warning"],
        &trows,
    )?;

    run.image("truth.png", &raster_image(&truth))?;
    if let Some(first) = trials.first() {
        run.image("gp_mean.png", &field_image(&first.field))?;
        for (m, _, p) in &first.results {
            run.image(&format!("{}.png", m.name()), &field_image(&rasterize(p, first.field.res())?))?;
            run.text(&format!("{}.cells.txt", m.name()), &p.dump())?;
        }
    }
    let inputs: Vec<_> = cfg.field.path.iter().cloned().collect();
    run.finish("represent", cfg, &inputs)
}
