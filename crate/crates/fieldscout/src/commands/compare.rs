use std::fs;
use std::path::{Path, PathBuf};

use fieldscout_core::metrics::{composite_scores, spearman, FieldFeatures};

use super::{num, FEATURES_SCHEMA, FIDELITY_SCHEMA};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{RunDir, RunManifest, Table};

pub const COMPOSITE_SCHEMA: &str = "fieldscout.composite/1";
pub const SPEARMAN_SCHEMA: &str = "fieldscout.spearman/1";
pub const SUMMARY_SCHEMA: &str = "fieldscout.correlation_summary/1";

/// One field's represent run, reduced to what the comparison needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRun {
    pub name: String,
    pub features: Vec<f64>,
    /// (method, [1-SSIM, HD, MSE] means)
    pub metrics: Vec<(String, [f64; 3])>,
}

impl FieldRun {
    pub fn read(dir: &Path) -> CliResult<FieldRun> {
        let fid = Table::read(&dir.join("fidelity.csv"))?;
        let feat = Table::read(&dir.join("features.csv"))?;
        if fid.schema != FIDELITY_SCHEMA || feat.schema != FEATURES_SCHEMA {
            return Err(CliError::Data(format!("{}: unexpected table schema", dir.display())));
        }
        let cols = [
            fid.column("ssim_complement_mean")?,
            fid.column("hamming_mean")?,
            fid.column("mse_mean")?,
        ];
        let metrics = (0..fid.rows.len())
            .map(|r| {
                let mut v = [0.0; 3];
                for (k, &c) in cols.iter().enumerate() {
                    v[k] = fid.f64_at(r, c)?;
                }
                Ok((fid.rows[r][0].clone(), v))
            })
            .collect::<CliResult<_>>()?;
        let vcol = feat.column("value")?;
        let features = FieldFeatures::NAMES
            .iter()
            .map(|name| {
                let r = feat
                    .rows
                    .iter()
                    .position(|row| row[0] == *name)
                    .ok_or_else(|| CliError::Data(format!("{}: feature `{name}` missing", dir.display())))?;
                feat.f64_at(r, vcol)
            })
            .collect::<CliResult<_>>()?;
        Ok(FieldRun {
            name: dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
            features,
            metrics,
        })
    }
}

/// Correlation of one feature with one method's composite penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub feature: &'static str,
    pub method: String,
    pub rho: Result<f64, String>,
}

/// Composite scores per field (1 = best) and the Spearman correlation of each
/// feature with each method's penalty `1 - score`, so a positive rho means
/// the method does worse as the feature grows.
pub fn correlate(fields: &[FieldRun]) -> CliResult<(Vec<String>, Vec<Vec<f64>>, Vec<Correlation>)> {
    if fields.len() < 3 {
        return Err(CliError::Data(format!(
            "rank correlation needs at least 3 fields with represent runs, found {}",
            fields.len()
        )));
    }
    let methods: Vec<String> = fields[0]
        .metrics
        .iter()
        .map(|(m, _)| m.clone())
        .filter(|m| fields.iter().all(|f| f.metrics.iter().any(|(n, _)| n == m)))
        .collect();
    if methods.len() < 2 {
        return Err(CliError::Data("composite scores need at least two methods common to all fields".into()));
    }
    let scores: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| {
            let rows: Vec<[f64; 3]> = methods
                .iter()
                .map(|m| f.metrics.iter().find(|(n, _)| n == m).expect("common method").1)
                .collect();
            composite_scores(&rows).map_err(CliError::from)
        })
        .collect::<CliResult<_>>()?;
    let mut corr = Vec::new();
    for (fi, &feature) in FieldFeatures::NAMES.iter().enumerate() {
        let x: Vec<f64> = fields.iter().map(|f| f.features[fi]).collect();
        for (mi, m) in methods.iter().enumerate() {
            let y: Vec<f64> = scores.iter().map(|s| 1.0 - s[mi]).collect();
            corr.push(Correlation {
                feature,
                method: m.clone(),
                rho: spearman(&x, &y).map_err(|e| e.to_string()),
            });
        }
    }
    Ok((methods, scores, corr))
}

/// Per feature: methods with the largest and the smallest rho (ties joined).
pub fn extremes(corr: &[Correlation], feature: &str) -> Option<((String, f64), (String, f64))> {
    let ok: Vec<(&str, f64)> = corr
        .iter()
        .filter(|c| c.feature == feature)
        .filter_map(|c| c.rho.as_ref().ok().map(|&r| (c.method.as_str(), r)))
        .collect();
    if ok.is_empty() {
        return None;
    }
    let pick = |best: f64| {
        let names: Vec<&str> = ok.iter().filter(|(_, r)| *r == best).map(|(m, _)| *m).collect();
        (names.join(", "), best)
    };
    let hi = ok.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = ok.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    Some((pick(hi), pick(lo)))
}

fn represent_runs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs
        .into_iter()
        .filter(|d| RunManifest::read(d).map(|m| m.command == "represent").unwrap_or(false))
        .collect())
}

/// Reads every represent run under `fields_dir` and writes composite scores,
/// the feature/method Spearman table and its max/min summary.
pub fn compare(cfg: &Config, fields_dir: &Path, out: &Path) -> CliResult<RunManifest> {
    let dirs = represent_runs(fields_dir)?;
    let fields: Vec<FieldRun> = dirs.iter().map(|d| FieldRun::read(d)).collect::<CliResult<_>>()?;
    let (methods, scores, corr) = correlate(&fields)?;

    let mut run = RunDir::create(out)?;
    let mut rows = Vec::new();
    for (f, s) in fields.iter().zip(&scores) {
        for (m, v) in methods.iter().zip(s) {
            rows.push(vec![f.name.clone(), m.clone(), num(*v)]);
        }
    }
    run.csv("composite.csv", COMPOSITE_SCHEMA, &["field", "method", "score"], &rows)?;

    let rows: Vec<Vec<String>> = corr
        .iter()
        .map(|c| match &c.rho {
            Ok(r) => vec![c.feature.to_string(), c.method.clone(), num(*r), "ok".into()],
            Err(e) => vec![c.feature.to_string(), c.method.clone(), String::new(), format!("error: {e}")],
        })
        .collect();
    run.csv("spearman.csv", SPEARMAN_SCHEMA, &["feature", "method", "rho", "status"], &rows)?;

    let rows: Vec<Vec<String>> = FieldFeatures::NAMES
        .iter()
        .map(|&f| match extremes(&corr, f) {
            Some(((pm, pr), (nm, nr))) => vec![f.to_string(), pm, num(pr), nm, num(nr), "ok".into()],
            None => vec![
                f.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "error: every correlation is degenerate".into(),
            ],
        })
        .collect();
    run.csv(
        "correlation_summary.csv",
        SUMMARY_SCHEMA,
        &["feature", "positive_method", "positive_rho", "negative_method", "negative_rho", "status"],
        &rows,
    )?;
    for c in corr.iter().filter(|c| c.rho.is_err()) {
        eprintln!("warning: {} vs {}: {}", c.feature, c.method, c.rho.as_ref().unwrap_err());
    }
    let inputs: Vec<PathBuf> = dirs.iter().map(|d| d.join("manifest.json")).collect();
    run.finish("compare", cfg, &inputs)
}
